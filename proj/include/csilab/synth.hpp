#pragma once

// Four-channel photodetector trace synthesis. Per set, the (probe,
// conjugate) photocurrent pair is drawn in the frequency domain from the
// theory cross-spectral density, each beam is split 50/50 with vacuum noise
// entering the unused port, and the four AC signals are quantized.

#include "csilab/errors.hpp"
#include "csilab/fft.hpp"
#include "csilab/parallel.hpp"
#include "csilab/rng.hpp"
#include "csilab/theory.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <numbers>
#include <span>
#include <string>
#include <cstring>
#include <tuple>
#include <utility>
#include <vector>

namespace csilab::synth {

using Complex = std::complex<double>;

// Relative intensity noise common to both beams (slow pump and seed drifts):
// one-sided RIN PSD level * (f_c/f) / (1 + (f/f_c)^4), in 1/Hz.
struct TechnicalNoiseSpec {
  double rin_level = 1e-15;
  double corner_hz = 500e3;

  double rin(double f) const {
    if (!(rin_level > 0.0) || f <= 0.0) return 0.0;
    const double x = f / corner_hz;
    return rin_level / x / (1.0 + x * x * x * x);
  }
};

struct AcquisitionConfig {
  double sample_rate = 1e9;
  std::size_t samples_per_set = 10000;
  std::size_t num_sets = 500;
  int adc_bits = 9;
  double full_scale = 0.0;  // <= 0 selects 8 predicted standard deviations
  std::uint64_t rng_seed = 1;

  double duration() const { return static_cast<double>(samples_per_set) / sample_rate; }
};

struct FwmModel {
  theory::SqueezeParams squeeze{0.0, {1000.0, 0.0}};
  double probe_dc = 1.0;
  double conj_dc = 1.0;
  double gain_bandwidth = 10e6;
  double delay = 0.0;
  double eta = 1.0;
  theory::ExcessNoiseSpec excess{};
  TechnicalNoiseSpec technical{};
  double detection_bandwidth = 50e6;
  int detection_order = 4;
  // Photocurrent units times seconds per detected photon; the shot-noise
  // (SQL) one-sided PSD of a beam with mean current I is 2 * shot_charge * I.
  double shot_charge = 2.5e-15;

  // Builds a model whose conjugate DC follows from the squeezer's mean photon
  // numbers. Without gain (s = 0) there is no conjugate; the second beam is
  // then an independent coherent beam with the probe's DC.
  static FwmModel make(theory::SqueezeParams squeeze, double probe_dc, double gain_bandwidth,
                       double delay, double eta) {
    FwmModel m;
    m.squeeze = squeeze;
    m.probe_dc = probe_dc;
    m.gain_bandwidth = gain_bandwidth;
    m.delay = delay;
    m.eta = eta;
    m.sync_conj_dc();
    return m;
  }

  void sync_conj_dc() {
    const auto [np, nc] = theory::mean_photon_numbers(squeeze);
    conj_dc = nc > 0.0 ? probe_dc * nc / np : probe_dc;
  }

  theory::SpectralModel spectral_model() const {
    return theory::SpectralModel(squeeze, gain_bandwidth, delay, eta, excess);
  }

  double sql_probe() const { return 2.0 * shot_charge * probe_dc; }
  double sql_conj() const { return 2.0 * shot_charge * conj_dc; }

  // Power response of the detection chain (flat band with Butterworth roll-off).
  double detection_response(double f) const {
    if (!(detection_bandwidth > 0.0)) return 1.0;
    return 1.0 / (1.0 + std::pow(std::abs(f) / detection_bandwidth, 2 * detection_order));
  }

  // Same model with extra loss `factor` (0, 1]: efficiency and detected DC
  // both scale, the vacuum that replaces the lost light restores the SQL.
  FwmModel with_extra_loss(double factor) const {
    if (!(factor > 0.0 && factor <= 1.0)) throw DomainError("loss factor must be in (0, 1]");
    FwmModel m = *this;
    m.eta *= factor;
    m.probe_dc *= factor;
    m.conj_dc *= factor;
    return m;
  }

  // Absolute one-sided CSD of the parent photocurrents at f: {S_pp, S_cc, S_pc}.
  std::tuple<double, double, Complex> parent_csd(double f) const {
    const theory::CsdPoint c = spectral_model()(f);
    return parent_csd(f, c);
  }

  std::tuple<double, double, Complex> parent_csd(double f, const theory::CsdPoint& c) const {
    const double sp = sql_probe(), sc = sql_conj();
    const double rin = technical.rin(f);
    const double d = detection_response(f);
    const double s_pp = (sp * c.s_pp + rin * probe_dc * probe_dc) * d;
    const double s_cc = (sc * c.s_cc + rin * conj_dc * conj_dc) * d;
    const Complex s_pc = (std::sqrt(sp * sc) * c.s_pc + rin * probe_dc * conj_dc) * d;
    return {s_pp, s_cc, s_pc};
  }

  std::uint64_t fingerprint() const;
};

inline void validate(const FwmModel& m, const AcquisitionConfig& acq) {
  if (!(acq.sample_rate > 0.0)) throw ConfigError("sample_rate", "must be > 0");
  if (acq.samples_per_set < 16) throw ConfigError("samples_per_set", "must be >= 16");
  if (acq.num_sets < 1) throw ConfigError("num_sets", "must be >= 1");
  if (acq.adc_bits < 2 || acq.adc_bits > 16) throw ConfigError("adc_bits", "must be in [2, 16]");
  if (!(m.probe_dc > 0.0)) throw ConfigError("probe_dc", "must be > 0");
  if (!(m.conj_dc > 0.0)) throw ConfigError("conj_dc", "must be > 0");
  if (!(m.eta > 0.0 && m.eta <= 1.0)) throw ConfigError("eta", "must be in (0, 1]");
  if (!(m.gain_bandwidth > 0.0)) throw ConfigError("gain_bandwidth", "must be > 0");
  if (!(acq.sample_rate > 10.0 * m.gain_bandwidth))
    throw ConfigError("sample_rate", "must exceed 10 x gain bandwidth");
  if (!(std::abs(m.delay) < 0.1 * acq.duration()))
    throw ConfigError("delay", "must be shorter than 10% of one set");
  if (!(m.shot_charge > 0.0)) throw ConfigError("shot_charge", "must be > 0");
  const auto [np, nc] = theory::mean_photon_numbers(m.squeeze);
  if (nc > 0.0 && std::abs(m.probe_dc / m.conj_dc - np / nc) > 1e-9 * (np / nc))
    throw ConfigError("conj_dc", "DC ratio must match the squeezer's photon-number ratio");
}

inline std::uint64_t FwmModel::fingerprint() const {
  std::uint64_t h = 0x6a09e667f3bcc909ULL;
  auto mix = [&h](double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    h = rng::splitmix64(h ^ bits);
  };
  for (double v : {squeeze.s(), squeeze.alpha().real(), squeeze.alpha().imag(), probe_dc, conj_dc,
                   gain_bandwidth, delay, eta, excess.probe_level, excess.conj_level,
                   excess.onset_hz, static_cast<double>(excess.order), excess.cutoff_hz,
                   technical.rin_level, technical.corner_hz, detection_bandwidth,
                   static_cast<double>(detection_order), shot_charge})
    mix(v);
  return h;
}

struct ClipWarning {
  std::size_t set = 0;
  int channel = 0;
  std::size_t clipped = 0;
  std::size_t samples = 0;
};

enum Channel : int { kProbe1 = 0, kProbe2 = 1, kConj1 = 2, kConj2 = 3 };
inline constexpr int kChannels = 4;

// Quantized four-channel AC traces plus recorded DC means.
class TraceSet {
public:
  TraceSet() = default;
  TraceSet(AcquisitionConfig acq, std::array<double, kChannels> dc_means, std::string provenance)
      : acq_(acq), dc_means_(dc_means), provenance_(std::move(provenance)),
        codes_(acq.num_sets * kChannels * acq.samples_per_set, 0) {}

  const AcquisitionConfig& acquisition() const noexcept { return acq_; }
  const std::array<double, kChannels>& dc_means() const noexcept { return dc_means_; }
  const std::string& provenance() const noexcept { return provenance_; }
  std::size_t num_sets() const noexcept { return acq_.num_sets; }
  std::size_t samples() const noexcept { return acq_.samples_per_set; }

  // Dequantization step in photocurrent units.
  double step() const { return acq_.full_scale / std::ldexp(1.0, acq_.adc_bits - 1); }

  std::span<std::int16_t> codes(std::size_t set, int channel) {
    return {codes_.data() + offset(set, channel), acq_.samples_per_set};
  }
  std::span<const std::int16_t> codes(std::size_t set, int channel) const {
    return {codes_.data() + offset(set, channel), acq_.samples_per_set};
  }
  std::span<const std::int16_t> payload() const noexcept { return codes_; }
  std::span<std::int16_t> payload() noexcept { return codes_; }

  std::vector<double> trace(std::size_t set, int channel) const {
    const auto c = codes(set, channel);
    std::vector<double> out(c.size());
    const double q = step();
    for (std::size_t i = 0; i < c.size(); ++i) out[i] = q * c[i];
    return out;
  }

  std::vector<ClipWarning>& clip_warnings() noexcept { return clips_; }
  const std::vector<ClipWarning>& clip_warnings() const noexcept { return clips_; }

private:
  std::size_t offset(std::size_t set, int channel) const {
    return (set * kChannels + static_cast<std::size_t>(channel)) * acq_.samples_per_set;
  }

  AcquisitionConfig acq_{};
  std::array<double, kChannels> dc_means_{};
  std::string provenance_ = "external";
  std::vector<std::int16_t> codes_;
  std::vector<ClipWarning> clips_;
};

struct Quantized {
  std::vector<std::int16_t> codes;
  std::size_t clipped = 0;
};

// Mid-tread uniform quantizer with codes in [-2^(bits-1), 2^(bits-1) - 1].
inline Quantized quantize(std::span<const double> trace, int adc_bits, double full_scale) {
  if (adc_bits < 2 || adc_bits > 16) throw DomainError("adc_bits must be in [2, 16]");
  if (!(full_scale > 0.0)) throw DomainError("full_scale must be > 0");
  const double levels = std::ldexp(1.0, adc_bits - 1);
  const double step = full_scale / levels;
  const long lo = -static_cast<long>(levels), hi = static_cast<long>(levels) - 1;
  Quantized q;
  q.codes.resize(trace.size());
  for (std::size_t i = 0; i < trace.size(); ++i) {
    long c = std::lround(trace[i] / step);
    if (c < lo || c > hi) {
      ++q.clipped;
      c = std::clamp(c, lo, hi);
    }
    q.codes[i] = static_cast<std::int16_t>(c);
  }
  return q;
}

inline bool clip_warning_due(std::size_t clipped, std::size_t samples) {
  return static_cast<double>(clipped) > 1e-3 * static_cast<double>(samples);
}

namespace detail {

// Complex Gaussian with E|z|^2 = 1.
inline Complex complex_normal(rng::Gaussian& g) {
  constexpr double k = std::numbers::sqrt2 / 2.0;
  const double re = g() * k;
  return {re, g() * k};
}

// Principal square root of a 2x2 Hermitian positive semidefinite matrix
// [[a, b], [conj(b), d]]: sqrt(M) = (M + sqrt(det) I) / sqrt(tr + 2 sqrt(det)).
struct Sqrt2x2 {
  double a, d;
  Complex b;
};

inline Sqrt2x2 hermitian_sqrt(double a, Complex b, double d) {
  const double det = std::max(0.0, a * d - std::norm(b));
  const double s = std::sqrt(det);
  const double t = std::sqrt(std::max(0.0, a + d + 2.0 * s));
  if (t == 0.0) return {0.0, 0.0, {0.0, 0.0}};
  return {(a + s) / t, (d + s) / t, b / t};
}

inline std::size_t generation_length(std::size_t n) { return n + (n + 3) / 4; }

// White noise with one-sided PSD `level * response(f)` synthesized in the
// frequency domain over n samples.
inline std::vector<double> colored_noise(std::size_t n, double sample_rate, double level,
                                         const std::function<double(double)>& response,
                                         rng::Gaussian& g) {
  fft::Spectrum bins(n / 2 + 1, Complex{0.0, 0.0});
  const double scale = static_cast<double>(n) * sample_rate / 2.0;
  for (std::size_t k = 1; k < bins.size(); ++k) {
    if (2 * k == n) break;
    const double f = fft::bin_frequency(k, n, sample_rate);
    bins[k] = std::sqrt(scale * level * response(f)) * complex_normal(g);
  }
  return fft::irfft(bins, n);
}

} // namespace detail

// Splits a beam on a 50/50 beamsplitter. `parent` is the full photocurrent
// fluctuation of the beam (its own shot noise included). Vacuum noise with
// the parent's SQL PSD enters the open port and appears with opposite signs
// in the two outputs, so half1 - half2 carries exactly the SQL, half1 +
// half2 reproduces the parent, and <dh1 dh2> = (S_parent - SQL) / 4 is the
// normally ordered part. For a shot-noise-limited parent the halves are
// independent shot-noise traces.
inline std::pair<std::vector<double>, std::vector<double>>
split_and_detect(std::span<const double> parent, double dc, double sample_rate,
                 double shot_charge, const std::function<double(double)>& response,
                 rng::Gaussian& g) {
  if (!(dc > 0.0)) throw DomainError("split_and_detect: dc must be > 0");
  const auto vac =
      detail::colored_noise(parent.size(), sample_rate, 2.0 * shot_charge * dc, response, g);
  std::pair<std::vector<double>, std::vector<double>> out;
  out.first.resize(parent.size());
  out.second.resize(parent.size());
  for (std::size_t i = 0; i < parent.size(); ++i) {
    out.first[i] = 0.5 * (parent[i] + vac[i]);
    out.second[i] = 0.5 * (parent[i] - vac[i]);
  }
  return out;
}

// Predicted variance of one detector channel (half a beam), for ADC ranging.
inline double predicted_channel_variance(const FwmModel& m, double sample_rate) {
  const auto model = m.spectral_model();
  double worst = 0.0;
  for (int beam = 0; beam < 2; ++beam) {
    const double sql = beam == 0 ? m.sql_probe() : m.sql_conj();
    const double var = theory::integrate(
        [&](double f) {
          if (f <= 0.0) return 0.0;
          const auto [spp, scc, spc] = m.parent_csd(f, model(f));
          const double parent = beam == 0 ? spp : scc;
          return 0.25 * (parent + sql * m.detection_response(f));
        },
        0.0, sample_rate / 2.0, 200000);
    worst = std::max(worst, var);
  }
  return worst;
}

// Draws one set: returns the four unquantized channels.
inline std::array<std::vector<double>, kChannels>
synthesize_set(const FwmModel& m, const AcquisitionConfig& acq, std::size_t set_index) {
  const std::size_t n = acq.samples_per_set;
  const std::size_t ng = detail::generation_length(n);
  const double rate = acq.sample_rate;
  rng::Gaussian g(rng::derive_seed(acq.rng_seed, 0x5e7, set_index));
  const auto model = m.spectral_model();

  fft::Spectrum probe(ng / 2 + 1, Complex{0.0, 0.0}), conj(ng / 2 + 1, Complex{0.0, 0.0});
  const double scale = static_cast<double>(ng) * rate / 2.0;
  for (std::size_t k = 1; k < probe.size(); ++k) {
    if (2 * k == ng) break;
    const double f = fft::bin_frequency(k, ng, rate);
    const auto [spp, scc, spc] = m.parent_csd(f, model(f));
    // s_pc is E[conj(P) C]; the generator's off-diagonal is E[P conj(C)].
    const auto r = detail::hermitian_sqrt(scale * spp, scale * std::conj(spc), scale * scc);
    const Complex w1 = detail::complex_normal(g), w2 = detail::complex_normal(g);
    probe[k] = r.a * w1 + r.b * w2;
    conj[k] = std::conj(r.b) * w1 + r.d * w2;
  }
  const auto probe_t = fft::irfft(probe, ng);
  const auto conj_t = fft::irfft(conj, ng);
  const auto response = [&m](double f) { return m.detection_response(f); };
  auto [p1, p2] = split_and_detect(probe_t, m.probe_dc, rate, m.shot_charge, response, g);
  auto [c1, c2] = split_and_detect(conj_t, m.conj_dc, rate, m.shot_charge, response, g);

  const std::size_t first = (ng - n) / 2;
  auto trim = [&](const std::vector<double>& x) {
    return std::vector<double>(x.begin() + static_cast<std::ptrdiff_t>(first),
                               x.begin() + static_cast<std::ptrdiff_t>(first + n));
  };
  return {trim(p1), trim(p2), trim(c1), trim(c2)};
}

// Quantizes per-set channels into `ts`, recording clip warnings.
inline void store_set(TraceSet& ts, std::size_t set,
                      const std::array<std::vector<double>, kChannels>& channels,
                      std::vector<ClipWarning>& clips) {
  const auto& acq = ts.acquisition();
  for (int ch = 0; ch < kChannels; ++ch) {
    auto q = quantize(channels[static_cast<std::size_t>(ch)], acq.adc_bits, acq.full_scale);
    std::copy(q.codes.begin(), q.codes.end(), ts.codes(set, ch).begin());
    if (clip_warning_due(q.clipped, q.codes.size()))
      clips.push_back({set, ch, q.clipped, q.codes.size()});
  }
}

namespace detail {

inline void run_sets(TraceSet& ts,
                     const std::function<std::array<std::vector<double>, kChannels>(std::size_t)>& draw) {
  std::vector<std::vector<ClipWarning>> per_set(ts.num_sets());
  parallel_for(ts.num_sets(), [&](std::size_t i) { store_set(ts, i, draw(i), per_set[i]); });
  for (auto& w : per_set)
    ts.clip_warnings().insert(ts.clip_warnings().end(), w.begin(), w.end());
}

} // namespace detail

// Full acquisition: num_sets independent sets, each seeded from rng_seed and
// its index, so results do not depend on the worker schedule.
inline TraceSet synthesize(const FwmModel& m, AcquisitionConfig acq) {
  validate(m, acq);
  if (!(acq.full_scale > 0.0))
    acq.full_scale = 8.0 * std::sqrt(predicted_channel_variance(m, acq.sample_rate));
  const std::array<double, kChannels> dc{m.probe_dc / 2, m.probe_dc / 2, m.conj_dc / 2,
                                         m.conj_dc / 2};
  TraceSet ts(acq, dc, "fwm:" + std::to_string(m.fingerprint()));
  detail::run_sets(ts, [&](std::size_t i) { return synthesize_set(m, acq, i); });
  return ts;
}

// Two independent pseudo-thermal beams (chaotic light): a complex Gaussian
// field with Lorentzian spectrum of half-width `bandwidth` and intensity
// I(t) = dc |E(t)|^2 / <|E|^2>, then split detection with shot noise.
// The normally ordered zero-delay autocorrelation of such a beam is 2.
inline TraceSet synthesize_thermal(double dc, double bandwidth, double shot_charge,
                                   AcquisitionConfig acq) {
  if (!(dc > 0.0)) throw ConfigError("dc", "must be > 0");
  if (!(bandwidth > 0.0)) throw ConfigError("bandwidth", "must be > 0");
  if (!(acq.full_scale > 0.0)) acq.full_scale = 4.0 * dc;
  const std::size_t n = acq.samples_per_set;
  const std::size_t ng = detail::generation_length(n);
  const double rate = acq.sample_rate;
  TraceSet ts(acq, {dc / 2, dc / 2, dc / 2, dc / 2}, "thermal");
  detail::run_sets(ts, [&](std::size_t set) {
    rng::Gaussian g(rng::derive_seed(acq.rng_seed, 0x7e4, set));
    std::array<std::vector<double>, kChannels> out;
    for (int beam = 0; beam < 2; ++beam) {
      // Complex field from two independent real quadratures.
      auto lorentz = [&](double f) { return 1.0 / (1.0 + (f / bandwidth) * (f / bandwidth)); };
      const auto x = detail::colored_noise(ng, rate, 1.0, lorentz, g);
      const auto y = detail::colored_noise(ng, rate, 1.0, lorentz, g);
      double mean_power = 0.0;
      for (std::size_t i = 0; i < ng; ++i) mean_power += x[i] * x[i] + y[i] * y[i];
      mean_power /= static_cast<double>(ng);
      const auto flat = [](double) { return 1.0; };
      const auto shot = detail::colored_noise(ng, rate, 2.0 * shot_charge * dc, flat, g);
      std::vector<double> parent(ng);
      for (std::size_t i = 0; i < ng; ++i)
        parent[i] = dc * ((x[i] * x[i] + y[i] * y[i]) / mean_power - 1.0) + shot[i];
      auto [h1, h2] = split_and_detect(parent, dc, rate, shot_charge, flat, g);
      const std::size_t first = (ng - n) / 2;
      const auto b = static_cast<std::ptrdiff_t>(first), e = static_cast<std::ptrdiff_t>(first + n);
      out[static_cast<std::size_t>(2 * beam)] = std::vector<double>(h1.begin() + b, h1.begin() + e);
      out[static_cast<std::size_t>(2 * beam + 1)] = std::vector<double>(h2.begin() + b, h2.begin() + e);
    }
    return out;
  });
  return ts;
}

} // namespace csilab::synth

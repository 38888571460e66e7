#pragma once

// Measured quantities from a four-channel TraceSet: normally ordered g2
// curves from split detection, the violation factor with per-set
// statistics, SQL-normalized spectra, and the spectral form of the CSI.

#include "csilab/dsp.hpp"
#include "csilab/errors.hpp"
#include "csilab/fft.hpp"
#include "csilab/parallel.hpp"
#include "csilab/synth.hpp"
#include "csilab/theory.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace csilab::estimators {

using synth::TraceSet;
using Complex = std::complex<double>;

namespace detail {

inline void require_dc(const TraceSet& ts) {
  for (double d : ts.dc_means())
    if (!(d > 0.0)) throw DcMissing("trace set has no positive DC mean for every channel");
}

inline double probe_dc(const TraceSet& ts) { return ts.dc_means()[0] + ts.dc_means()[1]; }
inline double conj_dc(const TraceSet& ts) { return ts.dc_means()[2] + ts.dc_means()[3]; }

// Mean-free rfft spectra of the four channels of one set.
struct SetSpectra {
  fft::Spectrum p1, p2, c1, c2;
};

inline SetSpectra set_spectra(const TraceSet& ts, std::size_t set) {
  auto spec = [&](int ch) {
    auto x = fft::rfft(ts.trace(set, ch));
    x[0] = 0.0;
    return x;
  };
  return {spec(synth::kProbe1), spec(synth::kProbe2), spec(synth::kConj1), spec(synth::kConj2)};
}

// (1/n) sum_t x(t) y(t) of two real traces given by their rfft spectra and a
// per-bin power weight.
inline double weighted_dot(const fft::Spectrum& x, const fft::Spectrum& y,
                           const std::vector<double>& w, std::size_t n) {
  double s = 0.0;
  for (std::size_t k = 1; k < x.size(); ++k) {
    const double term = w[k] * (std::conj(x[k]) * y[k]).real();
    s += (2 * k == n) ? term : 2.0 * term;
  }
  return s / (static_cast<double>(n) * static_cast<double>(n));
}

struct SetCorrelation {
  double eps_aa = 0.0;
  double eps_bb = 0.0;
  std::vector<double> cross;  // eps_ab(lag), lags -L..L
};

// Normalized fluctuation products of one set. The cross curve is the
// circular correlation of the summed beams averaged over n - |lag| pairs,
// which removes the expected deficit of the wrapped pairs.
inline SetCorrelation set_correlation(const SetSpectra& s, std::size_t n,
                                      const std::vector<double>& weight, std::size_t max_lag,
                                      const std::array<double, synth::kChannels>& dc) {
  SetCorrelation out;
  out.eps_aa = weighted_dot(s.p1, s.p2, weight, n) / (dc[0] * dc[1]);
  out.eps_bb = weighted_dot(s.c1, s.c2, weight, n) / (dc[2] * dc[3]);
  fft::Spectrum z(s.p1.size());
  for (std::size_t k = 0; k < z.size(); ++k)
    z[k] = weight[k] * std::conj(s.p1[k] + s.p2[k]) * (s.c1[k] + s.c2[k]);
  const auto r = fft::irfft(z, n);
  const double norm = 1.0 / ((dc[0] + dc[1]) * (dc[2] + dc[3]));
  out.cross.resize(2 * max_lag + 1);
  for (std::size_t l = 0; l <= max_lag; ++l) {
    const double scale = norm / static_cast<double>(n - l);
    out.cross[max_lag + l] = r[l] * scale;
    out.cross[max_lag - l] = r[(n - l) % n] * scale;
  }
  return out;
}

inline std::vector<double> bin_weights(const std::optional<dsp::FilterSpec>& band, std::size_t n,
                                       double rate) {
  std::vector<double> w(n / 2 + 1, 1.0);
  if (band) {
    band->validate(rate);
    for (std::size_t k = 0; k < w.size(); ++k)
      w[k] = band->power_response(fft::bin_frequency(k, n, rate));
  }
  w[0] = 0.0;
  return w;
}

// Value of a sampled curve at fractional index x by 3-point (quadratic)
// interpolation around the nearest sample.
inline double quadratic_at(std::span<const double> c, double x) {
  const auto last = static_cast<double>(c.size() - 1);
  const double xi = std::clamp(std::round(x), 1.0, last - 1.0);
  const auto i = static_cast<std::size_t>(xi);
  const double t = x - xi;
  const double a = c[i - 1], b = c[i], d = c[i + 1];
  return b + 0.5 * t * (d - a) + 0.5 * t * t * (a - 2.0 * b + d);
}

struct Moments {
  double mean = 0.0;
  double std = 0.0;
};

// Fixed-order mean and sample standard deviation.
inline Moments moments(std::span<const double> v) {
  Moments m;
  if (v.empty()) return m;
  double s = 0.0;
  for (double x : v) s += x;
  m.mean = s / static_cast<double>(v.size());
  if (v.size() > 1) {
    double q = 0.0;
    for (double x : v) q += (x - m.mean) * (x - m.mean);
    m.std = std::sqrt(q / static_cast<double>(v.size() - 1));
  }
  return m;
}

} // namespace detail

// g2(tau) curves averaged over sets, with the standard error of each lag.
struct G2Curves {
  std::vector<double> tau;
  std::vector<double> g2_ab, g2_aa, g2_bb;
  std::vector<double> sem_ab, sem_aa, sem_bb;
  std::size_t num_sets = 0;
};

// Cross: <dI_p(t) dI_c(t + tau)> / (<I_p><I_c>) with I_x the sum of the two
// halves. Autos: <dI_x1(t) dI_x2(t + tau)> / (<I_x1><I_x2>) between the two
// halves of one beam, which contains no shot-noise self term. DC values are
// the recorded dc_means; an optional band filter is applied to every channel.
inline G2Curves g2_curves(const TraceSet& ts, double tau_max,
                          const std::optional<dsp::FilterSpec>& band = std::nullopt) {
  detail::require_dc(ts);
  const double rate = ts.acquisition().sample_rate;
  const std::size_t n = ts.samples();
  const auto lags = static_cast<std::size_t>(std::floor(std::max(0.0, tau_max) * rate));
  if (lags >= n / 2) throw DomainError("tau_max must be below half a set");
  if (band) band->validate(rate);
  const auto& dc = ts.dc_means();
  const double dp = detail::probe_dc(ts), dcc = detail::conj_dc(ts);
  const std::size_t len = 2 * lags + 1;

  std::vector<std::array<std::vector<double>, 3>> per_set(ts.num_sets());
  parallel_for(ts.num_sets(), [&](std::size_t set) {
    std::array<std::vector<double>, synth::kChannels> ch;
    for (int c = 0; c < synth::kChannels; ++c) {
      auto t = ts.trace(set, c);
      ch[static_cast<std::size_t>(c)] = band ? dsp::butterworth_bandpass(t, *band, rate) : std::move(t);
    }
    std::vector<double> ip(n), ic(n);
    for (std::size_t i = 0; i < n; ++i) {
      ip[i] = ch[0][i] + ch[1][i];
      ic[i] = ch[2][i] + ch[3][i];
    }
    auto ab = dsp::cross_covariance(ip, ic, lags);
    auto aa = dsp::cross_covariance(ch[0], ch[1], lags);
    auto bb = dsp::cross_covariance(ch[2], ch[3], lags);
    for (std::size_t i = 0; i < len; ++i) {
      ab[i] = 1.0 + ab[i] / (dp * dcc);
      aa[i] = 1.0 + aa[i] / (dc[0] * dc[1]);
      bb[i] = 1.0 + bb[i] / (dc[2] * dc[3]);
    }
    per_set[set] = {std::move(ab), std::move(aa), std::move(bb)};
  });

  G2Curves out;
  out.num_sets = ts.num_sets();
  out.tau.resize(len);
  for (std::size_t i = 0; i < len; ++i)
    out.tau[i] = (static_cast<double>(i) - static_cast<double>(lags)) / rate;
  std::array<std::vector<double>*, 3> means{&out.g2_ab, &out.g2_aa, &out.g2_bb};
  std::array<std::vector<double>*, 3> sems{&out.sem_ab, &out.sem_aa, &out.sem_bb};
  const double root = std::sqrt(static_cast<double>(ts.num_sets()));
  std::vector<double> column(ts.num_sets());
  for (std::size_t c = 0; c < 3; ++c) {
    means[c]->resize(len);
    sems[c]->resize(len);
    for (std::size_t i = 0; i < len; ++i) {
      for (std::size_t s = 0; s < ts.num_sets(); ++s) column[s] = per_set[s][c][i];
      const auto m = detail::moments(column);
      (*means[c])[i] = m.mean;
      (*sems[c])[i] = m.std / root;
    }
  }
  return out;
}

struct CorrelationReport {
  double delay = 0.0;  // pooled cross-correlation peak, seconds (conjugate lag)
  bool peak_found = false;  // peak stands 5 background rms above the lag window
  double eps_aa = 0.0, eps_bb = 0.0, eps_ab_peak = 0.0;  // means over valid sets
  std::vector<double> v_per_set;
  std::size_t degenerate_sets = 0;
  double v_mean = 0.0;
  double v_sigma = 0.0;      // standard deviation of the per-set values
  double v_sem = 0.0;        // standard error of v_mean: v_sigma / sqrt(sets)
  double sigma_count = 0.0;  // |1 - v_mean| / v_sem
  double v_pooled = 0.0;     // from the set-averaged eps values
  bool violated = false;     // v_mean < 1
};

struct ViolationOptions {
  std::optional<dsp::FilterSpec> band = dsp::FilterSpec{10, 500e3, 40e6};
  double max_delay = 100e-9;  // half-width of the lag window searched for the peak
};

namespace detail {

inline CorrelationReport reduce_violation(const std::vector<SetCorrelation>& sets, std::size_t max_lag,
                                          double rate) {
  if (sets.empty()) throw DomainError("violation factor needs at least one set");
  const std::size_t len = 2 * max_lag + 1;
  std::vector<double> pooled(len, 0.0);
  for (const auto& s : sets)
    for (std::size_t i = 0; i < len; ++i) pooled[i] += s.cross[i];
  const dsp::Peak peak = dsp::parabolic_peak(pooled);

  CorrelationReport r;
  r.delay = (peak.position - static_cast<double>(max_lag)) / rate;
  try {
    dsp::require_prominent_peak(pooled, peak);
    r.peak_found = true;
  } catch (const NoPeak&) {
    r.peak_found = false;
  }
  std::vector<double> aa, bb, ab;
  for (const auto& s : sets) {
    const double e_ab = quadratic_at(s.cross, peak.position);
    if (!(e_ab > 0.0)) {
      ++r.degenerate_sets;
      continue;
    }
    aa.push_back(s.eps_aa);
    bb.push_back(s.eps_bb);
    ab.push_back(e_ab);
    r.v_per_set.push_back((s.eps_aa + s.eps_bb) / (2.0 * e_ab));
  }
  if (r.v_per_set.empty()) throw DegenerateState("every set has a non-positive cross-correlation peak");
  r.eps_aa = moments(aa).mean;
  r.eps_bb = moments(bb).mean;
  r.eps_ab_peak = moments(ab).mean;
  const auto m = moments(r.v_per_set);
  r.v_mean = m.mean;
  r.v_sigma = m.std;
  r.v_sem = m.std / std::sqrt(static_cast<double>(r.v_per_set.size()));
  r.sigma_count = r.v_sem > 0.0 ? std::abs(1.0 - r.v_mean) / r.v_sem
                                : std::numeric_limits<double>::infinity();
  r.v_pooled = (r.eps_aa + r.eps_bb) / (2.0 * r.eps_ab_peak);
  r.violated = r.v_mean < 1.0;
  return r;
}

} // namespace detail

struct SweepPoint {
  double f_hi = 0.0;
  CorrelationReport report;
};

// Violation factor for each band [f_lo, f_hi] in `bands`. Each set is
// transformed once; every band reuses its spectra.
inline std::vector<SweepPoint> violation_sweep(const TraceSet& ts,
                                               const std::vector<std::optional<dsp::FilterSpec>>& bands,
                                               double max_delay = 100e-9) {
  detail::require_dc(ts);
  if (bands.empty()) throw DomainError("no analysis bands given");
  const double rate = ts.acquisition().sample_rate;
  const std::size_t n = ts.samples();
  const auto max_lag = std::min<std::size_t>(n / 10, static_cast<std::size_t>(std::ceil(max_delay * rate)) + 2);
  std::vector<std::vector<double>> weights;
  for (const auto& b : bands) weights.push_back(detail::bin_weights(b, n, rate));

  std::vector<std::vector<detail::SetCorrelation>> per_band(bands.size(),
                                                            std::vector<detail::SetCorrelation>(ts.num_sets()));
  parallel_for(ts.num_sets(), [&](std::size_t set) {
    const auto spectra = detail::set_spectra(ts, set);
    for (std::size_t b = 0; b < bands.size(); ++b)
      per_band[b][set] = detail::set_correlation(spectra, n, weights[b], max_lag, ts.dc_means());
  });

  std::vector<SweepPoint> out;
  for (std::size_t b = 0; b < bands.size(); ++b) {
    SweepPoint p;
    p.f_hi = bands[b] ? bands[b]->f_hi : rate / 2.0;
    p.report = detail::reduce_violation(per_band[b], max_lag, rate);
    out.push_back(std::move(p));
  }
  return out;
}

// Per-set violation factor V = (eps_aa + eps_bb) / (2 eps_ab) with eps_ab at
// the delay of the set-averaged cross-correlation peak. Sets whose eps_ab is
// not positive are excluded and counted.
inline CorrelationReport violation_factor(const TraceSet& ts, const ViolationOptions& opt = {}) {
  return violation_sweep(ts, {opt.band}, opt.max_delay).front().report;
}

// V(f_hi) with FilterSpec(order, f_lo, f_hi) for every cutoff.
inline std::vector<SweepPoint> cutoff_sweep(const TraceSet& ts, const std::vector<double>& f_hi_list,
                                            double f_lo = 500e3, int order = 10,
                                            double max_delay = 100e-9) {
  if (f_hi_list.empty()) throw DomainError("cutoff list is empty");
  std::vector<std::optional<dsp::FilterSpec>> bands;
  for (double f : f_hi_list) {
    if (!(f > f_lo)) throw SpecError("cutoff must exceed the low-frequency edge");
    bands.emplace_back(dsp::FilterSpec{order, f_lo, f});
  }
  return violation_sweep(ts, bands, max_delay);
}

struct SqlSpectra {
  dsp::Psd sql_p, sql_c, sql_diff;
};

// SQLs from the half-beam differences; sql_diff is their pointwise sum.
inline SqlSpectra sql_spectra(const TraceSet& ts) {
  const std::size_t n = ts.samples();
  const double rate = ts.acquisition().sample_rate;
  std::vector<dsp::PsdAccumulator> acc_p(ts.num_sets(), dsp::PsdAccumulator(n, rate));
  std::vector<dsp::PsdAccumulator> acc_c(ts.num_sets(), dsp::PsdAccumulator(n, rate));
  parallel_for(ts.num_sets(), [&](std::size_t set) {
    const auto s = detail::set_spectra(ts, set);
    fft::Spectrum dp(s.p1.size()), dc(s.c1.size());
    for (std::size_t k = 0; k < dp.size(); ++k) {
      dp[k] = s.p1[k] - s.p2[k];
      dc[k] = s.c1[k] - s.c2[k];
    }
    acc_p[set].add_spectrum(dp);
    acc_c[set].add_spectrum(dc);
  });
  for (std::size_t i = 1; i < ts.num_sets(); ++i) {
    acc_p[0].merge(acc_p[i]);
    acc_c[0].merge(acc_c[i]);
  }
  SqlSpectra out{acc_p[0].result(), acc_c[0].result(), {}};
  out.sql_diff = out.sql_p;
  for (std::size_t k = 0; k < out.sql_diff.size(); ++k) out.sql_diff.power[k] += out.sql_c.power[k];
  return out;
}

struct SpectraReport {
  std::vector<double> frequencies;
  std::vector<double> s_p_norm, s_c_norm, s_diff_norm;  // per bin
  std::vector<double> s_p_smooth, s_c_smooth, s_diff_smooth;  // boxcar-smoothed ratios
  dsp::Psd psd_p, psd_c, psd_diff;
  dsp::Psd sql_p, sql_c, sql_diff;
  double dc_probe = 0.0, dc_conj = 0.0;
  double delay = 0.0;
  bool compensated = true;
  double squeezing_db_max = 0.0;  // largest smoothed reduction below the SQL, dB (positive)
  double squeezing_peak_hz = 0.0;
  double squeezing_bandwidth = 0.0;  // first smoothed crossing of the SQL, Hz
  double spectral_csi_lhs = 0.0, spectral_csi_rhs = 0.0;
  bool spectral_csi_classical = true;

  // 10 log10 of the band-averaged difference noise over its SQL.
  double diff_db(double f_lo, double f_hi) const {
    return theory::to_db(psd_diff.band_power(f_lo, f_hi) / sql_diff.band_power(f_lo, f_hi));
  }
};

struct SpectraOptions {
  bool compensate_delay = true;
  std::optional<double> delay;  // seconds; estimated from the traces when empty
  double smoothing_hz = 1e6;
  double search_lo_hz = 500e3;  // squeezing metrics are searched in [lo, hi]
  double search_hi_hz = 40e6;
  dsp::FilterSpec band{10, 500e3, 40e6};  // spectral CSI analysis band
};

namespace detail {

inline std::vector<double> boxcar_ratio(const dsp::Psd& num, const dsp::Psd& den, double width) {
  const std::size_t n = num.size();
  const auto half = static_cast<std::size_t>(std::max(0.0, std::floor(0.5 * width / num.df)));
  std::vector<double> cn(n + 1, 0.0), cd(n + 1, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const bool use = k > 0;
    cn[k + 1] = cn[k] + (use ? num.power[k] : 0.0);
    cd[k + 1] = cd[k] + (use ? den.power[k] : 0.0);
  }
  std::vector<double> out(n, 1.0);
  for (std::size_t k = 1; k < n; ++k) {
    const std::size_t a = std::max<std::size_t>(1, k > half ? k - half : 1);
    const std::size_t b = std::min(n - 1, k + half);
    const double d = cd[b + 1] - cd[a];
    out[k] = d > 0.0 ? (cn[b + 1] - cn[a]) / d : 1.0;
  }
  return out;
}

// Estimated conjugate delay from the set-averaged cross-covariance of the
// summed beams.
inline double pooled_delay(const TraceSet& ts, double max_delay = 100e-9) {
  const auto sweep = violation_sweep(ts, {std::nullopt}, max_delay);
  return sweep.front().report.delay;
}

} // namespace detail

// Frequency-domain CSI test over [f_lo, f_hi], weighting every integrand by the bandpass power
// response times the measured SQL shape (the detection response). With
// r = (n_p - n_c)/(n_p + n_c):
//   lhs = <s_diff_norm - 1>,  rhs = r (<s_p_norm - 1> - <s_c_norm - 1>),
// each <.> the SQL-weighted band average. Classical iff lhs >= rhs.
struct SpectralCsiResult {
  double lhs = 0.0;
  double rhs = 0.0;
  bool classical = true;
};

inline SpectralCsiResult csi_frequency_test(const SpectraReport& rep, const dsp::FilterSpec& band) {
  if (rep.frequencies.empty()) throw BandError("no spectra");
  if (!(band.f_lo > 0.0) || !(band.f_hi > band.f_lo) || band.f_hi > rep.frequencies.back())
    throw BandError("analysis band exceeds the spectral data");
  if (!(rep.dc_probe > 0.0 && rep.dc_conj > 0.0)) throw DcMissing("csi test needs DC means");
  double num_d = 0, den_d = 0, num_p = 0, den_p = 0, num_c = 0, den_c = 0;
  for (std::size_t k = 1; k < rep.frequencies.size(); ++k) {
    const double w = band.power_response(rep.frequencies[k]);
    num_d += w * (rep.psd_diff.power[k] - rep.sql_diff.power[k]);
    den_d += w * rep.sql_diff.power[k];
    num_p += w * (rep.psd_p.power[k] - rep.sql_p.power[k]);
    den_p += w * rep.sql_p.power[k];
    num_c += w * (rep.psd_c.power[k] - rep.sql_c.power[k]);
    den_c += w * rep.sql_c.power[k];
  }
  if (!(den_d > 0.0 && den_p > 0.0 && den_c > 0.0)) throw BandError("SQL vanishes in the analysis band");
  const double r = (rep.dc_probe - rep.dc_conj) / (rep.dc_probe + rep.dc_conj);
  SpectralCsiResult out;
  out.lhs = num_d / den_d;
  out.rhs = r * (num_p / den_p - num_c / den_c);
  out.classical = out.lhs >= out.rhs;
  return out;
}

// SQL-normalized probe, conjugate and intensity-difference spectra. The
// difference is the raw I_p - I_c (no gain balancing), optionally with the
// conjugate advanced by the relative delay.
inline SpectraReport normalized_spectra(const TraceSet& ts, const SpectraOptions& opt = {}) {
  detail::require_dc(ts);
  const std::size_t n = ts.samples();
  const double rate = ts.acquisition().sample_rate;
  SpectraReport rep;
  rep.compensated = opt.compensate_delay;
  rep.delay = opt.compensate_delay ? (opt.delay ? *opt.delay : detail::pooled_delay(ts)) : 0.0;
  rep.dc_probe = detail::probe_dc(ts);
  rep.dc_conj = detail::conj_dc(ts);

  std::vector<Complex> ramp(n / 2 + 1, Complex{1.0, 0.0});
  if (rep.delay != 0.0)
    for (std::size_t k = 1; k < ramp.size(); ++k)
      if (2 * k != n)
        ramp[k] = std::polar(1.0, 2.0 * std::numbers::pi * fft::bin_frequency(k, n, rate) * rep.delay);

  using Acc = dsp::PsdAccumulator;
  std::vector<Acc> ap(ts.num_sets(), Acc(n, rate)), ac(ts.num_sets(), Acc(n, rate)),
      ad(ts.num_sets(), Acc(n, rate));
  parallel_for(ts.num_sets(), [&](std::size_t set) {
    const auto s = detail::set_spectra(ts, set);
    fft::Spectrum ip(s.p1.size()), ic(s.p1.size()), diff(s.p1.size());
    for (std::size_t k = 0; k < ip.size(); ++k) {
      ip[k] = s.p1[k] + s.p2[k];
      ic[k] = s.c1[k] + s.c2[k];
      diff[k] = ip[k] - ic[k] * ramp[k];
    }
    ap[set].add_spectrum(ip);
    ac[set].add_spectrum(ic);
    ad[set].add_spectrum(diff);
  });
  for (std::size_t i = 1; i < ts.num_sets(); ++i) {
    ap[0].merge(ap[i]);
    ac[0].merge(ac[i]);
    ad[0].merge(ad[i]);
  }
  rep.psd_p = ap[0].result();
  rep.psd_c = ac[0].result();
  rep.psd_diff = ad[0].result();
  auto sql = sql_spectra(ts);
  rep.sql_p = std::move(sql.sql_p);
  rep.sql_c = std::move(sql.sql_c);
  rep.sql_diff = std::move(sql.sql_diff);
  rep.frequencies = rep.psd_p.frequencies;

  const std::size_t bins = rep.frequencies.size();
  auto ratio = [&](const dsp::Psd& a, const dsp::Psd& b) {
    std::vector<double> r(bins, 1.0);
    for (std::size_t k = 1; k < bins; ++k) r[k] = b.power[k] > 0.0 ? a.power[k] / b.power[k] : 1.0;
    return r;
  };
  rep.s_p_norm = ratio(rep.psd_p, rep.sql_p);
  rep.s_c_norm = ratio(rep.psd_c, rep.sql_c);
  rep.s_diff_norm = ratio(rep.psd_diff, rep.sql_diff);
  rep.s_p_smooth = detail::boxcar_ratio(rep.psd_p, rep.sql_p, opt.smoothing_hz);
  rep.s_c_smooth = detail::boxcar_ratio(rep.psd_c, rep.sql_c, opt.smoothing_hz);
  rep.s_diff_smooth = detail::boxcar_ratio(rep.psd_diff, rep.sql_diff, opt.smoothing_hz);

  // Squeezing metrics on the smoothed difference spectrum.
  double best = 0.0;
  rep.squeezing_bandwidth = 0.0;
  bool inside = false, closed = false;
  double prev_f = 0.0, prev_v = 0.0;
  for (std::size_t k = 1; k < bins; ++k) {
    const double f = rep.frequencies[k];
    if (f < opt.search_lo_hz || f > opt.search_hi_hz) continue;
    const double v = rep.s_diff_smooth[k];
    const double reduction = -theory::to_db(v);
    if (reduction > best) {
      best = reduction;
      rep.squeezing_peak_hz = f;
    }
    if (!closed) {
      if (v < 1.0) {
        inside = true;
        rep.squeezing_bandwidth = f;
      } else if (inside) {
        rep.squeezing_bandwidth = prev_f + (f - prev_f) * (1.0 - prev_v) / (v - prev_v);
        closed = true;
      }
    }
    prev_f = f;
    prev_v = v;
  }
  rep.squeezing_db_max = best;

  const auto fcsi = csi_frequency_test(rep, opt.band);
  rep.spectral_csi_lhs = fcsi.lhs;
  rep.spectral_csi_rhs = fcsi.rhs;
  rep.spectral_csi_classical = fcsi.classical;
  return rep;
}

} // namespace csilab::estimators

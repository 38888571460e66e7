#pragma once

// Closed-form predictions for a seeded two-mode squeezer (probe seeded with a
// coherent state, conjugate starting in vacuum), a truncated-Fock oracle that
// checks them without any Gaussian assumption, and the linearized
// photocurrent cross-spectral model used by the trace synthesizer.

#include "csilab/errors.hpp"

#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <utility>
#include <vector>

namespace csilab::theory {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Two-mode squeezer acting on |alpha> (probe) x |0> (conjugate).
class SqueezeParams {
public:
  SqueezeParams(double s, std::complex<double> alpha) : s_(s), alpha_(alpha) {
    if (!(s >= 0.0) || !std::isfinite(s)) throw DomainError("squeeze parameter s must be >= 0");
    if (!std::isfinite(alpha.real()) || !std::isfinite(alpha.imag()))
      throw DomainError("seed amplitude must be finite");
  }

  // Squeezer with gain G = cosh^2(s).
  static SqueezeParams from_gain(double gain, std::complex<double> alpha) {
    if (!(gain >= 1.0)) throw DomainError("gain must be >= 1");
    return SqueezeParams(std::acosh(std::sqrt(gain)), alpha);
  }

  double s() const noexcept { return s_; }
  std::complex<double> alpha() const noexcept { return alpha_; }
  double seed_photons() const noexcept { return std::norm(alpha_); }
  double gain() const noexcept { return std::cosh(s_) * std::cosh(s_); }
  double mu() const noexcept { return std::cosh(s_); }
  double nu() const noexcept { return std::sinh(s_); }

private:
  double s_;
  std::complex<double> alpha_;
};

// Single-mode (one temporal mode per beam) moments and derived quantities.
// Entries whose denominator photon number vanishes are NaN.
struct TheoryPrediction {
  double n_probe = 0;
  double n_conj = 0;
  double g2_aa = kNaN;
  double g2_bb = kNaN;
  double g2_ab0 = kNaN;
  double eps_aa = kNaN;
  double eps_bb = kNaN;
  double eps_ab = kNaN;
  double v_ideal = kNaN;
  // Var(n_probe - n_conj) over the summed mean photon number.
  double squeezing_linear = kNaN;

  bool conj_defined() const noexcept { return n_conj > 0.0; }
};

inline std::pair<double, double> mean_photon_numbers(const SqueezeParams& p) {
  const double g = p.gain();
  const double a2 = p.seed_photons();
  return {g * a2 + (g - 1.0), (g - 1.0) * (a2 + 1.0)};
}

// Normally ordered moments of the output Gaussian state. With x = mu a0 +
// nu b0^dag and y = mu b0 + nu a0^dag the only nonzero second moments are
// <x^dag x> = <y^dag y> = nu^2 and <x y> = mu nu; Wick factorization then
// gives the fourth moments below.
inline TheoryPrediction g2_ideal(const SqueezeParams& p) {
  const double mu2 = p.mu() * p.mu();
  const double nu2 = p.nu() * p.nu();
  const double a2 = p.seed_photons();
  TheoryPrediction t;
  std::tie(t.n_probe, t.n_conj) = mean_photon_numbers(p);
  if (!(t.n_probe > 0.0)) throw DegenerateState("probe mean photon number is zero");

  const double mean_a2 = mu2 * a2;  // |<a>|^2
  const double mean_b2 = nu2 * a2;  // |<b>|^2
  const double cov_aa = 2.0 * mean_a2 * nu2 + nu2 * nu2;
  const double cov_bb = 2.0 * mean_b2 * nu2 + nu2 * nu2;
  const double cov_ab = 2.0 * mu2 * nu2 * a2 + mu2 * nu2;

  t.eps_aa = cov_aa / (t.n_probe * t.n_probe);
  t.g2_aa = 1.0 + t.eps_aa;
  // n_a - n_b is conserved by the squeezer, so its variance is the seed's.
  t.squeezing_linear = a2 / (t.n_probe + t.n_conj);
  if (t.conj_defined()) {
    t.eps_bb = cov_bb / (t.n_conj * t.n_conj);
    t.eps_ab = cov_ab / (t.n_probe * t.n_conj);
    t.g2_bb = 1.0 + t.eps_bb;
    t.g2_ab0 = 1.0 + t.eps_ab;
    t.v_ideal = (t.eps_aa + t.eps_bb) / (2.0 * t.eps_ab);
  }
  return t;
}

// Bright-seed limit of the violation factor.
inline double violation_factor_ideal(double gain) {
  if (!(gain >= 1.0)) throw DomainError("gain must be >= 1");
  return 1.0 - 1.0 / (2.0 * gain);
}

// Intensity-difference noise relative to the SQL after detection efficiency eta.
inline double squeezing_ideal(double gain, double eta) {
  if (!(gain >= 1.0)) throw DomainError("gain must be >= 1");
  if (!(eta > 0.0 && eta <= 1.0)) throw DomainError("detection efficiency must be in (0, 1]");
  return eta / (2.0 * gain - 1.0) + (1.0 - eta);
}

inline double to_db(double linear) { return 10.0 * std::log10(linear); }

struct FockMoments {
  double n_probe = 0;
  double n_conj = 0;
  double g2_aa = kNaN;
  double g2_bb = kNaN;
  double g2_ab0 = kNaN;
  std::size_t cutoff = 0;  // Fock dimension per mode actually used
  double norm = 0;         // truncated-state norm
};

inline constexpr double kFockNormTolerance = 1e-14;
inline constexpr std::size_t kFockMaxCutoff = 256;

namespace detail {

// Photon-number distribution of S_ab |alpha, 0> on a cutoff x cutoff grid.
// S|n,0> = mu^-(n+1) sum_k (-tanh s)^k sqrt(C(n+k, k)) |n+k, k>, so every
// |na, nb> with na >= nb is reached from exactly one seed component n = na - nb.
inline FockMoments fock_moments_at(const SqueezeParams& p, std::size_t cutoff) {
  const double a2 = p.seed_photons();
  const double log_mu = std::log(p.mu());
  const double t = std::tanh(p.s());
  long double norm = 0, sum_na = 0, sum_nb = 0, fact_aa = 0, fact_bb = 0, cross = 0;
  for (std::size_t nb = 0; nb < cutoff; ++nb) {
    if (nb > 0 && t == 0.0) break;
    for (std::size_t na = nb; na < cutoff; ++na) {
      const double n = static_cast<double>(na - nb);
      const double k = static_cast<double>(nb);
      if (n > 0 && a2 == 0.0) break;
      double log_p = -a2 - std::lgamma(n + 1.0) - 2.0 * (n + 1.0) * log_mu +
                     std::lgamma(n + k + 1.0) - std::lgamma(n + 1.0) - std::lgamma(k + 1.0);
      if (n > 0) log_p += n * std::log(a2);
      if (k > 0) log_p += 2.0 * k * std::log(t);
      const long double prob = std::exp(static_cast<long double>(log_p));
      const long double xa = static_cast<long double>(na);
      const long double xb = static_cast<long double>(nb);
      norm += prob;
      sum_na += prob * xa;
      sum_nb += prob * xb;
      fact_aa += prob * xa * (xa - 1);
      fact_bb += prob * xb * (xb - 1);
      cross += prob * xa * xb;
    }
  }
  FockMoments m;
  m.cutoff = cutoff;
  m.norm = static_cast<double>(norm);
  const long double na = sum_na / norm;
  const long double nb = sum_nb / norm;
  m.n_probe = static_cast<double>(na);
  m.n_conj = static_cast<double>(nb);
  if (na > 0) m.g2_aa = static_cast<double>(fact_aa / norm / (na * na));
  if (nb > 0) m.g2_bb = static_cast<double>(fact_bb / norm / (nb * nb));
  if (na > 0 && nb > 0) m.g2_ab0 = static_cast<double>(cross / norm / (na * nb));
  return m;
}

} // namespace detail

// Brute-force moments from the explicit number-basis state. Starting from
// `cutoff`, the dimension doubles until the truncated norm is within
// kFockNormTolerance of one; throws CutoffTooSmall beyond kFockMaxCutoff or,
// with auto_grow off, when the requested cutoff is insufficient.
inline FockMoments fock_oracle_moments(const SqueezeParams& p, std::size_t cutoff,
                                       bool auto_grow = true) {
  if (cutoff < 2) throw DomainError("Fock cutoff must be >= 2");
  for (;;) {
    FockMoments m = detail::fock_moments_at(p, cutoff);
    if (m.norm >= 1.0 - kFockNormTolerance) return m;
    if (!auto_grow) throw CutoffTooSmall("truncated norm " + std::to_string(m.norm) +
                                         " at cutoff " + std::to_string(cutoff));
    if (cutoff >= kFockMaxCutoff)
      throw CutoffTooSmall("Fock cutoff would exceed " + std::to_string(kFockMaxCutoff));
    cutoff = std::min(cutoff * 2, kFockMaxCutoff);
  }
}

// Uncorrelated classical noise added at the source, in units of the beam's
// SQL, with a high-pass profile level * x / (1 + x), x = (f/f_on)^n, and an
// optional matching low-pass roll-off 1 / (1 + (f/f_cut)^n) when cutoff_hz > 0.
struct ExcessNoiseSpec {
  double probe_level = 0.0;
  double conj_level = 0.0;
  double onset_hz = 1e6;
  int order = 4;
  double cutoff_hz = 0.0;

  double shape(double f) const {
    const double x = std::pow(std::abs(f) / onset_hz, order);
    double h = x / (1.0 + x);
    if (cutoff_hz > 0.0) h /= 1.0 + std::pow(std::abs(f) / cutoff_hz, order);
    return h;
  }
  double probe(double f) const { return probe_level > 0.0 ? probe_level * shape(f) : 0.0; }
  double conj(double f) const { return conj_level > 0.0 ? conj_level * shape(f) : 0.0; }
  bool any() const { return probe_level > 0.0 || conj_level > 0.0; }
};

// Cross-spectral matrix of the (probe, conjugate) photocurrent fluctuations
// at one frequency, each entry in units of the corresponding SQL:
// s_pp = S_p / SQL_p, s_cc = S_c / SQL_c, s_pc = S_pc / sqrt(SQL_p SQL_c), where
// S_pc pairs conj(probe) with conjugate, so a lagging conjugate has phase -2 pi f delay.
struct CsdPoint {
  double s_pp = 1.0;
  double s_cc = 1.0;
  std::complex<double> s_pc{0.0, 0.0};
};

// Linearized (bright-seed) spectral model. The gain has a single-pole
// Lorentzian profile G(f) = 1 + (G - 1) / (1 + (f/f_B)^2); loss scales every
// above-SQL term by eta; the conjugate lags the probe by `delay` seconds.
class SpectralModel {
public:
  SpectralModel(SqueezeParams params, double gain_bandwidth_hz, double delay_s, double eta,
                ExcessNoiseSpec excess = {})
      : params_(params), bandwidth_(gain_bandwidth_hz), delay_(delay_s), eta_(eta),
        excess_(excess) {
    if (!(gain_bandwidth_hz > 0.0)) throw DomainError("gain bandwidth must be > 0");
    if (!(eta > 0.0 && eta <= 1.0)) throw DomainError("detection efficiency must be in (0, 1]");
    std::tie(n_probe_, n_conj_) = mean_photon_numbers(params);
  }

  const SqueezeParams& params() const noexcept { return params_; }
  double gain_bandwidth() const noexcept { return bandwidth_; }
  double delay() const noexcept { return delay_; }
  double eta() const noexcept { return eta_; }
  const ExcessNoiseSpec& excess() const noexcept { return excess_; }
  double n_probe() const noexcept { return n_probe_; }
  double n_conj() const noexcept { return n_conj_; }

  double gain_at(double f) const {
    const double x = f / bandwidth_;
    return 1.0 + (params_.gain() - 1.0) / (1.0 + x * x);
  }

  CsdPoint operator()(double f) const {
    const double g = gain_at(f);
    const double nu2 = g - 1.0;
    CsdPoint c;
    c.s_pp = 1.0 + eta_ * (2.0 * nu2 + excess_.probe(f));
    c.s_cc = 1.0 + eta_ * (2.0 * nu2 + excess_.conj(f));
    const double phase = -2.0 * std::numbers::pi * f * delay_;
    c.s_pc = std::polar(eta_ * 2.0 * std::sqrt(g * nu2), phase);
    return c;
  }

  // Intensity-difference spectrum over the summed SQL. With
  // compensate_delay the cross term enters with its magnitude.
  double diff_norm(double f, bool compensate_delay = true) const {
    if (!(n_conj_ > 0.0)) return 1.0;
    const CsdPoint c = (*this)(f);
    const double r = n_probe_ / n_conj_;
    const double cross = compensate_delay ? std::abs(c.s_pc) : c.s_pc.real();
    return (r * c.s_pp + c.s_cc - 2.0 * std::sqrt(r) * cross) / (r + 1.0);
  }

private:
  SqueezeParams params_;
  double bandwidth_;
  double delay_;
  double eta_;
  ExcessNoiseSpec excess_;
  double n_probe_ = 0;
  double n_conj_ = 0;
};

// Composite Simpson rule on [a, b] with an even number of panels.
inline double integrate(const std::function<double(double)>& fn, double a, double b,
                        std::size_t panels = 20000) {
  if (!(b > a)) return 0.0;
  if (panels % 2) ++panels;
  const double h = (b - a) / static_cast<double>(panels);
  double sum = fn(a) + fn(b);
  for (std::size_t i = 1; i < panels; ++i)
    sum += fn(a + h * static_cast<double>(i)) * (i % 2 ? 4.0 : 2.0);
  return sum * h / 3.0;
}

// Fluctuation parts that a split-detection measurement of the model would
// yield when every channel is weighted by `weight(f)` (filter power response)
// on [0, f_max]. Values carry the common factor 2 q (charge per photon) / I
// and are only meaningful as ratios.
struct BandEpsilon {
  double eps_aa = 0;
  double eps_bb = 0;
  double eps_ab_peak = 0;
  double v() const { return (eps_aa + eps_bb) / (2.0 * eps_ab_peak); }
};

inline BandEpsilon band_epsilon(const SpectralModel& m, const std::function<double(double)>& weight,
                                double f_max) {
  if (!(m.n_conj() > 0.0)) throw DegenerateState("conjugate mean photon number is zero");
  BandEpsilon e;
  e.eps_aa = integrate([&](double f) { return weight(f) * (m(f).s_pp - 1.0); }, 0.0, f_max) /
             m.n_probe();
  e.eps_bb = integrate([&](double f) { return weight(f) * (m(f).s_cc - 1.0); }, 0.0, f_max) /
             m.n_conj();
  e.eps_ab_peak = integrate([&](double f) { return weight(f) * std::abs(m(f).s_pc); }, 0.0, f_max) /
                  std::sqrt(m.n_probe() * m.n_conj());
  return e;
}

// Violation factor expected from band-limited split detection.
inline double violation_factor_band(const SpectralModel& m,
                                    const std::function<double(double)>& weight, double f_max) {
  return band_epsilon(m, weight, f_max).v();
}

// End of the squeezed region: first frequency at or above f_start where the
// delay-compensated difference spectrum reaches the SQL. Infinity when it
// stays below the SQL up to f_max.
inline double squeezing_bandwidth(const SpectralModel& m, double f_start, double f_max,
                                  double step_hz = 1e4) {
  double prev_f = f_start;
  double prev = m.diff_norm(f_start) - 1.0;
  if (prev >= 0.0) return f_start;
  for (double f = f_start + step_hz; f <= f_max; f += step_hz) {
    const double cur = m.diff_norm(f) - 1.0;
    if (cur >= 0.0) return prev_f + (f - prev_f) * (-prev) / (cur - prev);
    prev_f = f;
    prev = cur;
  }
  return kInf;
}

// Gain bandwidth f_B for which squeezing_bandwidth equals target_hz.
// Requires excess noise so that the squeezed region ends.
inline double gain_bandwidth_for_squeezing(const SqueezeParams& params, double delay_s, double eta,
                                           const ExcessNoiseSpec& excess, double target_hz,
                                           double f_start, double f_max) {
  auto crossing = [&](double fb) {
    return squeezing_bandwidth(SpectralModel(params, fb, delay_s, eta, excess), f_start, f_max);
  };
  double lo = target_hz * 1e-3, hi = target_hz * 1e3;
  if (!(crossing(lo) < target_hz) || !(crossing(hi) > target_hz))
    throw DomainError("squeezing bandwidth target not reachable with this excess noise");
  for (int it = 0; it < 80 && hi / lo > 1.0 + 1e-9; ++it) {
    const double mid = std::sqrt(lo * hi);
    (crossing(mid) < target_hz ? lo : hi) = mid;
  }
  return std::sqrt(lo * hi);
}

} // namespace csilab::theory

#pragma once

// Spectral estimation, zero-phase Butterworth band filtering and sub-sample
// delay tools on real sampled traces.

#include "csilab/errors.hpp"
#include "csilab/fft.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

namespace csilab::dsp {

using Complex = std::complex<double>;

// Smallest n' >= n whose only prime factors are 2, 3, 5 and 7.
inline std::size_t next_fast_size(std::size_t n) {
  if (n <= 1) return 1;
  for (std::size_t m = n;; ++m) {
    std::size_t r = m;
    for (std::size_t p : {2u, 3u, 5u, 7u})
      while (r % p == 0) r /= p;
    if (r == 1) return m;
  }
}

inline double mean(std::span<const double> x) {
  if (x.empty()) return 0.0;
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

inline double variance(std::span<const double> x) {
  if (x.empty()) return 0.0;
  const double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size());
}

// One-sided power spectral density on the rfft grid k * rate / n,
// k = 0 .. n/2. The DC bin is zero (means are removed), interior bins carry
// 2 |X_k|^2 / (n rate) and the Nyquist bin |X_k|^2 / (n rate), so that
// sum(power) * df equals the (population) variance of each trace.
struct Psd {
  std::vector<double> frequencies;
  std::vector<double> power;
  std::size_t num_averages = 0;
  double df = 0.0;

  std::size_t size() const noexcept { return power.size(); }

  // sum(power * df) over bins with f_lo <= f <= f_hi.
  double band_power(double f_lo, double f_hi) const {
    double s = 0.0;
    for (std::size_t k = 0; k < power.size(); ++k)
      if (frequencies[k] >= f_lo && frequencies[k] <= f_hi) s += power[k];
    return s * df;
  }

  double total_power() const { return band_power(0.0, frequencies.empty() ? 0.0 : frequencies.back()); }
};

inline std::vector<double> hann_window(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i)
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
  return w;
}

// Running average of periodograms of equal-length traces.
class PsdAccumulator {
public:
  PsdAccumulator(std::size_t n, double sample_rate, bool hann = false)
      : n_(n), rate_(sample_rate), sum_(n / 2 + 1, 0.0) {
    if (n < 2) throw DomainError("psd: trace length must be >= 2");
    if (!(sample_rate > 0.0)) throw DomainError("psd: sample rate must be > 0");
    if (hann) {
      window_ = hann_window(n);
      double p = 0.0;
      for (double w : window_) p += w * w;
      window_power_ = p / static_cast<double>(n);
    }
  }

  void add(std::span<const double> trace) {
    if (trace.size() != n_) throw DomainError("psd: trace length mismatch");
    std::vector<double> x(trace.begin(), trace.end());
    const double m = mean(x);
    for (std::size_t i = 0; i < n_; ++i) {
      x[i] -= m;
      if (!window_.empty()) x[i] *= window_[i];
    }
    add_spectrum(fft::rfft(x));
  }

  // Adds the periodogram of a precomputed rfft of a mean-free trace.
  void add_spectrum(std::span<const Complex> spectrum) {
    if (spectrum.size() != sum_.size()) throw DomainError("psd: spectrum length mismatch");
    for (std::size_t k = 1; k < sum_.size(); ++k) sum_[k] += std::norm(spectrum[k]);
    ++count_;
  }

  // Merges another accumulator of the same shape (associative reduction).
  void merge(const PsdAccumulator& other) {
    if (other.sum_.size() != sum_.size()) throw DomainError("psd: accumulator shape mismatch");
    for (std::size_t k = 0; k < sum_.size(); ++k) sum_[k] += other.sum_[k];
    count_ += other.count_;
  }

  std::size_t count() const noexcept { return count_; }

  Psd result() const {
    Psd p;
    p.num_averages = count_;
    p.df = rate_ / static_cast<double>(n_);
    p.frequencies.resize(sum_.size());
    p.power.assign(sum_.size(), 0.0);
    for (std::size_t k = 0; k < sum_.size(); ++k) p.frequencies[k] = fft::bin_frequency(k, n_, rate_);
    if (count_ == 0) return p;
    const double base = 1.0 / (static_cast<double>(n_) * rate_ * window_power_ * static_cast<double>(count_));
    for (std::size_t k = 1; k < sum_.size(); ++k) {
      const bool nyquist = (2 * k == n_);
      p.power[k] = sum_[k] * base * (nyquist ? 1.0 : 2.0);
    }
    return p;
  }

private:
  std::size_t n_;
  double rate_;
  std::vector<double> sum_;
  std::vector<double> window_;
  double window_power_ = 1.0;
  std::size_t count_ = 0;
};

// Averaged periodogram over sets (one periodogram per trace, no overlap).
inline Psd psd_estimate(std::span<const std::vector<double>> traces, double sample_rate,
                        bool hann = false) {
  if (traces.empty()) throw DomainError("psd: no traces");
  PsdAccumulator acc(traces.front().size(), sample_rate, hann);
  for (const auto& t : traces) acc.add(t);
  return acc.result();
}

// Butterworth bandpass of prototype order `order`, defined by its analog
// power response |H(f)|^2 = 1 / (1 + q^(2 order)), q = (f^2 - f_lo f_hi) /
// (f (f_hi - f_lo)), which is exactly one half at f_lo and f_hi.
struct FilterSpec {
  int order = 10;
  double f_lo = 500e3;
  double f_hi = 15e6;

  void validate(double sample_rate) const {
    if (order < 2 || order % 2 != 0) throw SpecError("filter order must be even and >= 2");
    if (!(f_lo > 0.0)) throw SpecError("filter f_lo must be > 0");
    if (!(f_hi > f_lo)) throw SpecError("filter f_hi must exceed f_lo");
    if (!(f_hi < sample_rate / 2.0)) throw SpecError("filter f_hi must be below Nyquist");
  }

  double power_response(double f) const {
    f = std::abs(f);
    if (f == 0.0) return 0.0;
    const double q = (f * f - f_lo * f_hi) / (f * (f_hi - f_lo));
    return 1.0 / (1.0 + std::pow(q * q, order));
  }

  double magnitude(double f) const { return std::sqrt(power_response(f)); }
};

// Multiplies an rfft spectrum (length n) by the filter magnitude in place.
inline void apply_filter(std::span<Complex> spectrum, std::size_t n, const FilterSpec& spec,
                         double sample_rate) {
  for (std::size_t k = 0; k < spectrum.size(); ++k)
    spectrum[k] *= spec.magnitude(fft::bin_frequency(k, n, sample_rate));
}

// Zero-phase bandpass: the trace spectrum is scaled by |H| and transformed
// back, so the response is real and the filter adds no group delay.
inline std::vector<double> butterworth_bandpass(std::span<const double> trace, const FilterSpec& spec,
                                                double sample_rate) {
  spec.validate(sample_rate);
  auto x = fft::rfft(trace);
  apply_filter(x, trace.size(), spec, sample_rate);
  return fft::irfft(x, trace.size());
}

// Linear cross-covariance c[l] = <(x_n - mean x)(y_{n+l} - mean y)>, averaged
// over the N - |l| overlapping pairs, for l in [-max_lag, max_lag]. Entry
// max_lag + l holds lag l. A positive peak lag means y lags x.
inline std::vector<double> cross_covariance(std::span<const double> x, std::span<const double> y,
                                            std::size_t max_lag) {
  if (x.size() != y.size() || x.empty()) throw DomainError("cross_covariance: length mismatch");
  const std::size_t n = x.size();
  max_lag = std::min(max_lag, n - 1);
  const std::size_t m = next_fast_size(n + max_lag);
  std::vector<double> xp(m, 0.0), yp(m, 0.0);
  const double mx = mean(x), my = mean(y);
  for (std::size_t i = 0; i < n; ++i) {
    xp[i] = x[i] - mx;
    yp[i] = y[i] - my;
  }
  auto fx = fft::rfft(xp);
  const auto fy = fft::rfft(yp);
  for (std::size_t k = 0; k < fx.size(); ++k) fx[k] = std::conj(fx[k]) * fy[k];
  const auto r = fft::irfft(fx, m);
  std::vector<double> c(2 * max_lag + 1);
  for (std::size_t l = 0; l <= max_lag; ++l) {
    const double norm = 1.0 / static_cast<double>(n - l);
    c[max_lag + l] = r[l] * norm;
    c[max_lag - l] = r[(m - l) % m] * norm;
  }
  return c;
}

// Location of the maximum of a sampled curve with 3-point parabolic
// refinement, in samples from index 0.
struct Peak {
  double position = 0.0;
  double value = 0.0;
  std::size_t index = 0;
};

inline Peak parabolic_peak(std::span<const double> c) {
  if (c.empty()) throw NoPeak("empty curve");
  const auto it = std::max_element(c.begin(), c.end());
  Peak p;
  p.index = static_cast<std::size_t>(it - c.begin());
  p.position = static_cast<double>(p.index);
  p.value = *it;
  if (p.index > 0 && p.index + 1 < c.size()) {
    const double a = c[p.index - 1], b = c[p.index], d = c[p.index + 1];
    const double denom = a - 2.0 * b + d;
    if (denom < 0.0) {
      const double off = 0.5 * (a - d) / denom;
      p.position += off;
      p.value = b - 0.25 * (a - d) * off;
    }
  }
  return p;
}

// Peak prominence test on a lag curve: the maximum must exceed the
// background by 5 background rms values. The background is every lag
// farther than a quarter of the curve half-width from the peak.
inline void require_prominent_peak(std::span<const double> c, const Peak& p) {
  const std::size_t half = c.size() / 2;
  const double guard = std::max(2.0, static_cast<double>(half) / 4.0);
  double s = 0.0, s2 = 0.0;
  std::size_t k = 0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (std::abs(static_cast<double>(i) - p.position) <= guard) continue;
    s += c[i];
    s2 += c[i] * c[i];
    ++k;
  }
  if (k < 4) throw NoPeak("lag range too short to judge the peak");
  const double mu = s / static_cast<double>(k);
  const double rms = std::sqrt(std::max(0.0, s2 / static_cast<double>(k) - mu * mu));
  if (!(p.value - mu > 5.0 * rms)) throw NoPeak("cross-covariance peak below 5x background rms");
}

// Delay (seconds) of `conj` relative to `probe`, from the maximum of the
// cross-covariance over lags up to a tenth of the record.
inline double estimate_delay(std::span<const double> probe, std::span<const double> conj,
                             double sample_rate, std::size_t max_lag = 0) {
  if (probe.size() != conj.size()) throw DomainError("estimate_delay: length mismatch");
  if (max_lag == 0) max_lag = std::max<std::size_t>(8, probe.size() / 10);
  const auto c = cross_covariance(probe, conj, max_lag);
  const Peak p = parabolic_peak(c);
  require_prominent_peak(c, p);
  return (p.position - static_cast<double>((c.size() - 1) / 2)) / sample_rate;
}

// Advances `trace` by `delay` seconds: y(t) = x(t + delay), applied as an
// exact phase ramp. The Nyquist bin is left untouched so the result stays
// real for fractional shifts and shifting back restores the input.
inline std::vector<double> compensate_delay(std::span<const double> trace, double delay,
                                            double sample_rate) {
  const std::size_t n = trace.size();
  const double duration = static_cast<double>(n) / sample_rate;
  if (!(std::abs(delay) < 0.1 * duration)) throw DomainError("delay must be below 10% of the trace");
  if (delay == 0.0) return {trace.begin(), trace.end()};
  auto x = fft::rfft(trace);
  for (std::size_t k = 1; k < x.size(); ++k) {
    if (2 * k == n) break;
    const double f = fft::bin_frequency(k, n, sample_rate);
    x[k] *= std::polar(1.0, 2.0 * std::numbers::pi * f * delay);
  }
  return fft::irfft(x, n);
}

} // namespace csilab::dsp

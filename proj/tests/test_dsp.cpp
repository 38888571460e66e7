#include <catch2/catch_amalgamated.hpp>

#include "csilab/dsp.hpp"
#include "csilab/rng.hpp"
#include "csilab/synth.hpp"

#include <cmath>
#include <numbers>

using namespace csilab;
using namespace csilab::dsp;
using Catch::Approx;

namespace {

constexpr double kRate = 1e9;
constexpr std::size_t kN = 10000;

std::vector<double> white(std::size_t n, rng::Gaussian& g, double sigma = 1.0) {
  std::vector<double> x(n);
  for (auto& v : x) v = sigma * g();
  return x;
}

std::vector<double> sine(std::size_t n, double f, double amp, double phase = 0.0) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i)
    x[i] = amp * std::sin(2.0 * std::numbers::pi * f * static_cast<double>(i) / kRate + phase);
  return x;
}

double rms(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s / static_cast<double>(x.size()));
}

// Band-limited noise whose probe/conjugate pair shares a common component,
// the conjugate copy shifted by `delay`.
std::pair<std::vector<double>, std::vector<double>> delayed_pair(double delay, std::uint64_t seed,
                                                                 double noise = 0.5) {
  rng::Gaussian g(seed);
  const auto lp = [](double f) { return 1.0 / (1.0 + std::pow(f / 40e6, 8)); };
  const std::size_t ng = synth::detail::generation_length(kN);
  const auto common = synth::detail::colored_noise(ng, kRate, 1.0, lp, g);
  const auto shifted = compensate_delay(common, -delay, kRate);
  std::vector<double> a(kN), b(kN);
  const std::size_t first = (ng - kN) / 2;
  const double sigma = noise * std::sqrt(variance(common));
  for (std::size_t i = 0; i < kN; ++i) {
    a[i] = common[first + i] + sigma * g();
    b[i] = shifted[first + i] + sigma * g();
  }
  return {a, b};
}

} // namespace

TEST_CASE("PSD of white noise is flat at 2 sigma^2 / rate", "[dsp][psd]") {
  rng::Gaussian g(11);
  PsdAccumulator acc(kN, kRate);
  for (int i = 0; i < 500; ++i) acc.add(white(kN, g));
  const auto p = acc.result();
  CHECK(p.num_averages == 500);
  CHECK(p.df == Approx(kRate / kN));
  CHECK(p.power[0] == 0.0);
  // 10 MHz blocks (100 bins x 500 sets) have 0.45% sampling scatter, so
  // every block must sit within 3% of the level.
  const double level = 2.0 / kRate;
  for (std::size_t k = 1; k + 100 < p.size(); k += 100) {
    double s = 0.0;
    for (std::size_t j = k; j < k + 100; ++j) s += p.power[j];
    CHECK(s / 100.0 == Approx(level).epsilon(0.03));
  }
}

TEST_CASE("PSD of a sinusoid is a single line with power A^2/2", "[dsp][psd]") {
  const double f = 100.0 * kRate / kN;  // on a bin
  const auto x = sine(kN, f, 3.0);
  const std::vector<std::vector<double>> traces{x};
  const auto p = psd_estimate(traces, kRate);
  CHECK(p.power[100] * p.df == Approx(4.5).epsilon(1e-9));
  CHECK(p.total_power() == Approx(4.5).epsilon(1e-9));
  CHECK(p.band_power(0, 90 * p.df) < 1e-20);
}

TEST_CASE("PSD integral equals the trace variance", "[dsp][psd]") {
  rng::Gaussian g(3);
  for (std::size_t n : {kN, std::size_t{9999}, std::size_t{1024}}) {
    const auto x = white(n, g, 2.5);
    const std::vector<std::vector<double>> traces{x};
    const auto p = psd_estimate(traces, kRate);
    CHECK(p.total_power() == Approx(variance(x)).epsilon(1e-6));
  }
}

TEST_CASE("Hann-windowed PSD keeps the white-noise level", "[dsp][psd]") {
  rng::Gaussian g(5);
  std::vector<std::vector<double>> traces;
  for (int i = 0; i < 200; ++i) traces.push_back(white(kN, g));
  const auto p = psd_estimate(traces, kRate, true);
  CHECK(p.band_power(1e6, 400e6) / (399e6) == Approx(2.0 / kRate).epsilon(0.01));
}

TEST_CASE("PSD accumulators merge associatively", "[dsp][psd]") {
  rng::Gaussian g(9);
  PsdAccumulator all(256, kRate), left(256, kRate), right(256, kRate);
  for (int i = 0; i < 6; ++i) {
    const auto x = white(256, g);
    all.add(x);
    (i < 3 ? left : right).add(x);
  }
  left.merge(right);
  const auto a = all.result(), b = left.result();
  for (std::size_t k = 0; k < a.size(); ++k) CHECK(a.power[k] == Approx(b.power[k]).epsilon(1e-12));
  CHECK_THROWS_AS(left.add(std::vector<double>(10, 0.0)), DomainError);
}

TEST_CASE("Butterworth response at the band edges", "[dsp][filter]") {
  const FilterSpec spec{10, 500e3, 15e6};
  CHECK(10.0 * std::log10(spec.power_response(spec.f_lo)) == Approx(-3.0103).margin(0.01));
  CHECK(10.0 * std::log10(spec.power_response(spec.f_hi)) == Approx(-3.0103).margin(0.01));
  CHECK(spec.power_response(0.0) == 0.0);
  CHECK(-10.0 * std::log10(spec.power_response(2.0 * spec.f_hi)) >= 55.0);

  SECTION("sinusoids through the filter") {
    const double df = kRate / kN;
    auto gain_db = [&](double f) {
      const auto x = sine(kN, f, 1.0);
      return 20.0 * std::log10(rms(butterworth_bandpass(x, spec, kRate)) / rms(x));
    };
    // Edge tones on exact bins of a 1 ms record (1 kHz spacing).
    const std::size_t n_long = 1000000;
    auto gain_db_long = [&](double f) {
      std::vector<double> x(n_long);
      for (std::size_t i = 0; i < n_long; ++i)
        x[i] = std::sin(2.0 * std::numbers::pi * f * static_cast<double>(i) / kRate);
      return 20.0 * std::log10(rms(butterworth_bandpass(x, spec, kRate)) / rms(x));
    };
    CHECK(gain_db_long(500e3) == Approx(-3.0103).margin(0.01));
    CHECK(gain_db_long(15e6) == Approx(-3.0103).margin(0.01));
    const double mid = std::round(std::sqrt(spec.f_lo * spec.f_hi) / df) * df;
    CHECK(std::pow(10.0, gain_db(mid) / 20.0) == Approx(1.0).epsilon(1e-3));
    CHECK(gain_db(30e6) <= -55.0);
  }
}

TEST_CASE("filter spec validation", "[dsp][filter]") {
  CHECK_THROWS_AS((FilterSpec{9, 500e3, 15e6}.validate(kRate)), SpecError);
  CHECK_THROWS_AS((FilterSpec{0, 500e3, 15e6}.validate(kRate)), SpecError);
  CHECK_THROWS_AS((FilterSpec{10, 0.0, 15e6}.validate(kRate)), SpecError);
  CHECK_THROWS_AS((FilterSpec{10, 20e6, 15e6}.validate(kRate)), SpecError);
  CHECK_THROWS_AS((FilterSpec{10, 500e3, 600e6}.validate(kRate)), SpecError);
  CHECK_NOTHROW((FilterSpec{2, 500e3, 15e6}.validate(kRate)));
  const std::vector<double> x(64, 0.0);
  CHECK_THROWS_AS(butterworth_bandpass(x, FilterSpec{10, 500e3, 600e6}, kRate), SpecError);
}

TEST_CASE("filtering an in-band signal twice barely changes it", "[dsp][filter]") {
  const FilterSpec spec{10, 500e3, 15e6};
  rng::Gaussian g(21);
  const auto x = white(kN, g);
  const auto once = butterworth_bandpass(x, spec, kRate);
  const auto twice = butterworth_bandpass(once, spec, kRate);
  const double r0 = rms(x), r1 = rms(once), r2 = rms(twice);
  CHECK(std::abs(r2 - r1) <= 2.0 * std::abs(r1 - r0));

  // Linearity.
  const auto y = white(kN, g);
  std::vector<double> xy(kN);
  for (std::size_t i = 0; i < kN; ++i) xy[i] = 2.0 * x[i] - y[i];
  const auto fy = butterworth_bandpass(y, spec, kRate);
  const auto fxy = butterworth_bandpass(xy, spec, kRate);
  for (std::size_t i = 0; i < kN; i += 97) CHECK(fxy[i] == Approx(2.0 * once[i] - fy[i]).margin(1e-12));
}

TEST_CASE("cross covariance lag convention", "[dsp][delay]") {
  rng::Gaussian g(4);
  const auto x = white(2000, g);
  std::vector<double> y(2000, 0.0);
  for (std::size_t i = 5; i < y.size(); ++i) y[i] = x[i - 5];  // y lags x by 5 samples
  const auto c = cross_covariance(x, y, 20);
  const auto p = parabolic_peak(c);
  CHECK(p.index == 25);
}

TEST_CASE("delay estimation", "[dsp][delay]") {
  SECTION("identical traces") {
    auto [a, b] = delayed_pair(0.0, 1);
    CHECK(std::abs(estimate_delay(a, a, kRate)) < 1e-12);
  }
  SECTION("8 ns and 13 ns delays") {
    for (double d : {8e-9, 13e-9, 8.4e-9}) {
      auto [a, b] = delayed_pair(d, 2);
      CAPTURE(d);
      CHECK(estimate_delay(a, b, kRate) == Approx(d).margin(1e-9));
    }
  }
  SECTION("negative delay") {
    auto [a, b] = delayed_pair(-5e-9, 3);
    CHECK(estimate_delay(a, b, kRate) == Approx(-5e-9).margin(1e-9));
  }
  SECTION("uncorrelated traces have no peak") {
    rng::Gaussian g(77);
    const auto a = white(kN, g), b = white(kN, g);
    CHECK_THROWS_AS(estimate_delay(a, b, kRate), NoPeak);
  }
  SECTION("unbiased over many seeds") {
    double sum = 0.0;
    for (std::uint64_t s = 0; s < 100; ++s) {
      auto [a, b] = delayed_pair(8e-9, 1000 + s, 1.0);
      sum += estimate_delay(a, b, kRate);
    }
    CHECK(std::abs(sum / 100.0 - 8e-9) <= 0.1e-9);
  }
}

TEST_CASE("delay compensation", "[dsp][delay]") {
  rng::Gaussian g(8);
  const auto x = white(kN, g);
  CHECK(compensate_delay(x, 0.0, kRate) == x);

  const auto fwd = compensate_delay(x, 3.3e-9, kRate);
  const auto back = compensate_delay(fwd, -3.3e-9, kRate);
  double err = 0.0;
  for (std::size_t i = 0; i < kN; ++i) err += (back[i] - x[i]) * (back[i] - x[i]);
  CHECK(std::sqrt(err / kN) <= 1e-9);

  // An integer shift is a circular rotation.
  const auto adv = compensate_delay(x, 4e-9, kRate);
  for (std::size_t i = 0; i + 4 < kN; i += 113) CHECK(adv[i] == Approx(x[i + 4]).margin(1e-9));

  CHECK_THROWS_AS(compensate_delay(x, 2e-6, kRate), DomainError);
}

TEST_CASE("parabolic peak refinement", "[dsp]") {
  std::vector<double> c(21);
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double d = static_cast<double>(i) - 10.3;
    c[i] = 5.0 - d * d;
  }
  const auto p = parabolic_peak(c);
  CHECK(p.position == Approx(10.3).epsilon(1e-12));
  CHECK(p.value == Approx(5.0).epsilon(1e-12));
  CHECK_THROWS_AS(parabolic_peak(std::vector<double>{}), NoPeak);
}

#include <catch2/catch_amalgamated.hpp>

#include "csilab/theory.hpp"

#include <cmath>

using namespace csilab;
using namespace csilab::theory;
using Catch::Approx;

namespace {

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

} // namespace

TEST_CASE("mean photon numbers of the seeded squeezer", "[theory]") {
  auto [np0, nc0] = mean_photon_numbers(SqueezeParams(0.0, {2.0, 0.0}));
  CHECK(np0 == Approx(4.0));
  CHECK(nc0 == 0.0);

  const double sh2 = std::sinh(0.5) * std::sinh(0.5);
  auto [np, nc] = mean_photon_numbers(SqueezeParams(0.5, {0.0, 0.0}));
  CHECK(np == Approx(sh2).epsilon(1e-12));
  CHECK(nc == Approx(sh2).epsilon(1e-12));
  CHECK(np == Approx(0.2715).margin(1e-4));

  const SqueezeParams p(0.3, {1.5, 0.0});
  auto [np2, nc2] = mean_photon_numbers(p);
  const auto f = fock_oracle_moments(p, 40);
  CHECK(rel(f.n_probe, np2) <= 1e-9);
  CHECK(rel(f.n_conj, nc2) <= 1e-9);
}

TEST_CASE("squeeze parameters reject bad input", "[theory]") {
  CHECK_THROWS_AS(SqueezeParams(-0.1, {1.0, 0.0}), DomainError);
  CHECK_THROWS_AS(SqueezeParams::from_gain(0.5, {1.0, 0.0}), DomainError);
  CHECK(SqueezeParams::from_gain(10.0, {1.0, 0.0}).gain() == Approx(10.0).epsilon(1e-12));
}

TEST_CASE("g2_ideal closed forms", "[theory]") {
  SECTION("unseeded marginals are thermal") {
    for (double s : {0.1, 0.5, 1.2}) {
      const auto t = g2_ideal(SqueezeParams(s, {0.0, 0.0}));
      CHECK(t.g2_aa == Approx(2.0).epsilon(1e-12));
      CHECK(t.g2_bb == Approx(2.0).epsilon(1e-12));
    }
  }
  SECTION("two-mode squeezed vacuum cross correlation") {
    const auto t = g2_ideal(SqueezeParams(0.5, {0.0, 0.0}));
    const double sh2 = std::sinh(0.5) * std::sinh(0.5);
    CHECK(t.g2_ab0 == Approx(2.0 + 1.0 / sh2).epsilon(1e-12));
    const auto f = fock_oracle_moments(SqueezeParams(0.5, {0.0, 0.0}), 40);
    CHECK(rel(f.g2_ab0, t.g2_ab0) <= 1e-8);
  }
  SECTION("bright seed at G = 10") {
    const auto t = g2_ideal(SqueezeParams::from_gain(10.0, {1000.0, 0.0}));
    CHECK(t.v_ideal == Approx(0.95).margin(1e-3));
  }
  SECTION("no gain leaves the conjugate undefined") {
    const auto t = g2_ideal(SqueezeParams(0.0, {1.0, 0.0}));
    CHECK(t.g2_aa == Approx(1.0));
    CHECK_FALSE(t.conj_defined());
    CHECK(std::isnan(t.v_ideal));
  }
  SECTION("vacuum in both modes is degenerate") {
    CHECK_THROWS_AS(g2_ideal(SqueezeParams(0.0, {0.0, 0.0})), DegenerateState);
  }
}

TEST_CASE("violation factor and squeezing closed forms", "[theory]") {
  CHECK(violation_factor_ideal(10.0) == 0.95);
  CHECK(violation_factor_ideal(2.0) == 0.75);
  CHECK(violation_factor_ideal(1.0) == 0.5);
  CHECK(std::abs(violation_factor_ideal(1e9) - 1.0) <= 1e-9);
  CHECK_THROWS_AS(violation_factor_ideal(0.9), DomainError);

  CHECK(squeezing_ideal(10.0, 1.0) == Approx(1.0 / 19.0).epsilon(1e-14));
  CHECK(to_db(squeezing_ideal(10.0, 1.0)) == Approx(-12.79).margin(0.01));
  CHECK(squeezing_ideal(10.0, 0.8) == Approx(0.2421).margin(1e-4));
  CHECK(to_db(squeezing_ideal(10.0, 0.8)) == Approx(-6.16).margin(0.01));
  for (double eta : {0.1, 0.5, 1.0}) CHECK(squeezing_ideal(1.0, eta) == Approx(1.0));
  CHECK_THROWS_AS(squeezing_ideal(10.0, 0.0), DomainError);
  CHECK_THROWS_AS(squeezing_ideal(10.0, 1.1), DomainError);
}

TEST_CASE("Fock oracle special cases", "[theory][oracle]") {
  const auto coherent = fock_oracle_moments(SqueezeParams(0.0, {1.0, 0.0}), 20);
  CHECK(coherent.g2_aa == Approx(1.0).epsilon(1e-10));

  const auto tmsv = fock_oracle_moments(SqueezeParams(0.4, {0.0, 0.0}), 40);
  const double sh2 = std::sinh(0.4) * std::sinh(0.4);
  CHECK(rel(tmsv.g2_ab0, 2.0 + 1.0 / sh2) <= 1e-9);

  const SqueezeParams p(0.3, {1.5, 0.0});
  const auto f = fock_oracle_moments(p, 40);
  const auto t = g2_ideal(p);
  CHECK(rel(f.g2_aa, t.g2_aa) <= 1e-9);
  CHECK(rel(f.g2_bb, t.g2_bb) <= 1e-9);
  CHECK(rel(f.g2_ab0, t.g2_ab0) <= 1e-9);
}

TEST_CASE("Fock oracle cutoff handling", "[theory][oracle]") {
  const SqueezeParams p(0.5, {2.0, 0.0});
  const auto grown = fock_oracle_moments(p, 4);
  CHECK(grown.cutoff > 4);
  CHECK(grown.norm >= 1.0 - kFockNormTolerance);
  CHECK_THROWS_AS(fock_oracle_moments(p, 4, false), CutoffTooSmall);
  // A very bright seed needs more than 256 number states.
  CHECK_THROWS_AS(fock_oracle_moments(SqueezeParams(0.5, {20.0, 0.0}), 16), CutoffTooSmall);
  CHECK_THROWS_AS(fock_oracle_moments(p, 1), DomainError);
}

TEST_CASE("Fock oracle agrees with the Gaussian moments on a 5x5 grid", "[theory][oracle]") {
  for (double s : {0.1, 0.2, 0.3, 0.4, 0.5}) {
    for (double a : {0.0, 0.5, 1.0, 1.5, 2.0}) {
      CAPTURE(s, a);
      const SqueezeParams p(s, {a, 0.0});
      const auto t = g2_ideal(p);
      const auto f = fock_oracle_moments(p, 16);
      CHECK(rel(f.n_probe, t.n_probe) <= 1e-8);
      CHECK(rel(f.n_conj, t.n_conj) <= 1e-8);
      CHECK(rel(f.g2_aa, t.g2_aa) <= 1e-8);
      CHECK(rel(f.g2_bb, t.g2_bb) <= 1e-8);
      CHECK(rel(f.g2_ab0, t.g2_ab0) <= 1e-8);
    }
  }
}

TEST_CASE("bright-seed limit of the violation factor", "[theory]") {
  for (double gain : {1.5, 2.0, 5.0, 10.0}) {
    const double a2 = 1e6;
    const auto t = g2_ideal(SqueezeParams::from_gain(gain, {std::sqrt(a2), 0.0}));
    CAPTURE(gain);
    CHECK(std::abs(t.v_ideal - violation_factor_ideal(gain)) <= 10.0 / a2);
  }
  // The error shrinks as the seed brightens.
  const auto dim = g2_ideal(SqueezeParams::from_gain(10.0, {10.0, 0.0}));
  const auto bright = g2_ideal(SqueezeParams::from_gain(10.0, {1000.0, 0.0}));
  CHECK(std::abs(bright.v_ideal - 0.95) < std::abs(dim.v_ideal - 0.95));
}

TEST_CASE("cross correlation beats the classical bound for every gain", "[theory]") {
  for (double gain : {1.01, 1.1, 2.0, 5.0, 10.0, 100.0}) {
    for (double a : {0.0, 1.0, 30.0, 1000.0}) {
      const auto t = g2_ideal(SqueezeParams::from_gain(gain, {a, 0.0}));
      CAPTURE(gain, a);
      CHECK(t.eps_ab > 0.5 * (t.eps_aa + t.eps_bb));
      CHECK(t.v_ideal < 1.0);
    }
  }
}

TEST_CASE("spectral model limits", "[theory][spectral]") {
  const auto p = SqueezeParams::from_gain(10.0, {1000.0, 0.0});
  const SpectralModel m(p, 10e6, 8e-9, 0.8);

  SECTION("zero frequency reproduces the ideal squeezing") {
    CHECK(m.diff_norm(0.0) == Approx(0.2421).margin(2e-4));
    CHECK(m.diff_norm(0.0) == Approx(squeezing_ideal(10.0, 0.8)).epsilon(1e-5));
  }
  SECTION("far above the gain bandwidth everything sits at the SQL") {
    const auto c = m(1e11);
    CHECK(std::abs(c.s_pp - 1.0) <= 1e-6);
    CHECK(std::abs(c.s_cc - 1.0) <= 1e-6);
  }
  SECTION("cross term carries the delay phase") {
    const double f = 20e6;
    const auto c = m(f);
    const double expected = -2.0 * std::numbers::pi * f * 8e-9;
    CHECK(std::remainder(std::arg(c.s_pc) - expected, 2.0 * std::numbers::pi) == Approx(0.0).margin(1e-12));
  }
  SECTION("without compensation the difference noise oscillates") {
    // Half a delay period: the cross term flips sign and the difference
    // spectrum shows the sum noise.
    const double f = 1.0 / (2.0 * 8e-9);
    CHECK(m.diff_norm(f, false) > m.diff_norm(f, true));
  }
  SECTION("conjugate-only excess noise") {
    const ExcessNoiseSpec ex{0.0, 2.0, 5e6, 4, 0.0};
    const SpectralModel me(p, 10e6, 8e-9, 0.8, ex);
    for (double f : {5e6, 10e6, 20e6}) {
      const auto c = me(f);
      CHECK(c.s_cc > c.s_pp);
    }
    CHECK(me(1e3).s_cc == Approx(me(1e3).s_pp).epsilon(1e-6));
  }
  SECTION("invalid construction") {
    CHECK_THROWS_AS(SpectralModel(p, 0.0, 0.0, 0.8), DomainError);
    CHECK_THROWS_AS(SpectralModel(p, 1e6, 0.0, 0.0), DomainError);
  }
}

TEST_CASE("integrated spectra reproduce the single-mode fluctuation ratios", "[theory][spectral]") {
  // With a Lorentzian gain profile the integral of s_pp - 1 over frequency,
  // divided by the equivalent bandwidth pi f_B / 2, matches eps_aa n_probe
  // (and likewise for the conjugate and the cross term) in the bright limit.
  for (double gain : {2.0, 5.0, 10.0}) {
    const auto p = SqueezeParams::from_gain(gain, {1000.0, 0.0});
    const double fb = 10e6;
    const SpectralModel m(p, fb, 0.0, 1.0);
    const auto t = g2_ideal(p);
    const double enbw = std::numbers::pi * fb / 2.0;
    const double fmax = 1e4 * fb;
    auto lorentz_integral = [&](auto fn) {
      // Substitute f = f_B tan(theta) so the tail is integrated exactly.
      const double top = std::atan(fmax / fb);
      return integrate([&](double th) {
        const double f = fb * std::tan(th);
        return fn(f) * fb / (std::cos(th) * std::cos(th));
      }, 0.0, top, 40000);
    };
    const double ip = lorentz_integral([&](double f) { return m(f).s_pp - 1.0; });
    const double ic = lorentz_integral([&](double f) { return m(f).s_cc - 1.0; });
    // Per unit SQL, the single-mode variance of n_p is n_p (s_pp - 1) and
    // the normally ordered part is n_p^2 eps_aa = n_p (G-1)*2 at large |alpha|.
    CAPTURE(gain);
    CHECK(rel(ip / enbw, t.eps_aa * t.n_probe) <= 0.01);
    CHECK(rel(ic / enbw, t.eps_bb * t.n_conj) <= 0.01);
  }
}

TEST_CASE("band violation factor of the ideal model", "[theory][spectral]") {
  const auto p = SqueezeParams::from_gain(10.0, {1000.0, 0.0});
  const SpectralModel m(p, 1e9, 0.0, 1.0);
  const auto flat = [](double) { return 1.0; };
  CHECK(violation_factor_band(m, flat, 10e6) == Approx(0.95).margin(2e-3));

  // Loss scales every fluctuation term equally and leaves V unchanged.
  const SpectralModel lossy(p, 1e9, 0.0, 0.4);
  CHECK(violation_factor_band(lossy, flat, 10e6) ==
        Approx(violation_factor_band(m, flat, 10e6)).epsilon(1e-9));
}

TEST_CASE("squeezing bandwidth and its inverse", "[theory][spectral]") {
  const auto p = SqueezeParams::from_gain(10.0, {1000.0, 0.0});
  const ExcessNoiseSpec ex{0.0, 2.0, 10e6, 8, 0.0};
  const double fb = gain_bandwidth_for_squeezing(p, 8e-9, 0.8, ex, 15e6, 500e3, 500e6);
  const SpectralModel m(p, fb, 8e-9, 0.8, ex);
  CHECK(squeezing_bandwidth(m, 500e3, 500e6) == Approx(15e6).epsilon(1e-3));
  // Without excess noise the squeezed band never closes.
  CHECK(std::isinf(squeezing_bandwidth(SpectralModel(p, fb, 8e-9, 0.8), 500e3, 100e6, 1e5)));
}

#include <catch2/catch_amalgamated.hpp>

#include "csilab/config.hpp"
#include "csilab/estimators.hpp"
#include "csilab/synth.hpp"

#include <cmath>

using namespace csilab;
using namespace csilab::estimators;
using Catch::Approx;

namespace {

synth::AcquisitionConfig acq(std::size_t sets, std::uint64_t seed = 1) {
  synth::AcquisitionConfig a;
  a.num_sets = sets;
  a.rng_seed = seed;
  return a;
}

synth::FwmModel coherent_model() {
  auto m = synth::FwmModel::make(theory::SqueezeParams(0.0, {1000.0, 0.0}), 1.0, 10e6, 0.0, 1.0);
  m.technical.rin_level = 0.0;
  return m;
}

// Expected band violation factor of a model under a filter band, including
// the detection roll-off that multiplies every fluctuation term.
double theory_v(const synth::FwmModel& m, const dsp::FilterSpec& band) {
  const auto w = [&](double f) { return band.power_response(f) * m.detection_response(f); };
  return theory::violation_factor_band(m.spectral_model(), w, 3.0 * band.f_hi);
}

const synth::TraceSet& g10_traces() {
  static const auto ts = synth::synthesize(config::preset("G10").model, acq(200, 10));
  return ts;
}

const synth::TraceSet& g2_traces() {
  static const auto ts = synth::synthesize(config::preset("G2").model, acq(200, 20));
  return ts;
}

} // namespace

TEST_CASE("coherent beams give flat g2 curves at 1", "[estimators][g2]") {
  const auto ts = synth::synthesize(coherent_model(), acq(100, 3));
  const auto g = g2_curves(ts, 100e-9);
  REQUIRE(g.tau.size() == 201);
  CHECK(g.num_sets == 100);
  for (std::size_t i = 0; i < g.tau.size(); ++i) {
    CHECK(std::abs(g.g2_ab[i] - 1.0) <= 5.0 * g.sem_ab[i] + 1e-9);
    CHECK(std::abs(g.g2_aa[i] - 1.0) <= 5.0 * g.sem_aa[i] + 1e-9);
    CHECK(std::abs(g.g2_bb[i] - 1.0) <= 5.0 * g.sem_bb[i] + 1e-9);
  }
  CHECK_THROWS_AS(g2_curves(ts, 1e-5), DomainError);
}

TEST_CASE("G10 twin beams violate the classical bound", "[estimators][g2]") {
  const auto& ts = g10_traces();
  const auto g = g2_curves(ts, 50e-9, dsp::FilterSpec{10, 500e3, 40e6});
  const std::size_t zero = g.tau.size() / 2;
  const auto peak = std::max_element(g.g2_ab.begin(), g.g2_ab.end());
  const double tau_peak = g.tau[static_cast<std::size_t>(peak - g.g2_ab.begin())];
  CHECK(tau_peak == Approx(8e-9).margin(1e-9));
  CHECK(*peak - 1.0 > 0.5 * ((g.g2_aa[zero] - 1.0) + (g.g2_bb[zero] - 1.0)));

  const auto r = violation_factor(ts);
  CHECK(r.peak_found);
  CHECK(r.delay == Approx(8e-9).margin(0.5e-9));
  CHECK(r.eps_ab_peak > 0.5 * (r.eps_aa + r.eps_bb));
  CHECK(r.violated);
  CHECK(r.v_mean < 1.0);
  CHECK(r.degenerate_sets == 0);
  CHECK(r.v_per_set.size() == 200);
  CHECK(r.v_sem == Approx(r.v_sigma / std::sqrt(200.0)));
  CHECK(r.sigma_count == Approx(std::abs(1.0 - r.v_mean) / r.v_sem));
  // Per-set mean and pooled estimate agree within the per-set spread.
  CHECK(std::abs(r.v_mean - r.v_pooled) <= r.v_sigma);
}

TEST_CASE("missing DC values are rejected", "[estimators]") {
  synth::AcquisitionConfig a = acq(2);
  a.samples_per_set = 64;
  a.full_scale = 1.0;
  const synth::TraceSet ts(a, {0.0, 0.5, 0.5, 0.5}, "external");
  CHECK_THROWS_AS(violation_factor(ts, {std::nullopt, 20e-9}), DcMissing);
  CHECK_THROWS_AS(g2_curves(ts, 10e-9), DcMissing);
  CHECK_THROWS_AS(normalized_spectra(ts), DcMissing);
}

TEST_CASE("degenerate sets are excluded and counted", "[estimators]") {
  SECTION("all-zero traces") {
    synth::AcquisitionConfig a = acq(3);
    a.samples_per_set = 256;
    a.full_scale = 1.0;
    const synth::TraceSet ts(a, {0.5, 0.5, 0.5, 0.5}, "external");
    CHECK_THROWS_AS(violation_factor(ts, {std::nullopt, 20e-9}), DegenerateState);
  }
  SECTION("uncorrelated beams lose some sets") {
    const auto ts = synth::synthesize(coherent_model(), acq(60, 4));
    const auto r = violation_factor(ts);
    CHECK(r.degenerate_sets > 0);
    CHECK(r.degenerate_sets + r.v_per_set.size() == 60);
    CHECK_FALSE(r.peak_found);
  }
}

TEST_CASE("SQL spectra from the split differences", "[estimators][spectra]") {
  const auto& ts = g10_traces();
  const auto sql = sql_spectra(ts);
  for (std::size_t k = 0; k < sql.sql_diff.size(); ++k)
    CHECK(sql.sql_diff.power[k] == Approx(sql.sql_p.power[k] + sql.sql_c.power[k]));
  const auto rep = normalized_spectra(ts);
  // Both beams carry excess noise across the gain band.
  for (std::size_t k = 1; k < rep.frequencies.size(); ++k) {
    const double f = rep.frequencies[k];
    if (f < 1e6 || f > 15e6) continue;
    CHECK(rep.s_p_smooth[k] > 1.0);
    CHECK(rep.s_c_smooth[k] > 1.0);
  }
  CHECK(rep.compensated);
  CHECK(rep.delay == Approx(8e-9).margin(0.5e-9));
}

TEST_CASE("squeezing metrics of the G10 scenario", "[estimators][spectra]") {
  const auto rep = normalized_spectra(g10_traces());
  CHECK(rep.squeezing_db_max == Approx(6.0).margin(0.5));
  CHECK(rep.squeezing_bandwidth == Approx(15e6).margin(2e6));
  CHECK(rep.diff_db(0.5e6, 3e6) < -5.0);
}

TEST_CASE("uncompensated delay makes the difference spectrum oscillate", "[estimators][spectra]") {
  // Wide gain band and flat detection, so the oscillation is visible well
  // beyond the first half period of 62.5 MHz.
  auto m = config::preset("ideal").model;
  m.detection_bandwidth = 0.0;
  m.gain_bandwidth = 90e6;
  const auto ts = synth::synthesize(m, acq(60, 5));
  SpectraOptions opt;
  opt.compensate_delay = false;
  opt.smoothing_hz = 4e6;
  opt.band = dsp::FilterSpec{10, 500e3, 10e6};
  const auto raw = normalized_spectra(ts, opt);
  opt.compensate_delay = true;
  const auto fixed = normalized_spectra(ts, opt);
  CHECK_FALSE(raw.compensated);
  CHECK(raw.delay == 0.0);
  auto at = [](const SpectraReport& r, double f) {
    return r.s_diff_smooth[static_cast<std::size_t>(std::lround(f / r.sql_p.df))];
  };
  // Sum noise at half a period, back to difference noise at a full period.
  CHECK(at(raw, 62.5e6) > 1.0);
  CHECK(at(raw, 125e6) < 1.0);
  CHECK(at(raw, 62.5e6) > at(raw, 30e6));
  CHECK(at(raw, 125e6) < at(raw, 90e6));
  // Compensated: below the SQL at all of these frequencies.
  for (double f : {30e6, 62.5e6, 90e6, 125e6}) CHECK(at(fixed, f) < 1.0);
}

TEST_CASE("frequency-domain CSI test", "[estimators][spectral]") {
  SECTION("ideal model: equal normalized spectra and squeezing") {
    const auto sc = config::preset("ideal");
    const auto ts = synth::synthesize(sc.model, acq(100, 6));
    SpectraOptions opt;
    opt.band = sc.analysis.band;
    const auto rep = normalized_spectra(ts, opt);
    CHECK(std::abs(rep.spectral_csi_rhs) < 0.02 * std::abs(rep.spectral_csi_lhs));
    CHECK(rep.spectral_csi_lhs < 0.0);
    CHECK_FALSE(rep.spectral_csi_classical);
  }
  SECTION("coherent beams sit at zero on both sides") {
    const auto ts = synth::synthesize(coherent_model(), acq(100, 7));
    const auto rep = normalized_spectra(ts, {.compensate_delay = false, .delay = std::nullopt});
    CHECK(std::abs(rep.spectral_csi_lhs) < 0.01);
    CHECK(std::abs(rep.spectral_csi_rhs) < 0.01);
  }
  SECTION("G2: classical over the full band, violated below the excess noise") {
    const auto rep = normalized_spectra(g2_traces());
    CHECK(rep.spectral_csi_classical);
    const auto low = csi_frequency_test(rep, dsp::FilterSpec{10, 500e3, 3e6});
    CHECK_FALSE(low.classical);
    CHECK(low.lhs < low.rhs);
  }
  SECTION("band outside the spectra") {
    const auto rep = normalized_spectra(g2_traces());
    CHECK_THROWS_AS(csi_frequency_test(rep, dsp::FilterSpec{10, 500e3, 600e6}), BandError);
    CHECK_THROWS_AS(csi_frequency_test(SpectraReport{}, dsp::FilterSpec{}), BandError);
  }
}

TEST_CASE("time-domain and spectral verdicts agree", "[estimators][spectral]") {
  for (const auto* ts : {&g10_traces(), &g2_traces()}) {
    for (double f_hi : {3e6, 10e6, 40e6}) {
      const dsp::FilterSpec band{10, 500e3, f_hi};
      const auto r = violation_factor(*ts, {band, 100e-9});
      SpectraOptions opt;
      opt.band = band;
      const auto rep = normalized_spectra(*ts, opt);
      CAPTURE(ts->provenance(), f_hi, r.v_mean, rep.spectral_csi_lhs, rep.spectral_csi_rhs);
      CHECK(r.violated == !rep.spectral_csi_classical);
    }
  }
}

TEST_CASE("G2 excess noise removes the violation", "[estimators]") {
  const auto& ts = g2_traces();
  const auto r = violation_factor(ts);
  CHECK(r.v_mean > 1.0);
  CHECK_FALSE(r.violated);
  const auto rep = normalized_spectra(ts);
  CHECK(rep.diff_db(0.5e6, 3e6) < -4.0);
  const auto sweep = cutoff_sweep(ts, {2e6, 4e6, 6e6, 10e6, 15e6});
  REQUIRE(sweep.size() == 5);
  CHECK(sweep.front().report.v_mean < 1.0);
  CHECK(sweep.back().report.v_mean > 1.0);
  CHECK(sweep[2].f_hi == 6e6);
  CHECK_THROWS_AS(cutoff_sweep(ts, {}), DomainError);
}

TEST_CASE("ideal model: flat sweep and consistent estimator", "[estimators][ideal]") {
  const auto sc = config::preset("ideal");
  const double expected = theory_v(sc.model, sc.analysis.band);
  CHECK(expected == Approx(0.95).margin(2e-3));

  const auto ts = synth::synthesize(sc.model, acq(500, 8));
  SECTION("sweep is flat") {
    const auto sweep = cutoff_sweep(ts, {2e6, 4e6, 6e6, 8e6, 10e6});
    for (const auto& p : sweep) {
      CAPTURE(p.f_hi, p.report.v_mean, p.report.v_sem);
      CHECK(std::abs(p.report.v_mean - expected) <= 3.0 * p.report.v_sigma);
      CHECK(std::abs(p.report.v_pooled - expected) <= 4.0 * p.report.v_sem);
    }
  }
  SECTION("standard error shrinks as 1/sqrt(sets)") {
    std::vector<double> sems;
    for (std::size_t sets : {50, 200, 500}) {
      auto sub = acq(sets, 8);
      // Same seed: the first sets coincide, so only the count differs.
      const auto part = sets == 500 ? ts : synth::synthesize(sc.model, sub);
      const auto r = violation_factor(part, {sc.analysis.band, 100e-9});
      CAPTURE(sets, r.v_mean, r.v_sem);
      CHECK(std::abs(r.v_pooled - expected) <= 4.0 * r.v_sem);
      sems.push_back(r.v_sem);
    }
    CHECK(sems[0] / sems[1] == Approx(2.0).epsilon(0.25));
    CHECK(sems[0] / sems[2] == Approx(std::sqrt(10.0)).epsilon(0.25));
  }
}

TEST_CASE("extra loss leaves the g2 curves unchanged", "[estimators][loss]") {
  const auto m = config::preset("G10").model;
  const dsp::FilterSpec band{10, 500e3, 40e6};
  const auto a = g2_curves(synth::synthesize(m, acq(200, 30)), 30e-9, band);
  const auto b = g2_curves(synth::synthesize(m.with_extra_loss(0.5), acq(200, 31)), 30e-9, band);
  REQUIRE(a.tau.size() == b.tau.size());
  for (std::size_t i = 0; i < a.tau.size(); ++i) {
    CAPTURE(a.tau[i]);
    CHECK(std::abs(a.g2_ab[i] - b.g2_ab[i]) <= 3.0 * (a.sem_ab[i] + b.sem_ab[i]));
    CHECK(std::abs(a.g2_aa[i] - b.g2_aa[i]) <= 3.0 * (a.sem_aa[i] + b.sem_aa[i]));
    CHECK(std::abs(a.g2_bb[i] - b.g2_bb[i]) <= 3.0 * (a.sem_bb[i] + b.sem_bb[i]));
  }
}

// csilab: simulate, analyze and sweep twin-beam Cauchy-Schwarz tests.
//
//   csilab simulate --config scenario.ini --out traces.cstf [--seed N] [--sets N]
//   csilab analyze traces.cstf [--config scenario.ini] --out results/ [--no-compensate-delay]
//   csilab sweep traces.cstf --cutoffs 1,2,3,...  --out results/
//   csilab theory --gain 10 --eta 0.8 [--oracle --squeeze-s 0.3 --alpha 1.5]
//   csilab report --config scenario.ini --out results/ [--seed N] [--sets N]
//
// Exit status: 0 success, 1 other failure, 2 configuration error,
// 3 I/O error, 4 malformed trace file.

#include "csilab/csilab.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using namespace csilab;

namespace {

enum Exit : int { kOk = 0, kFailure = 1, kConfig = 2, kIo = 3, kFormat = 4 };

struct Options {
  std::string config;
  std::string preset;
  std::string out;
  std::string trace;
  std::optional<std::string> cutoffs;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> sets;
  bool no_compensate = false;
  bool oracle = false;
  double gain = 10.0;
  double eta = 0.8;
  double seed_photons = 1e6;
  double squeeze_s = 0.3;
  double alpha = 1.5;
};

config::Scenario load_scenario(const Options& o) {
  config::Scenario sc;
  if (!o.config.empty()) {
    if (!o.preset.empty()) throw ConfigError("preset", "give either --config or --preset");
    sc = config::load(o.config);
  } else {
    sc = config::preset(o.preset.empty() ? "G10" : o.preset);
  }
  if (o.seed) sc.acquisition.rng_seed = *o.seed;
  if (o.sets) {
    if (*o.sets < 1) throw ConfigError("sets", "must be >= 1");
    sc.acquisition.num_sets = *o.sets;
  }
  if (o.no_compensate) sc.analysis.compensate_delay = false;
  synth::validate(sc.model, sc.acquisition);
  return sc;
}

void ensure_dir(const std::string& dir) {
  if (dir.empty()) throw ConfigError("out", "an output directory is required");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create directory '" + dir + "'");
}

void print_trace_summary(const synth::TraceSet& ts) {
  const auto& dc = ts.dc_means();
  std::printf("sets %zu, samples per set %zu, rate %.6g Hz, %d-bit, full scale %.6g\n", ts.num_sets(),
              ts.samples(), ts.acquisition().sample_rate, ts.acquisition().adc_bits,
              ts.acquisition().full_scale);
  std::printf("dc means p1 %.6g p2 %.6g c1 %.6g c2 %.6g\n", dc[0], dc[1], dc[2], dc[3]);
  double sum = 0.0, sum2 = 0.0;
  std::size_t count = 0;
  for (int ch = 0; ch < synth::kChannels; ++ch)
    for (std::size_t s = 0; s < ts.num_sets(); ++s)
      for (double v : ts.trace(s, ch)) {
        sum += v;
        sum2 += v * v;
        ++count;
      }
  const double mean = sum / static_cast<double>(count);
  std::printf("ac mean %.3g, ac rms %.3g\n", mean, std::sqrt(sum2 / static_cast<double>(count) - mean * mean));
  for (const auto& w : ts.clip_warnings())
    std::fprintf(stderr, "warning: set %zu channel %d clipped %zu of %zu samples\n", w.set, w.channel,
                 w.clipped, w.samples);
}

struct Analysis {
  estimators::G2Curves g2;
  estimators::CorrelationReport correlation;
  estimators::SpectraReport spectra;
};

Analysis analyze(const synth::TraceSet& ts, const config::AnalysisConfig& an) {
  Analysis a;
  a.g2 = estimators::g2_curves(ts, an.tau_max);
  a.correlation = estimators::violation_factor(ts, {an.band, an.max_delay});
  estimators::SpectraOptions so;
  so.compensate_delay = an.compensate_delay;
  if (an.compensate_delay) so.delay = a.correlation.delay;
  so.smoothing_hz = an.smoothing_hz;
  so.search_lo_hz = an.band.f_lo;
  so.search_hi_hz = an.band.f_hi;
  so.band = an.band;
  a.spectra = estimators::normalized_spectra(ts, so);
  return a;
}

void write_analysis(const std::string& dir, const std::string& source, const synth::TraceSet& ts,
                    const Analysis& a, const config::AnalysisConfig& an) {
  report::write(fs::path(dir) / "g2_curves.csv", report::g2_csv(a.g2));
  report::write(fs::path(dir) / "spectra.csv", report::spectra_csv(a.spectra));
  const std::string summary = report::summary_text({source, &ts, &a.correlation, &a.spectra, an.band});
  report::write(fs::path(dir) / "summary.txt", summary);
  std::fputs(summary.c_str(), stdout);
}

void write_sweep(const std::string& dir, const synth::TraceSet& ts, const config::AnalysisConfig& an,
                 const std::vector<double>& cutoffs) {
  if (cutoffs.empty()) throw ConfigError("cutoffs", "cutoff list is empty");
  std::vector<double> usable;
  for (double f : cutoffs) {
    if (!(f > an.band.f_lo)) throw ConfigError("cutoffs", "every cutoff must exceed f_lo");
    if (!(f < ts.acquisition().sample_rate / 2)) throw ConfigError("cutoffs", "cutoff at or above Nyquist");
    usable.push_back(f);
  }
  const auto sweep = estimators::cutoff_sweep(ts, usable, an.band.f_lo, an.band.order, an.max_delay);
  report::write(fs::path(dir) / "vsweep.csv", report::vsweep_csv(sweep));
  for (const auto& p : sweep)
    std::printf("f_hi %8.3f MHz  V %.5f +/- %.3g (sem %.3g)\n", p.f_hi / 1e6, p.report.v_mean,
                p.report.v_sigma, p.report.v_sem);
}

config::AnalysisConfig analysis_config(const Options& o) {
  config::AnalysisConfig an =
      o.config.empty() ? config::preset_unresolved(o.preset.empty() ? "G10" : o.preset).analysis
                       : config::load(o.config).analysis;
  if (o.no_compensate) an.compensate_delay = false;
  return an;
}

int run_simulate(const Options& o) {
  if (o.out.empty()) throw ConfigError("out", "an output path is required");
  const auto sc = load_scenario(o);
  std::printf("scenario %s: G %.4g, gain bandwidth %.4g MHz, eta %.3g, delay %.3g ns\n", sc.name.c_str(),
              sc.model.squeeze.gain(), sc.model.gain_bandwidth / 1e6, sc.model.eta, sc.model.delay * 1e9);
  const auto ts = synth::synthesize(sc.model, sc.acquisition);
  io::write_trace_file(o.out, ts);
  print_trace_summary(ts);
  std::printf("wrote %s\n", o.out.c_str());
  return kOk;
}

int run_analyze(const Options& o) {
  const auto an = analysis_config(o);
  ensure_dir(o.out);
  const auto ts = io::read_trace_file(o.trace);
  const auto a = analyze(ts, an);
  write_analysis(o.out, o.trace, ts, a, an);
  return kOk;
}

int run_sweep(const Options& o) {
  const auto an = analysis_config(o);
  const auto cutoffs = o.cutoffs ? config::parse_mhz_list("cutoffs", *o.cutoffs) : an.cutoffs_hz;
  if (cutoffs.empty()) throw ConfigError("cutoffs", "cutoff list is empty");
  ensure_dir(o.out);
  const auto ts = io::read_trace_file(o.trace);
  write_sweep(o.out, ts, an, cutoffs);
  return kOk;
}

int run_report(const Options& o) {
  const auto sc = load_scenario(o);
  ensure_dir(o.out);
  const auto ts = synth::synthesize(sc.model, sc.acquisition);
  const fs::path trace = fs::path(o.out) / "traces.cstf";
  io::write_trace_file(trace, ts);
  print_trace_summary(ts);
  const auto a = analyze(ts, sc.analysis);
  write_analysis(o.out, trace.string(), ts, a, sc.analysis);
  const auto cutoffs = o.cutoffs ? config::parse_mhz_list("cutoffs", *o.cutoffs) : sc.analysis.cutoffs_hz;
  write_sweep(o.out, ts, sc.analysis, cutoffs);
  return kOk;
}

int run_theory(const Options& o) {
  if (!(o.gain >= 1.0)) throw ConfigError("gain", "must be >= 1");
  if (!(o.eta > 0.0 && o.eta <= 1.0)) throw ConfigError("eta", "must be in (0, 1]");
  if (!(o.seed_photons >= 0.0)) throw ConfigError("seed_photons", "must be >= 0");
  const auto p = theory::SqueezeParams::from_gain(o.gain, {std::sqrt(o.seed_photons), 0.0});
  const double squeezing = theory::squeezing_ideal(o.gain, o.eta);
  std::printf("quantity,value\n");
  std::printf("gain,%.10g\n", o.gain);
  std::printf("squeeze_s,%.10g\n", p.s());
  std::printf("eta,%.10g\n", o.eta);
  std::printf("V_bright_limit,%.10g\n", theory::violation_factor_ideal(o.gain));
  std::printf("squeezing_linear,%.10g\n", squeezing);
  std::printf("squeezing_db,%.4f\n", theory::to_db(squeezing));
  if (o.seed_photons > 0.0) {
    const auto t = theory::g2_ideal(p);
    std::printf("seed_photons,%.10g\n", o.seed_photons);
    std::printf("n_probe,%.10g\nn_conj,%.10g\n", t.n_probe, t.n_conj);
    std::printf("g2_aa,%.12g\ng2_bb,%.12g\ng2_ab0,%.12g\nV_gaussian,%.12g\n", t.g2_aa, t.g2_bb, t.g2_ab0,
                t.v_ideal);
  }
  if (o.oracle) {
    const theory::SqueezeParams q(o.squeeze_s, {o.alpha, 0.0});
    const auto g = theory::g2_ideal(q);
    const auto f = theory::fock_oracle_moments(q, 16);
    auto rel = [](double a, double b) { return std::abs(a - b) / std::max(std::abs(a), 1e-300); };
    std::printf("oracle_s,%.10g\noracle_alpha,%.10g\noracle_cutoff,%zu\noracle_norm,%.15g\n", o.squeeze_s,
                o.alpha, f.cutoff, f.norm);
    double worst = 0.0;
    auto row = [&](const char* name, double gauss, double fock) {
      if (!std::isfinite(gauss) && !std::isfinite(fock)) {
        std::printf("%s,undefined,undefined,0\n", name);
        return;
      }
      const double r = rel(gauss, fock);
      worst = std::max(worst, r);
      std::printf("%s,%.15g,%.15g,%.3g\n", name, gauss, fock, r);
    };
    std::printf("oracle_quantity,gaussian,fock,relative_difference\n");
    row("n_probe", g.n_probe, f.n_probe);
    row("n_conj", g.n_conj, f.n_conj);
    row("g2_aa", g.g2_aa, f.g2_aa);
    row("g2_bb", g.g2_bb, f.g2_bb);
    row("g2_ab0", g.g2_ab0, f.g2_ab0);
    std::printf("oracle_agreement,%s\n", worst <= 1e-8 ? "yes" : "no");
    if (worst > 1e-8) return kFailure;
  }
  return kOk;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Twin-beam Cauchy-Schwarz inequality simulator and analyzer"};
  app.require_subcommand(1);
  Options o;

  auto add_scenario = [&o](CLI::App* c) {
    c->add_option("--config", o.config, "scenario file (.ini)");
    c->add_option("--preset", o.preset, "named scenario: G2, G5, G8, G10, ideal");
    c->add_option("--seed", o.seed, "RNG seed");
    c->add_option("--sets", o.sets, "number of trace sets");
  };

  auto* sim = app.add_subcommand("simulate", "synthesize a trace file");
  add_scenario(sim);
  sim->add_option("--out", o.out, "output trace file");

  auto* ana = app.add_subcommand("analyze", "correlations, V and spectra of a trace file");
  ana->add_option("trace", o.trace, "trace file")->required();
  ana->add_option("--config", o.config, "scenario file supplying the [analysis] section");
  ana->add_option("--preset", o.preset, "preset supplying the analysis settings");
  ana->add_option("--out", o.out, "output directory")->required();
  ana->add_flag("--no-compensate-delay", o.no_compensate, "difference spectrum without delay compensation");

  auto* swp = app.add_subcommand("sweep", "V as a function of the high-frequency cutoff");
  swp->add_option("trace", o.trace, "trace file")->required();
  swp->add_option("--config", o.config, "scenario file supplying the [analysis] section");
  swp->add_option("--preset", o.preset, "preset supplying the analysis settings");
  swp->add_option("--cutoffs", o.cutoffs, "comma-separated cutoffs in MHz");
  swp->add_option("--out", o.out, "output directory")->required();

  auto* thy = app.add_subcommand("theory", "closed-form predictions");
  thy->add_option("--gain", o.gain, "parametric gain G");
  thy->add_option("--eta", o.eta, "detection efficiency");
  thy->add_option("--seed-photons", o.seed_photons, "seed photons per mode |alpha|^2");
  thy->add_flag("--oracle", o.oracle, "cross-check against the truncated Fock-space oracle");
  thy->add_option("--squeeze-s", o.squeeze_s, "squeeze parameter for the oracle check");
  thy->add_option("--alpha", o.alpha, "seed amplitude for the oracle check");

  auto* rep = app.add_subcommand("report", "simulate, analyze and sweep into one directory");
  add_scenario(rep);
  rep->add_option("--out", o.out, "output directory")->required();
  rep->add_option("--cutoffs", o.cutoffs, "comma-separated cutoffs in MHz");
  rep->add_flag("--no-compensate-delay", o.no_compensate, "difference spectrum without delay compensation");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfig;
  }

  try {
    if (*sim) return run_simulate(o);
    if (*ana) return run_analyze(o);
    if (*swp) return run_sweep(o);
    if (*thy) return run_theory(o);
    if (*rep) return run_report(o);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfig;
  } catch (const SpecError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfig;
  } catch (const IoError& e) {
    std::fprintf(stderr, "i/o error: %s\n", e.what());
    return kIo;
  } catch (const FormatError& e) {
    std::fprintf(stderr, "malformed trace file: %s\n", e.what());
    return kFormat;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kFailure;
  }
  return kFailure;
}

#pragma once

// Scenario configuration: named presets plus sectioned key = value files
// ([scenario], [model], [acquisition], [analysis]) whose keys carry their
// units in the name.

#include "csilab/dsp.hpp"
#include "csilab/errors.hpp"
#include "csilab/synth.hpp"
#include "csilab/theory.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace csilab::config {

struct AnalysisConfig {
  dsp::FilterSpec band{10, 500e3, 40e6};
  double tau_max = 200e-9;
  double max_delay = 100e-9;
  double smoothing_hz = 1e6;
  bool compensate_delay = true;
  std::vector<double> cutoffs_hz;
};

// Physical inputs before derived quantities are resolved. Either the gain
// bandwidth is given directly, or a target squeezing bandwidth from which it
// is solved.
struct ModelInputs {
  double gain = 10.0;
  double seed_photons = 1e6;
  double probe_dc = 1.0;
  double eta = 0.8;
  double delay = 8e-9;
  std::optional<double> gain_bandwidth;
  std::optional<double> squeezing_bandwidth;
  theory::ExcessNoiseSpec excess{};
  synth::TechnicalNoiseSpec technical{};
  double detection_bandwidth = 50e6;
  int detection_order = 4;
  double shot_charge = 2.5e-15;
};

struct Scenario {
  std::string name;
  ModelInputs inputs;
  synth::FwmModel model;
  synth::AcquisitionConfig acquisition;
  AnalysisConfig analysis;
};

inline std::vector<double> default_cutoffs() {
  std::vector<double> c;
  for (int m = 1; m <= 15; ++m) c.push_back(m * 1e6);
  for (double m : {20.0, 30.0, 40.0}) c.push_back(m * 1e6);
  return c;
}

// Solves the derived quantities (squeeze parameter, gain bandwidth, conjugate
// DC) and validates the result.
inline synth::FwmModel build_model(const ModelInputs& in, const AnalysisConfig& analysis) {
  if (!(in.gain >= 1.0)) throw ConfigError("gain", "must be >= 1");
  if (!(in.seed_photons > 0.0)) throw ConfigError("seed_photons", "must be > 0");
  if (!(in.eta > 0.0 && in.eta <= 1.0)) throw ConfigError("eta", "must be in (0, 1]");
  if (in.excess.order < 1) throw ConfigError("excess_order", "must be >= 1");
  if (!(in.excess.onset_hz > 0.0)) throw ConfigError("excess_onset_mhz", "must be > 0");
  if (in.detection_order < 1) throw ConfigError("detection_order", "must be >= 1");
  const auto squeeze = theory::SqueezeParams::from_gain(in.gain, {std::sqrt(in.seed_photons), 0.0});
  double fb = 0.0;
  if (in.gain_bandwidth) {
    fb = *in.gain_bandwidth;
  } else if (in.squeezing_bandwidth) {
    try {
      fb = theory::gain_bandwidth_for_squeezing(squeeze, in.delay, in.eta, in.excess,
                                                *in.squeezing_bandwidth, analysis.band.f_lo, 500e6);
    } catch (const DomainError& e) {
      throw ConfigError("squeezing_bandwidth_mhz", e.what());
    }
  } else {
    throw ConfigError("gain_bandwidth_mhz", "either gain_bandwidth_mhz or squeezing_bandwidth_mhz is required");
  }
  if (!(fb > 0.0)) throw ConfigError("gain_bandwidth_mhz", "must be > 0");
  auto m = synth::FwmModel::make(squeeze, in.probe_dc, fb, in.delay, in.eta);
  m.excess = in.excess;
  m.technical = in.technical;
  m.detection_bandwidth = in.detection_bandwidth;
  m.detection_order = in.detection_order;
  m.shot_charge = in.shot_charge;
  return m;
}

inline const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"G2", "G5", "G8", "G10", "ideal"};
  return names;
}

inline Scenario preset_unresolved(const std::string& name) {
  Scenario sc;
  sc.name = name;
  sc.analysis.cutoffs_hz = default_cutoffs();
  ModelInputs& in = sc.inputs;
  if (name == "G10") {
    in.gain = 10.0;
    in.eta = 0.8;
    in.delay = 8e-9;
    in.squeezing_bandwidth = 15e6;
    in.excess = {0.0, 2.0, 10e6, 8, 0.0};
  } else if (name == "G8") {
    in.gain = 8.0;
    in.eta = 0.8;
    in.delay = 9e-9;
    in.gain_bandwidth = 10e6;
    in.excess = {0.0, 1.5, 10e6, 8, 0.0};
  } else if (name == "G5") {
    in.gain = 5.0;
    in.eta = 0.8;
    in.delay = 11e-9;
    in.gain_bandwidth = 10e6;
    in.excess = {0.0, 1.5, 10e6, 8, 0.0};
  } else if (name == "G2") {
    in.gain = 2.0;
    in.eta = 0.97;
    in.delay = 13e-9;
    in.gain_bandwidth = 8e6;
    in.excess = {0.0, 2.0, 3.8e6, 10, 20e6};
  } else if (name == "ideal") {
    in.gain = 10.0;
    in.eta = 1.0;
    in.delay = 8e-9;
    in.gain_bandwidth = 90e6;
    in.excess = {};
    in.technical.rin_level = 0.0;
    sc.analysis.band.f_hi = 10e6;
  } else {
    throw ConfigError("preset", "unknown preset '" + name + "'");
  }
  return sc;
}

inline Scenario preset(const std::string& name) {
  Scenario sc = preset_unresolved(name);
  sc.model = build_model(sc.inputs, sc.analysis);
  return sc;
}

namespace detail {

inline double parse_double(const std::string& field, const std::string& text) {
  double v = 0.0;
  const char* b = text.data();
  const char* e = b + text.size();
  while (b < e && *b == ' ') ++b;
  while (e > b && e[-1] == ' ') --e;
  const auto r = std::from_chars(b, e, v);
  if (r.ec != std::errc{} || r.ptr != e || !std::isfinite(v))
    throw ConfigError(field, "not a number: '" + text + "'");
  return v;
}

inline long long parse_int(const std::string& field, const std::string& text) {
  long long v = 0;
  const char* b = text.data();
  const char* e = b + text.size();
  while (b < e && *b == ' ') ++b;
  while (e > b && e[-1] == ' ') --e;
  const auto r = std::from_chars(b, e, v);
  if (r.ec != std::errc{} || r.ptr != e) throw ConfigError(field, "not an integer: '" + text + "'");
  return v;
}

inline std::uint64_t parse_u64(const std::string& field, const std::string& text) {
  std::uint64_t v = 0;
  const char* b = text.data();
  const char* e = b + text.size();
  while (b < e && *b == ' ') ++b;
  while (e > b && e[-1] == ' ') --e;
  const auto r = std::from_chars(b, e, v);
  if (r.ec != std::errc{} || r.ptr != e) throw ConfigError(field, "not an unsigned integer: '" + text + "'");
  return v;
}

inline bool parse_bool(const std::string& field, std::string text) {
  std::transform(text.begin(), text.end(), text.begin(), [](unsigned char c) { return std::tolower(c); });
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw ConfigError(field, "not a boolean: '" + text + "'");
}

} // namespace detail

// Comma-separated list of frequencies in MHz, returned in Hz.
inline std::vector<double> parse_mhz_list(const std::string& field, const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.find_first_not_of(' ') == std::string::npos) continue;
    const double v = detail::parse_double(field, item);
    if (!(v > 0.0)) throw ConfigError(field, "frequencies must be > 0");
    out.push_back(v * 1e6);
  }
  return out;
}

// Applies the keys of a parsed file on top of the preset it names (G10 when
// none is given). Unknown sections or keys are rejected.
inline Scenario from_ptree(const boost::property_tree::ptree& pt) {
  using detail::parse_bool;
  using detail::parse_double;
  using detail::parse_int;
  static const std::map<std::string, std::set<std::string>> known{
      {"scenario", {"preset", "name"}},
      {"model",
       {"gain", "seed_photons", "probe_dc", "eta", "delay_ns", "gain_bandwidth_mhz",
        "squeezing_bandwidth_mhz", "excess_probe_level", "excess_conj_level", "excess_onset_mhz",
        "excess_order", "excess_cutoff_mhz", "technical_rin_per_hz", "technical_corner_khz",
        "detection_bandwidth_mhz", "detection_order", "shot_charge"}},
      {"acquisition", {"sample_rate_hz", "samples_per_set", "num_sets", "adc_bits", "full_scale", "rng_seed"}},
      {"analysis",
       {"filter_order", "f_lo_mhz", "f_hi_mhz", "tau_max_ns", "max_delay_ns", "smoothing_mhz",
        "compensate_delay", "cutoffs_mhz"}}};
  for (const auto& [section, body] : pt) {
    const auto it = known.find(section);
    if (it == known.end()) throw ConfigError(section, "unknown section");
    for (const auto& [key, value] : body)
      if (!it->second.count(key)) throw ConfigError(section + "." + key, "unknown key");
  }

  const std::string preset_name = pt.get<std::string>("scenario.preset", "G10");
  Scenario sc = preset_unresolved(preset_name);
  sc.name = pt.get<std::string>("scenario.name", preset_name);

  auto get = [&](const std::string& path) -> std::optional<std::string> {
    if (auto v = pt.get_optional<std::string>(path)) return *v;
    return std::nullopt;
  };
  auto num = [&](const std::string& key, auto&& apply) {
    if (auto v = get(key)) apply(parse_double(key.substr(key.find('.') + 1), *v));
  };
  auto integer = [&](const std::string& key, auto&& apply) {
    if (auto v = get(key)) apply(parse_int(key.substr(key.find('.') + 1), *v));
  };

  ModelInputs& in = sc.inputs;
  num("model.gain", [&](double v) { in.gain = v; });
  num("model.seed_photons", [&](double v) { in.seed_photons = v; });
  num("model.probe_dc", [&](double v) { in.probe_dc = v; });
  num("model.eta", [&](double v) { in.eta = v; });
  num("model.delay_ns", [&](double v) { in.delay = v * 1e-9; });
  num("model.gain_bandwidth_mhz", [&](double v) {
    in.gain_bandwidth = v * 1e6;
    in.squeezing_bandwidth.reset();
  });
  num("model.squeezing_bandwidth_mhz", [&](double v) {
    in.squeezing_bandwidth = v * 1e6;
    in.gain_bandwidth.reset();
  });
  if (get("model.gain_bandwidth_mhz") && get("model.squeezing_bandwidth_mhz"))
    throw ConfigError("squeezing_bandwidth_mhz", "conflicts with gain_bandwidth_mhz");
  num("model.excess_probe_level", [&](double v) { in.excess.probe_level = v; });
  num("model.excess_conj_level", [&](double v) { in.excess.conj_level = v; });
  num("model.excess_onset_mhz", [&](double v) { in.excess.onset_hz = v * 1e6; });
  integer("model.excess_order", [&](long long v) { in.excess.order = static_cast<int>(v); });
  num("model.excess_cutoff_mhz", [&](double v) { in.excess.cutoff_hz = v * 1e6; });
  num("model.technical_rin_per_hz", [&](double v) { in.technical.rin_level = v; });
  num("model.technical_corner_khz", [&](double v) { in.technical.corner_hz = v * 1e3; });
  num("model.detection_bandwidth_mhz", [&](double v) { in.detection_bandwidth = v * 1e6; });
  integer("model.detection_order", [&](long long v) { in.detection_order = static_cast<int>(v); });
  num("model.shot_charge", [&](double v) { in.shot_charge = v; });
  if (in.excess.probe_level < 0.0) throw ConfigError("excess_probe_level", "must be >= 0");
  if (in.excess.conj_level < 0.0) throw ConfigError("excess_conj_level", "must be >= 0");
  if (in.technical.rin_level < 0.0) throw ConfigError("technical_rin_per_hz", "must be >= 0");
  if (!(in.technical.corner_hz > 0.0)) throw ConfigError("technical_corner_khz", "must be > 0");

  auto& acq = sc.acquisition;
  num("acquisition.sample_rate_hz", [&](double v) { acq.sample_rate = v; });
  integer("acquisition.samples_per_set", [&](long long v) {
    if (v < 16) throw ConfigError("samples_per_set", "must be >= 16");
    acq.samples_per_set = static_cast<std::size_t>(v);
  });
  integer("acquisition.num_sets", [&](long long v) {
    if (v < 1) throw ConfigError("num_sets", "must be >= 1");
    acq.num_sets = static_cast<std::size_t>(v);
  });
  integer("acquisition.adc_bits", [&](long long v) {
    if (v < 2 || v > 16) throw ConfigError("adc_bits", "must be in [2, 16]");
    acq.adc_bits = static_cast<int>(v);
  });
  num("acquisition.full_scale", [&](double v) { acq.full_scale = v; });
  if (auto v = get("acquisition.rng_seed")) acq.rng_seed = detail::parse_u64("rng_seed", *v);

  auto& an = sc.analysis;
  integer("analysis.filter_order", [&](long long v) { an.band.order = static_cast<int>(v); });
  num("analysis.f_lo_mhz", [&](double v) { an.band.f_lo = v * 1e6; });
  num("analysis.f_hi_mhz", [&](double v) { an.band.f_hi = v * 1e6; });
  num("analysis.tau_max_ns", [&](double v) { an.tau_max = v * 1e-9; });
  num("analysis.max_delay_ns", [&](double v) { an.max_delay = v * 1e-9; });
  num("analysis.smoothing_mhz", [&](double v) { an.smoothing_hz = v * 1e6; });
  if (auto v = get("analysis.compensate_delay")) an.compensate_delay = parse_bool("compensate_delay", *v);
  if (auto v = get("analysis.cutoffs_mhz")) {
    an.cutoffs_hz = parse_mhz_list("cutoffs_mhz", *v);
    if (an.cutoffs_hz.empty()) throw ConfigError("cutoffs_mhz", "list is empty");
  }
  try {
    an.band.validate(acq.sample_rate);
  } catch (const SpecError& e) {
    throw ConfigError("f_hi_mhz", e.what());
  }
  if (!(an.tau_max > 0.0)) throw ConfigError("tau_max_ns", "must be > 0");
  if (!(an.max_delay > 0.0)) throw ConfigError("max_delay_ns", "must be > 0");
  if (!(an.smoothing_hz >= 0.0)) throw ConfigError("smoothing_mhz", "must be >= 0");

  sc.model = build_model(in, an);
  synth::validate(sc.model, acq);
  return sc;
}

inline Scenario parse(const std::string& text) {
  boost::property_tree::ptree pt;
  std::istringstream is(text);
  try {
    boost::property_tree::ini_parser::read_ini(is, pt);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError("line " + std::to_string(e.line()), e.message());
  }
  return from_ptree(pt);
}

inline Scenario load(const std::string& path) {
  boost::property_tree::ptree pt;
  try {
    boost::property_tree::ini_parser::read_ini(path, pt);
  } catch (const boost::property_tree::ini_parser_error& e) {
    if (e.line() == 0) throw IoError("cannot read config '" + path + "': " + e.message());
    throw ConfigError("line " + std::to_string(e.line()), e.message());
  }
  return from_ptree(pt);
}

} // namespace csilab::config

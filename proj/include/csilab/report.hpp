#pragma once

// Plot-ready CSV tables and the plain-text analysis summary. Numbers are
// formatted with std::to_chars, so output never depends on the C locale.

#include "csilab/estimators.hpp"
#include "csilab/trace_file.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

namespace csilab::report {

inline std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 10);
  return std::string(buf, r.ptr);
}

inline std::string fixed(double v, int digits) {
  if (!std::isfinite(v)) return num(v);
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, digits);
  return std::string(buf, r.ptr);
}

class Csv {
public:
  explicit Csv(const std::vector<std::string>& columns) {
    for (std::size_t i = 0; i < columns.size(); ++i) text_ += (i ? "," : "") + columns[i];
    text_ += '\n';
  }
  void row(const std::vector<double>& values) {
    for (std::size_t i = 0; i < values.size(); ++i) text_ += (i ? "," : "") + num(values[i]);
    text_ += '\n';
  }
  const std::string& text() const noexcept { return text_; }

private:
  std::string text_;
};

inline std::string g2_csv(const estimators::G2Curves& g) {
  Csv csv({"tau_s", "g2_ab", "g2_aa", "g2_bb", "sem_ab", "sem_aa", "sem_bb"});
  for (std::size_t i = 0; i < g.tau.size(); ++i)
    csv.row({g.tau[i], g.g2_ab[i], g.g2_aa[i], g.g2_bb[i], g.sem_ab[i], g.sem_aa[i], g.sem_bb[i]});
  return csv.text();
}

inline std::string spectra_csv(const estimators::SpectraReport& r) {
  Csv csv({"f_hz", "s_p_norm", "s_c_norm", "s_diff_norm", "s_p_smooth", "s_c_smooth", "s_diff_smooth"});
  for (std::size_t k = 1; k < r.frequencies.size(); ++k)
    csv.row({r.frequencies[k], r.s_p_norm[k], r.s_c_norm[k], r.s_diff_norm[k], r.s_p_smooth[k],
             r.s_c_smooth[k], r.s_diff_smooth[k]});
  return csv.text();
}

inline std::string vsweep_csv(const std::vector<estimators::SweepPoint>& sweep) {
  Csv csv({"f_hi_hz", "v_mean", "v_sigma", "v_sem", "sigma_count", "v_pooled"});
  for (const auto& p : sweep)
    csv.row({p.f_hi, p.report.v_mean, p.report.v_sigma, p.report.v_sem, p.report.sigma_count,
             p.report.v_pooled});
  return csv.text();
}

inline const char* verdict(bool violated) { return violated ? "CSI VIOLATED" : "NOT VIOLATED"; }

struct SummaryInput {
  std::string source;
  const synth::TraceSet* traces = nullptr;
  const estimators::CorrelationReport* correlation = nullptr;
  const estimators::SpectraReport* spectra = nullptr;
  dsp::FilterSpec band{};
};

inline std::string summary_text(const SummaryInput& in) {
  const auto& c = *in.correlation;
  const auto& s = *in.spectra;
  const auto& acq = in.traces->acquisition();
  std::string t;
  auto line = [&t](const std::string& key, const std::string& value) { t += key + ": " + value + "\n"; };
  line("source", in.source);
  line("provenance", in.traces->provenance());
  line("sets", std::to_string(acq.num_sets));
  line("samples_per_set", std::to_string(acq.samples_per_set));
  line("sample_rate_hz", num(acq.sample_rate));
  line("analysis_band_hz", num(in.band.f_lo) + " " + num(in.band.f_hi) + " (order " + std::to_string(in.band.order) + ")");
  line("delay_ns", c.peak_found ? fixed(c.delay * 1e9, 3) : "none (no prominent cross-correlation peak)");
  line("eps_aa", num(c.eps_aa));
  line("eps_bb", num(c.eps_bb));
  line("eps_ab_peak", num(c.eps_ab_peak));
  line("V", fixed(c.v_mean, 5) + " +/- " + num(c.v_sigma) + " (per-set std)");
  line("V_sem", num(c.v_sem));
  line("sigma_count", fixed(c.sigma_count, 2) + " (|1 - V| / V_sem)");
  line("V_pooled", fixed(c.v_pooled, 5));
  line("degenerate_sets", std::to_string(c.degenerate_sets));
  line("time_domain_verdict", verdict(c.violated));
  line("spectral_csi_lhs", num(s.spectral_csi_lhs));
  line("spectral_csi_rhs", num(s.spectral_csi_rhs));
  line("spectral_verdict", verdict(!s.spectral_csi_classical));
  line("verdicts_agree", c.violated == !s.spectral_csi_classical ? "yes" : "no");
  line("delay_compensated", s.compensated ? "yes" : "no");
  line("squeezing_db_max", fixed(s.squeezing_db_max, 3));
  line("squeezing_peak_mhz", fixed(s.squeezing_peak_hz / 1e6, 3));
  line("squeezing_bandwidth_mhz", fixed(s.squeezing_bandwidth / 1e6, 3));
  line("diff_noise_db_0.5_3mhz", fixed(s.diff_db(0.5e6, 3e6), 3));
  line("clip_warnings", std::to_string(in.traces->clip_warnings().size()));
  line("verdict", verdict(c.violated));
  return t;
}

inline void write(const std::filesystem::path& path, const std::string& text) { io::atomic_write(path, text); }

} // namespace csilab::report

#include "pptomo/csvio.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include "json.hpp"

namespace pptomo {

namespace {

using nlohmann::json;

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  out << text;
  if (!out) throw ConfigError("write failed: " + path);
}

void reject_unknown_keys(const json& j, std::initializer_list<const char*> known,
                         const std::string& where) {
  for (const auto& item : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || item.key() == k;
    if (!ok) throw ConfigError(where + ": unknown key '" + item.key() + "'");
  }
}

RVec to_rvec(const json& j, const std::string& where) {
  if (!j.is_array()) throw ConfigError(where + ": expected array");
  RVec v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<int>(i)] = j[i].get<double>();
  return v;
}

json from_rvec(const RVec& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

std::ofstream open_csv(const std::string& path, const std::string& comment,
                       const std::string& header) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  out << "# pptomo csv v1 | " << comment << "\n" << header << "\n";
  return out;
}

// rows of a CSV body: comment lines skipped, header validated against the
// expected column names
std::vector<std::vector<double>> read_csv(const std::string& path,
                                          const std::string& expected_header) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  std::string line;
  bool have_header = false;
  std::vector<std::vector<double>> rows;
  const auto n_cols = static_cast<std::size_t>(
      std::count(expected_header.begin(), expected_header.end(), ',') + 1);
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!have_header) {
      if (line != expected_header)
        throw ConfigError(path + ": expected columns '" + expected_header + "', got '" +
                          line + "'");
      have_header = true;
      continue;
    }
    std::vector<double> row;
    row.reserve(n_cols);
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      std::size_t used = 0;
      double value = 0.0;
      try {
        value = std::stod(cell, &used);
      } catch (const std::exception&) {
        throw ConfigError(path + ":" + std::to_string(line_no) + ": bad number '" + cell + "'");
      }
      if (used != cell.size())
        throw ConfigError(path + ":" + std::to_string(line_no) + ": bad number '" + cell + "'");
      row.push_back(value);
    }
    if (row.size() != n_cols)
      throw ConfigError(path + ":" + std::to_string(line_no) + ": expected " +
                        std::to_string(n_cols) + " columns");
    rows.push_back(std::move(row));
  }
  if (!have_header) throw ConfigError(path + ": missing header row");
  return rows;
}

// reconstruct the (outer, inner) grids of a long-format surface written
// outer-major; validates rectangularity
void split_grids(const std::string& path, const std::vector<std::vector<double>>& rows,
                 RVec& outer, RVec& inner) {
  if (rows.empty()) throw ConfigError(path + ": empty surface");
  std::size_t n_inner = 1;
  while (n_inner < rows.size() && rows[n_inner][0] == rows[0][0]) ++n_inner;
  if (rows.size() % n_inner != 0)
    throw ConfigError(path + ": ragged surface (" + std::to_string(rows.size()) + " rows, " +
                      std::to_string(n_inner) + " inner points)");
  const std::size_t n_outer = rows.size() / n_inner;
  outer.resize(static_cast<int>(n_outer));
  inner.resize(static_cast<int>(n_inner));
  for (std::size_t j = 0; j < n_inner; ++j) inner[static_cast<int>(j)] = rows[j][1];
  for (std::size_t i = 0; i < n_outer; ++i) {
    outer[static_cast<int>(i)] = rows[i * n_inner][0];
    for (std::size_t j = 0; j < n_inner; ++j) {
      const auto& r = rows[i * n_inner + j];
      if (r[0] != outer[static_cast<int>(i)] || r[1] != inner[static_cast<int>(j)])
        throw ConfigError(path + ": grid not rectangular");
    }
  }
}

}  // namespace

ModelFile load_model_file(const std::string& path) {
  const json j = load_json(path);
  reject_unknown_keys(j,
                      {"energies_cm1", "couplings_cm1", "dipoles", "disorder_sigma_cm1",
                       "bath", "closure"},
                      path);
  ModelFile f;
  if (!j.contains("energies_cm1") || !j.contains("couplings_cm1") || !j.contains("dipoles"))
    throw ConfigError(path + ": energies_cm1, couplings_cm1 and dipoles are required");
  f.model.energies_cm1 = to_rvec(j.at("energies_cm1"), path + ":energies_cm1");
  const int n = f.model.n_sites();

  const json& jc = j.at("couplings_cm1");
  if (!jc.is_array() || static_cast<int>(jc.size()) != n)
    throw ConfigError(path + ": couplings_cm1 must be an n x n array");
  f.model.couplings_cm1.resize(n, n);
  for (int a = 0; a < n; ++a) {
    const RVec row = to_rvec(jc[a], path + ":couplings_cm1");
    if (row.size() != n) throw ConfigError(path + ": couplings_cm1 must be an n x n array");
    f.model.couplings_cm1.row(a) = row.transpose();
  }

  const json& jd = j.at("dipoles");
  if (!jd.is_array() || static_cast<int>(jd.size()) != n)
    throw ConfigError(path + ": dipoles must be an n x 3 array");
  f.model.dipoles.resize(n, 3);
  for (int a = 0; a < n; ++a) {
    const RVec row = to_rvec(jd[a], path + ":dipoles");
    if (row.size() != 3) throw ConfigError(path + ": dipoles must be an n x 3 array");
    f.model.dipoles.row(a) = row.transpose();
  }

  f.model.disorder_sigma_cm1 = j.value("disorder_sigma_cm1", 0.0);

  if (j.contains("bath")) {
    const json& jb = j.at("bath");
    reject_unknown_keys(jb, {"reorg_cm1", "cutoff_cm1", "temperature_K"}, path + ":bath");
    if (!jb.contains("reorg_cm1") || !jb.contains("cutoff_cm1") ||
        !jb.contains("temperature_K"))
      throw ConfigError(path + ":bath needs reorg_cm1, cutoff_cm1, temperature_K");
    f.bath.reorg_cm1 = jb.at("reorg_cm1").get<double>();
    f.bath.cutoff_cm1 = jb.at("cutoff_cm1").get<double>();
    f.bath.temperature_K = jb.at("temperature_K").get<double>();
    f.bath.validate();
  }
  if (j.contains("closure")) {
    const json& jw = j.at("closure");
    reject_unknown_keys(jw, {"independent", "correlated"}, path + ":closure");
    f.closure.independent = jw.value("independent", 1.0);
    f.closure.correlated = jw.value("correlated", 1.0);
  }
  f.model.validate();
  return f;
}

void save_model_file(const std::string& path, const ModelFile& file) {
  json j;
  j["energies_cm1"] = from_rvec(file.model.energies_cm1);
  json jc = json::array();
  for (int a = 0; a < file.model.n_sites(); ++a)
    jc.push_back(from_rvec(file.model.couplings_cm1.row(a).transpose()));
  j["couplings_cm1"] = jc;
  json jd = json::array();
  for (int a = 0; a < file.model.n_sites(); ++a)
    jd.push_back(from_rvec(file.model.dipoles.row(a).transpose()));
  j["dipoles"] = jd;
  j["disorder_sigma_cm1"] = file.model.disorder_sigma_cm1;
  j["bath"] = {{"reorg_cm1", file.bath.reorg_cm1},
               {"cutoff_cm1", file.bath.cutoff_cm1},
               {"temperature_K", file.bath.temperature_K}};
  j["closure"] = {{"independent", file.closure.independent},
                  {"correlated", file.closure.correlated}};
  write_text(path, j.dump(2) + "\n");
}

Pulse load_pulse_file(const std::string& path) {
  const json j = load_json(path);
  reject_unknown_keys(j, {"fwhm_fs", "center_cm1", "amplitude", "samples"}, path);
  Pulse p;
  if (!j.contains("center_cm1")) throw ConfigError(path + ": center_cm1 is required");
  p.center_cm1 = j.at("center_cm1").get<double>();
  p.amplitude = j.value("amplitude", 1.0);
  p.fwhm_fs = j.value("fwhm_fs", 0.0);
  if (j.contains("samples")) {
    const json& js = j.at("samples");
    reject_unknown_keys(js, {"time_fs", "re", "im"}, path + ":samples");
    p.envelope_times_fs = to_rvec(js.at("time_fs"), path + ":samples.time_fs");
    p.envelope_values = to_rvec(js.at("re"), path + ":samples.re");
    if (js.contains("im")) {
      // the pipeline assumes an unchirped probe; a complex envelope has no
      // representation here
      const RVec im = to_rvec(js.at("im"), path + ":samples.im");
      if (im.size() != p.envelope_values.size())
        throw ConfigError(path + ": samples.re and samples.im differ in length");
      if (im.size() > 0 && im.cwiseAbs().maxCoeff() > 0.0)
        throw ConfigError(path + ": complex envelope samples are not supported");
    }
  } else if (p.fwhm_fs <= 0.0) {
    throw ConfigError(path + ": either fwhm_fs or samples is required");
  }
  p.validate();
  return p;
}

void save_pulse_file(const std::string& path, const Pulse& pulse) {
  json j;
  j["fwhm_fs"] = pulse.fwhm_fs;
  j["center_cm1"] = pulse.center_cm1;
  j["amplitude"] = pulse.amplitude;
  if (pulse.tabulated()) {
    j["samples"] = {{"time_fs", from_rvec(pulse.envelope_times_fs)},
                    {"re", from_rvec(pulse.envelope_values)},
                    {"im", from_rvec(RVec::Zero(pulse.envelope_values.size()))}};
  }
  write_text(path, j.dump(2) + "\n");
}

void save_real_surface(const std::string& path, const std::string& content,
                       const RVec& freqs_cm1, const RVec& delays_fs, const RMat& values) {
  if (values.rows() != freqs_cm1.size() || values.cols() != delays_fs.size())
    throw ConfigError("surface shape does not match its grids");
  auto out = open_csv(path, content + " | freq cm^-1, delay fs",
                      "freq_cm1,delay_fs,value");
  for (int i = 0; i < freqs_cm1.size(); ++i)
    for (int j = 0; j < delays_fs.size(); ++j)
      out << fmt(freqs_cm1[i]) << ',' << fmt(delays_fs[j]) << ',' << fmt(values(i, j))
          << '\n';
  if (!out) throw ConfigError("write failed: " + path);
}

RMat load_real_surface(const std::string& path, RVec* freqs_cm1, RVec* delays_fs) {
  const auto rows = read_csv(path, "freq_cm1,delay_fs,value");
  RVec w, t;
  split_grids(path, rows, w, t);
  RMat values(w.size(), t.size());
  for (int i = 0; i < w.size(); ++i)
    for (int j = 0; j < t.size(); ++j)
      values(i, j) = rows[static_cast<std::size_t>(i) * t.size() + j][2];
  if (freqs_cm1) *freqs_cm1 = w;
  if (delays_fs) *delays_fs = t;
  return values;
}

void save_complex_surface(const std::string& path, const std::string& content,
                          const RVec& freqs_cm1, const RVec& taus_fs, const CMat& values) {
  if (values.rows() != freqs_cm1.size() || values.cols() != taus_fs.size())
    throw ConfigError("surface shape does not match its grids");
  auto out = open_csv(path, content + " | freq cm^-1, tau fs", "freq_cm1,tau_fs,re,im");
  for (int i = 0; i < freqs_cm1.size(); ++i)
    for (int j = 0; j < taus_fs.size(); ++j)
      out << fmt(freqs_cm1[i]) << ',' << fmt(taus_fs[j]) << ',' << fmt(values(i, j).real())
          << ',' << fmt(values(i, j).imag()) << '\n';
  if (!out) throw ConfigError("write failed: " + path);
}

CMat load_complex_surface(const std::string& path, RVec* freqs_cm1, RVec* taus_fs) {
  const auto rows = read_csv(path, "freq_cm1,tau_fs,re,im");
  RVec w, t;
  split_grids(path, rows, w, t);
  CMat values(w.size(), t.size());
  for (int i = 0; i < w.size(); ++i)
    for (int j = 0; j < t.size(); ++j) {
      const auto& r = rows[static_cast<std::size_t>(i) * t.size() + j];
      values(i, j) = cdouble(r[2], r[3]);
    }
  if (freqs_cm1) *freqs_cm1 = w;
  if (taus_fs) *taus_fs = t;
  return values;
}

void save_bloch_trajectory(const std::string& path, const TomographyResult& result) {
  const bool scored = result.fidelity.size() == result.taus_fs.size();
  auto out = open_csv(path, "reconstructed Bloch trajectory, components normalized by r0",
                      "tau_fs,r1_norm,r2_norm,r3_norm,fidelity");
  for (int i = 0; i < result.taus_fs.size(); ++i) {
    out << fmt(result.taus_fs[i]);
    for (int c = 0; c < 3; ++c) out << ',' << fmt(result.normalized(i, c));
    out << ',' << fmt(scored ? result.fidelity[i] : std::numeric_limits<double>::quiet_NaN())
        << '\n';
  }
  if (!out) throw ConfigError("write failed: " + path);
}

void save_singular_values(const std::string& path, const std::vector<PumpProbeMap>& maps) {
  auto out = open_csv(path, "normalized singular values per scenario map",
                      "scenario,index,sigma_norm");
  for (const auto& m : maps) {
    const SingularSpectrum ss = singular_spectrum(m);
    for (int i = 0; i < ss.normalized.size(); ++i)
      out << m.label << ',' << i << ',' << fmt(ss.normalized[i]) << '\n';
  }
  if (!out) throw ConfigError("write failed: " + path);
}

void save_species_amplitudes(const std::string& path,
                             const std::vector<std::string>& config_labels,
                             const std::vector<RMat>& matrices) {
  if (config_labels.size() != matrices.size())
    throw ConfigError("species amplitude labels and matrices differ in count");
  auto out = open_csv(path,
                      "peak species amplitudes; upper/diagonal = max |Re|, lower = max |Im|",
                      "config,a,b,amplitude");
  for (std::size_t k = 0; k < matrices.size(); ++k)
    for (int a = 0; a < matrices[k].rows(); ++a)
      for (int b = 0; b < matrices[k].cols(); ++b)
        out << config_labels[k] << ',' << a << ',' << b << ',' << fmt(matrices[k](a, b))
            << '\n';
  if (!out) throw ConfigError("write failed: " + path);
}

void save_species_bands(const std::string& path, const RVec& grid_cm1,
                        const std::vector<SpeciesBand>& bands) {
  auto out = open_csv(path, "95% envelopes of species spectra over Hamiltonian draws",
                      "species,freq_cm1,re_nominal,re_lo,re_hi,im_nominal,im_lo,im_hi");
  for (const auto& b : bands) {
    if (b.nominal_re.size() != grid_cm1.size())
      throw ConfigError("species band length does not match the grid");
    for (int i = 0; i < grid_cm1.size(); ++i)
      out << b.label << ',' << fmt(grid_cm1[i]) << ',' << fmt(b.nominal_re[i]) << ','
          << fmt(b.re_lo[i]) << ',' << fmt(b.re_hi[i]) << ',' << fmt(b.nominal_im[i]) << ','
          << fmt(b.im_lo[i]) << ',' << fmt(b.im_hi[i]) << '\n';
  }
  if (!out) throw ConfigError("write failed: " + path);
}

void save_species_spectra(const std::string& path, const RVec& grid_cm1,
                          const std::vector<SpeciesSpectrum>& spectra) {
  auto out = open_csv(path, "per-component species spectra",
                      "species,freq_cm1,re,im");
  for (const auto& s : spectra) {
    if (s.values.size() != grid_cm1.size())
      throw ConfigError("species spectrum length does not match the grid");
    for (int i = 0; i < grid_cm1.size(); ++i)
      out << s.label << ',' << fmt(grid_cm1[i]) << ',' << fmt(s.values[i].real()) << ','
          << fmt(s.values[i].imag()) << '\n';
  }
  if (!out) throw ConfigError("write failed: " + path);
}

namespace {

const char* mode_name(StageMode m) { return m == StageMode::Naive ? "naive" : "tikhonov"; }

const char* penalty_name(Penalty p) {
  switch (p) {
    case Penalty::Identity: return "identity";
    case Penalty::FirstDifference: return "first-difference";
    default: return "second-difference";
  }
}

const char* selector_name(SelectorConfig::Method m) {
  switch (m) {
    case SelectorConfig::Method::ExactOracle: return "oracle";
    case SelectorConfig::Method::Ncp: return "ncp";
    case SelectorConfig::Method::Fixed: return "fixed";
    default: return "gcv";
  }
}

}  // namespace

void save_inversion_report(const std::string& path, const InversionConfig& cfg,
                           const InversionReport& report) {
  json j;
  j["stage1"] = mode_name(cfg.stage1);
  j["stage2"] = mode_name(cfg.stage2);
  j["penalty"] = penalty_name(cfg.penalty);
  j["selector"] = selector_name(cfg.selector.method);
  j["lambda_floor"] = cfg.selector.lambda_floor;
  if (cfg.selector.method == SelectorConfig::Method::Fixed)
    j["fixed_lambda"] = cfg.selector.fixed_lambda;
  j["stage1_lambdas"] = from_rvec(report.stage1_lambdas);
  j["stage2_lambdas"] = from_rvec(report.stage2_lambdas);
  j["stage2_scores"] = from_rvec(report.stage2_scores);
  j["masked_freq_indices"] = report.masked_freq_indices;
  j["absorptive_only"] = report.absorptive_only;
  j["selector_warning"] = report.selector_warning;
  if (report.rmse_vs_truth >= 0.0) j["rmse_vs_truth"] = report.rmse_vs_truth;
  write_text(path, j.dump(2) + "\n");
}

void save_tomography_report(const std::string& path, const TomographyPlan& plan,
                            const TomographyResult& result) {
  json j;
  j["freq_alpha_cm1"] = plan.freq_alpha_cm1;
  j["freq_beta_cm1"] = plan.freq_beta_cm1;
  j["normalization_delay_fs"] = plan.normalization_delay_fs;
  j["cond4"] = result.cond4;
  j["cond3"] = result.cond3;
  j["r0"] = result.r0.size() > 0 ? result.r0[0] : 0.0;
  j["any_violation"] = result.any_violation;
  j["anchor_clamped"] = result.anchor_clamped;
  if (result.fidelity.size() > 0) {
    j["worst_fidelity"] = result.fidelity.minCoeff();
    j["avg_fidelity"] = result.fidelity.mean();
  }
  write_text(path, j.dump(2) + "\n");
}

std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path);
  std::uint64_t h = 1469598103934665603ull;
  char buf[1 << 14];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    const auto got = in.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ull;
    }
    if (!in) break;
  }
  char hex[32];
  std::snprintf(hex, sizeof(hex), "fnv1a64:%016llx", static_cast<unsigned long long>(h));
  return hex;
}

void save_manifest(const std::string& path, const std::string& command,
                   const std::string& parameters_json,
                   const std::vector<std::string>& input_paths) {
  json j;
  j["schema"] = "pptomo-manifest-v1";
  j["version"] = "1.0.0";
  j["command"] = command;
  try {
    j["parameters"] = json::parse(parameters_json);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("manifest parameters: ") + e.what());
  }
  json inputs = json::object();
  for (const auto& p : input_paths) inputs[p] = file_digest(p);
  j["inputs"] = inputs;
  write_text(path, j.dump(2) + "\n");
}

}  // namespace pptomo

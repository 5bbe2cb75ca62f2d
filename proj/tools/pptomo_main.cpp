#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "pptomo/csvio.hpp"
#include "pptomo/deconvolve.hpp"
#include "pptomo/feasibility.hpp"
#include "pptomo/forward.hpp"
#include "pptomo/response.hpp"
#include "pptomo/rng.hpp"
#include "pptomo/tomography.hpp"
#include "pptomo/units.hpp"
#include "pptomo/util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace pptomo;

namespace {

std::string join(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory " + dir);
}

StageMode parse_stage(const std::string& s) {
  if (s == "naive") return StageMode::Naive;
  if (s == "tikhonov") return StageMode::Tikhonov;
  throw ConfigError("unknown stage mode '" + s + "' (naive|tikhonov)");
}

Penalty parse_penalty(const std::string& s) {
  if (s == "i") return Penalty::Identity;
  if (s == "d1") return Penalty::FirstDifference;
  if (s == "d2") return Penalty::SecondDifference;
  throw ConfigError("unknown penalty '" + s + "' (i|d1|d2)");
}

SelectorConfig::Method parse_selector(const std::string& s) {
  if (s == "gcv") return SelectorConfig::Method::Gcv;
  if (s == "ncp") return SelectorConfig::Method::Ncp;
  if (s == "fixed") return SelectorConfig::Method::Fixed;
  if (s == "oracle") return SelectorConfig::Method::ExactOracle;
  throw ConfigError("unknown selector '" + s + "' (gcv|ncp|fixed|oracle)");
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  std::string model_path, out_dir = ".";
  int samples = 1000;
  std::uint64_t seed = 1;
  double noise = 0.0;
  std::uint64_t noise_seed = 2;
  double pump_fwhm = 40.0, pump_center = 12800.0;
  double probe_fwhm = 40.0, probe_center = 12800.0;
  double w_min = 12500.0, w_max = 13100.0;
  int n_w = 181;
  double t_min = 50.0, t_max = 1000.0;
  int n_t = 140;
};

int run_simulate(const SimulateArgs& a) {
  const ModelFile mf = load_model_file(a.model_path);
  Pulse pump;
  pump.fwhm_fs = a.pump_fwhm;
  pump.center_cm1 = a.pump_center;
  Pulse probe;
  probe.fwhm_fs = a.probe_fwhm;
  probe.center_cm1 = a.probe_center;

  ExperimentGrid grid;
  grid.probe_freqs_cm1 = linspace(a.w_min, a.w_max, a.n_w);
  grid.delays_fs = linspace(a.t_min, a.t_max, a.n_t);
  grid.rotating_frame_cm1 = a.probe_center;
  grid.validate();

  EnsembleSpec ens;
  ens.n_samples = a.samples;
  ens.seed = a.seed;

  const SimulationResult sim = simulate_experiment(mf.model, mf.bath, pump, probe, grid,
                                                   ens, a.noise, a.noise_seed, mf.closure);
  for (const auto& w : sim.warnings) std::cerr << "warning: " << w << "\n";

  ensure_dir(a.out_dir);
  save_real_surface(join(a.out_dir, "s_abs.csv"), "absorptive heterodyne signal",
                    grid.probe_freqs_cm1, grid.delays_fs, sim.s_abs);
  save_real_surface(join(a.out_dir, "s_disp.csv"), "dispersive heterodyne signal",
                    grid.probe_freqs_cm1, grid.delays_fs, sim.s_disp);
  save_complex_surface(join(a.out_dir, "p3.csv"), "third-order polarization",
                       grid.probe_freqs_cm1, grid.delays_fs, sim.p3);
  save_complex_surface(join(a.out_dir, "response_true.csv"),
                       "ensemble response surface (extended delay grid)",
                       grid.probe_freqs_cm1, sim.tau_fs, sim.truth);
  save_pulse_file(join(a.out_dir, "probe_pulse.json"), probe);

  json params = {{"model", a.model_path},
                 {"samples", a.samples},
                 {"seed", a.seed},
                 {"noise", a.noise},
                 {"noise_seed", a.noise_seed},
                 {"pump", {{"fwhm_fs", a.pump_fwhm}, {"center_cm1", a.pump_center}}},
                 {"probe", {{"fwhm_fs", a.probe_fwhm}, {"center_cm1", a.probe_center}}},
                 {"grid",
                  {{"w_min", a.w_min},
                   {"w_max", a.w_max},
                   {"n_w", a.n_w},
                   {"t_min", a.t_min},
                   {"t_max", a.t_max},
                   {"n_t", a.n_t}}}};
  save_manifest(join(a.out_dir, "manifest.json"), "simulate", params.dump(),
                {a.model_path});
  std::cout << "wrote " << a.out_dir << "/{s_abs,s_disp,p3,response_true}.csv\n";
  return 0;
}

// ---------------------------------------------------------- invert-response

struct InvertArgs {
  std::string p3_path, s_abs_path, s_disp_path, probe_path, truth_path;
  std::string out_dir = ".";
  std::string stage1 = "tikhonov", stage2 = "tikhonov";
  std::string penalty = "d2", selector = "gcv";
  double fixed_lambda = 1.0;
  double lambda_floor = 5e-11;
};

int run_invert(const InvertArgs& a) {
  const Pulse probe = load_pulse_file(a.probe_path);

  InversionConfig cfg;
  cfg.stage1 = parse_stage(a.stage1);
  cfg.stage2 = parse_stage(a.stage2);
  cfg.penalty = parse_penalty(a.penalty);
  cfg.selector.method = parse_selector(a.selector);
  cfg.selector.fixed_lambda = a.fixed_lambda;
  cfg.selector.lambda_floor = a.lambda_floor;

  RVec freqs, delays;
  CMat p3;
  InversionReport report;
  std::vector<std::string> inputs{a.probe_path};

  if (!a.p3_path.empty()) {
    p3 = load_complex_surface(a.p3_path, &freqs, &delays);
    inputs.push_back(a.p3_path);
  } else {
    if (a.s_abs_path.empty())
      throw ConfigError("either --p3 or --s-abs is required");
    HeterodyneSurfaces data;
    data.absorptive = load_real_surface(a.s_abs_path, &data.probe_freqs_cm1, &data.delays_fs);
    inputs.push_back(a.s_abs_path);
    if (!a.s_disp_path.empty()) {
      RVec wf, td;
      data.dispersive = load_real_surface(a.s_disp_path, &wf, &td);
      inputs.push_back(a.s_disp_path);
    }
    data.rotating_frame_cm1 = probe.center_cm1;
    p3 = invert_signal_to_polarization(data, probe, cfg, &report);
    freqs = data.probe_freqs_cm1;
    delays = data.delays_fs;
  }

  ResponseSurface truth;
  const ResponseSurface* truth_ptr = nullptr;
  if (!a.truth_path.empty()) {
    truth.values = load_complex_surface(a.truth_path, &truth.freqs_cm1, &truth.taus_fs);
    truth_ptr = &truth;
    inputs.push_back(a.truth_path);
  }
  if (cfg.selector.method == SelectorConfig::Method::ExactOracle && !truth_ptr)
    throw ConfigError("the oracle selector requires --truth");

  const ResponseSurface est = invert_polarization_to_response(
      p3, freqs, delays, probe, probe.center_cm1, cfg, &report, truth_ptr);

  ensure_dir(a.out_dir);
  save_complex_surface(join(a.out_dir, "response_est.csv"), "reconstructed response surface",
                       est.freqs_cm1, est.taus_fs, est.values);
  save_inversion_report(join(a.out_dir, "inversion_report.json"), cfg, report);

  json params = {{"stage1", a.stage1},
                 {"stage2", a.stage2},
                 {"penalty", a.penalty},
                 {"selector", a.selector},
                 {"lambda", a.fixed_lambda},
                 {"lambda_floor", a.lambda_floor}};
  save_manifest(join(a.out_dir, "manifest.json"), "invert-response", params.dump(), inputs);
  if (report.rmse_vs_truth >= 0.0)
    std::cout << "rmse vs truth: " << report.rmse_vs_truth << "\n";
  std::cout << "wrote " << a.out_dir << "/response_est.csv\n";
  return 0;
}

// --------------------------------------------------------------- tomography

struct TomographyArgs {
  std::string response_path, model_path, out_dir = ".";
  double anchor_fs = 10000.0;
  int samples = 1000;
  std::uint64_t seed = 1;
};

int run_tomography_cmd(const TomographyArgs& a) {
  const ModelFile mf = load_model_file(a.model_path);
  if (mf.model.n_sites() != 2)
    throw ConfigError("state tomography requires a two-site model");

  ResponseSurface resp;
  resp.values = load_complex_surface(a.response_path, &resp.freqs_cm1, &resp.taus_fs);

  const ExcitonBasis nominal = diagonalize(mf.model);
  const double e_beta = nominal.one_exciton_energies(0);
  const double e_alpha = nominal.one_exciton_energies(1);

  // ensemble-averaged measurement covector on the response's frequency grid
  EnsembleSpec ens;
  ens.n_samples = mf.model.disorder_sigma_cm1 > 0.0 ? a.samples : 1;
  ens.seed = a.seed;
  PumpProbeOperator averaged;
  averaged.grid_cm1 = resp.freqs_cm1;
  averaged.rows = CMat::Zero(resp.freqs_cm1.size(), 4);
  for (int i = 0; i < ens.n_samples; ++i) {
    const SiteModel member = sample_member(mf.model, ens, i);
    const ExcitonBasis basis = diagonalize(member);
    const RedfieldRates rates = redfield_rates(basis, mf.bath, mf.closure);
    averaged.rows +=
        dimer_projector_isotropic(member, basis, rates, resp.freqs_cm1).rows /
        static_cast<double>(ens.n_samples);
  }

  const TomographyPlan plan = build_plan(averaged, e_alpha, e_beta, a.anchor_fs);
  const TomographyResult result = run_tomography(plan, resp);

  ensure_dir(a.out_dir);
  save_bloch_trajectory(join(a.out_dir, "bloch_trajectory.csv"), result);
  save_tomography_report(join(a.out_dir, "tomography_report.json"), plan, result);

  json params = {{"response", a.response_path},
                 {"model", a.model_path},
                 {"anchor_fs", a.anchor_fs},
                 {"samples", ens.n_samples},
                 {"seed", a.seed}};
  save_manifest(join(a.out_dir, "manifest.json"), "tomography", params.dump(),
                {a.response_path, a.model_path});
  std::cout << "cond4 " << plan.cond4 << ", cond3 " << plan.cond3 << ", r0 "
            << (result.r0.size() ? result.r0[0] : 0.0) << "\n";
  std::cout << "wrote " << a.out_dir << "/bloch_trajectory.csv\n";
  return 0;
}

// -------------------------------------------------------------- feasibility

Scenario scenario_from_json(const json& j) {
  Scenario s;
  s.label = j.value("label", "");
  s.temperature_K = j.value("temperature_K", 300.0);
  const std::string sample = j.value("sample", "single");
  if (sample == "single")
    s.sample_type = SampleType::SingleComplex;
  else if (sample == "ensemble")
    s.sample_type = SampleType::DisorderEnsemble;
  else
    throw ConfigError("scenario sample must be single|ensemble");
  const std::string pol = j.value("polarizations", "iso");
  if (pol == "iso")
    s.polarizations = PolarizationSet::Isotropic;
  else if (pol == "all9")
    s.polarizations = PolarizationSet::AllNine;
  else
    throw ConfigError("scenario polarizations must be iso|all9");
  const std::string ch = j.value("channels", "both");
  if (ch == "both")
    s.channels = DetectionChannels::Both;
  else if (ch == "abs")
    s.channels = DetectionChannels::AbsorptiveOnly;
  else
    throw ConfigError("scenario channels must be both|abs");
  s.ensemble_samples = j.value("ensemble_samples", 1000);
  s.seed = j.value("seed", std::uint64_t{1});
  s.validate();
  return s;
}

std::vector<Scenario> default_scenarios() {
  // progressively constrained chain: cryogenic full set down to
  // room-temperature isotropic absorptive-only detection
  std::vector<Scenario> out(5);
  out[0] = {"single-77K-all9-both", 77.0, SampleType::SingleComplex,
            PolarizationSet::AllNine, DetectionChannels::Both, 1000, 1};
  out[1] = {"single-300K-all9-both", 300.0, SampleType::SingleComplex,
            PolarizationSet::AllNine, DetectionChannels::Both, 1000, 1};
  out[2] = {"single-300K-iso-both", 300.0, SampleType::SingleComplex,
            PolarizationSet::Isotropic, DetectionChannels::Both, 1000, 1};
  out[3] = {"ensemble-300K-iso-both", 300.0, SampleType::DisorderEnsemble,
            PolarizationSet::Isotropic, DetectionChannels::Both, 1000, 1};
  out[4] = {"ensemble-300K-iso-abs", 300.0, SampleType::DisorderEnsemble,
            PolarizationSet::Isotropic, DetectionChannels::AbsorptiveOnly, 1000, 1};
  return out;
}

struct FeasibilityArgs {
  std::string model_path, scenarios_path, out_dir = ".";
  int band_draws = 0;
  double band_site_sigma = 20.0;
  double band_coupling_rel = 0.1;
  std::uint64_t band_seed = 7;
};

int run_feasibility(const FeasibilityArgs& a) {
  const ModelFile mf = load_model_file(a.model_path);
  std::vector<Scenario> scenarios;
  std::vector<std::string> inputs{a.model_path};
  if (!a.scenarios_path.empty()) {
    std::ifstream in(a.scenarios_path);
    if (!in) throw ConfigError("cannot open " + a.scenarios_path);
    json j;
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw ConfigError(a.scenarios_path + ": " + e.what());
    }
    if (!j.is_array()) throw ConfigError(a.scenarios_path + ": expected an array");
    for (const auto& js : j) scenarios.push_back(scenario_from_json(js));
    inputs.push_back(a.scenarios_path);
  } else {
    scenarios = default_scenarios();
  }

  const RVec grid = default_feasibility_grid(mf.model, mf.bath, mf.closure);
  std::vector<PumpProbeMap> maps;
  std::vector<std::string> amp_labels;
  std::vector<RMat> amp_matrices;
  for (const auto& sc : scenarios) {
    maps.push_back(build_map(mf.model, mf.bath, sc, grid, mf.closure));
    const SingularSpectrum ss = singular_spectrum(maps.back());
    std::cout << sc.label << ": condition "
              << (ss.rank_deficient ? std::string("rank-deficient")
                                    : std::to_string(ss.condition))
              << "\n";
    std::vector<std::string> labels;
    const auto ops = scenario_operators(mf.model, mf.bath, sc, grid, mf.closure, &labels);
    for (std::size_t k = 0; k < ops.size(); ++k) {
      amp_labels.push_back(sc.label + ":" + labels[k]);
      amp_matrices.push_back(species_amplitude_matrix(ops[k], mf.model.n_sites()));
    }
  }

  ensure_dir(a.out_dir);
  save_singular_values(join(a.out_dir, "singular_values.csv"), maps);
  save_species_amplitudes(join(a.out_dir, "species_amplitudes.csv"), amp_labels,
                          amp_matrices);

  if (a.band_draws > 0) {
    UncertaintySpec unc;
    unc.site_sigma_cm1 = a.band_site_sigma;
    unc.coupling_relative_sigma = a.band_coupling_rel;
    const auto bands = uncertainty_bands(mf.model, mf.bath, scenarios.front(), unc,
                                         a.band_draws, a.band_seed, grid, mf.closure);
    save_species_bands(join(a.out_dir, "species_bands.csv"), grid, bands);
  }

  json params = {{"model", a.model_path},
                 {"scenarios", a.scenarios_path.empty() ? "built-in" : a.scenarios_path},
                 {"band_draws", a.band_draws},
                 {"band_site_sigma", a.band_site_sigma},
                 {"band_coupling_rel", a.band_coupling_rel}};
  save_manifest(join(a.out_dir, "manifest.json"), "feasibility", params.dump(), inputs);
  std::cout << "wrote " << a.out_dir << "/singular_values.csv\n";
  return 0;
}

// ----------------------------------------------------------- species-spectra

struct SpeciesArgs {
  std::string model_path, out_dir = ".";
  double temperature_K = 0.0;  // 0: keep the model file's bath temperature
};

int run_species(const SpeciesArgs& a) {
  const ModelFile mf = load_model_file(a.model_path);
  BathSpec bath = mf.bath;
  if (a.temperature_K > 0.0) bath.temperature_K = a.temperature_K;
  const RVec grid = default_feasibility_grid(mf.model, bath, mf.closure);

  const ExcitonBasis basis = diagonalize(mf.model);
  const RedfieldRates rates = redfield_rates(basis, bath, mf.closure);
  const PumpProbeOperator iso = magic_angle_average(basis, rates, grid);
  const LiouvilleBasis lb(mf.model.n_sites());
  std::vector<std::string> labels(lb.dim());
  for (int k = 0; k < lb.dim(); ++k) labels[k] = lb.element(k).label;
  const auto spectra = species_spectra(iso, labels);

  ensure_dir(a.out_dir);
  save_species_spectra(join(a.out_dir, "species_spectra.csv"), grid, spectra);
  json params = {{"model", a.model_path}, {"temperature_K", bath.temperature_K}};
  save_manifest(join(a.out_dir, "manifest.json"), "species-spectra", params.dump(),
                {a.model_path});
  std::cout << "wrote " << a.out_dir << "/species_spectra.csv\n";
  return 0;
}

// ---------------------------------------------------------------- reproduce

struct ReproduceArgs {
  std::string preset, model_path, out_dir = ".";
  int instances = 10;
  int samples = 2000;
  int gh_nodes = 12;
};

// deterministic Gauss-Hermite ensemble over site-energy disorder; quadratures
// make the small reproduction runs noise-free in the ensemble dimension
struct GhMember {
  double weight;
  SiteModel model;
};

void gauss_hermite(int nodes, RVec& x, RVec& w) {
  RMat t = RMat::Zero(nodes, nodes);
  for (int i = 0; i + 1 < nodes; ++i)
    t(i, i + 1) = t(i + 1, i) = std::sqrt(static_cast<double>(i + 1));
  Eigen::SelfAdjointEigenSolver<RMat> es(t);
  x = es.eigenvalues();
  w = es.eigenvectors().row(0).transpose().array().square();
  w /= w.sum();
}

std::vector<GhMember> gh_ensemble(const SiteModel& model, double sigma, int nodes) {
  std::vector<GhMember> out;
  if (sigma == 0.0) {
    out.push_back({1.0, model});
    return out;
  }
  RVec x, w;
  gauss_hermite(nodes, x, w);
  double total = 0.0;
  for (int i = 0; i < nodes; ++i)
    for (int j = 0; j < nodes; ++j) {
      SiteModel m = model;
      m.energies_cm1(0) += sigma * x(i);
      m.energies_cm1(1) += sigma * x(j);
      m.disorder_sigma_cm1 = 0.0;
      out.push_back({w(i) * w(j), m});
      total += w(i) * w(j);
    }
  for (auto& g : out) g.weight /= total;
  return out;
}

struct TruthSet {
  CMat truth;   // R(w, tau) on the extended grid
  CMat p3;      // kernel-convolved polarization on (w, delay)
};

TruthSet build_truth(const ModelFile& mf, const Pulse& pump, const Pulse& probe,
                     const ExperimentGrid& grid, const RVec& tau, int gh_nodes) {
  const auto ens = gh_ensemble(mf.model, mf.model.disorder_sigma_cm1, gh_nodes);
  const int n_w = static_cast<int>(grid.probe_freqs_cm1.size());
  const int n_tau = static_cast<int>(tau.size());
  CMat truth = CMat::Zero(n_w, n_tau);
  const Eigen::Matrix3d axes = Eigen::Matrix3d::Identity();
  for (const auto& g : ens) {
    const ExcitonBasis basis = diagonalize(g.model);
    const RedfieldRates rates = redfield_rates(basis, mf.bath, mf.closure);
    RMat rbar = RMat::Zero(n_tau, 4);
    for (int k = 0; k < 3; ++k)
      rbar += pump_second_order(basis, rates, pump, axes.col(k), tau).bloch / 3.0;
    const PumpProbeOperator iso =
        dimer_projector_isotropic(g.model, basis, rates, grid.probe_freqs_cm1);
    truth += g.weight * (iso.rows * rbar.transpose().cast<cdouble>());
  }
  const auto kernels = probe_kernels(grid.probe_freqs_cm1, grid.delays_fs, tau, probe,
                                     grid.rotating_frame_cm1);
  CMat p3(n_w, grid.delays_fs.size());
  for (int iw = 0; iw < n_w; ++iw)
    p3.row(iw) = (kernels[iw] * truth.row(iw).transpose()).transpose();
  return {std::move(truth), std::move(p3)};
}

int run_reproduce(const ReproduceArgs& a) {
  const ModelFile mf = load_model_file(a.model_path);
  ensure_dir(a.out_dir);

  Pulse pulse;
  pulse.fwhm_fs = 40.0;
  pulse.center_cm1 = 12800.0;
  const ExperimentGrid grid = default_experiment_grid(pulse.center_cm1);

  json params = {{"preset", a.preset},
                 {"model", a.model_path},
                 {"instances", a.instances},
                 {"samples", a.samples},
                 {"gh_nodes", a.gh_nodes}};
  save_manifest(join(a.out_dir, "manifest.json"), "reproduce", params.dump(),
                {a.model_path});

  if (a.preset == "fig3") {
    const std::vector<double> widths{40.0, 80.0, 120.0};
    const auto points =
        disorder_sweep(mf.model, mf.bath, pulse, widths, a.samples, 1, mf.closure);
    std::ofstream out(join(a.out_dir, "disorder_sweep.csv"), std::ios::binary);
    out << "# pptomo csv v1 | tomography fidelity vs disorder width\n"
        << "sigma_cm1,worst_fidelity,avg_fidelity,cond4,cond3\n";
    for (const auto& p : points) {
      char line[200];
      std::snprintf(line, sizeof(line), "%.17g,%.17g,%.17g,%.17g,%.17g\n", p.sigma_cm1,
                    p.worst_fidelity, p.avg_fidelity, p.cond4, p.cond3);
      out << line;
      std::printf("sigma %5.1f: worst %.6f avg %.6f cond4 %.1f cond3 %.3f\n", p.sigma_cm1,
                  p.worst_fidelity, p.avg_fidelity, p.cond4, p.cond3);
    }
    return 0;
  }

  TwoStageInverter inv(grid.probe_freqs_cm1, grid.delays_fs, pulse,
                       grid.rotating_frame_cm1);
  const TruthSet ts = build_truth(mf, pulse, pulse, grid, inv.tau_grid_fs(), a.gh_nodes);
  const int n_t = static_cast<int>(grid.delays_fs.size());
  const CMat truth_data = ts.truth.middleCols(inv.data_begin(), n_t);
  const RVec e_lo = inv.lo_spectrum();

  auto data_rmse = [&](const CMat& est_full) {
    return rmse_window(CMat(est_full.middleCols(inv.data_begin(), n_t)), truth_data, 0, n_t);
  };

  if (a.preset == "noise0") {
    const RMat s_abs = heterodyne(ts.p3, pulse, grid.probe_freqs_cm1, 0.0);
    const RMat s_disp = heterodyne(ts.p3, pulse, grid.probe_freqs_cm1, k_pi / 2.0);
    CMat bc(s_abs.rows(), s_abs.cols());
    bc.real() = s_disp;
    bc.imag() = s_abs;
    const CMat p3_nn = inv.stage1_naive(bc);
    SelectorConfig gcv;
    const CMat p3_tn = inv.stage1_tikhonov(bc, gcv);
    const CMat r_nn = inv.stage2_naive(p3_nn);
    const CMat r_tt = inv.stage2_run(p3_tn, gcv);
    const double e_nn = rmse_window(r_nn, truth_data, 0, n_t);
    const double e_tt = data_rmse(r_tt);
    // stage-1 choice sensitivity in the noise-free limit
    const CMat d1 = p3_tn.array().colwise() / e_lo.array().cast<cdouble>();
    const CMat d0 = p3_nn.array().colwise() / e_lo.array().cast<cdouble>();
    const double d_st1 = std::sqrt((d1 - d0).squaredNorm() / d0.squaredNorm());
    std::printf("noise-free ratio naive/tikhonov: %.3f\n", e_nn / e_tt);
    std::printf("stage-1 choice relative difference: %.3e\n", d_st1);
    return 0;
  }

  if (a.preset == "table1") {
    Rng rng(7);
    SelectorConfig gcv;
    RVec r_tt(a.instances), r_nt(a.instances), r_tn(a.instances);
    for (int it = 0; it < a.instances; ++it) {
      RMat s_abs = heterodyne(ts.p3, pulse, grid.probe_freqs_cm1, 0.0);
      RMat s_disp = heterodyne(ts.p3, pulse, grid.probe_freqs_cm1, k_pi / 2.0);
      add_noise_real(s_abs, 1e-2, rng);
      add_noise_real(s_disp, 1e-2, rng);
      CMat bc(s_abs.rows(), s_abs.cols());
      bc.real() = s_disp;
      bc.imag() = s_abs;
      const CMat p3_nn = inv.stage1_naive(bc);
      const CMat p3_tn = inv.stage1_tikhonov(bc, gcv);
      const double e_nn = rmse_window(inv.stage2_naive(p3_nn), truth_data, 0, n_t);
      const double e_tt = data_rmse(inv.stage2_run(p3_tn, gcv));
      const double e_nt = data_rmse(inv.stage2_run(p3_nn, gcv));
      const double e_tn = rmse_window(inv.stage2_naive(p3_tn), truth_data, 0, n_t);
      r_tt(it) = e_nn / e_tt;
      r_nt(it) = e_nn / e_nt;
      r_tn(it) = e_nn / e_tn;
    }
    std::printf("both stages:   %.3f +- %.3f\n", r_tt.mean(),
                std::sqrt((r_tt.array() - r_tt.mean()).square().mean()));
    std::printf("stage-2 only:  %.3f +- %.3f\n", r_nt.mean(),
                std::sqrt((r_nt.array() - r_nt.mean()).square().mean()));
    std::printf("stage-1 only:  %.3f +- %.3f\n", r_tn.mean(),
                std::sqrt((r_tn.array() - r_tn.mean()).square().mean()));
    return 0;
  }

  if (a.preset == "selectors") {
    for (const double noise : {1e-2, 1e-3}) {
      Rng rng(11);
      TwoStageInverter inv_i(grid.probe_freqs_cm1, grid.delays_fs, pulse,
                             grid.rotating_frame_cm1, Penalty::Identity);
      TwoStageInverter inv_d1(grid.probe_freqs_cm1, grid.delays_fs, pulse,
                              grid.rotating_frame_cm1, Penalty::FirstDifference);
      RVec imp_i(a.instances), imp_d1(a.instances), imp_d2(a.instances),
          imp_gcv(a.instances), imp_ncp(a.instances);
      for (int it = 0; it < a.instances; ++it) {
        CMat p3n = ts.p3;
        add_noise_complex(p3n, noise, rng);
        const double e_naive = rmse_window(inv.stage2_naive(p3n), truth_data, 0, n_t);
        SelectorConfig orc;
        orc.method = SelectorConfig::Method::ExactOracle;
        SelectorConfig gcv;
        SelectorConfig ncp;
        ncp.method = SelectorConfig::Method::Ncp;
        imp_i(it) = e_naive / rmse_window(
            CMat(inv_i.stage2_run(p3n, orc, &ts.truth).middleCols(inv.data_begin(), n_t)),
            truth_data, 0, n_t);
        imp_d1(it) = e_naive / rmse_window(
            CMat(inv_d1.stage2_run(p3n, orc, &ts.truth).middleCols(inv.data_begin(), n_t)),
            truth_data, 0, n_t);
        imp_d2(it) = e_naive / data_rmse(inv.stage2_run(p3n, orc, &ts.truth));
        imp_gcv(it) = e_naive / data_rmse(inv.stage2_run(p3n, gcv));
        imp_ncp(it) = e_naive / data_rmse(inv.stage2_run(p3n, ncp));
      }
      std::printf("noise %.0e: oracle I %.2f, D1 %.2f, D2 %.2f; gcv %.2f, ncp %.2f\n",
                  noise, imp_i.mean(), imp_d1.mean(), imp_d2.mean(), imp_gcv.mean(),
                  imp_ncp.mean());
    }
    return 0;
  }

  throw ConfigError("unknown preset '" + a.preset + "' (table1|noise0|selectors|fig3)");
}

// ----------------------------------------------------------------- validate

struct ValidateArgs {
  std::string model_path;
  double probe_fwhm = 40.0, probe_center = 12800.0;
  double w_min = 12500.0, w_max = 13100.0;
  int n_w = 181;
  double t_min = 50.0, t_max = 1000.0;
  int n_t = 140;
};

int run_validate(const ValidateArgs& a) {
  int warnings = 0;
  const ModelFile mf = load_model_file(a.model_path);
  std::cout << "model: " << mf.model.n_sites() << " sites, disorder sigma "
            << mf.model.disorder_sigma_cm1 << " cm^-1\n";
  mf.bath.validate();  // negative temperature is a hard error

  Pulse probe;
  probe.fwhm_fs = a.probe_fwhm;
  probe.center_cm1 = a.probe_center;
  probe.validate();

  ExperimentGrid grid;
  grid.probe_freqs_cm1 = linspace(a.w_min, a.w_max, a.n_w);
  grid.delays_fs = linspace(a.t_min, a.t_max, a.n_t);
  grid.rotating_frame_cm1 = a.probe_center;
  grid.validate();

  const double dt = grid.delays_fs(1) - grid.delays_fs(0);
  const double det_max =
      std::max(std::abs(a.w_max - a.probe_center), std::abs(a.w_min - a.probe_center)) *
      k_cm1_to_radfs;
  if (det_max * dt >= k_pi) {
    std::cout << "warning: delay step " << dt
              << " fs undersamples the kernel oscillation at the band edge ("
              << k_pi / det_max << " fs needed)\n";
    ++warnings;
  } else {
    std::cout << "kernel sampling: ok (" << det_max * dt / k_pi << " of Nyquist)\n";
  }

  if (probe.support_fs() > a.t_min) {
    std::cout << "warning: probe support " << probe.support_fs()
              << " fs reaches past the first delay " << a.t_min
              << " fs; pump-probe overlap contributions are not modeled\n";
    ++warnings;
  } else {
    std::cout << "pulse overlap: ok\n";
  }

  const ExcitonBasis basis = diagonalize(mf.model);
  const double lo_edge = std::min(probe.spectrum(a.w_min), probe.spectrum(a.w_max));
  const double lo_peak = probe.spectrum(a.probe_center);
  std::cout << "local-oscillator support at band edge: " << lo_edge / lo_peak
            << " of peak\n";
  if (lo_edge / lo_peak < 1e-4) {
    std::cout << "warning: probe spectrum nearly vanishes inside the band; stage 1 "
                 "will mask edge frequencies\n";
    ++warnings;
  }
  std::cout << "exciton band: [" << basis.one_exciton_energies.minCoeff() << ", "
            << basis.one_exciton_energies.maxCoeff() << "] cm^-1, grid [" << a.w_min
            << ", " << a.w_max << "]\n";

  const int n_ext = static_cast<int>(std::ceil(probe.support_fs() / dt));
  std::cout << "stage-2 system per frequency: " << a.n_t << " x " << (a.n_t + 2 * n_ext)
            << " (" << n_ext << " extension columns per side)\n";

  SelectorConfig sel;
  if (!(sel.lambda_floor > 0.0) || !(sel.lambda_max > sel.lambda_floor))
    throw ConfigError("selector bounds are inconsistent");
  std::cout << "selector bounds: [" << sel.lambda_floor << ", " << sel.lambda_max
            << "]\n";

  std::cout << (warnings ? "diagnostics finished with warnings\n"
                         : "all diagnostics passed\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pump-probe spectroscopy: simulation, two-stage deconvolution, "
               "state tomography and feasibility maps"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "forward model: ensemble response, "
                                               "polarization and heterodyne surfaces");
  c_sim->add_option("--model", sim.model_path, "model JSON file")->required();
  c_sim->add_option("--out", sim.out_dir, "output directory");
  c_sim->add_option("--samples", sim.samples, "disorder ensemble size");
  c_sim->add_option("--seed", sim.seed, "ensemble seed");
  c_sim->add_option("--noise", sim.noise, "relative detection noise");
  c_sim->add_option("--noise-seed", sim.noise_seed, "noise seed");
  c_sim->add_option("--pump-fwhm", sim.pump_fwhm, "pump field-envelope FWHM, fs");
  c_sim->add_option("--pump-center", sim.pump_center, "pump carrier, cm^-1");
  c_sim->add_option("--probe-fwhm", sim.probe_fwhm, "probe field-envelope FWHM, fs");
  c_sim->add_option("--probe-center", sim.probe_center, "probe carrier, cm^-1");
  c_sim->add_option("--wmin", sim.w_min, "lowest probe frequency, cm^-1");
  c_sim->add_option("--wmax", sim.w_max, "highest probe frequency, cm^-1");
  c_sim->add_option("--nw", sim.n_w, "probe frequency count");
  c_sim->add_option("--tmin", sim.t_min, "first delay, fs");
  c_sim->add_option("--tmax", sim.t_max, "last delay, fs");
  c_sim->add_option("--nt", sim.n_t, "delay count");

  InvertArgs invc;
  auto* c_inv = app.add_subcommand("invert-response",
                                   "two-stage inversion of measured surfaces");
  c_inv->add_option("--p3", invc.p3_path, "polarization surface CSV (skips stage 1)");
  c_inv->add_option("--s-abs", invc.s_abs_path, "absorptive heterodyne CSV");
  c_inv->add_option("--s-disp", invc.s_disp_path, "dispersive heterodyne CSV");
  c_inv->add_option("--probe", invc.probe_path, "probe characterization JSON")->required();
  c_inv->add_option("--truth", invc.truth_path, "true response CSV (oracle/scoring)");
  c_inv->add_option("--out", invc.out_dir, "output directory");
  c_inv->add_option("--stage1", invc.stage1, "naive|tikhonov");
  c_inv->add_option("--stage2", invc.stage2, "naive|tikhonov");
  c_inv->add_option("--penalty", invc.penalty, "i|d1|d2");
  c_inv->add_option("--selector", invc.selector, "gcv|ncp|fixed|oracle");
  c_inv->add_option("--lambda", invc.fixed_lambda, "weight for --selector fixed");
  c_inv->add_option("--lambda-floor", invc.lambda_floor, "smallest admissible weight");

  TomographyArgs tomo;
  auto* c_tomo = app.add_subcommand("tomography",
                                    "reconstruct the Bloch trajectory from a response");
  c_tomo->add_option("--response", tomo.response_path, "response surface CSV")->required();
  c_tomo->add_option("--model", tomo.model_path, "model JSON file")->required();
  c_tomo->add_option("--out", tomo.out_dir, "output directory");
  c_tomo->add_option("--anchor", tomo.anchor_fs, "normalization delay, fs");
  c_tomo->add_option("--samples", tomo.samples, "ensemble size for the averaged map");
  c_tomo->add_option("--seed", tomo.seed, "ensemble seed");

  FeasibilityArgs feas;
  auto* c_feas = app.add_subcommand("feasibility",
                                    "singular spectra of scenario measurement maps");
  c_feas->add_option("--model", feas.model_path, "model JSON file")->required();
  c_feas->add_option("--scenarios", feas.scenarios_path,
                     "scenario list JSON (default: built-in chain)");
  c_feas->add_option("--out", feas.out_dir, "output directory");
  c_feas->add_option("--bands", feas.band_draws,
                     "uncertainty-band draws (0 skips species_bands.csv)");
  c_feas->add_option("--band-site-sigma", feas.band_site_sigma,
                     "site-energy uncertainty, cm^-1");
  c_feas->add_option("--band-coupling-rel", feas.band_coupling_rel,
                     "relative coupling uncertainty");
  c_feas->add_option("--band-seed", feas.band_seed, "uncertainty draw seed");

  SpeciesArgs spec;
  auto* c_spec = app.add_subcommand("species-spectra",
                                    "per-component spectra of the isotropic covector");
  c_spec->add_option("--model", spec.model_path, "model JSON file")->required();
  c_spec->add_option("--out", spec.out_dir, "output directory");
  c_spec->add_option("--temperature", spec.temperature_K, "override bath temperature, K");

  ReproduceArgs rep;
  auto* c_rep = app.add_subcommand("reproduce", "reduced-size published-figure runs");
  c_rep->add_option("preset", rep.preset, "table1|noise0|selectors|fig3")->required();
  c_rep->add_option("--model", rep.model_path, "model JSON file")->required();
  c_rep->add_option("--out", rep.out_dir, "output directory");
  c_rep->add_option("--instances", rep.instances, "noise instances");
  c_rep->add_option("--samples", rep.samples, "ensemble size (fig3)");
  c_rep->add_option("--gh-nodes", rep.gh_nodes, "quadrature nodes per site");

  ValidateArgs val;
  auto* c_val = app.add_subcommand("validate", "dry-run configuration diagnostics");
  c_val->add_option("--model", val.model_path, "model JSON file")->required();
  c_val->add_option("--probe-fwhm", val.probe_fwhm, "probe field-envelope FWHM, fs");
  c_val->add_option("--probe-center", val.probe_center, "probe carrier, cm^-1");
  c_val->add_option("--wmin", val.w_min, "lowest probe frequency, cm^-1");
  c_val->add_option("--wmax", val.w_max, "highest probe frequency, cm^-1");
  c_val->add_option("--nw", val.n_w, "probe frequency count");
  c_val->add_option("--tmin", val.t_min, "first delay, fs");
  c_val->add_option("--tmax", val.t_max, "last delay, fs");
  c_val->add_option("--nt", val.n_t, "delay count");

  try {
    app.parse(argc, argv);
    if (*c_sim) return run_simulate(sim);
    if (*c_inv) return run_invert(invc);
    if (*c_tomo) return run_tomography_cmd(tomo);
    if (*c_feas) return run_feasibility(feas);
    if (*c_spec) return run_species(spec);
    if (*c_rep) return run_reproduce(rep);
    if (*c_val) return run_validate(val);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return 3;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

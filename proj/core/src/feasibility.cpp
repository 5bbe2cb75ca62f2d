#include "pptomo/feasibility.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pptomo/units.hpp"

namespace pptomo {

void Scenario::validate() const {
  if (temperature_K <= 0.0) throw ConfigError("scenario: temperature must be positive");
  if (sample_type == SampleType::DisorderEnsemble && ensemble_samples < 1)
    throw ConfigError("scenario: ensemble needs at least one draw");
}

RVec default_feasibility_grid(const SiteModel& model, const BathSpec& bath,
                              const DephasingClosure& closure) {
  const ExcitonBasis basis = diagonalize(model);
  const RedfieldRates rates = redfield_rates(basis, bath, closure);
  double width = 0.0;
  for (int a = 0; a < basis.n_one(); ++a)
    width = std::max(width, rates.gamma_g1(a).real() / k_cm1_to_radfs);
  const double lo = basis.one_exciton_energies.minCoeff() - 5.0 * width;
  const double hi = basis.one_exciton_energies.maxCoeff() + 5.0 * width;
  const int n = std::max(2, static_cast<int>(std::ceil((hi - lo) / (width / 4.0))) + 1);
  return linspace(lo, hi, n);
}

std::vector<PumpProbeOperator> scenario_operators(
    const SiteModel& model, const BathSpec& bath, const Scenario& scenario,
    const RVec& grid_cm1, const DephasingClosure& closure,
    std::vector<std::string>* labels) {
  scenario.validate();
  model.validate();
  BathSpec local = bath;
  local.temperature_K = scenario.temperature_K;

  const Eigen::Matrix3d axes = Eigen::Matrix3d::Identity();
  const char* axis_name = "xyz";
  const int n_cfg = scenario.polarizations == PolarizationSet::Isotropic ? 1 : 9;

  std::vector<SiteModel> members;
  if (scenario.sample_type == SampleType::SingleComplex) {
    members.push_back(model);
  } else {
    EnsembleSpec spec;
    spec.n_samples = scenario.ensemble_samples;
    spec.seed = scenario.seed;
    members = sample_ensemble(model, spec);
  }
  const double wgt = 1.0 / members.size();

  std::vector<PumpProbeOperator> ops(n_cfg);
  for (int c = 0; c < n_cfg; ++c) {
    ops[c].grid_cm1 = grid_cm1;
    ops[c].rows = CMat::Zero(grid_cm1.size(), model.n_sites() * model.n_sites());
  }

  for (const SiteModel& member : members) {
    const ExcitonBasis basis = diagonalize(member);
    const RedfieldRates rates = redfield_rates(basis, local, closure);
    if (scenario.polarizations == PolarizationSet::Isotropic) {
      ops[0].rows += wgt * magic_angle_average(basis, rates, grid_cm1).rows;
    } else {
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
          ops[3 * i + j].rows +=
              wgt * build_operator(basis, rates, grid_cm1, axes.col(i), axes.col(j)).rows;
    }
  }

  if (labels) {
    labels->clear();
    if (scenario.polarizations == PolarizationSet::Isotropic) {
      labels->push_back("iso");
    } else {
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
          labels->push_back(std::string(1, axis_name[i]) + axis_name[j]);
    }
  }
  return ops;
}

PumpProbeMap build_map(const SiteModel& model, const BathSpec& bath,
                       const Scenario& scenario, const RVec& grid_cm1,
                       const DephasingClosure& closure) {
  const std::vector<PumpProbeOperator> ops =
      scenario_operators(model, bath, scenario, grid_cm1, closure);

  const int n2 = model.n_sites() * model.n_sites();
  const int n_grid = static_cast<int>(grid_cm1.size());
  const int per_cfg = scenario.channels == DetectionChannels::Both ? 2 : 1;

  PumpProbeMap map;
  map.label = scenario.label;
  map.grid_cm1 = grid_cm1;
  map.n_components = n2;
  map.matrix.resize(static_cast<int>(ops.size()) * per_cfg * n_grid, n2);
  int row = 0;
  for (const PumpProbeOperator& op : ops) {
    if (scenario.channels == DetectionChannels::Both) {
      map.matrix.middleRows(row, n_grid) = op.rows.real();
      row += n_grid;
    }
    map.matrix.middleRows(row, n_grid) = op.rows.imag();
    row += n_grid;
  }

  Eigen::BDCSVD<RMat> svd(map.matrix);
  map.singular_values = svd.singularValues();
  return map;
}

SingularSpectrum singular_spectrum(const PumpProbeMap& map) {
  SingularSpectrum spec;
  const RVec& s = map.singular_values;
  if (s.size() == 0) throw ConfigError("singular spectrum: empty map");
  spec.normalized = s / s(0);
  const int n2 = map.n_components;
  const double smallest = s.size() >= n2 ? s(n2 - 1) : 0.0;
  if (smallest > 0.0) {
    spec.condition = s(0) / smallest;
  } else {
    spec.condition = std::numeric_limits<double>::infinity();
    spec.rank_deficient = true;
  }
  return spec;
}

RMat species_amplitude_matrix(const PumpProbeOperator& op_liouville, int n_levels) {
  const LiouvilleBasis basis(n_levels);
  if (op_liouville.rows.cols() != basis.dim())
    throw ConfigError("species amplitudes: component count mismatch");

  // column index per basis element, looked up by kind
  Eigen::MatrixXi pop = Eigen::MatrixXi::Constant(n_levels, n_levels, -1);
  Eigen::MatrixXi cx = pop, cy = pop;
  for (int k = 0; k < basis.dim(); ++k) {
    const auto& e = basis.element(k);
    switch (e.kind) {
      case LiouvilleBasis::Kind::Population: pop(e.a, e.a) = k; break;
      case LiouvilleBasis::Kind::CoherenceX: cx(e.a, e.b) = k; break;
      case LiouvilleBasis::Kind::CoherenceY: cy(e.a, e.b) = k; break;
    }
  }

  RMat out = RMat::Zero(n_levels, n_levels);
  for (int a = 0; a < n_levels; ++a)
    out(a, a) = op_liouville.rows.col(pop(a, a)).real().cwiseAbs().maxCoeff();
  for (int a = 0; a < n_levels; ++a) {
    for (int b = a + 1; b < n_levels; ++b) {
      // spectrum per unit rho_ab, holding rho_ba at its hermitian image
      const CVec species =
          0.5 * (op_liouville.rows.col(cx(a, b)) -
                 cdouble(0.0, 1.0) * op_liouville.rows.col(cy(a, b)));
      out(a, b) = species.real().cwiseAbs().maxCoeff();
      out(b, a) = species.imag().cwiseAbs().maxCoeff();
    }
  }
  return out;
}

namespace {

double percentile(std::vector<double>& values, double q) {
  std::sort(values.begin(), values.end());
  const double pos = q * (values.size() - 1);
  const int lo = static_cast<int>(std::floor(pos));
  const int hi = static_cast<int>(std::ceil(pos));
  const double frac = pos - lo;
  return values[lo] * (1.0 - frac) + values[hi] * frac;
}

}  // namespace

std::vector<SpeciesBand> uncertainty_bands(const SiteModel& model, const BathSpec& bath,
                                           const Scenario& scenario,
                                           const UncertaintySpec& uncertainty,
                                           int n_draws, std::uint64_t seed,
                                           const RVec& grid_cm1,
                                           const DephasingClosure& closure) {
  if (n_draws < 1) throw ConfigError("uncertainty bands: need at least one draw");
  const int n2 = model.n_sites() * model.n_sites();
  const int n_grid = static_cast<int>(grid_cm1.size());

  Scenario iso = scenario;
  iso.polarizations = PolarizationSet::Isotropic;

  // draw k shifts the nominal Hamiltonian; the scenario's own disorder
  // averaging (if any) is applied around each shifted nominal
  EnsembleSpec draws;
  draws.n_samples = n_draws;
  draws.seed = seed;
  draws.uncertainty = uncertainty;

  std::vector<CMat> samples;  // per draw: n_grid x n2
  samples.reserve(n_draws);
  for (int k = 0; k < n_draws; ++k) {
    SiteModel base = model;
    const double sigma_keep = base.disorder_sigma_cm1;
    base.disorder_sigma_cm1 = 0.0;  // the draw stream samples uncertainty only
    SiteModel shifted = sample_member(base, draws, k);
    shifted.disorder_sigma_cm1 = sigma_keep;
    iso.seed = scenario.seed + 1 + k;  // decorrelate the inner disorder draws
    samples.push_back(
        scenario_operators(shifted, bath, iso, grid_cm1, closure)[0].rows);
  }

  const CMat nominal =
      scenario_operators(model, bath, iso, grid_cm1, closure)[0].rows;

  const LiouvilleBasis basis(model.n_sites());
  std::vector<SpeciesBand> bands(n2);
  std::vector<double> buf(n_draws);
  for (int c = 0; c < n2; ++c) {
    SpeciesBand& band = bands[c];
    band.label = basis.element(c).label;
    band.nominal_re = nominal.col(c).real();
    band.nominal_im = nominal.col(c).imag();
    band.re_lo.resize(n_grid); band.re_hi.resize(n_grid);
    band.im_lo.resize(n_grid); band.im_hi.resize(n_grid);
    for (int g = 0; g < n_grid; ++g) {
      for (int k = 0; k < n_draws; ++k) buf[k] = samples[k](g, c).real();
      band.re_lo(g) = percentile(buf, 0.025);
      band.re_hi(g) = percentile(buf, 0.975);
      for (int k = 0; k < n_draws; ++k) buf[k] = samples[k](g, c).imag();
      band.im_lo(g) = percentile(buf, 0.025);
      band.im_hi(g) = percentile(buf, 0.975);
    }
  }
  return bands;
}

}  // namespace pptomo

#include "pptomo/tomography.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace pptomo {

namespace {

int nearest_row(const RVec& grid, double freq, const char* what) {
  int best = 0;
  double dist = std::abs(grid(0) - freq);
  for (int i = 1; i < grid.size(); ++i) {
    const double d = std::abs(grid(i) - freq);
    if (d < dist) {
      dist = d;
      best = i;
    }
  }
  double step = grid.size() > 1 ? (grid(grid.size() - 1) - grid(0)) / (grid.size() - 1)
                                : 0.0;
  if (grid.size() > 1 && dist > 0.5 * step + 1e-9)
    throw ConfigError(std::string(what) + ": sample frequency outside the grid");
  return best;
}

Eigen::Vector4d stack_channels(cdouble resp_alpha, cdouble resp_beta) {
  return {resp_alpha.imag(), resp_beta.imag(), resp_alpha.real(), resp_beta.real()};
}

}  // namespace

TomographyPlan build_plan(const PumpProbeOperator& bloch_projector,
                          double e_alpha_cm1, double e_beta_cm1,
                          double normalization_delay_fs) {
  if (bloch_projector.rows.cols() != 4)
    throw ConfigError("tomography plan: covector must have Bloch components");
  const int ia = nearest_row(bloch_projector.grid_cm1, e_alpha_cm1, "tomography plan");
  const int ib = nearest_row(bloch_projector.grid_cm1, e_beta_cm1, "tomography plan");
  if (ia == ib) throw ConfigError("tomography plan: sample frequencies coincide");

  TomographyPlan plan;
  plan.freq_alpha_cm1 = bloch_projector.grid_cm1(ia);
  plan.freq_beta_cm1 = bloch_projector.grid_cm1(ib);
  plan.normalization_delay_fs = normalization_delay_fs;

  const Eigen::RowVector4cd pa = bloch_projector.rows.row(ia);
  const Eigen::RowVector4cd pb = bloch_projector.rows.row(ib);
  plan.m4.row(0) = pa.imag();
  plan.m4.row(1) = pb.imag();
  plan.m4.row(2) = pa.real();
  plan.m4.row(3) = pb.real();
  plan.m3 = plan.m4.rightCols<3>();

  Eigen::JacobiSVD<Eigen::Matrix4d> s4(plan.m4);
  Eigen::JacobiSVD<Eigen::Matrix<double, 4, 3>> s3(plan.m3);
  plan.cond4 = s4.singularValues()(0) / s4.singularValues()(3);
  plan.cond3 = s3.singularValues()(0) / s3.singularValues()(2);

  const double scale = s4.singularValues()(0);
  if (!(s3.singularValues()(2) > scale * 1e-12)) {
    const double coh = plan.m4.col(1).norm() + plan.m4.col(2).norm();
    if (coh <= scale * 1e-10)
      throw InfeasibleError(
          "tomography plan: coherence components invisible at the sample "
          "frequencies (degenerate transition moments, homodimer-type case)");
    if (plan.m4.col(3).norm() <= scale * 1e-10)
      throw InfeasibleError(
          "tomography plan: population-difference component invisible at the "
          "sample frequencies");
    throw InfeasibleError("tomography plan: 3-parameter system is singular");
  }
  return plan;
}

NormalizationFit fix_normalization(cdouble resp_alpha, cdouble resp_beta,
                                   const TomographyPlan& plan) {
  Eigen::Matrix<double, 4, 2> m2;
  m2.col(0) = plan.m4.col(0);
  m2.col(1) = plan.m4.col(3);
  Eigen::JacobiSVD<Eigen::Matrix<double, 4, 2>> svd(
      m2, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (!(svd.singularValues()(1) > svd.singularValues()(0) * 1e-12))
    throw InfeasibleError("normalization: reduced (r0, r3) system is singular");

  const Eigen::Vector4d b = stack_channels(resp_alpha, resp_beta);
  const Eigen::Vector2d x = svd.solve(b);
  NormalizationFit fit;
  fit.r0 = x(0);
  fit.r3 = x(1);
  fit.no_excitation = (b.norm() == 0.0 || fit.r0 == 0.0);
  return fit;
}

BlochState invert_state(cdouble resp_alpha, cdouble resp_beta,
                        const TomographyPlan& plan, double r0) {
  const Eigen::Vector4d b =
      stack_channels(resp_alpha, resp_beta) - plan.m4.col(0) * r0;
  Eigen::JacobiSVD<Eigen::Matrix<double, 4, 3>> svd(
      plan.m3, Eigen::ComputeThinU | Eigen::ComputeThinV);
  BlochState state;
  state.r0 = r0;
  state.r = svd.solve(b);
  state.violation = state.r.squaredNorm() > r0 * r0 * (1.0 + 1e-6);
  return state;
}

double fidelity(const BlochState& a, const BlochState& b) {
  if (!(a.r0 > 0.0) || !(b.r0 > 0.0))
    throw ConfigError("fidelity: normalizations must be positive");
  const Eigen::Vector3d na = a.r / a.r0;
  const Eigen::Vector3d nb = b.r / b.r0;
  const double la = std::max(1.0 - na.squaredNorm(), 0.0);
  const double lb = std::max(1.0 - nb.squaredNorm(), 0.0);
  const double f = 0.5 * (1.0 + na.dot(nb) + std::sqrt(la) * std::sqrt(lb));
  return std::clamp(f, 0.0, 1.0);
}

TomographyResult run_tomography(const TomographyPlan& plan,
                                const ResponseSurface& response,
                                const RMat* truth_bloch) {
  const int ia = nearest_row(response.freqs_cm1, plan.freq_alpha_cm1, "tomography");
  const int ib = nearest_row(response.freqs_cm1, plan.freq_beta_cm1, "tomography");
  const int n = static_cast<int>(response.taus_fs.size());
  if (truth_bloch && (truth_bloch->rows() != n || truth_bloch->cols() != 4))
    throw ConfigError("tomography: truth must hold one Bloch row per delay");

  TomographyResult res;
  res.taus_fs = response.taus_fs;
  res.cond4 = plan.cond4;
  res.cond3 = plan.cond3;

  int anchor = n - 1;
  if (response.taus_fs(n - 1) + 1e-9 < plan.normalization_delay_fs) {
    res.anchor_clamped = true;
  } else {
    anchor = nearest_row(response.taus_fs, plan.normalization_delay_fs, "tomography");
  }
  const NormalizationFit fit = fix_normalization(response.values(ia, anchor),
                                                 response.values(ib, anchor), plan);

  res.normalized = RMat::Zero(n, 3);
  res.r0 = RVec::Constant(n, fit.r0);
  if (truth_bloch) res.fidelity.resize(n);
  for (int j = 0; j < n; ++j) {
    const BlochState state =
        invert_state(response.values(ia, j), response.values(ib, j), plan, fit.r0);
    if (fit.r0 != 0.0) res.normalized.row(j) = (state.r / fit.r0).transpose();
    res.any_violation = res.any_violation || state.violation;
    if (truth_bloch) {
      BlochState truth;
      truth.r0 = (*truth_bloch)(j, 0);
      truth.r = truth_bloch->row(j).tail<3>();
      res.fidelity(j) = fidelity(state, truth);
    }
  }
  return res;
}

ExponentialFit fit_exponential_decay(const RVec& times_fs, const RVec& values) {
  if (times_fs.size() != values.size() || times_fs.size() < 2)
    throw ConfigError("exponential fit: need matching series with >= 2 points");
  if ((values.array() <= 0.0).any())
    throw ConfigError("exponential fit: values must be positive");
  const RVec logs = values.array().log();
  const double tbar = times_fs.mean(), lbar = logs.mean();
  const double sxx = (times_fs.array() - tbar).square().sum();
  if (sxx == 0.0) throw ConfigError("exponential fit: degenerate time grid");
  const double sxy = ((times_fs.array() - tbar) * (logs.array() - lbar)).sum();
  ExponentialFit fit;
  fit.rate_per_fs = -sxy / sxx;
  fit.amplitude = std::exp(lbar + fit.rate_per_fs * tbar);
  return fit;
}

std::vector<DisorderSweepPoint> disorder_sweep(
    const SiteModel& model, const BathSpec& bath, const Pulse& pump,
    const std::vector<double>& widths_cm1, int n_samples, std::uint64_t seed,
    const DephasingClosure& closure, int n_delays, double t_min_fs,
    double t_max_fs, double anchor_fs) {
  if (model.n_sites() != 2)
    throw ConfigError("disorder sweep: dimer reconstruction only");
  if (n_samples < 1 || n_delays < 2)
    throw ConfigError("disorder sweep: need samples and delays");

  const ExcitonBasis nominal = diagonalize(model);
  const double e_beta = nominal.one_exciton_energies(0);
  const double e_alpha = nominal.one_exciton_energies(1);
  RVec grid(2);
  grid << e_beta, e_alpha;

  RVec times(n_delays + 1);
  times.head(n_delays) = linspace(t_min_fs, t_max_fs, n_delays);
  times(n_delays) = anchor_fs;

  const Eigen::Matrix3d axes = Eigen::Matrix3d::Identity();
  std::vector<DisorderSweepPoint> out;
  out.reserve(widths_cm1.size());

  for (double sigma : widths_cm1) {
    SiteModel drawn = model;
    drawn.disorder_sigma_cm1 = sigma;
    const int n_members = sigma == 0.0 ? 1 : n_samples;
    EnsembleSpec spec;
    spec.n_samples = n_members;
    spec.seed = seed;

    Eigen::RowVector4cd pa_avg = Eigen::RowVector4cd::Zero();
    Eigen::RowVector4cd pb_avg = Eigen::RowVector4cd::Zero();
    RMat rbar = RMat::Zero(n_delays, 4);
    CMat resp = CMat::Zero(n_delays, 2);
    Eigen::Vector2cd resp_anchor = Eigen::Vector2cd::Zero();
    const double wgt = 1.0 / n_members;

    for (int i = 0; i < n_members; ++i) {
      const SiteModel member = sample_member(drawn, spec, i);
      const ExcitonBasis basis = diagonalize(member);
      const RedfieldRates rates = redfield_rates(basis, bath, closure);
      const PumpProbeOperator op =
          dimer_projector_isotropic(member, basis, rates, grid);
      const Eigen::RowVector4cd pa = op.rows.row(1);
      const Eigen::RowVector4cd pb = op.rows.row(0);

      RMat bloch = RMat::Zero(n_delays + 1, 4);
      for (int k = 0; k < 3; ++k)
        bloch += pump_second_order(basis, rates, pump, axes.col(k), times).bloch;
      bloch /= 3.0;

      pa_avg += wgt * pa;
      pb_avg += wgt * pb;
      rbar += wgt * bloch.topRows(n_delays);
      const CMat bloch_c = bloch.cast<cdouble>();
      resp.col(0) += wgt * (bloch_c.topRows(n_delays) * pa.transpose());
      resp.col(1) += wgt * (bloch_c.topRows(n_delays) * pb.transpose());
      resp_anchor(0) += wgt * (bloch_c.row(n_delays) * pa.transpose())(0);
      resp_anchor(1) += wgt * (bloch_c.row(n_delays) * pb.transpose())(0);
    }

    PumpProbeOperator averaged;
    averaged.grid_cm1 = grid;
    averaged.rows.resize(2, 4);
    averaged.rows.row(0) = pb_avg;
    averaged.rows.row(1) = pa_avg;
    const TomographyPlan plan = build_plan(averaged, e_alpha, e_beta, anchor_fs);
    const NormalizationFit fit =
        fix_normalization(resp_anchor(0), resp_anchor(1), plan);

    DisorderSweepPoint point;
    point.sigma_cm1 = sigma;
    point.cond4 = plan.cond4;
    point.cond3 = plan.cond3;
    double worst = 1.0, sum = 0.0;
    for (int j = 0; j < n_delays; ++j) {
      const BlochState state = invert_state(resp(j, 0), resp(j, 1), plan, fit.r0);
      BlochState truth;
      truth.r0 = rbar(j, 0);
      truth.r = rbar.row(j).tail<3>();
      const double f = fidelity(state, truth);
      worst = std::min(worst, f);
      sum += f;
    }
    point.worst_fidelity = worst;
    point.avg_fidelity = sum / n_delays;
    out.push_back(point);
  }
  return out;
}

}  // namespace pptomo

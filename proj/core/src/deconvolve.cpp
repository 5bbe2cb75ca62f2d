#include "pptomo/deconvolve.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace pptomo {

namespace {

// Stage-1 standard form: the data-domain unknown u = E_LO * x is penalized
// through L1 = D2 diag(C_A / E_LO), so only the SVD of L1 is needed.
void build_stage1(const RVec& e_lo, double c_a, RMat* q, RVec* s) {
  const int n_w = static_cast<int>(e_lo.size());
  RMat l1 = penalty_matrix(Penalty::SecondDifference, n_w);
  for (int j = 0; j < n_w; ++j) l1.col(j) *= c_a / e_lo(j);
  Eigen::BDCSVD<RMat> svd(l1, Eigen::ComputeThinU | Eigen::ComputeThinV);
  *q = svd.matrixV();  // n_w x (n_w - 2)
  *s = svd.singularValues();
}

CVec stage1_column(const RMat& q, const RVec& s, const RVec& e_lo,
                   const CVec& bc, const SelectorConfig& cfg, double* lambda_out,
                   bool* warning) {
  const int n_w = static_cast<int>(bc.size());
  const CVec qb = q.transpose() * bc;
  const CVec res_out = bc - q * qb;  // exactly-fit part outside the penalty range

  const auto gcv = [&](double lam) {
    const double l2 = lam * lam;
    double resid2 = 0.0, dof = 0.0;
    for (int i = 0; i < s.size(); ++i) {
      const double g = l2 * s(i) * s(i);
      resid2 += (g / (1.0 + g)) * (g / (1.0 + g)) * std::norm(qb(i));
      dof += 1.0 / (1.0 + g);
    }
    const double den = n_w - (dof + 2.0);
    if (den <= 0.0) return std::numeric_limits<double>::infinity();
    return resid2 / (den * den);
  };

  double lam;
  if (cfg.method == SelectorConfig::Method::Fixed) {
    lam = std::max(cfg.fixed_lambda, cfg.lambda_floor);
  } else {
    const LambdaChoice choice = select_lambda(gcv, cfg);
    lam = choice.lambda;
    if (!choice.converged && warning) *warning = true;
  }
  if (lambda_out) *lambda_out = lam;

  CVec filt(qb.size());
  for (int i = 0; i < s.size(); ++i)
    filt(i) = qb(i) / (1.0 + lam * lam * s(i) * s(i));
  const CVec u = q * filt + res_out;
  return u.array() / e_lo.array().cast<cdouble>();
}

}  // namespace

TwoStageInverter::TwoStageInverter(RVec probe_freqs_cm1, RVec delays_fs,
                                   const Pulse& probe, double rotating_frame_cm1,
                                   Penalty penalty, double prune_rel)
    : w_(std::move(probe_freqs_cm1)), t_(std::move(delays_fs)) {
  probe.validate();
  if (w_.size() < 3) throw ConfigError("inverter: need at least 3 probe frequencies");
  if (t_.size() < 2) throw ConfigError("inverter: need at least 2 delays");
  const int n_t = static_cast<int>(t_.size());
  const double dt = t_(1) - t_(0);
  for (int i = 1; i < n_t; ++i)
    if (std::abs(t_(i) - t_(i - 1) - dt) > 1e-9 * std::abs(dt))
      throw ConfigError("inverter: delay grid must be uniform");

  c_a_ = probe.time_integral();
  if (c_a_ <= 0.0) throw ConfigError("inverter: probe envelope integrates to zero");
  n_ext_ = static_cast<int>(std::ceil(probe.support_fs() / dt));

  const int n_tau = n_t + 2 * n_ext_;
  tau_.resize(n_tau);
  for (int i = 0; i < n_tau; ++i) tau_(i) = t_(0) + dt * (i - n_ext_);

  e_lo_.resize(w_.size());
  for (int i = 0; i < w_.size(); ++i) e_lo_(i) = probe.spectrum(w_(i));
  const double floor = e_lo_.maxCoeff() * 1e-12;
  for (int i = 0; i < e_lo_.size(); ++i) e_lo_(i) = std::max(e_lo_(i), floor);

  build_stage1(e_lo_, c_a_, &q1_, &s1_);

  const RMat l_tau = penalty_matrix(penalty, n_tau);
  const std::vector<CMat> kernels =
      probe_kernels(w_, t_, tau_, probe, rotating_frame_cm1);
  solvers_.reserve(w_.size());
  for (int iw = 0; iw < w_.size(); ++iw)
    solvers_.emplace_back(kernels[iw] / c_a_, l_tau, prune_rel);
}

CMat TwoStageInverter::stage1_naive(const CMat& bc) const {
  if (bc.rows() != w_.size()) throw ConfigError("stage 1: row count mismatch");
  return bc.array().colwise() / e_lo_.array().cast<cdouble>();
}

CMat TwoStageInverter::stage1_tikhonov(const CMat& bc, const SelectorConfig& cfg,
                                       InversionReport* report) const {
  if (bc.rows() != w_.size()) throw ConfigError("stage 1: row count mismatch");
  CMat out(bc.rows(), bc.cols());
  RVec lambdas(bc.cols());
  bool warning = false;
  for (int j = 0; j < bc.cols(); ++j)
    out.col(j) = stage1_column(q1_, s1_, e_lo_, bc.col(j), cfg, &lambdas(j), &warning);
  if (report) {
    report->stage1_lambdas = lambdas;
    report->selector_warning = report->selector_warning || warning;
  }
  return out;
}

CMat TwoStageInverter::stage2_naive(const CMat& p3) const {
  if (p3.rows() != w_.size()) throw ConfigError("stage 2: row count mismatch");
  return p3.array().colwise() / e_lo_.array().cast<cdouble>();
}

CMat TwoStageInverter::stage2_run(const CMat& p3, const SelectorConfig& cfg,
                                  const CMat* truth, InversionReport* report) const {
  if (p3.rows() != w_.size() || p3.cols() != t_.size())
    throw ConfigError("stage 2: surface shape mismatch");
  if (cfg.method == SelectorConfig::Method::ExactOracle &&
      (!truth || truth->rows() != w_.size() || truth->cols() != tau_.size()))
    throw ConfigError("stage 2: exact-oracle selection needs truth on the reconstruction grid");

  const int n_tau = static_cast<int>(tau_.size());
  CMat r(w_.size(), n_tau);
  RVec lambdas(w_.size()), scores(w_.size());
  bool warning = false;

  for (int iw = 0; iw < w_.size(); ++iw) {
    const StandardFormSolver& sf = solvers_[iw];
    const auto pb = sf.prepare(p3.row(iw).transpose());

    LambdaChoice choice;
    switch (cfg.method) {
      case SelectorConfig::Method::Fixed:
        choice.lambda = std::max(cfg.fixed_lambda, cfg.lambda_floor);
        choice.score = sf.gcv(pb, choice.lambda);
        break;
      case SelectorConfig::Method::Gcv:
        choice = select_lambda([&](double l) { return sf.gcv(pb, l); }, cfg);
        break;
      case SelectorConfig::Method::Ncp:
        choice = select_lambda(
            [&](double l) { return ncp_score(sf.residual(pb, l)); }, cfg);
        break;
      case SelectorConfig::Method::ExactOracle: {
        const CVec target = truth->row(iw).transpose() * c_a_;
        const int b = data_begin(), e = data_end();
        choice = select_lambda(
            [&](double l) {
              return (sf.solve(pb, l).segment(b, e - b) - target.segment(b, e - b))
                  .squaredNorm();
            },
            cfg);
        break;
      }
    }
    if (!choice.converged && cfg.method != SelectorConfig::Method::Fixed)
      warning = true;
    lambdas(iw) = choice.lambda;
    scores(iw) = choice.score;
    r.row(iw) = (sf.solve(pb, choice.lambda) / c_a_).transpose();
  }

  if (report) {
    report->stage2_lambdas = lambdas;
    report->stage2_scores = scores;
    report->selector_warning = report->selector_warning || warning;
  }
  return r;
}

CMat invert_signal_to_polarization(const HeterodyneSurfaces& data, const Pulse& lo,
                                   const InversionConfig& cfg,
                                   InversionReport* report) {
  lo.validate();
  const int n_w = static_cast<int>(data.probe_freqs_cm1.size());
  const int n_t = static_cast<int>(data.delays_fs.size());
  if (data.absorptive.rows() != n_w || data.absorptive.cols() != n_t)
    throw ConfigError("stage 1: absorptive surface shape mismatch");
  const bool have_disp = data.dispersive.size() > 0;
  if (have_disp &&
      (data.dispersive.rows() != n_w || data.dispersive.cols() != n_t))
    throw ConfigError("stage 1: dispersive surface shape mismatch");

  RVec e_lo(n_w);
  for (int i = 0; i < n_w; ++i) e_lo(i) = lo.spectrum(data.probe_freqs_cm1(i));
  const double thresh = e_lo.maxCoeff() * cfg.lo_support_rel;
  std::vector<int> masked;
  for (int i = 0; i < n_w; ++i)
    if (e_lo(i) < thresh) masked.push_back(i);
  if (static_cast<int>(masked.size()) == n_w)
    throw InfeasibleError("stage 1: local oscillator has no support on the requested band");

  CMat bc(n_w, n_t);
  if (have_disp)
    bc.real() = data.dispersive, bc.imag() = data.absorptive;
  else
    bc.real().setZero(), bc.imag() = data.absorptive;

  const double c_a = lo.time_integral();
  RVec e_lo_safe = e_lo;
  for (int i : masked) e_lo_safe(i) = thresh;

  CMat p3(n_w, n_t);
  if (cfg.stage1 == StageMode::Naive) {
    p3 = bc.array().colwise() / e_lo_safe.array().cast<cdouble>();
  } else {
    RMat q;
    RVec s;
    build_stage1(e_lo_safe, c_a, &q, &s);
    RVec lambdas(n_t);
    bool warning = false;
    SelectorConfig sel = cfg.selector;
    sel.method = cfg.selector.method == SelectorConfig::Method::Fixed
                     ? SelectorConfig::Method::Fixed
                     : SelectorConfig::Method::Gcv;
    for (int j = 0; j < n_t; ++j)
      p3.col(j) = stage1_column(q, s, e_lo_safe, bc.col(j), sel, &lambdas(j), &warning);
    if (report) {
      report->stage1_lambdas = lambdas;
      report->selector_warning = report->selector_warning || warning;
    }
  }

  for (int i : masked) p3.row(i).setZero();
  if (report) {
    report->masked_freq_indices = masked;
    report->absorptive_only = !have_disp;
  }
  return p3;
}

ResponseSurface invert_polarization_to_response(
    const CMat& p3, const RVec& probe_freqs_cm1, const RVec& delays_fs,
    const Pulse& probe, double rotating_frame_cm1, const InversionConfig& cfg,
    InversionReport* report, const ResponseSurface* truth) {
  const TwoStageInverter inv(probe_freqs_cm1, delays_fs, probe,
                             rotating_frame_cm1, cfg.penalty, cfg.prune_rel);

  ResponseSurface out;
  out.freqs_cm1 = probe_freqs_cm1;
  if (cfg.stage2 == StageMode::Naive) {
    out.taus_fs = delays_fs;  // impulsive estimate lives on the data grid
    out.values = inv.stage2_naive(p3);
  } else {
    out.taus_fs = inv.tau_grid_fs();
    CMat truth_full;
    const CMat* truth_ptr = nullptr;
    if (cfg.selector.method == SelectorConfig::Method::ExactOracle) {
      if (!truth)
        throw ConfigError("stage 2: exact-oracle selection needs a truth surface");
      truth_full = CMat::Zero(probe_freqs_cm1.size(), inv.tau_grid_fs().size());
      if (truth->taus_fs.size() == inv.tau_grid_fs().size())
        truth_full = truth->values;
      else if (truth->taus_fs.size() == delays_fs.size())
        truth_full.middleCols(inv.data_begin(), delays_fs.size()) = truth->values;
      else
        throw ConfigError("stage 2: truth grid matches neither the data nor the reconstruction grid");
      truth_ptr = &truth_full;
    }
    out.values = inv.stage2_run(p3, cfg.selector, truth_ptr, report);
  }

  if (report && truth) report->rmse_vs_truth = rmse(out, *truth);
  return out;
}

double rmse_window(const CMat& estimate, const CMat& truth, int col_begin,
                   int col_end) {
  if (estimate.rows() != truth.rows()) throw ConfigError("rmse: row count mismatch");
  if (col_begin < 0 || col_end > estimate.cols() || col_end > truth.cols() ||
      col_begin >= col_end)
    throw ConfigError("rmse: bad column window");
  const int n = col_end - col_begin;
  return std::sqrt((estimate.middleCols(col_begin, n) - truth.middleCols(col_begin, n))
                       .squaredNorm());
}

namespace {

// offset of `inner` as a contiguous block of `outer`, or -1
int find_block(const RVec& outer, const RVec& inner) {
  const int no = static_cast<int>(outer.size()), ni = static_cast<int>(inner.size());
  for (int k = 0; k + ni <= no; ++k) {
    bool ok = true;
    for (int i = 0; i < ni && ok; ++i)
      ok = std::abs(outer(k + i) - inner(i)) <= 1e-6;
    if (ok) return k;
  }
  return -1;
}

}  // namespace

double rmse(const ResponseSurface& estimate, const ResponseSurface& truth) {
  if (estimate.freqs_cm1.size() != truth.freqs_cm1.size() ||
      (estimate.freqs_cm1 - truth.freqs_cm1).cwiseAbs().maxCoeff() > 1e-6)
    throw ConfigError("rmse: frequency grids differ");

  if (estimate.taus_fs.size() == truth.taus_fs.size() &&
      (estimate.taus_fs - truth.taus_fs).cwiseAbs().maxCoeff() <= 1e-6)
    return std::sqrt((estimate.values - truth.values).squaredNorm());

  int k = find_block(truth.taus_fs, estimate.taus_fs);
  if (k >= 0)
    return std::sqrt(
        (estimate.values - truth.values.middleCols(k, estimate.taus_fs.size()))
            .squaredNorm());
  k = find_block(estimate.taus_fs, truth.taus_fs);
  if (k >= 0)
    return std::sqrt(
        (estimate.values.middleCols(k, truth.taus_fs.size()) - truth.values)
            .squaredNorm());
  throw ConfigError("rmse: delay grids are not nested");
}

}  // namespace pptomo

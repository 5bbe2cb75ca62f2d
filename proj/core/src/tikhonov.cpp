#include "pptomo/tikhonov.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pptomo/units.hpp"

namespace pptomo {

RMat penalty_matrix(Penalty penalty, int n) {
  if (n < 1) throw ConfigError("penalty: need n >= 1");
  switch (penalty) {
    case Penalty::Identity:
      return RMat::Identity(n, n);
    case Penalty::FirstDifference: {
      if (n < 2) throw ConfigError("penalty: first difference needs n >= 2");
      RMat d = RMat::Zero(n - 1, n);
      for (int i = 0; i < n - 1; ++i) {
        d(i, i) = -1.0;
        d(i, i + 1) = 1.0;
      }
      return d;
    }
    case Penalty::SecondDifference: {
      if (n < 3) throw ConfigError("penalty: second difference needs n >= 3");
      RMat d = RMat::Zero(n - 2, n);
      for (int i = 0; i < n - 2; ++i) {
        d(i, i) = 1.0;
        d(i, i + 1) = -2.0;
        d(i, i + 2) = 1.0;
      }
      return d;
    }
  }
  throw ConfigError("penalty: unknown kind");
}

void RegularizedProblem::validate() const {
  if (op.rows() != data.size())
    throw ConfigError("regularized problem: operator/data size mismatch");
  if (reg_weight < 0.0) throw ConfigError("regularized problem: need lambda >= 0");
}

TikhonovSolution tikhonov_solve(const RegularizedProblem& p) {
  p.validate();
  const int n = static_cast<int>(p.op.cols());
  const RMat l = penalty_matrix(p.penalty, n);

  CMat stacked(p.op.rows() + l.rows(), n);
  stacked.topRows(p.op.rows()) = p.op;
  stacked.bottomRows(l.rows()) = p.reg_weight * l.cast<cdouble>();
  CVec rhs = CVec::Zero(stacked.rows());
  rhs.head(p.data.size()) = p.data;

  Eigen::BDCSVD<CMat> svd(stacked, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const RVec& s = svd.singularValues();
  const double cutoff = (s.size() ? s(0) : 0.0) * 1e-12;
  int rank = 0;
  for (int i = 0; i < s.size(); ++i)
    if (s(i) > cutoff) ++rank;

  CVec coef = svd.matrixU().leftCols(rank).adjoint() * rhs;
  for (int i = 0; i < rank; ++i) coef(i) /= s(i);

  TikhonovSolution sol;
  sol.x = svd.matrixV().leftCols(rank) * coef;
  sol.min_norm = (p.reg_weight == 0.0 && rank < n);
  return sol;
}

double gcv_score(const RegularizedProblem& p) {
  p.validate();
  const StandardFormSolver sf(p.op, penalty_matrix(p.penalty, static_cast<int>(p.op.cols())));
  return sf.gcv(sf.prepare(p.data), p.reg_weight);
}

double ncp_score(const CVec& residual) {
  const int m = static_cast<int>(residual.size());
  if (m < 8) throw ConfigError("ncp: need at least 8 residual samples");
  const int nk = m / 2;
  double total = 0.0;
  for (int channel = 0; channel < 2; ++channel) {
    RVec power(nk);
    for (int k = 1; k <= nk; ++k) {
      const cdouble step{std::cos(-2.0 * k_pi * k / m), std::sin(-2.0 * k_pi * k / m)};
      cdouble acc = 0.0, ph = 1.0;
      for (int j = 0; j < m; ++j) {
        const double x = (channel == 0) ? residual(j).real() : residual(j).imag();
        acc += x * ph;
        ph *= step;
      }
      power(k - 1) = std::norm(acc);
    }
    const double sum = power.sum();
    if (sum == 0.0) continue;
    double cum = 0.0, dist2 = 0.0;
    for (int k = 0; k < nk; ++k) {
      cum += power(k);
      const double line = static_cast<double>(k + 1) / nk;
      dist2 += (cum / sum - line) * (cum / sum - line);
    }
    total += std::sqrt(dist2);
  }
  return total;
}

StandardFormSolver::StandardFormSolver(const CMat& op, const RMat& penalty, double prune_rel) {
  a_ = op;
  m_ = static_cast<int>(op.rows());
  n_ = static_cast<int>(op.cols());
  if (penalty.cols() != n_)
    throw ConfigError("standard form: penalty column count must match the operator");

  Eigen::BDCSVD<RMat> lsvd(penalty, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const RVec& sl = lsvd.singularValues();
  int rank = 0;
  for (int i = 0; i < sl.size(); ++i)
    if (sl(i) > sl(0) * 1e-12) ++rank;
  k_ = n_ - rank;

  RMat lp = RMat::Zero(n_, penalty.rows());
  for (int i = 0; i < rank; ++i)
    lp += (lsvd.matrixV().col(i) / sl(i)) * lsvd.matrixU().col(i).transpose();
  w_ = lsvd.matrixV().rightCols(k_).cast<cdouble>();

  CMat abar = a_ * lp.cast<cdouble>();  // m x p
  if (k_ > 0) {
    const CMat aw = a_ * w_;
    Eigen::HouseholderQR<CMat> qr(aw);
    qk_ = qr.householderQ() * CMat::Identity(m_, k_);
    rk_ = qr.matrixQR().topLeftCorner(k_, k_).triangularView<Eigen::Upper>();
    abar -= qk_ * (qk_.adjoint() * abar);
  }

  Eigen::BDCSVD<CMat> svd(abar, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const RVec& s = svd.singularValues();
  int keep = 0;
  const double cutoff = (s.size() ? s(0) : 0.0) * prune_rel;
  for (int i = 0; i < s.size(); ++i)
    if (s(i) > cutoff) ++keep;
  u_ = svd.matrixU().leftCols(keep);
  s_ = s.head(keep);

  // fold particular solution and null-space correction into one map:
  // x = Lp V coef + W Rk^-1 Qk^H (b - A Lp V coef)
  x0_ = lp.cast<cdouble>() * svd.matrixV().leftCols(keep);
  if (k_ > 0) {
    const CMat corr = rk_.triangularView<Eigen::Upper>().solve(CMat(qk_.adjoint() * (a_ * x0_)));
    x0_ -= w_ * corr;
  }
}

StandardFormSolver::Prepared StandardFormSolver::prepare(const CVec& b) const {
  if (b.size() != m_) throw ConfigError("standard form: data size mismatch");
  Prepared p;
  p.b = b;
  p.bt = b;
  if (k_ > 0) {
    p.bt -= qk_ * (qk_.adjoint() * p.bt);
    p.xnull = w_ * rk_.triangularView<Eigen::Upper>().solve(CVec(qk_.adjoint() * b));
  } else {
    p.xnull = CVec::Zero(n_);
  }
  p.beta = u_.adjoint() * p.bt;
  p.perp2 = std::max(p.bt.squaredNorm() - p.beta.squaredNorm(), 0.0);
  return p;
}

double StandardFormSolver::residual_norm2(const Prepared& p, double lambda) const {
  const double l2 = lambda * lambda;
  double acc = p.perp2;
  for (int i = 0; i < s_.size(); ++i) {
    const double fl = l2 / (s_(i) * s_(i) + l2);
    acc += fl * fl * std::norm(p.beta(i));
  }
  return acc;
}

double StandardFormSolver::gcv(const Prepared& p, double lambda) const {
  const double l2 = lambda * lambda;
  double dof = 0.0;
  for (int i = 0; i < s_.size(); ++i) dof += s_(i) * s_(i) / (s_(i) * s_(i) + l2);
  const double den = m_ - k_ - dof;
  if (den <= 0.0) return std::numeric_limits<double>::infinity();
  return residual_norm2(p, lambda) / (den * den);
}

RVec StandardFormSolver::filter_factors(double lambda) const {
  const double l2 = lambda * lambda;
  RVec fl(s_.size());
  for (int i = 0; i < s_.size(); ++i) fl(i) = s_(i) * s_(i) / (s_(i) * s_(i) + l2);
  return fl;
}

CVec StandardFormSolver::residual(const Prepared& p, double lambda) const {
  const double l2 = lambda * lambda;
  CVec damped(s_.size());
  for (int i = 0; i < s_.size(); ++i)
    damped(i) = s_(i) * s_(i) / (s_(i) * s_(i) + l2) * p.beta(i);
  return p.bt - u_ * damped;
}

CVec StandardFormSolver::solve(const Prepared& p, double lambda) const {
  const double l2 = lambda * lambda;
  CVec coef(s_.size());
  for (int i = 0; i < s_.size(); ++i)
    coef(i) = s_(i) / (s_(i) * s_(i) + l2) * p.beta(i);
  return x0_ * coef + p.xnull;
}

LambdaChoice select_lambda(const std::function<double(double)>& score,
                           const SelectorConfig& cfg) {
  const double ulo = std::log10(cfg.lambda_floor);
  const double uhi = std::log10(cfg.lambda_max);

  double u0, f0, u1, f1;
  if (cfg.presample_points > 1) {
    const int np = cfg.presample_points;
    double best_u = ulo, best_f = std::numeric_limits<double>::infinity();
    for (int i = 0; i < np; ++i) {
      const double u = ulo + (uhi - ulo) * i / (np - 1);
      const double f = score(std::pow(10.0, u));
      if (f < best_f) {
        best_f = f;
        best_u = u;
      }
    }
    u0 = best_u;
    f0 = best_f;
    u1 = std::min(best_u + (uhi - ulo) / (np - 1), uhi);
  } else {
    u0 = std::log10(std::clamp(cfg.initial_lambda, cfg.lambda_floor, cfg.lambda_max));
    f0 = score(std::pow(10.0, u0));
    u1 = u0 + 0.5;
  }
  f1 = score(std::pow(10.0, u1));
  if (f1 < f0) {
    std::swap(u0, u1);
    std::swap(f0, f1);
  }

  // 1-D Nelder-Mead in log10(lambda); u0 is always the better vertex
  bool converged = false;
  for (int it = 0; it < cfg.max_iterations; ++it) {
    if (std::abs(u1 - u0) < cfg.log_rtol) {
      converged = true;
      break;
    }
    const double ur = u0 + (u0 - u1);
    const double fr = score(std::pow(10.0, ur));
    if (fr < f0) {
      const double ue = u0 + cfg.expand_coeff * (u0 - u1);
      const double fe = score(std::pow(10.0, ue));
      u1 = u0; f1 = f0;
      if (fe < fr) { u0 = ue; f0 = fe; } else { u0 = ur; f0 = fr; }
    } else if (fr < f1) {
      u1 = ur; f1 = fr;
    } else {
      const double uc = u0 + cfg.contract_coeff * (u1 - u0);
      const double fc = score(std::pow(10.0, uc));
      if (fc < f1) {
        u1 = uc;
        f1 = fc;
      } else {
        u1 = u0 + cfg.contract_coeff * cfg.contract_coeff * (u1 - u0);
        f1 = score(std::pow(10.0, u1));
      }
    }
    if (f1 < f0) {
      std::swap(u0, u1);
      std::swap(f0, f1);
    }
  }

  LambdaChoice choice;
  choice.lambda = std::max(std::pow(10.0, u0), cfg.lambda_floor);
  choice.score = f0;
  choice.converged = converged;
  return choice;
}

}  // namespace pptomo

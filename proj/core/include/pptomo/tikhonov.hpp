#pragma once

#include <functional>

#include <Eigen/Dense>

#include "pptomo/util.hpp"

namespace pptomo {

enum class Penalty { Identity, FirstDifference, SecondDifference };

// I: n x n, D1: (n-1) x n with (D1 x)_i = x_{i+1} - x_i,
// D2: (n-2) x n second-difference stencil [1, -2, 1]
RMat penalty_matrix(Penalty penalty, int n);

struct RegularizedProblem {
  CMat op;                              // m x n
  CVec data;                            // m
  Penalty penalty = Penalty::Identity;
  double reg_weight = 0.0;              // lambda, >= 0
  void validate() const;
};

struct TikhonovSolution {
  CVec x;
  bool min_norm = false;  // lambda = 0 on a rank-deficient operator
};

// Reference route: one SVD of the stacked [A; lambda L] system. Kept separate
// from StandardFormSolver on purpose; the two routes cross-check each other.
TikhonovSolution tikhonov_solve(const RegularizedProblem& p);

// Generalized cross-validation score at the problem's reg_weight;
// +infinity when the effective-dof denominator is not positive.
double gcv_score(const RegularizedProblem& p);

// Distance of the residual's cumulative periodogram from the white-noise
// diagonal, real and imaginary channels summed. Requires >= 8 samples.
double ncp_score(const CVec& residual);

// Standard-form reduction of min ||Ax - b||^2 + lambda^2 ||Lx||^2 for fixed
// (A, L): factor once, then per-lambda scores are O(rank) and solves O(n^2).
class StandardFormSolver {
 public:
  StandardFormSolver(const CMat& op, const RMat& penalty, double prune_rel = 1e-10);

  struct Prepared {
    CVec b;
    CVec bt;        // b with the exactly-fit null-space component removed
    CVec beta;      // data coefficients along the pruned singular directions
    CVec xnull;     // exactly-fit penalty-null-space part of every solution
    double perp2;   // squared data norm outside the reachable range
  };
  Prepared prepare(const CVec& b) const;

  double residual_norm2(const Prepared& p, double lambda) const;
  double gcv(const Prepared& p, double lambda) const;
  CVec solve(const Prepared& p, double lambda) const;
  // b - A x(lambda) without forming x; cheap enough for per-candidate NCP
  CVec residual(const Prepared& p, double lambda) const;

  const RVec& singular_values() const { return s_; }
  RVec filter_factors(double lambda) const;
  int null_dim() const { return k_; }
  int n_rows() const { return m_; }
  const CMat& op() const { return a_; }

 private:
  CMat a_;        // original operator
  CMat w_;        // penalty null-space basis, n x k
  CMat qk_, rk_;  // thin QR of A W
  CMat u_;        // pruned left singular basis of the standard-form operator
  CMat x0_;       // fused back-map: x(lambda) = x0_ coef(lambda) + xnull
  RVec s_;
  int m_ = 0, n_ = 0, k_ = 0;
};

struct SelectorConfig {
  enum class Method { ExactOracle, Gcv, Ncp, Fixed };
  Method method = Method::Gcv;
  double lambda_floor = 5e-11;
  double lambda_max = 1e3;
  double initial_lambda = 1.0;  // simplex start when no presample is used
  int presample_points = 40;    // coarse log-grid seeding the simplex; 0 disables
  int max_iterations = 100;
  double log_rtol = 1e-3;       // simplex width tolerance, decades
  double expand_coeff = 2.0;
  double contract_coeff = 0.5;
  double fixed_lambda = 0.0;
};

struct LambdaChoice {
  double lambda = 0.0;
  double score = 0.0;
  bool converged = true;
};

// Minimize a score over lambda: coarse log-grid presample (the landscapes
// are multimodal), then 1-D Nelder-Mead in log10(lambda) from the best cell,
// clamped to the floor. Non-convergence returns the best value seen.
LambdaChoice select_lambda(const std::function<double(double)>& score,
                           const SelectorConfig& cfg);

}  // namespace pptomo

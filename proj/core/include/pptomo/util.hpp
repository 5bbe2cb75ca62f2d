#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace pptomo {

using cdouble = std::complex<double>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;
using RMat = Eigen::MatrixXd;

// Thrown on malformed inputs; the CLI maps it to exit code 2.
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Thrown when a requested computation cannot proceed (singular plan, ...);
// the CLI maps it to exit code 3.
struct InfeasibleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown on numerical failure (non-convergence, NaNs); CLI exit code 4.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline RVec linspace(double a, double b, int n) {
  if (n < 1) throw ConfigError("linspace: need n >= 1");
  if (n == 1) return RVec::Constant(1, a);
  return RVec::LinSpaced(n, a, b);
}

// trapezoid weights for a uniform grid with spacing dx
inline RVec trapezoid_weights(int n, double dx) {
  if (n < 2) throw ConfigError("trapezoid_weights: need n >= 2");
  RVec w = RVec::Constant(n, dx);
  w(0) = 0.5 * dx;
  w(n - 1) = 0.5 * dx;
  return w;
}

inline bool strictly_increasing(const RVec& v) {
  for (int i = 1; i < v.size(); ++i)
    if (!(v(i) > v(i - 1))) return false;
  return true;
}

}  // namespace pptomo

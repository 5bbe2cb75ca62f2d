#pragma once

#include <complex>

#include <Eigen/Dense>

#include "pptomo/model.hpp"
#include "pptomo/util.hpp"

namespace pptomo {

// Ohmic bath with exponential cutoff, identical and uncorrelated at each site.
struct BathSpec {
  double reorg_cm1 = 0.0;     // reorganization energy lambda
  double cutoff_cm1 = 1.0;    // cutoff frequency omega_c
  double temperature_K = 1.0;
  void validate() const;
};

// J(w) = (lambda/w_c) * w * exp(-w/w_c), defined for w >= 0
double spectral_density(const BathSpec& bath, double w_cm1);

// Full temperature-weighted correlation spectrum, defined for all w:
//   C(w > 0) = 2 J(w) (nbar + 1),  C(w < 0) = 2 J(|w|) nbar,
//   C(0) = 2 lambda kT / w_c   (cm^-1).
// Detailed balance C(-w) = exp(-w/kT) C(w) holds by construction.
double bath_correlation(const BathSpec& bath, double w_cm1);

// Weights of the secular pure-dephasing closure. The independent term sums
// squared site-occupation differences; the correlated term squares their sum.
struct DephasingClosure {
  double independent = 1.0;
  double correlated = 1.0;
};

// Secular Redfield rates in the exciton basis, all in fs^-1.
// pop_generator_*: G(a,b) = k(a->b) off-diagonal, G(a,a) = -sum_b k(a->b),
// so populations evolve as p(t) = exp(G^T t) p(0) and every row sums to zero.
struct RedfieldRates {
  RVec one_exciton_energies;   // cm^-1, copied for convenience
  RVec two_exciton_energies;
  RMat pop_generator_one;      // n x n
  RMat pop_generator_two;      // npair x npair
  CVec gamma_g1;               // n: |g><a| dephasing rates
  CMat gamma_11;               // n x n: |a><b| dephasing, diagonal zero
  CMat gamma_12;               // n x npair: |a><F| dephasing
  double temperature_K = 0.0;

  double depopulation_one(int a) const { return -pop_generator_one(a, a); }
  double depopulation_two(int f) const { return -pop_generator_two(f, f); }
};

RedfieldRates redfield_rates(const ExcitonBasis& basis, const BathSpec& bath,
                             const DephasingClosure& closure = {});

// Thermal populations over the supplied energies, normalized to one.
RVec equilibrium_populations(const RVec& energies_cm1, double temperature_K);

// One-sided transform of the damped phase factor: 1 / (i(w0 - w)*k - gamma)
// with k converting cm^-1 to rad/fs. Requires Re(gamma) > 0; equals -1/gamma
// on resonance.
std::complex<double> propagator_factor(std::complex<double> gamma_per_fs,
                                       double w0_cm1, double w_cm1);

}  // namespace pptomo

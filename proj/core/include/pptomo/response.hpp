#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pptomo/bath.hpp"
#include "pptomo/model.hpp"
#include "pptomo/util.hpp"

namespace pptomo {

// Hermitian trace-orthogonal operator basis for the one-exciton manifold:
// populations |a><a| first, then for each a < b the pair
// X_ab = |a><b| + |b><a| and Y_ab = i(|a><b| - |b><a|).
class LiouvilleBasis {
 public:
  enum class Kind { Population, CoherenceX, CoherenceY };
  struct Element {
    Kind kind;
    int a, b;
    std::string label;
  };

  explicit LiouvilleBasis(int n_levels);

  int n_levels() const { return n_; }
  int dim() const { return n_ * n_; }
  const Element& element(int k) const { return elems_[k]; }
  CMat matrix(int k) const;

  // expansion coefficients of a Hermitian matrix: c_pop = rho_aa,
  // c_X = Re(rho_ab), c_Y = Im(rho_ab) for a < b
  RVec coefficients(const CMat& rho) const;
  CMat compose(const RVec& coeffs) const;

 private:
  int n_;
  std::vector<Element> elems_;
};

// Linear map from a pumped one-exciton state to the complex probe response
// R(w). Column k is the response of the k-th state component; components are
// either LiouvilleBasis coefficients or dimer Bloch components (r0..r3),
// stated per constructor.
struct PumpProbeOperator {
  RVec grid_cm1;   // strictly increasing probe frequencies
  CMat rows;       // n_grid x n_components

  CVec apply(const RVec& coeffs) const { return rows * coeffs; }
  CVec apply(const CVec& coeffs) const { return rows * coeffs; }
};

// General response covector assembled from ground-state-bleach, stimulated
// and excited-state-absorption pathways with distinct probe and signal
// polarizations. Components follow LiouvilleBasis(n).
PumpProbeOperator build_operator(const ExcitonBasis& basis, const RedfieldRates& rates,
                                 const RVec& grid_cm1, const Eigen::Vector3d& pol_probe,
                                 const Eigen::Vector3d& pol_signal);

// Closed-form dimer covector over Bloch components (r0, r1, r2, r3) in the
// (upper, lower) exciton convention, probe = signal = pol. Independent
// algebraic route used to validate build_operator.
PumpProbeOperator dimer_projector_analytic(const ExcitonBasis& basis,
                                           const RedfieldRates& rates, const RVec& grid_cm1,
                                           const Eigen::Vector3d& pol);

// Scalar inputs of the closed-form isotropic dimer covector.
struct DimerIsotropicParams {
  double theta = 0.0;       // mixing angle
  double delta = 1.0;       // dipole length ratio |d2|/|d1|
  double cos_phi = 1.0;     // cosine of the site dipole angle
  double d1_norm2 = 1.0;    // |d1|^2
  double e_alpha_cm1 = 0.0; // upper exciton
  double e_beta_cm1 = 0.0;  // lower exciton
  cdouble gamma_ga, gamma_gb;  // optical dephasing, fs^-1
  cdouble gamma_fa, gamma_fb;  // one-to-two-exciton dephasing
};

DimerIsotropicParams dimer_isotropic_params(const SiteModel& model,
                                            const ExcitonBasis& basis,
                                            const RedfieldRates& rates);

// Orientation-averaged dimer covector over Bloch components (r0..r3).
PumpProbeOperator dimer_projector_isotropic(const DimerIsotropicParams& p,
                                            const RVec& grid_cm1);

PumpProbeOperator dimer_projector_isotropic(const SiteModel& model,
                                            const ExcitonBasis& basis,
                                            const RedfieldRates& rates,
                                            const RVec& grid_cm1);

// Average of the three parallel-polarization configurations xx, yy, zz.
// For rank-2 dipole operators this equals the full orientation average.
PumpProbeOperator magic_angle_average(const ExcitonBasis& basis, const RedfieldRates& rates,
                                      const RVec& grid_cm1);

// Convert a LiouvilleBasis-component dimer operator to Bloch components.
PumpProbeOperator to_bloch_components(const PumpProbeOperator& op_liouville);

// Bloch vector (r0, r1, r2, r3) of a 2x2 excited-state matrix in the
// ascending-energy basis; r3 = p_upper - p_lower.
Eigen::Vector4d bloch_components(const CMat& rho);
CMat bloch_to_matrix(const Eigen::Vector4d& r);

struct SpeciesSpectrum {
  std::string label;
  CVec values;  // complex spectrum over the operator grid
};

// Per-component spectra of an operator (one species per state component).
std::vector<SpeciesSpectrum> species_spectra(const PumpProbeOperator& op,
                                             const std::vector<std::string>& labels);

// Complex response surface R(w, tau).
struct ResponseSurface {
  RVec freqs_cm1;
  RVec taus_fs;
  CMat values;  // n_w x n_tau
};

}  // namespace pptomo

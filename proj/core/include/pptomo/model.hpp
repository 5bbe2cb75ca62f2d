#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "pptomo/util.hpp"

namespace pptomo {

using DipoleList = Eigen::Matrix<double, Eigen::Dynamic, 3>;

// Frenkel aggregate in the site basis. Couplings must be symmetric with a
// zero diagonal; dipoles are site transition dipoles in a body-fixed frame.
struct SiteModel {
  RVec energies_cm1;          // n
  RMat couplings_cm1;         // n x n
  DipoleList dipoles;         // n x 3
  double disorder_sigma_cm1 = 0.0;

  int n_sites() const { return static_cast<int>(energies_cm1.size()); }
  void validate() const;  // throws ConfigError
};

// Eigenstructure of the one- and two-exciton manifolds. One-exciton energies
// ascend; eigenvector columns are sign-fixed so the largest-magnitude
// component is positive, with degenerate blocks ordered by dominant-site
// index. Two-exciton states are built on hard-core pair states |mn>, m < n,
// in lexicographic order.
struct ExcitonBasis {
  RVec one_exciton_energies;              // n, cm^-1, ascending
  RMat rotation;                          // n x n, U(site, exciton)
  RVec two_exciton_energies;              // n(n-1)/2, cm^-1, ascending
  RMat pair_rotation;                     // npair x npair, U2(pair, F)
  std::vector<std::pair<int, int>> pair_sites;  // pair index -> (m, n)
  DipoleList dipoles_g_to_1;              // n x 3, mu_{g->a}
  std::vector<DipoleList> dipoles_1_to_2; // [a] -> npair x 3, mu_{a->F}
  double mixing_angle = 0.0;              // n = 2 only: tan(2*theta) = 2J/(E1-E2)

  int n_one() const { return static_cast<int>(one_exciton_energies.size()); }
  int n_two() const { return static_cast<int>(two_exciton_energies.size()); }

  // site occupation |U(m,a)|^2 of one-exciton state a
  double site_weight_one(int m, int a) const {
    const double u = rotation(m, a);
    return u * u;
  }
  // site occupation of two-exciton state F: sum over pairs containing m
  double site_weight_two(int m, int f) const;

  // dipole projections onto a lab-frame unit vector
  RVec projections_g_to_1(const Eigen::Vector3d& pol) const;
  RMat projections_1_to_2(const Eigen::Vector3d& pol) const;  // (a, F)
};

ExcitonBasis diagonalize(const SiteModel& model);

enum class OrientationMode { FixedFrame, IsotropicXyzAverage };

struct UncertaintySpec {
  double site_sigma_cm1 = 0.0;
  double coupling_relative_sigma = 0.0;
};

struct EnsembleSpec {
  int n_samples = 1;
  std::uint64_t seed = 0;
  OrientationMode orientation = OrientationMode::IsotropicXyzAverage;
  UncertaintySpec uncertainty;
};

// Draw disorder/uncertainty realizations. Sample i uses the counter-based
// stream fork(seed, i), so the result is independent of evaluation order.
std::vector<SiteModel> sample_ensemble(const SiteModel& model, const EnsembleSpec& spec);

// Single realization, same stream convention as sample_ensemble.
SiteModel sample_member(const SiteModel& model, const EnsembleSpec& spec, int index);

// Rotate all site dipoles into the lab frame. R must be a proper rotation.
SiteModel lab_frame_dipoles(const SiteModel& model, const Eigen::Matrix3d& rotation);

}  // namespace pptomo

#include "pptomo/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pptomo/rng.hpp"

namespace pptomo {

void SiteModel::validate() const {
  const int n = n_sites();
  if (n < 1) throw ConfigError("site model: need at least one site");
  if (couplings_cm1.rows() != n || couplings_cm1.cols() != n)
    throw ConfigError("site model: couplings must be n x n");
  if (dipoles.rows() != n)
    throw ConfigError("site model: dipoles must be n x 3");
  if (disorder_sigma_cm1 < 0.0)
    throw ConfigError("site model: disorder sigma must be >= 0");
  for (int i = 0; i < n; ++i) {
    if (std::abs(couplings_cm1(i, i)) > 1e-12)
      throw ConfigError("site model: coupling diagonal must be zero");
    for (int j = i + 1; j < n; ++j) {
      if (std::abs(couplings_cm1(i, j) - couplings_cm1(j, i)) > 1e-12)
        throw ConfigError("site model: couplings must be symmetric");
    }
  }
}

double ExcitonBasis::site_weight_two(int m, int f) const {
  double q = 0.0;
  for (std::size_t p = 0; p < pair_sites.size(); ++p) {
    if (pair_sites[p].first == m || pair_sites[p].second == m) {
      const double u = pair_rotation(static_cast<Eigen::Index>(p), f);
      q += u * u;
    }
  }
  return q;
}

RVec ExcitonBasis::projections_g_to_1(const Eigen::Vector3d& pol) const {
  return dipoles_g_to_1 * pol;
}

RMat ExcitonBasis::projections_1_to_2(const Eigen::Vector3d& pol) const {
  RMat p(n_one(), n_two());
  for (int a = 0; a < n_one(); ++a) p.row(a) = (dipoles_1_to_2[a] * pol).transpose();
  return p;
}

namespace {

// Fix eigenvector signs (largest-magnitude component positive) and order
// numerically degenerate clusters by dominant-site index.
void canonicalize_columns(RVec& evals, RMat& evecs) {
  const int n = static_cast<int>(evals.size());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<int> dominant(n);
  for (int k = 0; k < n; ++k) {
    int imax = 0;
    evecs.col(k).cwiseAbs().maxCoeff(&imax);
    if (evecs(imax, k) < 0.0) evecs.col(k) = -evecs.col(k);
    dominant[k] = imax;
  }
  const double scale = std::max(1.0, evals.cwiseAbs().maxCoeff());
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (std::abs(evals(a) - evals(b)) > 1e-9 * scale) return evals(a) < evals(b);
    return dominant[a] < dominant[b];
  });
  RVec e2(n);
  RMat v2(evecs.rows(), n);
  for (int k = 0; k < n; ++k) {
    e2(k) = evals(order[k]);
    v2.col(k) = evecs.col(order[k]);
  }
  evals = e2;
  evecs = v2;
}

}  // namespace

ExcitonBasis diagonalize(const SiteModel& model) {
  model.validate();
  const int n = model.n_sites();

  ExcitonBasis basis;

  RMat h1 = model.couplings_cm1;
  h1.diagonal() = model.energies_cm1;
  Eigen::SelfAdjointEigenSolver<RMat> es1(h1);
  if (es1.info() != Eigen::Success)
    throw NumericalError("diagonalize: one-exciton eigensolver failed");
  basis.one_exciton_energies = es1.eigenvalues();
  basis.rotation = es1.eigenvectors();
  canonicalize_columns(basis.one_exciton_energies, basis.rotation);

  if (n == 2) {
    basis.mixing_angle = 0.5 * std::atan2(2.0 * model.couplings_cm1(0, 1),
                                          model.energies_cm1(0) - model.energies_cm1(1));
  }

  // two-exciton manifold on hard-core pair states
  const int npair = n * (n - 1) / 2;
  basis.pair_sites.reserve(npair);
  for (int m = 0; m < n; ++m)
    for (int p = m + 1; p < n; ++p) basis.pair_sites.emplace_back(m, p);

  RMat h2 = RMat::Zero(npair, npair);
  for (int i = 0; i < npair; ++i) {
    const auto [m, p] = basis.pair_sites[i];
    h2(i, i) = model.energies_cm1(m) + model.energies_cm1(p);
    for (int j = i + 1; j < npair; ++j) {
      const auto [q, r] = basis.pair_sites[j];
      // pairs sharing one site inherit the coupling of the differing sites
      if (m == q) h2(i, j) = model.couplings_cm1(p, r);
      else if (m == r) h2(i, j) = model.couplings_cm1(p, q);
      else if (p == q) h2(i, j) = model.couplings_cm1(m, r);
      else if (p == r) h2(i, j) = model.couplings_cm1(m, q);
      h2(j, i) = h2(i, j);
    }
  }
  if (npair > 0) {
    Eigen::SelfAdjointEigenSolver<RMat> es2(h2);
    if (es2.info() != Eigen::Success)
      throw NumericalError("diagonalize: two-exciton eigensolver failed");
    basis.two_exciton_energies = es2.eigenvalues();
    basis.pair_rotation = es2.eigenvectors();
    canonicalize_columns(basis.two_exciton_energies, basis.pair_rotation);
  } else {
    basis.two_exciton_energies.resize(0);
    basis.pair_rotation.resize(0, 0);
  }

  basis.dipoles_g_to_1 = basis.rotation.transpose() * model.dipoles;

  basis.dipoles_1_to_2.resize(n);
  for (int a = 0; a < n; ++a) {
    DipoleList d = DipoleList::Zero(npair, 3);
    for (int f = 0; f < npair; ++f) {
      Eigen::RowVector3d acc = Eigen::RowVector3d::Zero();
      for (int i = 0; i < npair; ++i) {
        const auto [m, p] = basis.pair_sites[i];
        acc += basis.pair_rotation(i, f) *
               (basis.rotation(m, a) * model.dipoles.row(p) +
                basis.rotation(p, a) * model.dipoles.row(m));
      }
      d.row(f) = acc;
    }
    basis.dipoles_1_to_2[a] = d;
  }

  return basis;
}

SiteModel sample_member(const SiteModel& model, const EnsembleSpec& spec, int index) {
  SiteModel out = model;
  Rng rng = Rng::fork(spec.seed, static_cast<std::uint64_t>(index));
  const int n = model.n_sites();
  for (int m = 0; m < n; ++m)
    out.energies_cm1(m) += model.disorder_sigma_cm1 * rng.gaussian();
  if (spec.uncertainty.site_sigma_cm1 > 0.0) {
    for (int m = 0; m < n; ++m)
      out.energies_cm1(m) += spec.uncertainty.site_sigma_cm1 * rng.gaussian();
  }
  if (spec.uncertainty.coupling_relative_sigma > 0.0) {
    for (int m = 0; m < n; ++m) {
      for (int p = m + 1; p < n; ++p) {
        const double dj = spec.uncertainty.coupling_relative_sigma *
                          std::abs(model.couplings_cm1(m, p)) * rng.gaussian();
        out.couplings_cm1(m, p) += dj;
        out.couplings_cm1(p, m) = out.couplings_cm1(m, p);
      }
    }
  }
  return out;
}

std::vector<SiteModel> sample_ensemble(const SiteModel& model, const EnsembleSpec& spec) {
  model.validate();
  if (spec.n_samples < 1) throw ConfigError("ensemble: need n_samples >= 1");
  std::vector<SiteModel> out;
  out.reserve(spec.n_samples);
  for (int i = 0; i < spec.n_samples; ++i) out.push_back(sample_member(model, spec, i));
  return out;
}

SiteModel lab_frame_dipoles(const SiteModel& model, const Eigen::Matrix3d& rotation) {
  const double ortho = (rotation.transpose() * rotation - Eigen::Matrix3d::Identity())
                           .cwiseAbs()
                           .maxCoeff();
  if (ortho > 1e-10 || rotation.determinant() < 0.0)
    throw ConfigError("lab_frame_dipoles: not a proper rotation");
  SiteModel out = model;
  out.dipoles = model.dipoles * rotation.transpose();
  return out;
}

}  // namespace pptomo

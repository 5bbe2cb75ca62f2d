#include "pptomo/response.hpp"

#include <cmath>

#include "pptomo/units.hpp"

namespace pptomo {

namespace {
const cdouble kI(0.0, 1.0);
}

LiouvilleBasis::LiouvilleBasis(int n_levels) : n_(n_levels) {
  if (n_ < 1) throw ConfigError("liouville basis: need n >= 1");
  elems_.reserve(n_ * n_);
  for (int a = 0; a < n_; ++a)
    elems_.push_back({Kind::Population, a, a, "p" + std::to_string(a)});
  for (int a = 0; a < n_; ++a) {
    for (int b = a + 1; b < n_; ++b) {
      const std::string ab = std::to_string(a) + std::to_string(b);
      elems_.push_back({Kind::CoherenceX, a, b, "x" + ab});
      elems_.push_back({Kind::CoherenceY, a, b, "y" + ab});
    }
  }
}

CMat LiouvilleBasis::matrix(int k) const {
  const Element& e = elems_.at(k);
  CMat m = CMat::Zero(n_, n_);
  switch (e.kind) {
    case Kind::Population:
      m(e.a, e.a) = 1.0;
      break;
    case Kind::CoherenceX:
      m(e.a, e.b) = 1.0;
      m(e.b, e.a) = 1.0;
      break;
    case Kind::CoherenceY:
      m(e.a, e.b) = kI;
      m(e.b, e.a) = -kI;
      break;
  }
  return m;
}

RVec LiouvilleBasis::coefficients(const CMat& rho) const {
  if (rho.rows() != n_ || rho.cols() != n_)
    throw ConfigError("liouville basis: state dimension mismatch");
  RVec c(dim());
  for (int k = 0; k < dim(); ++k) {
    const Element& e = elems_[k];
    switch (e.kind) {
      case Kind::Population:   c(k) = rho(e.a, e.a).real(); break;
      case Kind::CoherenceX:   c(k) = rho(e.a, e.b).real(); break;
      case Kind::CoherenceY:   c(k) = rho(e.a, e.b).imag(); break;
    }
  }
  return c;
}

CMat LiouvilleBasis::compose(const RVec& coeffs) const {
  if (coeffs.size() != dim()) throw ConfigError("liouville basis: coefficient count");
  CMat rho = CMat::Zero(n_, n_);
  for (int k = 0; k < dim(); ++k) rho += coeffs(k) * matrix(k);
  return rho;
}

PumpProbeOperator build_operator(const ExcitonBasis& basis, const RedfieldRates& rates,
                                 const RVec& grid_cm1, const Eigen::Vector3d& pol_probe,
                                 const Eigen::Vector3d& pol_signal) {
  if (!strictly_increasing(grid_cm1))
    throw ConfigError("build_operator: grid must be strictly increasing");
  const int n = basis.n_one();
  const int nf = basis.n_two();
  const int nw = static_cast<int>(grid_cm1.size());
  const LiouvilleBasis lb(n);

  const RVec pg = basis.projections_g_to_1(pol_probe);
  const RVec sg = basis.projections_g_to_1(pol_signal);
  const RMat pf = basis.projections_1_to_2(pol_probe);   // (a, F)
  const RMat sf = basis.projections_1_to_2(pol_signal);

  PumpProbeOperator op;
  op.grid_cm1 = grid_cm1;
  op.rows.resize(nw, lb.dim());

  CVec fge(n);
  CMat m(n, n);
  for (int iw = 0; iw < nw; ++iw) {
    const double w = grid_cm1(iw) * k_cm1_to_radfs;
    cdouble gsb = 0.0;
    for (int a = 0; a < n; ++a) {
      fge(a) = 1.0 / (kI * (basis.one_exciton_energies(a) * k_cm1_to_radfs - w) -
                      rates.gamma_g1(a));
      gsb += sg(a) * pg(a) * fge(a);
    }
    // M_ab: stimulated pathway resonant at e_a, minus excited-state
    // absorption resonant at w_F - e_b carrying the |F><b| coherence rate
    for (int a = 0; a < n; ++a) {
      for (int b = 0; b < n; ++b) {
        cdouble esa = 0.0;
        for (int f = 0; f < nf; ++f) {
          const double w0 = (basis.two_exciton_energies(f) - basis.one_exciton_energies(b)) *
                            k_cm1_to_radfs;
          esa += pf(a, f) * sf(b, f) / (kI * (w0 - w) - rates.gamma_12(b, f));
        }
        m(a, b) = sg(a) * pg(b) * fge(a) - esa;
      }
    }
    for (int k = 0; k < lb.dim(); ++k) {
      const auto& e = lb.element(k);
      cdouble acc = 0.0;
      switch (e.kind) {
        case LiouvilleBasis::Kind::Population:
          acc = gsb + m(e.a, e.a);
          break;
        case LiouvilleBasis::Kind::CoherenceX:
          acc = m(e.a, e.b) + m(e.b, e.a);
          break;
        case LiouvilleBasis::Kind::CoherenceY:
          acc = kI * m(e.a, e.b) - kI * m(e.b, e.a);
          break;
      }
      op.rows(iw, k) = kI * acc;
    }
  }
  return op;
}

PumpProbeOperator dimer_projector_analytic(const ExcitonBasis& basis,
                                           const RedfieldRates& rates, const RVec& grid_cm1,
                                           const Eigen::Vector3d& pol) {
  if (basis.n_one() != 2) throw ConfigError("dimer projector: need a two-site model");
  if (!strictly_increasing(grid_cm1))
    throw ConfigError("dimer projector: grid must be strictly increasing");

  // ascending-energy basis: index 1 = upper exciton (alpha), 0 = lower (beta)
  const double ea = basis.one_exciton_energies(1) * k_cm1_to_radfs;
  const double eb = basis.one_exciton_energies(0) * k_cm1_to_radfs;
  const double mu_a = basis.dipoles_g_to_1.row(1).dot(pol);
  const double mu_b = basis.dipoles_g_to_1.row(0).dot(pol);
  const double mu_af = basis.dipoles_1_to_2[1].row(0).dot(pol);
  const double mu_bf = basis.dipoles_1_to_2[0].row(0).dot(pol);
  const cdouble g_ga = rates.gamma_g1(1), g_gb = rates.gamma_g1(0);
  const cdouble g_fa = rates.gamma_12(1, 0), g_fb = rates.gamma_12(0, 0);

  PumpProbeOperator op;
  op.grid_cm1 = grid_cm1;
  op.rows.resize(grid_cm1.size(), 4);
  for (int iw = 0; iw < grid_cm1.size(); ++iw) {
    const double w = grid_cm1(iw) * k_cm1_to_radfs;
    const cdouble fa = 1.0 / (kI * (ea - w) - g_ga);
    const cdouble fb = 1.0 / (kI * (eb - w) - g_gb);
    // the doubly-excited state sits at e_alpha + e_beta, so the upward
    // transition from beta is resonant at e_alpha and vice versa
    const cdouble fpa = 1.0 / (kI * (ea - w) - g_fb);
    const cdouble fpb = 1.0 / (kI * (eb - w) - g_fa);
    const cdouble r0 =
        mu_af * mu_af * fpb + mu_bf * mu_bf * fpa - 3.0 * (mu_a * mu_a * fa + mu_b * mu_b * fb);
    const cdouble r1 =
        mu_af * mu_bf * (fpa + fpb) - mu_a * mu_b * (fa + fb);
    const cdouble r2 =
        kI * (mu_a * mu_b * (fa - fb) - mu_af * mu_bf * (fpa - fpb));
    const cdouble r3 =
        mu_af * mu_af * fpb - mu_bf * mu_bf * fpa - mu_a * mu_a * fa + mu_b * mu_b * fb;
    op.rows(iw, 0) = -0.5 * kI * r0;
    op.rows(iw, 1) = -0.5 * kI * r1;
    op.rows(iw, 2) = -0.5 * kI * r2;
    op.rows(iw, 3) = -0.5 * kI * r3;
  }
  return op;
}

DimerIsotropicParams dimer_isotropic_params(const SiteModel& model,
                                            const ExcitonBasis& basis,
                                            const RedfieldRates& rates) {
  if (model.n_sites() != 2) throw ConfigError("dimer projector: need a two-site model");
  DimerIsotropicParams p;
  p.theta = basis.mixing_angle;
  const double n1 = model.dipoles.row(0).norm();
  const double n2 = model.dipoles.row(1).norm();
  if (n1 <= 0.0) throw ConfigError("dimer projector: first site dipole must be nonzero");
  p.delta = n2 / n1;
  p.cos_phi = (n2 > 0.0) ? model.dipoles.row(0).dot(model.dipoles.row(1)) / (n1 * n2) : 1.0;
  p.d1_norm2 = n1 * n1;
  p.e_alpha_cm1 = basis.one_exciton_energies(1);
  p.e_beta_cm1 = basis.one_exciton_energies(0);
  p.gamma_ga = rates.gamma_g1(1);
  p.gamma_gb = rates.gamma_g1(0);
  p.gamma_fa = rates.gamma_12(1, 0);
  p.gamma_fb = rates.gamma_12(0, 0);
  return p;
}

PumpProbeOperator dimer_projector_isotropic(const DimerIsotropicParams& p,
                                            const RVec& grid_cm1) {
  if (!strictly_increasing(grid_cm1))
    throw ConfigError("dimer projector: grid must be strictly increasing");
  const double wa = p.e_alpha_cm1 * k_cm1_to_radfs;
  const double wb = p.e_beta_cm1 * k_cm1_to_radfs;
  const double s2 = std::sin(2.0 * p.theta), c2 = std::cos(2.0 * p.theta);
  const double st = std::sin(p.theta), ct = std::cos(p.theta);
  const double d = p.delta, cp = p.cos_phi;
  const double a = ct * ct + d * d * st * st;
  const double b = st * st + d * d * ct * ct;

  PumpProbeOperator op;
  op.grid_cm1 = grid_cm1;
  op.rows.resize(grid_cm1.size(), 4);
  const double pref = p.d1_norm2 / 3.0;
  for (int iw = 0; iw < grid_cm1.size(); ++iw) {
    const double w = grid_cm1(iw) * k_cm1_to_radfs;
    const cdouble fa = 1.0 / (kI * (wa - w) - p.gamma_ga);
    const cdouble fb = 1.0 / (kI * (wb - w) - p.gamma_gb);
    const cdouble fpa = 1.0 / (kI * (wa - w) - p.gamma_fb);
    const cdouble fpb = 1.0 / (kI * (wb - w) - p.gamma_fa);
    const cdouble r0 = a * (fpa - 3.0 * fa) + b * (fpb - 3.0 * fb) +
                       d * s2 * cp * (-fpa + fpb - 3.0 * fa + 3.0 * fb);
    const cdouble r1 = -0.5 * (d * d - 1.0) * s2 * (fpa + fpb + fa + fb) +
                       d * c2 * cp * (fpa + fpb - fa - fb);
    const cdouble r2 = kI * (0.5 * (d * d - 1.0) * s2 * (fpa - fpb + fa - fb) +
                             d * c2 * cp * (-fpa + fpb + fa - fb));
    const cdouble r3 = -a * (fpa + fa) + b * (fpb + fb) + d * s2 * cp * (fpa + fpb - fa - fb);
    op.rows(iw, 0) = -0.5 * kI * pref * r0;
    op.rows(iw, 1) = -0.5 * kI * pref * r1;
    op.rows(iw, 2) = -0.5 * kI * pref * r2;
    op.rows(iw, 3) = -0.5 * kI * pref * r3;
  }
  return op;
}

PumpProbeOperator dimer_projector_isotropic(const SiteModel& model,
                                            const ExcitonBasis& basis,
                                            const RedfieldRates& rates,
                                            const RVec& grid_cm1) {
  return dimer_projector_isotropic(dimer_isotropic_params(model, basis, rates), grid_cm1);
}

PumpProbeOperator magic_angle_average(const ExcitonBasis& basis, const RedfieldRates& rates,
                                      const RVec& grid_cm1) {
  PumpProbeOperator op;
  for (int k = 0; k < 3; ++k) {
    const Eigen::Vector3d e = Eigen::Vector3d::Unit(k);
    PumpProbeOperator part = build_operator(basis, rates, grid_cm1, e, e);
    if (k == 0) op = part;
    else op.rows += part.rows;
  }
  op.rows /= 3.0;
  return op;
}

PumpProbeOperator to_bloch_components(const PumpProbeOperator& op_liouville) {
  if (op_liouville.rows.cols() != 4)
    throw ConfigError("bloch conversion: need a two-level operator");
  // components (p_lower, p_upper, X, Y) -> (r0, r1, r2, r3)
  PumpProbeOperator op;
  op.grid_cm1 = op_liouville.grid_cm1;
  op.rows.resize(op_liouville.rows.rows(), 4);
  op.rows.col(0) = 0.5 * (op_liouville.rows.col(0) + op_liouville.rows.col(1));
  op.rows.col(1) = 0.5 * op_liouville.rows.col(2);
  op.rows.col(2) = 0.5 * op_liouville.rows.col(3);
  op.rows.col(3) = 0.5 * (op_liouville.rows.col(1) - op_liouville.rows.col(0));
  return op;
}

Eigen::Vector4d bloch_components(const CMat& rho) {
  if (rho.rows() != 2 || rho.cols() != 2)
    throw ConfigError("bloch components: need a 2x2 matrix");
  // ascending basis: index 1 = upper; rho_{alpha,beta} = rho(1,0)
  return {rho(0, 0).real() + rho(1, 1).real(), 2.0 * rho(1, 0).real(),
          -2.0 * rho(1, 0).imag(), rho(1, 1).real() - rho(0, 0).real()};
}

CMat bloch_to_matrix(const Eigen::Vector4d& r) {
  CMat rho(2, 2);
  rho(1, 1) = 0.5 * (r(0) + r(3));
  rho(0, 0) = 0.5 * (r(0) - r(3));
  rho(1, 0) = 0.5 * cdouble(r(1), -r(2));
  rho(0, 1) = std::conj(rho(1, 0));
  return rho;
}

std::vector<SpeciesSpectrum> species_spectra(const PumpProbeOperator& op,
                                             const std::vector<std::string>& labels) {
  if (static_cast<int>(labels.size()) != op.rows.cols())
    throw ConfigError("species spectra: one label per component");
  std::vector<SpeciesSpectrum> out;
  out.reserve(labels.size());
  for (int k = 0; k < op.rows.cols(); ++k)
    out.push_back({labels[k], op.rows.col(k)});
  return out;
}

}  // namespace pptomo

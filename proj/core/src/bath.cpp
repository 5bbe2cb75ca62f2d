#include "pptomo/bath.hpp"

#include <cmath>
#include <functional>
#include <vector>

#include "pptomo/units.hpp"

namespace pptomo {

void BathSpec::validate() const {
  if (reorg_cm1 < 0.0) throw ConfigError("bath: reorganization energy must be >= 0");
  if (cutoff_cm1 <= 0.0) throw ConfigError("bath: cutoff frequency must be > 0");
  if (temperature_K <= 0.0) throw ConfigError("bath: temperature must be > 0");
}

double spectral_density(const BathSpec& bath, double w_cm1) {
  if (w_cm1 < 0.0) throw ConfigError("spectral_density: negative frequency");
  return (bath.reorg_cm1 / bath.cutoff_cm1) * w_cm1 * std::exp(-w_cm1 / bath.cutoff_cm1);
}

double bath_correlation(const BathSpec& bath, double w_cm1) {
  bath.validate();
  const double kt = k_boltzmann_cm1 * bath.temperature_K;
  if (w_cm1 == 0.0) return 2.0 * bath.reorg_cm1 * kt / bath.cutoff_cm1;
  const double aw = std::abs(w_cm1);
  const double nbar = 1.0 / std::expm1(aw / kt);
  const double j = spectral_density(bath, aw);
  return (w_cm1 > 0.0) ? 2.0 * j * (nbar + 1.0) : 2.0 * j * nbar;
}

RVec equilibrium_populations(const RVec& energies_cm1, double temperature_K) {
  if (temperature_K <= 0.0) throw ConfigError("equilibrium: temperature must be > 0");
  const double kt = k_boltzmann_cm1 * temperature_K;
  // shift by the minimum for overflow safety
  RVec p = (-(energies_cm1.array() - energies_cm1.minCoeff()) / kt).exp();
  return p / p.sum();
}

namespace {

// population generator over any manifold given site-occupation amplitudes
// n_m(a,b); k(a->b) = 2*pi * sum_m n_m(a,b)^2 * C(e_a - e_b) in fs^-1
RMat population_generator(const RVec& energies,
                          const std::function<double(int, int, int)>& site_amp,
                          int n_states, int n_sites, const BathSpec& bath) {
  RMat g = RMat::Zero(n_states, n_states);
  for (int a = 0; a < n_states; ++a) {
    for (int b = 0; b < n_states; ++b) {
      if (a == b) continue;
      double overlap = 0.0;
      for (int m = 0; m < n_sites; ++m) {
        const double amp = site_amp(m, a, b);
        overlap += amp * amp;
      }
      g(a, b) = 2.0 * k_pi * overlap * bath_correlation(bath, energies(a) - energies(b)) *
                k_cm1_to_radfs;
    }
    g(a, a) = -g.row(a).sum();
  }
  return g;
}

}  // namespace

RedfieldRates redfield_rates(const ExcitonBasis& basis, const BathSpec& bath,
                             const DephasingClosure& closure) {
  bath.validate();
  const int n = basis.n_one();
  const int npair = basis.n_two();

  RedfieldRates rates;
  rates.one_exciton_energies = basis.one_exciton_energies;
  rates.two_exciton_energies = basis.two_exciton_energies;
  rates.temperature_K = bath.temperature_K;

  rates.pop_generator_one = population_generator(
      basis.one_exciton_energies,
      [&](int m, int a, int b) { return basis.rotation(m, a) * basis.rotation(m, b); }, n,
      n, bath);

  rates.pop_generator_two = population_generator(
      basis.two_exciton_energies,
      [&](int m, int f, int g) {
        double amp = 0.0;
        for (std::size_t p = 0; p < basis.pair_sites.size(); ++p) {
          if (basis.pair_sites[p].first == m || basis.pair_sites[p].second == m) {
            const auto pi = static_cast<Eigen::Index>(p);
            amp += basis.pair_rotation(pi, f) * basis.pair_rotation(pi, g);
          }
        }
        return amp;
      },
      npair, n, bath);

  const double c0 = bath_correlation(bath, 0.0) * k_cm1_to_radfs;
  auto pure_dephasing = [&](const RVec& qa, const RVec& qb) {
    const RVec d = qb - qa;
    return (closure.independent * d.squaredNorm() + closure.correlated * d.sum() * d.sum()) *
           c0;
  };

  std::vector<RVec> q1(n), q2(npair);
  for (int a = 0; a < n; ++a) {
    q1[a].resize(n);
    for (int m = 0; m < n; ++m) q1[a](m) = basis.site_weight_one(m, a);
  }
  for (int f = 0; f < npair; ++f) {
    q2[f].resize(n);
    for (int m = 0; m < n; ++m) q2[f](m) = basis.site_weight_two(m, f);
  }
  const RVec qg = RVec::Zero(n);

  rates.gamma_g1.resize(n);
  rates.gamma_11 = CMat::Zero(n, n);
  rates.gamma_12.resize(n, npair);
  for (int a = 0; a < n; ++a) {
    const double half_a = 0.5 * rates.depopulation_one(a);
    rates.gamma_g1(a) = half_a + pure_dephasing(qg, q1[a]);
    for (int b = 0; b < n; ++b) {
      if (b == a) continue;
      rates.gamma_11(a, b) =
          half_a + 0.5 * rates.depopulation_one(b) + pure_dephasing(q1[a], q1[b]);
    }
    for (int f = 0; f < npair; ++f) {
      rates.gamma_12(a, f) =
          half_a + 0.5 * rates.depopulation_two(f) + pure_dephasing(q1[a], q2[f]);
    }
  }

  return rates;
}

std::complex<double> propagator_factor(std::complex<double> gamma_per_fs, double w0_cm1,
                                       double w_cm1) {
  if (gamma_per_fs.real() <= 0.0)
    throw ConfigError("propagator_factor: need Re(gamma) > 0");
  const std::complex<double> i(0.0, 1.0);
  return 1.0 / (i * ((w0_cm1 - w_cm1) * k_cm1_to_radfs) - gamma_per_fs);
}

}  // namespace pptomo

#include "pptomo/forward.hpp"

#include <algorithm>
#include <cmath>

#include "pptomo/units.hpp"

namespace pptomo {

namespace {
const cdouble kI(0.0, 1.0);
}

void Pulse::validate() const {
  if (tabulated()) {
    if (envelope_times_fs.size() != envelope_values.size() || envelope_times_fs.size() < 2)
      throw ConfigError("pulse: tabulated envelope needs matching time/value arrays");
    if (!strictly_increasing(envelope_times_fs))
      throw ConfigError("pulse: tabulated envelope times must increase");
  } else if (!(fwhm_fs > 0.0)) {
    throw ConfigError("pulse: need fwhm > 0");
  }
  if (amplitude < 0.0) throw ConfigError("pulse: need amplitude >= 0");
}

double Pulse::envelope(double t_fs) const {
  if (tabulated()) {
    const int n = static_cast<int>(envelope_times_fs.size());
    if (t_fs <= envelope_times_fs(0) || t_fs >= envelope_times_fs(n - 1)) return 0.0;
    int lo = 0, hi = n - 1;
    while (hi - lo > 1) {
      const int mid = (lo + hi) / 2;
      (envelope_times_fs(mid) <= t_fs ? lo : hi) = mid;
    }
    const double f = (t_fs - envelope_times_fs(lo)) /
                     (envelope_times_fs(hi) - envelope_times_fs(lo));
    return amplitude * ((1.0 - f) * envelope_values(lo) + f * envelope_values(hi));
  }
  const double x = t_fs / fwhm_fs;
  return amplitude * std::exp(-4.0 * std::log(2.0) * x * x);
}

double Pulse::time_integral() const {
  if (tabulated()) {
    double acc = 0.0;
    for (int i = 1; i < envelope_times_fs.size(); ++i)
      acc += 0.5 * (envelope_values(i) + envelope_values(i - 1)) *
             (envelope_times_fs(i) - envelope_times_fs(i - 1));
    return amplitude * acc;
  }
  return amplitude * std::sqrt(2.0 * k_pi) * sigma_t();
}

double Pulse::spectrum(double w_cm1) const {
  const double dw = (w_cm1 - center_cm1) * k_cm1_to_radfs;
  if (tabulated()) {
    // cosine transform; tabulated envelopes are taken time-symmetric
    double acc = 0.0;
    for (int i = 1; i < envelope_times_fs.size(); ++i) {
      const double t0 = envelope_times_fs(i - 1), t1 = envelope_times_fs(i);
      acc += 0.5 * (t1 - t0) *
             (envelope_values(i) * std::cos(dw * t1) +
              envelope_values(i - 1) * std::cos(dw * t0));
    }
    return amplitude * acc;
  }
  const double s = sigma_t();
  return time_integral() * std::exp(-0.5 * dw * dw * s * s);
}

void ExperimentGrid::validate() const {
  if (probe_freqs_cm1.size() < 2 || !strictly_increasing(probe_freqs_cm1))
    throw ConfigError("experiment grid: probe frequencies must strictly increase");
  if (delays_fs.size() < 2 || !strictly_increasing(delays_fs))
    throw ConfigError("experiment grid: delays must strictly increase");
  const double dt = delays_fs(1) - delays_fs(0);
  for (int i = 2; i < delays_fs.size(); ++i)
    if (std::abs(delays_fs(i) - delays_fs(i - 1) - dt) > 1e-9 * dt)
      throw ConfigError("experiment grid: delays must be uniform");
}

ExperimentGrid default_experiment_grid(double carrier_cm1) {
  ExperimentGrid g;
  g.probe_freqs_cm1 = linspace(12500.0, 13100.0, 181);
  g.delays_fs = linspace(50.0, 1000.0, 140);
  g.rotating_frame_cm1 = carrier_cm1;
  return g;
}

namespace {

// spectral decomposition of the population generator, for closed-form
// relaxation over arbitrary (possibly negative) time offsets
class Relaxer {
 public:
  explicit Relaxer(const RMat& generator) {
    const Eigen::Index n = generator.rows();
    if (n == 0) return;
    Eigen::EigenSolver<RMat> es(generator.transpose());
    if (es.info() != Eigen::Success)
      throw NumericalError("pump propagation: population generator decomposition failed");
    v_ = es.eigenvectors();
    lam_ = es.eigenvalues();
    vinv_ = v_.inverse();
  }

  CVec apply(const CVec& p, double dt) const {
    if (p.size() == 0) return p;
    CVec c = vinv_ * p;
    for (int i = 0; i < c.size(); ++i) c(i) *= std::exp(lam_(i) * dt);
    return v_ * c;
  }

 private:
  CMat v_, vinv_;
  CVec lam_;
};

enum class SourceMode { PumpProbe, PhotonEcho };

PumpStateTrajectory march_second_order(const ExcitonBasis& basis, const RedfieldRates& rates,
                                       const Pulse& drive, const Pulse& source_pulse,
                                       const Eigen::Vector3d& pol, const RVec& times_fs,
                                       const PumpOptions& opt, SourceMode mode) {
  drive.validate();
  source_pulse.validate();
  if (!strictly_increasing(times_fs))
    throw ConfigError("pump: requested times must strictly increase");
  const int n = basis.n_one();

  const double frame = drive.center_cm1;
  RVec det(n);
  for (int a = 0; a < n; ++a)
    det(a) = (basis.one_exciton_energies(a) - frame) * k_cm1_to_radfs;

  const double fw = drive.tabulated()
                        ? (drive.envelope_times_fs(drive.envelope_times_fs.size() - 1) -
                           drive.envelope_times_fs(0)) / 2.0
                        : std::max(drive.fwhm_fs, source_pulse.fwhm_fs);
  // Nyquist guard: the substep must resolve detunings plus pulse bandwidth
  const double w_chk = det.cwiseAbs().maxCoeff() + 2.0 * k_pi / fw;
  if (!(opt.dt_max_fs > 0.0) || opt.dt_max_fs >= k_pi / w_chk)
    throw ConfigError("pump: integration step too coarse for the detuning span");

  const double t_start = -4.0 * fw, t_end = 4.0 * fw;
  std::vector<double> march_pts{t_start};
  for (int i = 0; i < times_fs.size(); ++i)
    if (times_fs(i) > t_start && times_fs(i) < t_end) march_pts.push_back(times_fs(i));
  march_pts.push_back(t_end);

  const RVec mu = basis.projections_g_to_1(pol);
  CVec kcoh(n);
  for (int a = 0; a < n; ++a) kcoh(a) = kI * det(a) - rates.gamma_g1(a);

  // frame offset of the source pulse relative to the drive
  const double src_det = (source_pulse.center_cm1 - drive.center_cm1) * k_cm1_to_radfs;
  auto source_env = [&](double t) -> cdouble {
    const cdouble e = source_pulse.envelope(t) * std::exp(-kI * src_det * t);
    return (mode == SourceMode::PhotonEcho) ? std::conj(e) : e;
  };
  auto source_at = [&](double t, const CVec& amp) {
    CMat tmat(n, n);
    const cdouble e2 = 2.0 * source_env(t);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) tmat(a, b) = e2 * mu(a) * mu(b) * amp(a);
    if (mode == SourceMode::PumpProbe) return CMat(tmat + tmat.adjoint());
    return CMat(tmat.adjoint());
  };

  const Relaxer relax(rates.pop_generator_one);
  CMat rho = CMat::Zero(n, n);
  CVec amp = CVec::Zero(n);
  double t_cur = t_start;

  std::vector<std::pair<double, CMat>> interior;
  for (std::size_t ip = 1; ip < march_pts.size(); ++ip) {
    const double t_next = march_pts[ip];
    const int nsub = std::max(1, static_cast<int>(std::ceil((t_next - t_cur) / opt.dt_max_fs)));
    const double dts = (t_next - t_cur) / nsub;
    CVec efac(n);
    for (int a = 0; a < n; ++a) efac(a) = std::exp(kcoh(a) * dts);
    CMat cfac(n, n);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        cfac(a, b) = std::exp((-kI * (basis.one_exciton_energies(a) -
                                      basis.one_exciton_energies(b)) * k_cm1_to_radfs -
                               rates.gamma_11(a, b)) * dts);
    for (int js = 0; js < nsub; ++js) {
      const double t0 = t_cur + js * dts, t1 = t0 + dts;
      const double e0 = drive.envelope(t0), e1 = drive.envelope(t1);
      const CMat s0 = source_at(t0, amp);
      for (int a = 0; a < n; ++a) amp(a) = efac(a) * amp(a) + 0.5 * dts * (e1 + efac(a) * e0);
      CVec pops = relax.apply(rho.diagonal(), dts);
      rho = rho.cwiseProduct(cfac);
      rho.diagonal() = pops;
      rho += 0.5 * dts * (source_at(t1, amp) + s0);
    }
    t_cur = t_next;
    if (t_next < t_end) interior.emplace_back(t_next, rho);
  }

  PumpStateTrajectory traj;
  traj.times_fs = times_fs;
  traj.states.resize(times_fs.size());

  auto free_from_end = [&](double t) {
    const double dt = t - t_cur;
    CMat out = rho;
    CVec pops = relax.apply(rho.diagonal(), dt);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        if (a != b)
          out(a, b) *= std::exp((-kI * (basis.one_exciton_energies(a) -
                                        basis.one_exciton_energies(b)) * k_cm1_to_radfs -
                                 rates.gamma_11(a, b)) * dt);
    out.diagonal() = pops;
    return out;
  };

  for (int i = 0; i < times_fs.size(); ++i) {
    const double t = times_fs(i);
    if (opt.free_continuation) {
      traj.states[i] = free_from_end(t);
    } else if (t <= t_start) {
      traj.states[i] = CMat::Zero(n, n);
    } else if (t < t_end) {
      auto it = std::find_if(interior.begin(), interior.end(),
                             [&](const auto& kv) { return kv.first == t; });
      traj.states[i] = (it != interior.end()) ? it->second : CMat::Zero(n, n);
    } else {
      traj.states[i] = free_from_end(t);
    }
  }

  if (n == 2) {
    traj.bloch.resize(times_fs.size(), 4);
    for (int i = 0; i < times_fs.size(); ++i)
      traj.bloch.row(i) = bloch_components(traj.states[i]).transpose();
  }
  return traj;
}

}  // namespace

PumpStateTrajectory pump_second_order(const ExcitonBasis& basis, const RedfieldRates& rates,
                                      const Pulse& pump, const Eigen::Vector3d& pol,
                                      const RVec& times_fs, const PumpOptions& opt) {
  return march_second_order(basis, rates, pump, pump, pol, times_fs, opt,
                            SourceMode::PumpProbe);
}

PumpStateTrajectory photon_echo_second_order(const ExcitonBasis& basis,
                                             const RedfieldRates& rates, const Pulse& pulse1,
                                             const Pulse& pulse2, const Eigen::Vector3d& pol,
                                             const RVec& times_fs, const PumpOptions& opt) {
  return march_second_order(basis, rates, pulse1, pulse2, pol, times_fs, opt,
                            SourceMode::PhotonEcho);
}

namespace {

RVec trapezoid_weights_grid(const RVec& taus) {
  const int n = static_cast<int>(taus.size());
  if (n < 2) throw ConfigError("probe kernel: need at least two tau points");
  RVec w(n);
  w(0) = 0.5 * (taus(1) - taus(0));
  w(n - 1) = 0.5 * (taus(n - 1) - taus(n - 2));
  for (int j = 1; j < n - 1; ++j) w(j) = 0.5 * (taus(j + 1) - taus(j - 1));
  return w;
}

}  // namespace

CVec polarization(const ResponseSurface& response, const Pulse& probe, double delay_fs,
                  double rotating_frame_cm1) {
  probe.validate();
  if (!strictly_increasing(response.taus_fs))
    throw ConfigError("polarization: tau grid must strictly increase");
  const double sup = probe.support_fs();
  if (response.taus_fs(0) > delay_fs - sup ||
      response.taus_fs(response.taus_fs.size() - 1) < delay_fs + sup)
    throw ConfigError("polarization: response grid does not cover the kernel support");

  const RVec w = trapezoid_weights_grid(response.taus_fs);
  CVec out(response.freqs_cm1.size());
  for (int iw = 0; iw < response.freqs_cm1.size(); ++iw) {
    const double dw = (response.freqs_cm1(iw) - rotating_frame_cm1) * k_cm1_to_radfs;
    cdouble acc = 0.0;
    for (int j = 0; j < response.taus_fs.size(); ++j) {
      const double dt = response.taus_fs(j) - delay_fs;
      acc += w(j) * probe.envelope(dt) * std::exp(kI * dw * dt) * response.values(iw, j);
    }
    out(iw) = acc;
  }
  return out;
}

std::vector<CMat> probe_kernels(const RVec& freqs_cm1, const RVec& delays_fs,
                                const RVec& taus_fs, const Pulse& probe,
                                double rotating_frame_cm1) {
  probe.validate();
  const RVec w = trapezoid_weights_grid(taus_fs);
  const int n_t = static_cast<int>(delays_fs.size());
  const int n_tau = static_cast<int>(taus_fs.size());

  RMat env(n_t, n_tau), dmat(n_t, n_tau);
  for (int i = 0; i < n_t; ++i) {
    for (int j = 0; j < n_tau; ++j) {
      dmat(i, j) = taus_fs(j) - delays_fs(i);
      env(i, j) = w(j) * probe.envelope(dmat(i, j));
    }
  }
  std::vector<CMat> out;
  out.reserve(freqs_cm1.size());
  for (int iw = 0; iw < freqs_cm1.size(); ++iw) {
    const double dw = (freqs_cm1(iw) - rotating_frame_cm1) * k_cm1_to_radfs;
    CMat a(n_t, n_tau);
    for (int i = 0; i < n_t; ++i)
      for (int j = 0; j < n_tau; ++j)
        a(i, j) = env(i, j) * std::exp(kI * dw * dmat(i, j));
    out.push_back(std::move(a));
  }
  return out;
}

RMat heterodyne(const CMat& p3, const Pulse& lo, const RVec& freqs_cm1, double phase) {
  if (p3.rows() != freqs_cm1.size())
    throw ConfigError("heterodyne: polarization rows must match the frequency grid");
  const cdouble rot = std::exp(kI * phase);
  RMat s(p3.rows(), p3.cols());
  for (int iw = 0; iw < p3.rows(); ++iw) {
    const double elo = lo.spectrum(freqs_cm1(iw));
    for (int j = 0; j < p3.cols(); ++j)
      s(iw, j) = (p3(iw, j) * elo * rot).imag();
  }
  return s;
}

void add_noise_real(RMat& surface, double rel, Rng& rng) {
  const double sig = rel * surface.cwiseAbs().maxCoeff();
  for (int i = 0; i < surface.rows(); ++i) {
    for (int j = 0; j < surface.cols(); ++j) {
      const double amp = sig * rng.gaussian();
      const double ph = 2.0 * k_pi * rng.uniform();
      surface(i, j) += std::sqrt(2.0) * amp * std::cos(ph);
    }
  }
}

void add_noise_complex(CMat& surface, double rel, Rng& rng) {
  const double sig = rel * surface.cwiseAbs().maxCoeff();
  for (int i = 0; i < surface.rows(); ++i) {
    for (int j = 0; j < surface.cols(); ++j) {
      const double amp = sig * rng.gaussian();
      const double ph = 2.0 * k_pi * rng.uniform();
      surface(i, j) += amp * std::exp(kI * ph);
    }
  }
}

SimulationResult simulate_experiment(const SiteModel& model, const BathSpec& bath,
                                     const Pulse& pump, const Pulse& probe,
                                     const ExperimentGrid& grid, const EnsembleSpec& ensemble,
                                     double noise_rel, std::uint64_t noise_seed,
                                     const DephasingClosure& closure) {
  model.validate();
  bath.validate();
  pump.validate();
  probe.validate();
  grid.validate();
  if (ensemble.n_samples < 1) throw ConfigError("simulate: need n_samples >= 1");

  SimulationResult res;
  res.grid = grid;

  const int n_t = static_cast<int>(grid.delays_fs.size());
  const double dt = grid.delays_fs(1) - grid.delays_fs(0);
  const int n_ext = static_cast<int>(std::ceil(probe.support_fs() / dt));
  res.n_ext = n_ext;
  const int n_tau = n_t + 2 * n_ext;
  res.tau_fs.resize(n_tau);
  for (int j = 0; j < n_tau; ++j) res.tau_fs(j) = grid.delays_fs(0) + (j - n_ext) * dt;

  if (grid.delays_fs(0) < 1.5 * (pump.fwhm_fs + probe.fwhm_fs))
    res.warnings.push_back("pulse-overlap: earliest delay lies inside the combined "
                           "pump/probe support; overlap contributions are not modeled");

  const int n_w = static_cast<int>(grid.probe_freqs_cm1.size());
  res.truth = CMat::Zero(n_w, n_tau);

  const double wsum = 1.0 / ensemble.n_samples;
  for (int is = 0; is < ensemble.n_samples; ++is) {
    const SiteModel member = sample_member(model, ensemble, is);
    const ExcitonBasis basis = diagonalize(member);
    const RedfieldRates rates = redfield_rates(basis, bath, closure);

    if (ensemble.orientation == OrientationMode::IsotropicXyzAverage && member.n_sites() == 2) {
      const PumpProbeOperator rows =
          dimer_projector_isotropic(member, basis, rates, grid.probe_freqs_cm1);
      RMat rbar = RMat::Zero(n_tau, 4);
      for (int k = 0; k < 3; ++k)
        rbar += pump_second_order(basis, rates, pump, Eigen::Vector3d::Unit(k), res.tau_fs)
                    .bloch;
      rbar /= 3.0;
      res.truth += wsum * (rows.rows * rbar.transpose());
    } else {
      const LiouvilleBasis lb(member.n_sites());
      PumpProbeOperator rows;
      RMat cbar;
      if (ensemble.orientation == OrientationMode::IsotropicXyzAverage) {
        rows = magic_angle_average(basis, rates, grid.probe_freqs_cm1);
        cbar = RMat::Zero(n_tau, lb.dim());
        for (int k = 0; k < 3; ++k) {
          const auto traj = pump_second_order(basis, rates, pump,
                                              Eigen::Vector3d::Unit(k), res.tau_fs);
          for (int j = 0; j < n_tau; ++j)
            cbar.row(j) += lb.coefficients(traj.states[j]).transpose();
        }
        cbar /= 3.0;
      } else {
        const Eigen::Vector3d ex = Eigen::Vector3d::UnitX();
        rows = build_operator(basis, rates, grid.probe_freqs_cm1, ex, ex);
        const auto traj = pump_second_order(basis, rates, pump, ex, res.tau_fs);
        cbar = RMat::Zero(n_tau, lb.dim());
        for (int j = 0; j < n_tau; ++j)
          cbar.row(j) = lb.coefficients(traj.states[j]).transpose();
      }
      res.truth += wsum * (rows.rows * cbar.transpose());
    }
  }

  const auto kernels = probe_kernels(grid.probe_freqs_cm1, grid.delays_fs, res.tau_fs, probe,
                                     grid.rotating_frame_cm1);
  res.p3.resize(n_w, n_t);
  for (int iw = 0; iw < n_w; ++iw)
    res.p3.row(iw) = (kernels[iw] * res.truth.row(iw).transpose()).transpose();

  res.s_abs = heterodyne(res.p3, probe, grid.probe_freqs_cm1, 0.0);
  res.s_disp = heterodyne(res.p3, probe, grid.probe_freqs_cm1, 0.5 * k_pi);

  if (noise_rel > 0.0) {
    Rng rng_a = Rng::fork(noise_seed, 0);
    Rng rng_d = Rng::fork(noise_seed, 1);
    add_noise_real(res.s_abs, noise_rel, rng_a);
    add_noise_real(res.s_disp, noise_rel, rng_d);
  }
  return res;
}

}  // namespace pptomo

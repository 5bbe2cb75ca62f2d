#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pptomo/bath.hpp"
#include "pptomo/model.hpp"
#include "pptomo/response.hpp"
#include "pptomo/rng.hpp"
#include "pptomo/util.hpp"

namespace pptomo {

// Laser pulse described by its field envelope. fwhm_fs is the FWHM of the
// field envelope (not the intensity); a tabulated envelope overrides the
// Gaussian shape.
struct Pulse {
  double fwhm_fs = 0.0;
  double center_cm1 = 0.0;
  double amplitude = 1.0;
  RVec envelope_times_fs;   // optional tabulated envelope, sorted
  RVec envelope_values;

  bool tabulated() const { return envelope_times_fs.size() > 0; }
  void validate() const;
  double sigma_t() const { return fwhm_fs / (2.0 * std::sqrt(2.0 * std::log(2.0))); }
  double envelope(double t_fs) const;
  double time_integral() const;            // integral of the envelope, fs
  // envelope transform at frequency w: integral of env(t) e^{i(w-center)t} dt
  double spectrum(double w_cm1) const;
  // half-width of the support actually carried by the simulation kernels
  double support_fs() const { return 3.0 * fwhm_fs; }
};

struct ExperimentGrid {
  RVec probe_freqs_cm1;    // strictly increasing
  RVec delays_fs;          // strictly increasing, uniform
  double rotating_frame_cm1 = 0.0;
  void validate() const;
};

// delays 50 fs - 1 ps, probe 12500-13100 cm^-1, frame at the pulse carrier
ExperimentGrid default_experiment_grid(double carrier_cm1 = 12800.0);

struct PumpOptions {
  double dt_max_fs = 0.5;
  // free: the returned states are the free evolution of the post-pump state
  // over the whole grid (overlap transients excluded); sourced keeps the
  // in-pump transient
  bool free_continuation = true;
};

struct PumpStateTrajectory {
  RVec times_fs;
  std::vector<CMat> states;  // excited-manifold block per time
  // Bloch rows (n_times x 4) for two-level manifolds
  RMat bloch;
};

// Second-order pumped state on the requested delay grid: sourced secular
// master equation marched through the pump window, then propagated freely.
PumpStateTrajectory pump_second_order(const ExcitonBasis& basis, const RedfieldRates& rates,
                                      const Pulse& pump, const Eigen::Vector3d& pol,
                                      const RVec& times_fs, const PumpOptions& opt = {});

// Phase-matched second-order state of a two-pulse photon-echo sequence
// (conjugate first interaction). With pulse1 == pulse2, adding the hermitian
// conjugate ordering recovers pump_second_order.
PumpStateTrajectory photon_echo_second_order(const ExcitonBasis& basis,
                                             const RedfieldRates& rates, const Pulse& pulse1,
                                             const Pulse& pulse2, const Eigen::Vector3d& pol,
                                             const RVec& times_fs,
                                             const PumpOptions& opt = {});

// Probe polarization spectrum at delay t: convolution of the response
// surface with the probe kernel on the surface's tau grid. The grid must
// cover [t - support, t + support].
CVec polarization(const ResponseSurface& response, const Pulse& probe, double delay_fs,
                  double rotating_frame_cm1);

// Discretized probe kernel A(w): delays x tau matrix per frequency, so that
// P3(w, :) = A(w) R(w, :).
std::vector<CMat> probe_kernels(const RVec& freqs_cm1, const RVec& delays_fs,
                                const RVec& taus_fs, const Pulse& probe,
                                double rotating_frame_cm1);

// Heterodyne detection: S = Im[P3 conj(E_LO) e^{i phase}]; phase 0 is the
// absorptive channel, pi/2 the dispersive one.
RMat heterodyne(const CMat& p3, const Pulse& lo, const RVec& freqs_cm1, double phase);

// Additive detection noise with sigma = rel * max |surface|, drawn as
// sqrt(2) * amp * cos(phase) per point (amplitude-noise projection).
void add_noise_real(RMat& surface, double rel, Rng& rng);
void add_noise_complex(CMat& surface, double rel, Rng& rng);

struct SimulationResult {
  ExperimentGrid grid;
  RVec tau_fs;             // extended delay grid carrying the kernel support
  int n_ext = 0;           // extension columns on each side
  CMat truth;              // ensemble response R(w, tau)
  CMat p3;                 // polarization on (w, delay)
  RMat s_abs, s_disp;
  std::vector<std::string> warnings;
};

// Full forward model: disorder ensemble -> isotropic response surface ->
// probe convolution -> heterodyne pair (plus optional detection noise).
SimulationResult simulate_experiment(const SiteModel& model, const BathSpec& bath,
                                     const Pulse& pump, const Pulse& probe,
                                     const ExperimentGrid& grid, const EnsembleSpec& ensemble,
                                     double noise_rel = 0.0, std::uint64_t noise_seed = 0,
                                     const DephasingClosure& closure = {});

}  // namespace pptomo

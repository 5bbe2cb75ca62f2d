#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "pptomo/forward.hpp"
#include "pptomo/response.hpp"
#include "pptomo/util.hpp"

namespace pptomo {

// Measurement map for dimer state reconstruction: the isotropic covector
// sampled at the two exciton frequencies, stacked into a real system
// [Im P_alpha; Im P_beta; Re P_alpha; Re P_beta] over (r0, r1, r2, r3).
struct TomographyPlan {
  double freq_alpha_cm1 = 0.0;  // upper exciton sample frequency
  double freq_beta_cm1 = 0.0;   // lower exciton sample frequency
  double normalization_delay_fs = 10000.0;
  Eigen::Matrix4d m4;                    // full 4-parameter system
  Eigen::Matrix<double, 4, 3> m3;        // r0 column dropped
  double cond4 = 0.0;
  double cond3 = 0.0;
};

struct BlochState {
  double r0 = 0.0;
  Eigen::Vector3d r = Eigen::Vector3d::Zero();  // (r1, r2, r3)
  bool violation = false;  // |r| exceeded r0 on reconstruction
};

struct NormalizationFit {
  double r0 = 0.0;
  double r3 = 0.0;
  bool no_excitation = false;
};

struct TomographyResult {
  RVec taus_fs;
  RMat normalized;   // n x 3: r1/r0, r2/r0, r3/r0
  RVec r0;           // held fixed from the anchor, repeated per delay
  RVec fidelity;     // vs truth; empty when no truth given
  double cond4 = 0.0, cond3 = 0.0;
  bool any_violation = false;
  bool anchor_clamped = false;  // anchor fell outside the delay range
};

// Sample the Bloch-component covector at the exciton frequencies (nearest
// grid rows) and assemble the stacked real system. Throws when the reduced
// 3-parameter system is singular, naming the degeneracy matched.
TomographyPlan build_plan(const PumpProbeOperator& bloch_projector,
                          double e_alpha_cm1, double e_beta_cm1,
                          double normalization_delay_fs = 10000.0);

// Long-delay anchor: with both coherences decayed, solve the two complex
// responses for (r0, r3) alone. r0 is then held fixed at earlier delays.
NormalizationFit fix_normalization(cdouble resp_alpha, cdouble resp_beta,
                                   const TomographyPlan& plan);

// Least-squares solve of the 3-parameter system at one delay.
BlochState invert_state(cdouble resp_alpha, cdouble resp_beta,
                        const TomographyPlan& plan, double r0);

// Uhlmann fidelity of the normalized qubit states (squared-root-trace
// convention); 1 for identical, 0 for orthogonal pure states.
double fidelity(const BlochState& a, const BlochState& b);

// Full per-delay reconstruction from a response surface containing rows at
// the plan frequencies. truth_bloch, when given, holds rows (r0, r1, r2, r3)
// per delay for fidelity scoring.
TomographyResult run_tomography(const TomographyPlan& plan,
                                const ResponseSurface& response,
                                const RMat* truth_bloch = nullptr);

// Amplitude/rate fit of y ~ a exp(-k t) through the log-linear normal
// equations; y must be positive. Fallback normalization for systems without
// a clean timescale separation.
struct ExponentialFit {
  double amplitude = 0.0;
  double rate_per_fs = 0.0;
};
ExponentialFit fit_exponential_decay(const RVec& times_fs, const RVec& values);

struct DisorderSweepPoint {
  double sigma_cm1 = 0.0;
  double worst_fidelity = 0.0;
  double avg_fidelity = 0.0;
  double cond4 = 0.0;
  double cond3 = 0.0;
};

// Fig-3-style sweep: per disorder width, build the ensemble-averaged plan at
// the nominal exciton frequencies, invert exact ensemble-averaged responses,
// and score fidelity against the ensemble-averaged state.
std::vector<DisorderSweepPoint> disorder_sweep(
    const SiteModel& model, const BathSpec& bath, const Pulse& pump,
    const std::vector<double>& widths_cm1, int n_samples, std::uint64_t seed,
    const DephasingClosure& closure = {}, int n_delays = 40,
    double t_min_fs = 50.0, double t_max_fs = 1000.0,
    double anchor_fs = 10000.0);

}  // namespace pptomo

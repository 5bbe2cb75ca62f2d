#pragma once

#include <vector>

#include <Eigen/Dense>

#include "pptomo/forward.hpp"
#include "pptomo/tikhonov.hpp"
#include "pptomo/util.hpp"

namespace pptomo {

enum class StageMode { Naive, Tikhonov };

struct InversionConfig {
  StageMode stage1 = StageMode::Tikhonov;
  StageMode stage2 = StageMode::Tikhonov;
  Penalty penalty = Penalty::SecondDifference;
  SelectorConfig selector;       // stage-2 weight selection
  double lo_support_rel = 1e-3;  // |E_LO| mask threshold, relative to peak
  double prune_rel = 1e-10;
};

struct InversionReport {
  RVec stage1_lambdas;                  // per delay column; empty for naive
  RVec stage2_lambdas;                  // per probe frequency; empty for naive
  RVec stage2_scores;
  std::vector<int> masked_freq_indices;
  bool absorptive_only = false;
  bool selector_warning = false;        // some search hit max iterations
  double rmse_vs_truth = -1.0;          // < 0 when no truth was supplied
};

// Two heterodyne-detected surfaces, (n_freq x n_delay) each. The dispersive
// channel may be empty; only Im(P E_LO) is then recoverable.
struct HeterodyneSurfaces {
  RVec probe_freqs_cm1;
  RVec delays_fs;
  RMat absorptive;   // detection phase 0
  RMat dispersive;   // detection phase pi/2
  double rotating_frame_cm1 = 0.0;
};

// Machinery shared by the two deconvolution stages on a fixed grid.
// Stage 1 divides out the local-oscillator spectrum along the frequency axis
// (diagonal operator, curvature penalty in the signal domain); stage 2 removes
// the probe-envelope convolution along the delay axis, one Toeplitz problem
// per frequency. The reconstruction grid extends the measured delays by the
// kernel support on both sides so the convolution is complete at the edges.
class TwoStageInverter {
 public:
  TwoStageInverter(RVec probe_freqs_cm1, RVec delays_fs, const Pulse& probe,
                   double rotating_frame_cm1,
                   Penalty penalty = Penalty::SecondDifference,
                   double prune_rel = 1e-10);

  const RVec& freqs_cm1() const { return w_; }
  const RVec& delays_fs() const { return t_; }
  const RVec& tau_grid_fs() const { return tau_; }
  const RVec& lo_spectrum() const { return e_lo_; }
  double envelope_integral() const { return c_a_; }
  int extension_points() const { return n_ext_; }
  // reconstruction columns that overlap the measured delay window
  int data_begin() const { return n_ext_; }
  int data_end() const { return n_ext_ + static_cast<int>(t_.size()); }

  // stage 1 on the full surface; input bc(w, T) = P E_LO
  CMat stage1_naive(const CMat& bc) const;
  CMat stage1_tikhonov(const CMat& bc, const SelectorConfig& cfg,
                       InversionReport* report = nullptr) const;

  // stage 2: P(w, T) -> R(w, tau); truth required for the exact-oracle
  // selector and scored on the data window only
  CMat stage2_naive(const CMat& p3) const;
  CMat stage2_run(const CMat& p3, const SelectorConfig& cfg,
                  const CMat* truth = nullptr,
                  InversionReport* report = nullptr) const;

  const StandardFormSolver& freq_solver(int freq_index) const {
    return solvers_.at(freq_index);
  }

 private:
  RVec w_, t_, tau_, e_lo_;
  int n_ext_ = 0;
  double c_a_ = 0.0;
  RMat q1_;   // row-space basis of the stage-1 standard-form penalty
  RVec s1_;   // its singular values
  std::vector<StandardFormSolver> solvers_;
};

// Stage-1 contract entry point: combine the heterodyne channels into
// P E_LO, mask frequencies where the local oscillator has no support, undo
// the spectrum. Throws when the whole band is unsupported.
CMat invert_signal_to_polarization(const HeterodyneSurfaces& data,
                                   const Pulse& lo, const InversionConfig& cfg,
                                   InversionReport* report = nullptr);

// Stage-2 contract entry point. Probe characterization is required; there is
// no blind mode.
ResponseSurface invert_polarization_to_response(
    const CMat& p3, const RVec& probe_freqs_cm1, const RVec& delays_fs,
    const Pulse& probe, double rotating_frame_cm1, const InversionConfig& cfg,
    InversionReport* report = nullptr, const ResponseSurface* truth = nullptr);

// Root of the summed squared error over the common window. The estimate's
// delay grid must appear contiguously in the truth's grid.
double rmse(const ResponseSurface& estimate, const ResponseSurface& truth);

double rmse_window(const CMat& estimate, const CMat& truth, int col_begin,
                   int col_end);

}  // namespace pptomo

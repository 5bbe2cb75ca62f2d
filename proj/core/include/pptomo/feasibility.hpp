#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pptomo/bath.hpp"
#include "pptomo/model.hpp"
#include "pptomo/response.hpp"

namespace pptomo {

enum class SampleType { SingleComplex, DisorderEnsemble };
enum class PolarizationSet { Isotropic, AllNine };
enum class DetectionChannels { AbsorptiveOnly, Both };

// One experimental setting for the global-map analysis. Constraints compose:
// ensemble averaging, fewer polarization configurations and dropping the
// dispersive channel each remove information.
struct Scenario {
  std::string label;
  double temperature_K = 300.0;
  SampleType sample_type = SampleType::SingleComplex;
  PolarizationSet polarizations = PolarizationSet::Isotropic;
  DetectionChannels channels = DetectionChannels::Both;
  int ensemble_samples = 1000;
  std::uint64_t seed = 0;
  void validate() const;
};

// Real-valued global map from state components to measured spectra: per
// polarization configuration, the covector rows over the dense grid with
// real and imaginary channels stacked (the absorptive channel measures the
// imaginary part).
struct PumpProbeMap {
  std::string label;
  RVec grid_cm1;
  int n_components = 0;
  RMat matrix;             // (configs x channels x n_grid) rows, n^2 columns
  RVec singular_values;    // descending, unnormalized
};

struct SingularSpectrum {
  RVec normalized;         // sigma_i / sigma_1, descending
  double condition = 0.0;  // sigma_1 / sigma_{n^2}; +inf when rank-deficient
  bool rank_deficient = false;
};

// Exciton energies extended by +-5 homogeneous half-widths, sampled at a
// quarter width. Effectively continuous for the map assembly.
RVec default_feasibility_grid(const SiteModel& model, const BathSpec& bath,
                              const DephasingClosure& closure = {});

// Ensemble-averaged covector per polarization configuration of the scenario.
// Labels name the configurations ("iso" or "xy" style probe/signal pairs).
std::vector<PumpProbeOperator> scenario_operators(
    const SiteModel& model, const BathSpec& bath, const Scenario& scenario,
    const RVec& grid_cm1, const DephasingClosure& closure = {},
    std::vector<std::string>* labels = nullptr);

PumpProbeMap build_map(const SiteModel& model, const BathSpec& bath,
                       const Scenario& scenario, const RVec& grid_cm1,
                       const DephasingClosure& closure = {});

SingularSpectrum singular_spectrum(const PumpProbeMap& map);

// Fig-6-style amplitude table: entry (a,b) above and on the diagonal is the
// peak |Re| of the species spectrum for density-matrix element (a,b); below
// the diagonal the peak |Im| of the mirrored element.
RMat species_amplitude_matrix(const PumpProbeOperator& op_liouville, int n_levels);

// 95% envelopes of the isotropic species spectra over Hamiltonian
// uncertainty draws. The scenario fixes temperature and (optional) disorder
// averaging; disorder magnitude itself is not varied.
struct SpeciesBand {
  std::string label;
  RVec nominal_re, nominal_im;
  RVec re_lo, re_hi;
  RVec im_lo, im_hi;
};

std::vector<SpeciesBand> uncertainty_bands(const SiteModel& model, const BathSpec& bath,
                                           const Scenario& scenario,
                                           const UncertaintySpec& uncertainty,
                                           int n_draws, std::uint64_t seed,
                                           const RVec& grid_cm1,
                                           const DephasingClosure& closure = {});

}  // namespace pptomo

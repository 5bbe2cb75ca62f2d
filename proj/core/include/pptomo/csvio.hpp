#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pptomo/bath.hpp"
#include "pptomo/deconvolve.hpp"
#include "pptomo/feasibility.hpp"
#include "pptomo/forward.hpp"
#include "pptomo/model.hpp"
#include "pptomo/tomography.hpp"

// File formats: small JSON documents for models, pulses and reports; long-form
// CSV for surfaces and tables. Every CSV starts with a "# pptomo csv v1"
// comment naming content and units, then a column-header row. All floats are
// written with 17 significant digits so readers round-trip exactly.

namespace pptomo {

struct ModelFile {
  SiteModel model;
  BathSpec bath;
  DephasingClosure closure;
};

ModelFile load_model_file(const std::string& path);
void save_model_file(const std::string& path, const ModelFile& file);

Pulse load_pulse_file(const std::string& path);
void save_pulse_file(const std::string& path, const Pulse& pulse);

// columns freq_cm1, delay_fs, value
void save_real_surface(const std::string& path, const std::string& content,
                       const RVec& freqs_cm1, const RVec& delays_fs, const RMat& values);
RMat load_real_surface(const std::string& path, RVec* freqs_cm1, RVec* delays_fs);

// columns freq_cm1, tau_fs, re, im
void save_complex_surface(const std::string& path, const std::string& content,
                          const RVec& freqs_cm1, const RVec& taus_fs, const CMat& values);
CMat load_complex_surface(const std::string& path, RVec* freqs_cm1, RVec* taus_fs);

void save_bloch_trajectory(const std::string& path, const TomographyResult& result);

void save_singular_values(const std::string& path,
                          const std::vector<PumpProbeMap>& maps);

// one row per (config, a, b); upper/diagonal entries are peak |Re|, lower
// entries peak |Im|, matching the amplitude-matrix convention
void save_species_amplitudes(const std::string& path,
                             const std::vector<std::string>& config_labels,
                             const std::vector<RMat>& matrices);

void save_species_bands(const std::string& path, const RVec& grid_cm1,
                        const std::vector<SpeciesBand>& bands);

void save_species_spectra(const std::string& path, const RVec& grid_cm1,
                          const std::vector<SpeciesSpectrum>& spectra);

void save_inversion_report(const std::string& path, const InversionConfig& cfg,
                           const InversionReport& report);

void save_tomography_report(const std::string& path, const TomographyPlan& plan,
                            const TomographyResult& result);

// FNV-1a (64-bit) over the file's bytes, as "fnv1a64:<hex>"
std::string file_digest(const std::string& path);

// Resolved-run manifest: schema, library version, command, parameters and
// input digests. Equal manifests imply byte-identical outputs.
void save_manifest(const std::string& path, const std::string& command,
                   const std::string& parameters_json,
                   const std::vector<std::string>& input_paths);

}  // namespace pptomo

#pragma once

// Unit conventions used throughout:
//   energies / frequencies at interfaces: cm^-1
//   time: fs
//   rates and linewidth parameters gamma: fs^-1
// hbar = 1, so omega[rad/fs] = k_cm1_to_radfs * E[cm^-1].

namespace pptomo {

// 2*pi*c with c in cm/fs
inline constexpr double k_cm1_to_radfs = 1.8836516e-4;

// Boltzmann constant in cm^-1 per Kelvin
inline constexpr double k_boltzmann_cm1 = 0.695034800;

inline constexpr double k_pi = 3.14159265358979323846;

inline constexpr double rad_per_fs(double e_cm1) { return k_cm1_to_radfs * e_cm1; }

}  // namespace pptomo

#pragma once

#include <cmath>
#include <cstdint>

#include <Eigen/Dense>

#include "pptomo/units.hpp"

namespace pptomo {

// Counter-based splitmix64 stream. Sample i of an ensemble draws from
// Rng::fork(seed, i), so results are bit-for-bit identical no matter how the
// ensemble loop is scheduled.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  static Rng fork(std::uint64_t seed, std::uint64_t index) {
    Rng r(seed);
    // decorrelate the child stream from (seed, index+1) jointly
    r.state_ = mix(seed + (index + 1) * 0x9e3779b97f4a7c15ULL);
    return r;
  }

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix(state_);
  }

  // uniform in [0, 1)
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // standard normal via Box-Muller; consumes exactly two uniforms per call
  double gaussian() {
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log1p(-u1));
    return r * std::cos(2.0 * k_pi * u2);
  }

  // uniform random rotation from a uniform unit quaternion (Shoemake)
  Eigen::Matrix3d rotation() {
    const double u1 = uniform();
    const double u2 = uniform();
    const double u3 = uniform();
    const double a = std::sqrt(1.0 - u1), b = std::sqrt(u1);
    const double qx = a * std::sin(2.0 * k_pi * u2);
    const double qy = a * std::cos(2.0 * k_pi * u2);
    const double qz = b * std::sin(2.0 * k_pi * u3);
    const double qw = b * std::cos(2.0 * k_pi * u3);
    return Eigen::Quaterniond(qw, qx, qy, qz).toRotationMatrix();
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
};

}  // namespace pptomo

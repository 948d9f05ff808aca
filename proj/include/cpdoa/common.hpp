#pragma once
// Shared angle arithmetic, error types and RNG stream derivation.

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>

namespace cpdoa {

using cxd = std::complex<double>;

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

// Raised when a data-dependent step cannot produce an estimate (subspace
// collapse, degree-deficient polynomial, missing spectral peaks).  Monte
// Carlo drivers treat it as a failed trial, not as a bug.
class estimation_error : public std::runtime_error {
  public:
    explicit estimation_error(const std::string& what) : std::runtime_error(what) {}
};

// x reduced into [0, period).
inline double positive_mod(double x, double period) {
    double r = std::fmod(x, period);
    if (r < 0.0) r += period;
    if (r >= period) r -= period;
    return r;
}

// Principal value in (-pi, pi].
inline double wrap_to_pi(double x) {
    double r = std::remainder(x, two_pi);
    if (r <= -pi) r += two_pi;
    return r;
}

// Half-open variant in [-pi, pi).
inline double wrap_to_half_open(double x) {
    double r = std::remainder(x, two_pi);
    if (r >= pi) r -= two_pi;
    return r;
}

// SplitMix64 finalizer, used to derive decorrelated per-trial RNG streams
// from a base seed and trial coordinates.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

}  // namespace cpdoa

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

namespace uc {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct UcError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed input file.
struct ParseError : UcError {
  using UcError::UcError;
};

/// A type invariant does not hold; message names the offending field.
struct ValidationError : UcError {
  using UcError::UcError;
};

/// Simplex pivoting stalled beyond the iteration cap.
struct NumericalFailure : UcError {
  using UcError::UcError;
};

/// Enumeration budget exceeded (brute-force oracle).
struct BudgetExceeded : UcError {
  using UcError::UcError;
};

/// Even with every generator online the load cannot be met.
struct CapacityExhausted : UcError {
  using UcError::UcError;
};

/// Too many perturbations were infeasible during dataset labeling.
struct LabelingFailure : UcError {
  using UcError::UcError;
};

/// Training loss became NaN or infinite; message carries the step index.
struct NonFiniteLoss : UcError {
  using UcError::UcError;
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Deterministic RNG. The mt19937_64 output stream is pinned by the standard;
// all value transforms live here so results never depend on the stdlib's
// distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(splitmix64(seed)), seed_base_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [lo, hi] inclusive.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<std::int64_t>(eng_() % span);
  }

  /// Standard normal via Box-Muller.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  /// Independent child stream; stable under reordering of sibling draws.
  Rng derive(std::uint64_t tag) const {
    return Rng(splitmix64(seed_base_ ^ splitmix64(tag)));
  }

 private:
  std::mt19937_64 eng_;
  std::uint64_t seed_base_ = 0;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace uc

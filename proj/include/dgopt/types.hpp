#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>

namespace dgopt {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Thrown when an input's dimensions disagree with the problem contract.
/// Carries the offending agent index and the expected/actual sizes.
class DimensionError : public std::invalid_argument {
 public:
  DimensionError(const std::string& what_arg, int agent, Index expected_size,
                 Index actual_size)
      : std::invalid_argument(what_arg + " (agent " + std::to_string(agent) +
                              ": expected " + std::to_string(expected_size) +
                              ", got " + std::to_string(actual_size) + ")"),
        agent_index(agent),
        expected(expected_size),
        actual(actual_size) {}

  int agent_index;
  Index expected;
  Index actual;
};

/// Counter-based 64-bit generator (splitmix64 finalizer over seed + counter).
/// Streams are reproducible across platforms: the k-th draw depends only on
/// (seed, stream, k), never on call history elsewhere.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
      : base_(mix(seed + 0x9E3779B97F4A7C15ULL * (stream + 1))), counter_(0) {}

  std::uint64_t next_u64() {
    return mix(base_ + 0x9E3779B97F4A7C15ULL * ++counter_);
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Standard normal via Box-Muller.
  double normal() {
    double u1;
    do {
      u1 = uniform01();
    } while (u1 <= 0.0);
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ULL;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return z;
  }

  std::uint64_t base_;
  std::uint64_t counter_;
};

inline double sqr(double x) { return x * x; }

}  // namespace dgopt

#pragma once

#include <cstdint>
#include <optional>
#include <random>

#include "zoflex/geometry.hpp"

namespace zoflex {

/// Mixes (seed, stream_id) into one 64-bit engine seed with two splitmix64
/// rounds, so trial streams depend only on their index and never on the
/// order in which trials are scheduled.
std::uint64_t derive_stream_seed(std::uint64_t seed, std::uint64_t stream_id);

/// Seedable random stream. Single owner; give each thread its own stream.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the
/// standard. Uniforms take the top 53 bits of one engine word. Normals use the
/// Marsaglia polar method on those uniforms and cache the second variate.
/// None of this depends on the standard library's distribution classes, so
/// draws are identical across platforms.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on [0, 1).
  double uniform();
  /// Uniform on the open interval (lo, hi).
  double uniform_open(double lo, double hi);
  double normal();
  /// Uniform integer in [0, n), by rejection (no modulo bias).
  std::size_t below(std::size_t n);

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
  std::optional<double> spare_normal_;
};

/// d independent standard normal variates.
Vector gaussian(RandomStream& stream, std::size_t d);

/// z = P_{S(x, r)}[zbar] with zbar ~ N(0, I); x + r z is feasible.
Vector projected_gaussian_perturbation(RandomStream& stream, const FeasibleSet& set, const Vector& x,
                                       double r);

/// Boundary-aware sign for a single-coordinate probe: -1 when x + r would
/// leave the upper face, +1 when x - r would leave the lower face, otherwise a
/// fair coin. Requires 0 < r <= (upper - lower) / 2.
int coordinate_sign(RandomStream& stream, double x, double lower, double upper, double r);

/// Uniform coordinate index in [0, d).
std::size_t uniform_index(RandomStream& stream, std::size_t d);

}  // namespace zoflex

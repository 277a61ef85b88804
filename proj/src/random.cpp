#include "zoflex/random.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace zoflex {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_stream_seed(std::uint64_t seed, std::uint64_t stream_id) {
  return splitmix64(splitmix64(seed) ^ splitmix64(stream_id + 0x632be59bd9b4e019ULL));
}

RandomStream::RandomStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id), engine_(derive_stream_seed(seed, stream_id)) {}

double RandomStream::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double RandomStream::uniform_open(double lo, double hi) {
  for (;;) {
    const double v = lo + (hi - lo) * uniform();
    if (v > lo && v < hi) return v;
  }
}

double RandomStream::normal() {
  if (spare_normal_) {
    const double v = *spare_normal_;
    spare_normal_.reset();
    return v;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double factor = std::sqrt(-2.0 * std::log(s) / s);
  spare_normal_ = v * factor;
  return u * factor;
}

std::size_t RandomStream::below(std::size_t n) {
  if (n == 0) throw ParameterError("cannot draw an index from an empty range");
  const std::uint64_t range = static_cast<std::uint64_t>(n);
  // Largest multiple of n that fits; reject draws at or above it.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % range;
  std::uint64_t draw;
  do {
    draw = engine_();
  } while (draw >= limit);
  return static_cast<std::size_t>(draw % range);
}

Vector gaussian(RandomStream& stream, std::size_t d) {
  Vector z(static_cast<Eigen::Index>(d));
  for (Eigen::Index a = 0; a < z.size(); ++a) z[a] = stream.normal();
  return z;
}

Vector projected_gaussian_perturbation(RandomStream& stream, const FeasibleSet& set, const Vector& x,
                                       double r) {
  const Vector zbar = gaussian(stream, set.dimension());
  return perturbation_project(set, x, r, zbar);
}

int coordinate_sign(RandomStream& stream, double x, double lower, double upper, double r) {
  if (!(r > 0.0)) throw ParameterError("coordinate radius must be positive");
  if (r > 0.5 * (upper - lower)) {
    throw ParameterError("coordinate radius " + std::to_string(r) +
                         " exceeds half the interval width " + std::to_string(0.5 * (upper - lower)));
  }
  if (x < lower || x > upper) {
    throw PreconditionError("coordinate lies outside its interval");
  }
  if (x + r > upper) return -1;
  if (x - r < lower) return 1;
  return (stream.next_u64() >> 63) != 0 ? 1 : -1;
}

std::size_t uniform_index(RandomStream& stream, std::size_t d) { return stream.below(d); }

}  // namespace zoflex

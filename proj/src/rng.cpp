#include "rjpo/rng.hpp"

#include <cmath>

namespace rjpo {
namespace {

std::seed_seq make_seed_seq(std::uint64_t seed, std::uint64_t index) {
  return std::seed_seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                       static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t index) : seed_(seed), index_(index) {
  auto seq = make_seed_seq(seed, index);
  engine_.seed(seq);
}

RngStream RngStream::split(std::uint64_t child) const {
  // Children of the same parent never collide with each other; mixing the
  // parent index keeps grandchildren apart as well.
  const std::uint64_t mixed = (index_ + 1) * 0x9E3779B97F4A7C15ULL ^ (child + 1);
  return RngStream(seed_, mixed);
}

double RngStream::uniform() { return uniform_(engine_); }

double RngStream::standard_normal() { return normal_(engine_); }

double RngStream::gamma(double shape, double scale) {
  if (!(shape > 0.0) || !(scale > 0.0) || !std::isfinite(shape) || !std::isfinite(scale))
    throw ArgumentError("gamma: shape and scale must be positive and finite");
  // libstdc++ implements Marsaglia-Tsang squeeze/rejection, boosted for shape < 1.
  std::gamma_distribution<double> dist(shape, scale);
  return dist(engine_);
}

}  // namespace rjpo

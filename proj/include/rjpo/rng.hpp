#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "rjpo/linop.hpp"

namespace rjpo {

/// Seedable source of uniform, normal and Gamma variates. One stream per chain.
///
/// A stream is identified by (seed, index); `split` derives independent child
/// streams for parallel chains and grid points without sharing state.
class RngStream {
 public:
  static constexpr std::string_view kGeneratorName = "mt19937_64";

  explicit RngStream(std::uint64_t seed, std::uint64_t index = 0);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t index() const { return index_; }

  /// Child stream; distinct `child` values give distinct streams.
  RngStream split(std::uint64_t child) const;

  /// Uniform on [0, 1).
  double uniform();
  double standard_normal();

  template <typename Scalar = double>
  Vector<Scalar> standard_normal_vector(Index n) {
    if (n < 1) throw ArgumentError("standard_normal_vector: n must be >= 1");
    Vector<Scalar> v(n);
    for (Index i = 0; i < n; ++i) v[i] = static_cast<Scalar>(normal_(engine_));
    return v;
  }

  /// Gamma(shape, scale): mean shape * scale.
  double gamma(double shape, double scale);

 private:
  std::uint64_t seed_;
  std::uint64_t index_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace rjpo

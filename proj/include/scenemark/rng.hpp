// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

namespace scenemark {

/// splitmix64 stream. Unlike the standard distributions its draw sequence is
/// identical on every platform, which keeps generated data reproducible.
class SplitRng {
 public:
  explicit SplitRng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next();
  double uniform(double lo = 0.0, double hi = 1.0);
  /// Uniform integer in [0, n), by rejection.
  std::uint64_t below(std::uint64_t n);

 private:
  std::uint64_t state_;
};

std::uint64_t mix64(std::uint64_t x);

}  // namespace scenemark

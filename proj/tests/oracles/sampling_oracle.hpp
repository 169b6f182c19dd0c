// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <cstdint>
#include <vector>

namespace oracle {

// floor((i - 1) * N / n) + 1 for i = 1..n in arbitrary precision.
inline std::vector<std::int64_t> sample_indices(std::int64_t N, std::int64_t n) {
  using boost::multiprecision::cpp_int;
  std::vector<std::int64_t> out;
  for (std::int64_t i = 1; i <= n; ++i) {
    const cpp_int v = cpp_int(i - 1) * cpp_int(N) / cpp_int(n) + 1;
    out.push_back(v.convert_to<std::int64_t>());
  }
  return out;
}

}  // namespace oracle

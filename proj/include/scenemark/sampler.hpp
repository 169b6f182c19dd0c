// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

namespace scenemark {

struct SamplePlan {
  std::int64_t total_frames = 0;
  std::int64_t sample_count = 0;
  std::vector<std::int64_t> indices;  // 1-based, strictly increasing
};

/// Approximately uniform frame selection: index i (1-based) is
/// floor((i - 1) * N / n) + 1, evaluated in integer arithmetic.
/// Throws InvalidArgument unless 1 <= n <= N.
SamplePlan sample_indices(std::int64_t total_frames, std::int64_t sample_count);

}  // namespace scenemark

// SPDX-License-Identifier: Apache-2.0

#include "scenemark/sampler.hpp"

#include <limits>
#include <string>

#include "scenemark/errors.hpp"

namespace scenemark {

SamplePlan sample_indices(std::int64_t total_frames, std::int64_t sample_count) {
  if (total_frames <= 0) {
    throw InvalidArgument("sample_indices: video has no frames");
  }
  if (sample_count <= 0) {
    throw InvalidArgument("sample_indices: sample count must be positive");
  }
  if (sample_count > total_frames) {
    throw InvalidArgument("sample_indices: cannot sample " +
                          std::to_string(sample_count) + " frames from " +
                          std::to_string(total_frames));
  }
  if (total_frames > std::numeric_limits<std::int64_t>::max() / sample_count) {
    throw InvalidArgument("sample_indices: frame count too large");
  }
  SamplePlan plan{total_frames, sample_count, {}};
  plan.indices.reserve(static_cast<std::size_t>(sample_count));
  for (std::int64_t i = 0; i < sample_count; ++i) {
    plan.indices.push_back(i * total_frames / sample_count + 1);
  }
  return plan;
}

}  // namespace scenemark

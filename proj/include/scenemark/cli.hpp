// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: synth, annotate, stitch, query, evaluate,
// gpt-score and build-dataset.

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "scenemark/annotate.hpp"
#include "scenemark/metrics.hpp"
#include "scenemark/vlm.hpp"

namespace scenemark {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitData = 2,
  kExitEndpoint = 3,
};

/// Effective settings of a run. Loaded from one JSON file; command-line
/// flags override individual fields.
struct RunConfig {
  std::string scene_root;
  std::string output_root;
  std::uint64_t seed = 0;
  AnnotateConfig annotate;
  EndpointConfig endpoint;
  std::vector<std::string> benchmarks;  // empty selects every benchmark
  bool cache = true;
  bool qa_include_bev = true;
  std::vector<double> thresholds{0.25, 0.5};
  GptWeights gpt_weights;
  bool judge_randomize_order = true;

  nlohmann::ordered_json to_json() const;
  static RunConfig from_json(const nlohmann::json& json);
  static RunConfig load(const std::filesystem::path& path);
};

nlohmann::ordered_json endpoint_to_json(const EndpointConfig& config);
EndpointConfig endpoint_from_json(const nlohmann::json& json);

/// Exclusive ownership of an output directory for the lifetime of the
/// object. Throws Error when another process holds the lock.
class DirLock {
 public:
  explicit DirLock(const std::filesystem::path& dir);
  ~DirLock();
  DirLock(const DirLock&) = delete;
  DirLock& operator=(const DirLock&) = delete;

  static constexpr const char* kFileName = ".scenemark.lock";

 private:
  std::filesystem::path path_;
};

/// Runs one command line; returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace scenemark

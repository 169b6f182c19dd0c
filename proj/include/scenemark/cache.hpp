// SPDX-License-Identifier: Apache-2.0
//
// Content hashing, the on-disk response cache and append-only JSONL logs.

#pragma once

#include <filesystem>
#include <fstream>
#include <mutex>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <string_view>

#include "scenemark/vlm.hpp"

namespace scenemark {

/// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);

/// One JSON file per response, named by the hash of (request body, model).
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path dir);

  static std::string key(std::string_view request_body, std::string_view model);

  std::optional<VlmResponse> get(const std::string& key) const;
  void put(const std::string& key, const VlmResponse& response) const;

  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
};

nlohmann::ordered_json response_to_json(const VlmResponse& response);
VlmResponse response_from_json(const nlohmann::json& json);

/// Thread-safe JSONL appender; every line is flushed.
class JsonlWriter {
 public:
  explicit JsonlWriter(const std::filesystem::path& path, bool append = false);
  void write(const nlohmann::ordered_json& line);

 private:
  std::mutex mutex_;
  std::ofstream out_;
  std::filesystem::path path_;
};

std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path);

}  // namespace scenemark

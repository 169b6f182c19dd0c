// SPDX-License-Identifier: Apache-2.0

#include "scenemark/cache.hpp"

#include <openssl/evp.h>

#include <array>
#include <memory>
#include <sstream>

#include "scenemark/errors.hpp"

namespace fs = std::filesystem;

namespace scenemark {
namespace {

std::string to_hex(const unsigned char* data, unsigned int len) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kDigits[data[i] >> 4]);
    out.push_back(kDigits[data[i] & 15]);
  }
  return out;
}

struct Sha256 {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx{EVP_MD_CTX_new(),
                                                              &EVP_MD_CTX_free};
  Sha256() {
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
      throw Error("sha256: digest init failed");
    }
  }
  void update(std::string_view data) {
    if (EVP_DigestUpdate(ctx.get(), data.data(), data.size()) != 1) {
      throw Error("sha256: digest update failed");
    }
  }
  std::string hex() {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(ctx.get(), md.data(), &len) != 1) {
      throw Error("sha256: digest final failed");
    }
    return to_hex(md.data(), len);
  }
};

}  // namespace

std::string sha256_hex(std::string_view data) {
  Sha256 h;
  h.update(data);
  return h.hex();
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  Sha256 h;
  std::array<char, 1 << 16> buf;
  while (in) {
    in.read(buf.data(), buf.size());
    h.update(std::string_view(buf.data(), static_cast<std::size_t>(in.gcount())));
  }
  return h.hex();
}

nlohmann::ordered_json response_to_json(const VlmResponse& r) {
  nlohmann::ordered_json j;
  j["text"] = r.text;
  j["prompt_tokens"] = r.prompt_tokens;
  j["completion_tokens"] = r.completion_tokens;
  j["latency_ms"] = r.latency_ms;
  j["attempts"] = r.attempts;
  return j;
}

VlmResponse response_from_json(const nlohmann::json& j) {
  VlmResponse r;
  r.text = j.at("text").get<std::string>();
  r.prompt_tokens = j.value("prompt_tokens", 0);
  r.completion_tokens = j.value("completion_tokens", 0);
  r.latency_ms = j.value("latency_ms", 0.0);
  r.attempts = j.value("attempts", 0);
  return r;
}

ResponseCache::ResponseCache(fs::path dir) : dir_(std::move(dir)) {
  fs::create_directories(dir_);
}

std::string ResponseCache::key(std::string_view request_body, std::string_view model) {
  Sha256 h;
  h.update(model);
  h.update(std::string_view("\n", 1));
  h.update(request_body);
  return h.hex();
}

std::optional<VlmResponse> ResponseCache::get(const std::string& key) const {
  std::ifstream in(dir_ / (key + ".json"), std::ios::binary);
  if (!in) return std::nullopt;
  try {
    return response_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception&) {
    return std::nullopt;  // torn write; treat as a miss
  }
}

void ResponseCache::put(const std::string& key, const VlmResponse& response) const {
  const fs::path final_path = dir_ / (key + ".json");
  const fs::path tmp = dir_ / (key + ".json.tmp");
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw IoError("cannot write cache entry " + tmp.string());
    out << response_to_json(response).dump();
  }
  fs::rename(tmp, final_path);
}

JsonlWriter::JsonlWriter(const fs::path& path, bool append) : path_(path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  out_.open(path, append ? std::ios::binary | std::ios::app
                         : std::ios::binary | std::ios::trunc);
  if (!out_) throw IoError("cannot open " + path.string());
}

void JsonlWriter::write(const nlohmann::ordered_json& line) {
  std::lock_guard<std::mutex> lock(mutex_);
  out_ << line.dump() << '\n';
  out_.flush();
  if (!out_) throw IoError("write failed: " + path_.string());
}

std::vector<nlohmann::json> read_jsonl(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<nlohmann::json> out;
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      throw Error(path.filename().string() + " line " + std::to_string(lineno) + ": " +
                  e.what());
    }
  }
  return out;
}

}  // namespace scenemark

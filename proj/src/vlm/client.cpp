// SPDX-License-Identifier: Apache-2.0

#include <httplib.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdlib>
#include <thread>

#include "scenemark/errors.hpp"
#include "scenemark/vlm.hpp"

namespace scenemark {
namespace {

constexpr std::string_view kCompletionsPath = "/v1/chat/completions";
constexpr std::string_view kAlphabet =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

struct ParsedUrl {
  std::string origin;  // scheme://host[:port]
  std::string prefix;  // path before /v1/..., without trailing slash
};

ParsedUrl parse_base_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw InvalidArgument("endpoint: base URL needs a scheme: " + url);
  }
  const std::string scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") {
    throw InvalidArgument("endpoint: unsupported scheme '" + scheme + "'");
  }
  const auto path_start = url.find('/', scheme_end + 3);
  ParsedUrl out;
  out.origin = url.substr(0, path_start);
  if (path_start != std::string::npos) out.prefix = url.substr(path_start);
  while (!out.prefix.empty() && out.prefix.back() == '/') out.prefix.pop_back();
  if (out.origin.size() <= scheme_end + 3) {
    throw InvalidArgument("endpoint: base URL has no host: " + url);
  }
  return out;
}

std::string data_url(const ImageAttachment& image) {
  return "data:" + image.mime + ";base64," + base64_encode(image.bytes);
}

bool retryable(int status) { return status == 429 || status >= 500; }

VlmResponse parse_completion(const std::string& body) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception& e) {
    throw EndpointError(std::string("endpoint: malformed response: ") + e.what(), 200, 0);
  }
  VlmResponse out;
  const auto& choices = doc.value("choices", nlohmann::json::array());
  if (!choices.is_array() || choices.empty() || !choices[0].contains("message")) {
    throw EndpointError("endpoint: response has no choices", 200, 0);
  }
  const auto& content = choices[0]["message"].value("content", nlohmann::json());
  if (content.is_string()) {
    out.text = content.get<std::string>();
  } else if (content.is_array()) {
    for (const auto& part : content) {
      if (part.value("type", "") == "text") out.text += part.value("text", "");
    }
  } else {
    throw EndpointError("endpoint: response message has no text", 200, 0);
  }
  if (doc.contains("usage") && doc["usage"].is_object()) {
    out.prompt_tokens = doc["usage"].value("prompt_tokens", 0);
    out.completion_tokens = doc["usage"].value("completion_tokens", 0);
  }
  return out;
}

}  // namespace

void EndpointConfig::validate() const {
  parse_base_url(base_url);
  if (model.empty()) throw InvalidArgument("endpoint: model name is empty");
  if (max_in_flight < 1) throw InvalidArgument("endpoint: max in-flight must be >= 1");
  if (retry.max_attempts < 1) throw InvalidArgument("endpoint: attempts must be >= 1");
  if (retry.backoff_base_ms < 0) throw InvalidArgument("endpoint: negative backoff");
  if (!(timeout_s > 0.0)) throw InvalidArgument("endpoint: timeout must be positive");
}

std::string base64_encode(std::string_view bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const auto n = (std::uint32_t(std::uint8_t(bytes[i])) << 16) |
                   (std::uint32_t(std::uint8_t(bytes[i + 1])) << 8) |
                   std::uint32_t(std::uint8_t(bytes[i + 2]));
    out.push_back(kAlphabet[(n >> 18) & 63]);
    out.push_back(kAlphabet[(n >> 12) & 63]);
    out.push_back(kAlphabet[(n >> 6) & 63]);
    out.push_back(kAlphabet[n & 63]);
  }
  const std::size_t rest = bytes.size() - i;
  if (rest > 0) {
    std::uint32_t n = std::uint32_t(std::uint8_t(bytes[i])) << 16;
    if (rest == 2) n |= std::uint32_t(std::uint8_t(bytes[i + 1])) << 8;
    out.push_back(kAlphabet[(n >> 18) & 63]);
    out.push_back(kAlphabet[(n >> 12) & 63]);
    out.push_back(rest == 2 ? kAlphabet[(n >> 6) & 63] : '=');
    out.push_back('=');
  }
  return out;
}

std::string base64_decode(std::string_view text) {
  std::array<int, 256> table;
  table.fill(-1);
  for (std::size_t k = 0; k < kAlphabet.size(); ++k) {
    table[static_cast<unsigned char>(kAlphabet[k])] = static_cast<int>(k);
  }
  std::string out;
  std::uint32_t acc = 0;
  int bits = 0;
  for (std::size_t k = 0; k < text.size(); ++k) {
    const char c = text[k];
    if (c == '=') break;
    const int v = table[static_cast<unsigned char>(c)];
    if (v < 0) throw ParseError("base64: invalid character", k);
    acc = (acc << 6) | static_cast<std::uint32_t>(v);
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out.push_back(static_cast<char>((acc >> bits) & 0xFF));
    }
  }
  return out;
}

nlohmann::ordered_json request_body(const VlmRequest& request,
                                    const std::string& model) {
  nlohmann::ordered_json body;
  body["model"] = model;
  auto messages = nlohmann::ordered_json::array();
  if (!request.system.empty()) {
    nlohmann::ordered_json sys;
    sys["role"] = "system";
    sys["content"] = request.system;
    messages.push_back(std::move(sys));
  }
  nlohmann::ordered_json user;
  user["role"] = "user";
  auto parts = nlohmann::ordered_json::array();
  for (const auto& item : request.user) {
    nlohmann::ordered_json part;
    if (item.kind == ContentItem::Kind::text) {
      part["type"] = "text";
      part["text"] = item.text;
    } else {
      part["type"] = "image_url";
      part["image_url"]["url"] = data_url(item.image);
    }
    parts.push_back(std::move(part));
  }
  user["content"] = std::move(parts);
  messages.push_back(std::move(user));
  body["messages"] = std::move(messages);
  body["temperature"] = request.params.temperature;
  body["max_tokens"] = request.params.max_tokens;
  return body;
}

VlmResponse send(const VlmRequest& request, const EndpointConfig& config) {
  config.validate();
  const ParsedUrl url = parse_base_url(config.base_url);

  httplib::Headers headers;
  if (!config.api_key_env.empty()) {
    const char* token = std::getenv(config.api_key_env.c_str());
    if (token == nullptr || *token == '\0') {
      throw EndpointError("endpoint: auth token missing, set $" + config.api_key_env,
                          0, 0);
    }
    headers.emplace("Authorization", std::string("Bearer ") + token);
  }

  const std::string body = request_body(request, config.model).dump();
  if (body.size() > config.max_payload_bytes) {
    throw EndpointError("endpoint: payload of " + std::to_string(body.size()) +
                            " bytes exceeds the limit of " +
                            std::to_string(config.max_payload_bytes),
                        413, 0);
  }

  httplib::Client client(url.origin);
  const auto secs = static_cast<time_t>(config.timeout_s);
  const auto usecs = static_cast<time_t>((config.timeout_s - secs) * 1e6);
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);
  const std::string path = url.prefix + std::string(kCompletionsPath);

  const auto start = std::chrono::steady_clock::now();
  std::string last_error;
  int last_status = 0;
  for (int attempt = 1; attempt <= config.retry.max_attempts; ++attempt) {
    if (attempt > 1) {
      const long delay = static_cast<long>(config.retry.backoff_base_ms) << (attempt - 2);
      std::this_thread::sleep_for(std::chrono::milliseconds(delay));
    }
    auto res = client.Post(path, headers, body, "application/json");
    if (!res) {
      last_status = 0;
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    last_status = res->status;
    if (res->status == 200) {
      VlmResponse out;
      try {
        out = parse_completion(res->body);
      } catch (const EndpointError& e) {
        throw EndpointError(e.what(), 200, attempt);
      }
      out.attempts = attempt;
      out.latency_ms = std::chrono::duration<double, std::milli>(
                           std::chrono::steady_clock::now() - start)
                           .count();
      return out;
    }
    last_error = "HTTP " + std::to_string(res->status);
    if (!retryable(res->status)) {
      throw EndpointError("endpoint: " + last_error, res->status, attempt);
    }
  }
  throw EndpointError("endpoint: giving up after " +
                          std::to_string(config.retry.max_attempts) +
                          " attempts (" + last_error + ")",
                      last_status, config.retry.max_attempts);
}

std::vector<BatchSlot> send_batch(std::span<const VlmRequest> requests,
                                  const EndpointConfig& config) {
  config.validate();
  std::vector<BatchSlot> slots(requests.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < requests.size(); i = next++) {
      try {
        auto response = send(requests[i], config);
        slots[i].attempts = response.attempts;
        slots[i].status = 200;
        slots[i].response = std::move(response);
      } catch (const EndpointError& e) {
        slots[i].error = e.what();
        slots[i].status = e.status();
        slots[i].attempts = e.attempts();
      } catch (const std::exception& e) {
        slots[i].error = e.what();
      }
    }
  };
  const std::size_t n_workers =
      std::min<std::size_t>(static_cast<std::size_t>(config.max_in_flight),
                            requests.size());
  std::vector<std::thread> pool;
  pool.reserve(n_workers);
  for (std::size_t k = 0; k < n_workers; ++k) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  return slots;
}

}  // namespace scenemark

// SPDX-License-Identifier: Apache-2.0
//
// Chat-completion client (POST /v1/chat/completions) and an in-process mock
// endpoint for hermetic tests.

#pragma once

#include <atomic>
#include <functional>
#include <memory>
#include <mutex>
#include <nlohmann/json.hpp>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "scenemark/prompts.hpp"

namespace scenemark {

struct RetryPolicy {
  int max_attempts = 3;
  int backoff_base_ms = 500;  // doubles after every failed attempt
};

struct EndpointConfig {
  std::string base_url = "http://127.0.0.1:8000";
  std::string model = "gpt-4o";
  /// Environment variable holding the bearer token; empty disables auth.
  std::string api_key_env;
  double timeout_s = 120.0;
  int max_in_flight = 4;
  RetryPolicy retry;
  std::size_t max_payload_bytes = 20u << 20;

  void validate() const;
};

struct VlmResponse {
  std::string text;
  int prompt_tokens = 0;
  int completion_tokens = 0;
  double latency_ms = 0.0;
  int attempts = 0;
};

/// Outcome of one request in a batch.
struct BatchSlot {
  std::optional<VlmResponse> response;
  std::string error;
  int status = 0;
  int attempts = 0;

  bool ok() const { return response.has_value(); }
};

/// Wire body for a request, images inlined as base64 data URLs. Key order
/// is fixed so equal requests serialize to equal bytes.
nlohmann::ordered_json request_body(const VlmRequest& request,
                                    const std::string& model);

/// Retries transport errors, 429 and 5xx with exponential backoff; any other
/// non-200 status fails immediately. Throws EndpointError.
VlmResponse send(const VlmRequest& request, const EndpointConfig& config);

/// Sends with at most `max_in_flight` concurrent requests. Results are in
/// input order; failures are reported per slot.
std::vector<BatchSlot> send_batch(std::span<const VlmRequest> requests,
                                  const EndpointConfig& config);

std::string base64_encode(std::string_view bytes);
std::string base64_decode(std::string_view text);

/// Scripted reply of the mock endpoint.
struct MockReply {
  int status = 200;
  std::string content;
  int latency_ms = 0;
};

/// Local HTTP server speaking the chat-completion protocol. Records every
/// request body and the peak number of concurrently handled requests.
class MockServer {
 public:
  using Handler = std::function<MockReply(const nlohmann::json& body, int call_index)>;

  explicit MockServer(Handler handler);
  ~MockServer();
  MockServer(const MockServer&) = delete;
  MockServer& operator=(const MockServer&) = delete;

  std::string base_url() const;
  int port() const { return port_; }

  std::vector<nlohmann::json> requests() const;
  int call_count() const { return calls_.load(); }
  int max_concurrent() const { return max_concurrent_.load(); }

  /// Always answers `text`.
  static Handler fixed(std::string text);
  /// Fails with `status` for the first `failures` calls, then answers `text`.
  static Handler failing_then(int failures, int status, std::string text);
  /// Always fails with `status`.
  static Handler always(int status);

  /// Text of the last user text part of a chat-completion request body.
  static std::string question_of(const nlohmann::json& body);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int port_ = 0;
  std::atomic<int> calls_{0};
  std::atomic<int> in_flight_{0};
  std::atomic<int> max_concurrent_{0};
  mutable std::mutex mutex_;
  std::vector<nlohmann::json> requests_;
  Handler handler_;
};

}  // namespace scenemark

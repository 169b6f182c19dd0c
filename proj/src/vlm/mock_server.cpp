// SPDX-License-Identifier: Apache-2.0

#include <httplib.h>

#include <chrono>
#include <thread>

#include "scenemark/errors.hpp"
#include "scenemark/vlm.hpp"

namespace scenemark {

struct MockServer::Impl {
  httplib::Server server;
  std::thread thread;
};

MockServer::MockServer(Handler handler)
    : impl_(std::make_unique<Impl>()), handler_(std::move(handler)) {
  impl_->server.Post("/v1/chat/completions", [this](const httplib::Request& req,
                                                    httplib::Response& res) {
    const int now = ++in_flight_;
    int peak = max_concurrent_.load();
    while (now > peak && !max_concurrent_.compare_exchange_weak(peak, now)) {
    }
    const int call = calls_++;
    nlohmann::json body;
    try {
      body = nlohmann::json::parse(req.body);
    } catch (const nlohmann::json::exception&) {
      body = nlohmann::json();
    }
    {
      std::lock_guard<std::mutex> lock(mutex_);
      requests_.push_back(body);
    }
    MockReply reply;
    try {
      reply = body.is_null() ? MockReply{400, "bad json", 0} : handler_(body, call);
    } catch (const std::exception& e) {
      reply = {500, e.what(), 0};
    }
    if (reply.latency_ms > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(reply.latency_ms));
    }
    res.status = reply.status;
    if (reply.status == 200) {
      nlohmann::ordered_json out;
      out["id"] = "mock-" + std::to_string(call);
      out["object"] = "chat.completion";
      out["model"] = body.value("model", "");
      nlohmann::ordered_json choice;
      choice["index"] = 0;
      choice["message"]["role"] = "assistant";
      choice["message"]["content"] = reply.content;
      choice["finish_reason"] = "stop";
      out["choices"] = nlohmann::ordered_json::array({choice});
      const int completion = static_cast<int>(reply.content.size() / 4 + 1);
      const int prompt = static_cast<int>(req.body.size() / 4 + 1);
      out["usage"]["prompt_tokens"] = prompt;
      out["usage"]["completion_tokens"] = completion;
      out["usage"]["total_tokens"] = prompt + completion;
      res.set_content(out.dump(), "application/json");
    } else {
      nlohmann::ordered_json err;
      err["error"]["message"] = reply.content.empty() ? "mock error" : reply.content;
      err["error"]["code"] = reply.status;
      res.set_content(err.dump(), "application/json");
    }
    --in_flight_;
  });

  port_ = impl_->server.bind_to_any_port("127.0.0.1");
  if (port_ <= 0) throw IoError("mock server: cannot bind a local port");
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

MockServer::~MockServer() {
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

std::string MockServer::base_url() const {
  return "http://127.0.0.1:" + std::to_string(port_);
}

std::vector<nlohmann::json> MockServer::requests() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return requests_;
}

MockServer::Handler MockServer::fixed(std::string text) {
  return [text = std::move(text)](const nlohmann::json&, int) {
    return MockReply{200, text, 0};
  };
}

MockServer::Handler MockServer::failing_then(int failures, int status, std::string text) {
  return [failures, status, text = std::move(text)](const nlohmann::json&, int call) {
    if (call < failures) return MockReply{status, "scripted failure", 0};
    return MockReply{200, text, 0};
  };
}

MockServer::Handler MockServer::always(int status) {
  return [status](const nlohmann::json&, int) {
    return MockReply{status, "scripted failure", 0};
  };
}

std::string MockServer::question_of(const nlohmann::json& body) {
  std::string out;
  if (!body.contains("messages") || !body["messages"].is_array()) return out;
  for (const auto& msg : body["messages"]) {
    if (msg.value("role", "") != "user") continue;
    const auto& content = msg.value("content", nlohmann::json());
    if (content.is_string()) {
      out = content.get<std::string>();
    } else if (content.is_array()) {
      for (const auto& part : content) {
        if (part.value("type", "") == "text") out = part.value("text", "");
      }
    }
  }
  return out;
}

}  // namespace scenemark

// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace scenemark {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Violated precondition on an argument (bad sizes, unknown ids, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Malformed byte stream; carries the offset at which parsing stopped.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " (at byte " + std::to_string(offset) + ")"),
        offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Aggregated validation failures for a scene bundle or dataset.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<std::string> issues)
      : Error(join(issues)), issues_(std::move(issues)) {}

  const std::vector<std::string>& issues() const noexcept { return issues_; }

 private:
  static std::string join(const std::vector<std::string>& issues) {
    std::string out = "validation failed:";
    for (const auto& issue : issues) out += "\n  - " + issue;
    return out;
  }

  std::vector<std::string> issues_;
};

/// Transport or protocol failure talking to a chat-completion endpoint.
class EndpointError : public Error {
 public:
  EndpointError(const std::string& what, int status, int attempts)
      : Error(what), status_(status), attempts_(attempts) {}

  /// HTTP status of the last attempt, 0 for transport failures.
  int status() const noexcept { return status_; }
  int attempts() const noexcept { return attempts_; }

 private:
  int status_;
  int attempts_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace scenemark

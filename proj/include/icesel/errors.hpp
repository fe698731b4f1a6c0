#pragma once

#include <stdexcept>
#include <string>

namespace icesel {

// Bad flags, bad config files, malformed corpora. CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Backend failure after retries are exhausted (bad status, bad payload).
class BackendError : public std::runtime_error {
 public:
  explicit BackendError(const std::string& what) : std::runtime_error(what) {}
};

// No HTTP response at all on the final attempt. A run whose items all fail
// this way exits with code 3 instead of the failure-rate code 4.
class BackendUnreachableError : public BackendError {
 public:
  explicit BackendUnreachableError(const std::string& what) : BackendError(what) {}
};

// The backend rejected the request because the prompt exceeds its window.
// Distinct from BackendError: the search treats it as a stop condition,
// not a transport failure.
class PromptTooLongError : public std::runtime_error {
 public:
  explicit PromptTooLongError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace icesel

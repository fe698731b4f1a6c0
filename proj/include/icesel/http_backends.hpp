#pragma once

#include <optional>
#include <string>

#include "icesel/backends.hpp"

namespace icesel {

struct RetryPolicy {
  int max_retries = 3;          // attempts beyond the first request
  int initial_backoff_ms = 250;
  double backoff_multiplier = 2.0;
  int timeout_seconds = 30;
};

struct ParsedUrl {
  std::string scheme_host_port;  // e.g. "http://localhost:8080"
  std::string path;              // e.g. "/translate"
};

// Splits "http://host:port/path"; throws ConfigError on anything else.
ParsedUrl parse_url(const std::string& url);

// POST {"prompt": …} -> {"translation": …, "prompt_tokens"?: int}.
// Retries transport failures and 5xx with exponential backoff, then throws
// BackendError. A 413 response or an {"error":"prompt_too_long"} body maps
// to PromptTooLongError without retrying.
class HttpTranslator : public TranslatorBackend {
 public:
  HttpTranslator(const std::string& url, RetryPolicy retry = {},
                 std::optional<int> max_prompt_tokens = std::nullopt);
  std::string name() const override { return "http:" + url_; }
  std::optional<int> max_prompt_tokens() const override { return max_prompt_tokens_; }
  TranslateResult translate(const std::string& prompt_text) override;

 private:
  std::string url_;
  ParsedUrl parsed_;
  RetryPolicy retry_;
  std::optional<int> max_prompt_tokens_;
};

// POST {"source": …, "hypothesis": …} -> {"score": number}.
class HttpEstimator : public EstimatorBackend {
 public:
  explicit HttpEstimator(const std::string& url, RetryPolicy retry = {});
  std::string name() const override { return "http:" + url_; }
  double estimate(const std::string& source, const std::string& hypothesis) override;

 private:
  std::string url_;
  ParsedUrl parsed_;
  RetryPolicy retry_;
};

}  // namespace icesel

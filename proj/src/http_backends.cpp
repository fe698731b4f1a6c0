#include "icesel/http_backends.hpp"

#include <chrono>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "icesel/errors.hpp"

namespace icesel {
namespace {

using nlohmann::json;

ParsedUrl parse(const std::string& url) {
  auto bad = [&](const std::string& why) {
    return ConfigError("invalid backend url '" + url + "': " + why);
  };
  std::size_t scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw bad("missing scheme");
  std::string scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") throw bad("unsupported scheme " + scheme);
  std::size_t path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) {
    return {url, "/"};
  }
  if (path_start == scheme_end + 3) throw bad("missing host");
  return {url.substr(0, path_start), url.substr(path_start)};
}

// Issues the POST with bounded retries and exponential backoff. 4xx other
// than 413 is a protocol error and not retried.
json post_json(const ParsedUrl& url, const RetryPolicy& retry, const json& body) {
  std::string payload = body.dump();
  std::string last_error;
  bool last_was_transport = false;
  int backoff_ms = retry.initial_backoff_ms;
  for (int attempt = 0; attempt <= retry.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms));
      backoff_ms = static_cast<int>(backoff_ms * retry.backoff_multiplier);
    }
    httplib::Client client(url.scheme_host_port);
    client.set_connection_timeout(retry.timeout_seconds, 0);
    client.set_read_timeout(retry.timeout_seconds, 0);
    client.set_write_timeout(retry.timeout_seconds, 0);
    httplib::Result res = client.Post(url.path, payload, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      last_was_transport = true;
      continue;
    }
    last_was_transport = false;
    if (res->status == 413) {
      throw PromptTooLongError("backend rejected over-length prompt (413)");
    }
    if (res->status >= 500) {
      last_error = "server error: HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) {
      throw BackendError("backend " + url.scheme_host_port + url.path +
                         " returned HTTP " + std::to_string(res->status));
    }
    json parsed = json::parse(res->body, nullptr, /*allow_exceptions=*/false);
    if (parsed.is_discarded()) {
      throw BackendError("backend returned malformed JSON: " + res->body);
    }
    if (parsed.contains("error")) {
      std::string err = parsed["error"].get<std::string>();
      if (err == "prompt_too_long") throw PromptTooLongError("backend: " + err);
      throw BackendError("backend error: " + err);
    }
    return parsed;
  }
  std::string message = "backend " + url.scheme_host_port + url.path + " failed after " +
                        std::to_string(retry.max_retries + 1) + " attempts; last: " +
                        last_error;
  if (last_was_transport) throw BackendUnreachableError(message);
  throw BackendError(message);
}

}  // namespace

ParsedUrl parse_url(const std::string& url) { return parse(url); }

HttpTranslator::HttpTranslator(const std::string& url, RetryPolicy retry,
                               std::optional<int> max_prompt_tokens)
    : url_(url), parsed_(parse(url)), retry_(retry), max_prompt_tokens_(max_prompt_tokens) {}

TranslateResult HttpTranslator::translate(const std::string& prompt_text) {
  json request;
  request["prompt"] = prompt_text;
  json response = post_json(parsed_, retry_, request);
  if (!response.contains("translation") || !response["translation"].is_string()) {
    throw BackendError("translator response missing 'translation': " + response.dump());
  }
  TranslateResult result;
  result.text = first_line_trimmed(response["translation"].get<std::string>());
  if (response.contains("prompt_tokens") && response["prompt_tokens"].is_number_integer()) {
    result.prompt_tokens = response["prompt_tokens"].get<int>();
  }
  return result;
}

HttpEstimator::HttpEstimator(const std::string& url, RetryPolicy retry)
    : url_(url), parsed_(parse(url)), retry_(retry) {}

double HttpEstimator::estimate(const std::string& source, const std::string& hypothesis) {
  json request;
  request["source"] = source;
  request["hypothesis"] = hypothesis;
  json response = post_json(parsed_, retry_, request);
  if (!response.contains("score") || !response["score"].is_number()) {
    throw BackendError("estimator response missing 'score': " + response.dump());
  }
  return response["score"].get<double>();
}

}  // namespace icesel

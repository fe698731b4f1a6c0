#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "icesel/corpus.hpp"
#include "icesel/prompt.hpp"

namespace icesel {

struct TranslateResult {
  std::string text;                       // first completion line, trimmed
  std::optional<int> prompt_tokens;       // backend tokenizer count, if reported
};

// Translation backend. Implementations must be deterministic for a fixed
// configuration (temperature-zero contract) and safe for concurrent calls.
// Throws BackendError on transport failure, PromptTooLongError when the
// prompt exceeds the backend window.
class TranslatorBackend {
 public:
  virtual ~TranslatorBackend() = default;
  virtual std::string name() const = 0;
  virtual std::optional<int> max_prompt_tokens() const { return std::nullopt; }
  virtual TranslateResult translate(const std::string& prompt_text) = 0;
};

// Sentence-level quality estimator: (source, hypothesis) -> score on the
// BLEU label scale. Scores are used raw; only the termination rule
// interprets the scale. Deterministic; concurrency-safe.
class EstimatorBackend {
 public:
  virtual ~EstimatorBackend() = default;
  virtual std::string name() const = 0;
  virtual double estimate(const std::string& source, const std::string& hypothesis) = 0;
};

// Trims whitespace and keeps only the first line of a raw completion.
std::string first_line_trimmed(std::string_view completion);

// ---------------------------------------------------------------------------
// Prompt parsing used by the mock backends: split on the template separator;
// each example segment carries its target after the "{src} = " head, and the
// final segment is the query with an empty completion.
// ---------------------------------------------------------------------------

struct ParsedPrompt {
  std::vector<std::string> ice_targets;
  std::string query_source;
};

ParsedPrompt parse_prompt(const std::string& prompt_text,
                          const PromptTemplate& tmpl = {});

// Looks up hidden reference targets by query source. Mock backends use it
// to behave like models of known, controllable quality.
class ReferenceTable {
 public:
  ReferenceTable() = default;
  explicit ReferenceTable(std::span<const SentencePair> pairs);
  void add(std::span<const SentencePair> pairs);
  // Throws ConfigError when the source is unknown.
  const std::string& lookup(const std::string& source) const;

 private:
  std::unordered_map<std::string, std::string> by_source_;
};

// ---------------------------------------------------------------------------
// Deterministic mock backends (test fixtures and offline experiment drivers)
// ---------------------------------------------------------------------------

// Returns the query segment of the prompt verbatim.
class EchoTranslator : public TranslatorBackend {
 public:
  explicit EchoTranslator(PromptTemplate tmpl = {}) : tmpl_(std::move(tmpl)) {}
  std::string name() const override { return "mock:echo"; }
  TranslateResult translate(const std::string& prompt_text) override;

 private:
  PromptTemplate tmpl_;
};

// Emits the query's reference with every token replaced by "unk" unless the
// token occurs in some ICE target in the prompt. Quality is a deterministic,
// monotone function of ICE relevance.
class CoverageTranslator : public TranslatorBackend {
 public:
  CoverageTranslator(ReferenceTable refs, PromptTemplate tmpl = {})
      : refs_(std::move(refs)), tmpl_(std::move(tmpl)) {}
  std::string name() const override { return "mock:coverage"; }
  TranslateResult translate(const std::string& prompt_text) override;

 private:
  ReferenceTable refs_;
  PromptTemplate tmpl_;
};

// Returns the query's reference verbatim (a perfect translator).
class ReferenceTranslator : public TranslatorBackend {
 public:
  ReferenceTranslator(ReferenceTable refs, PromptTemplate tmpl = {})
      : refs_(std::move(refs)), tmpl_(std::move(tmpl)) {}
  std::string name() const override { return "mock:reference"; }
  TranslateResult translate(const std::string& prompt_text) override;

 private:
  ReferenceTable refs_;
  PromptTemplate tmpl_;
};

// Always returns the same text.
class ConstantTranslator : public TranslatorBackend {
 public:
  explicit ConstantTranslator(std::string text) : text_(std::move(text)) {}
  std::string name() const override { return "mock:constant"; }
  TranslateResult translate(const std::string&) override { return {text_, std::nullopt}; }

 private:
  std::string text_;
};

// Reference sentence BLEU (the estimator of the oracle mode).
class OracleEstimator : public EstimatorBackend {
 public:
  explicit OracleEstimator(ReferenceTable refs) : refs_(std::move(refs)) {}
  std::string name() const override { return "mock:oracle"; }
  double estimate(const std::string& source, const std::string& hypothesis) override;

 private:
  ReferenceTable refs_;
};

// Oracle plus seeded zero-mean gaussian noise, clamped to [0, 100]. The
// noise is a pure function of (seed, source, hypothesis), so results do not
// depend on call order or thread interleaving.
class NoisyOracleEstimator : public EstimatorBackend {
 public:
  NoisyOracleEstimator(ReferenceTable refs, double sigma, std::uint64_t seed)
      : oracle_(std::move(refs)), sigma_(sigma), seed_(seed) {}
  std::string name() const override;
  double estimate(const std::string& source, const std::string& hypothesis) override;

 private:
  OracleEstimator oracle_;
  double sigma_;
  std::uint64_t seed_;
};

// ---------------------------------------------------------------------------
// QE label synthesis
// ---------------------------------------------------------------------------

struct QeLabelRecord {
  std::string source;
  std::string machine_translation;
  double label = 0.0;  // sentence BLEU vs reference, [0, 100]
};

struct QeSynthesisStats {
  std::size_t written = 0;
  std::size_t skipped = 0;  // backend failures, logged and skipped
};

// Samples `sample_size` pairs without replacement (seeded), translates each
// source with a zero-shot prompt, labels the output with sentence BLEU
// against the reference, and streams JSONL records
// {"source":…,"mt":…,"label":…} to `out`. Throws ConfigError when
// sample_size exceeds the corpus.
QeSynthesisStats synthesize_qe_labels(std::span<const SentencePair> corpus_pairs,
                                      TranslatorBackend& translator,
                                      std::size_t sample_size, std::uint64_t seed,
                                      std::ostream& out,
                                      const PromptTemplate& tmpl = {});

}  // namespace icesel

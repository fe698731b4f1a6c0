#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "icesel/backends.hpp"
#include "icesel/bleu.hpp"
#include "icesel/bm25.hpp"
#include "icesel/corpus.hpp"
#include "icesel/search.hpp"

namespace icesel {

enum class Method { kRandom, kTaskLevel, kBm25, kRBm25, kSearch };

const char* to_string(Method method);

struct MethodSpec {
  Method method = Method::kSearch;
  int p = 0;        // randomly chosen ICEs (random / task-level)
  int q = 0;        // retrieval- or search-chosen ICEs
  int trials = 0;   // 0 = method default (random 3, task-level 100)
  SearchConfig search_config;
  std::uint64_t seed = 0;

  int effective_trials() const;
  // Enforces: exactly one of p/q nonzero for baselines, p + q <= 16,
  // trial/patience bounds. Throws ConfigError.
  void validate(const Corpus& corpus) const;
};

struct ItemRecord {
  int query_id = 0;
  std::vector<int> ice_ids;
  std::string translation;
  std::optional<double> estimated_quality;  // search methods only
  int iterations = 0;                       // backend round trips spent on the item
  std::optional<StopReason> stop_reason;    // search methods only
  std::optional<std::string> error;         // set for failed items
  bool backend_unreachable = false;         // failure was transport-level
  double wall_time_ms = 0.0;

  bool failed() const { return error.has_value(); }
};

struct IceCountStats {
  int min = 0;
  double mean = 0.0;
  int max = 0;
};

// min/mean/max of ICEs actually used per successful item.
IceCountStats ice_count_stats(const std::vector<ItemRecord>& items);

struct RunReport {
  std::vector<ItemRecord> per_item;  // test-set order; failed items marked
  BleuScore corpus_bleu;             // over non-failed items
  IceCountStats ice_stats;
  double ttp_seconds = 0.0;          // wall clock for the whole run
  std::size_t failed_items = 0;
  std::size_t unreachable_items = 0;
  nlohmann::ordered_json config;     // resolved config snapshot
  // Random / task-level extras.
  std::vector<double> trial_dev_bleu;
  int winning_trial = -1;
  std::vector<int> winning_ice_ids;
};

std::string format_hhmmss(double seconds);

struct RunnerOptions {
  int parallelism = 1;
  int retriever_top = 16;   // candidate pool handed to the search
  int rbm25_pool = 100;     // BM25 hits re-ranked by R-BM25
  int rbm25_ngram_max = 4;
  bool rbm25_count_weighted = false;
  Bm25Params bm25;
  double max_failure_rate = 0.01;  // run fails (exit 4) above this
};

// Experiment orchestration over one corpus: owns the tokenized training
// sources and the BM25 index (built lazily or injected from a cache).
class Runner {
 public:
  Runner(Corpus corpus, RunnerOptions options = {});

  // Dispatches on spec.method. `estimator` may be null for the baselines
  // and for the oracle mode (which builds its own).
  RunReport run(const MethodSpec& spec, TranslatorBackend& translator,
                EstimatorBackend* estimator = nullptr);

  RunReport run_random_baseline(TranslatorBackend& translator, const MethodSpec& spec);
  RunReport run_task_level_baseline(TranslatorBackend& translator, const MethodSpec& spec);
  RunReport run_bm25_baseline(TranslatorBackend& translator, const MethodSpec& spec);
  RunReport run_rbm25_baseline(TranslatorBackend& translator, const MethodSpec& spec);
  RunReport run_search_mode(TranslatorBackend& translator, EstimatorBackend& estimator,
                            const MethodSpec& spec);

  const Corpus& corpus() const { return corpus_; }
  const TokenizedDocs& train_source_tokens();
  const Bm25Index& index();
  void set_index(Bm25Index index) { index_ = std::move(index); }
  const RunnerOptions& options() const { return options_; }

 private:
  RunReport run_fixed_ices_over_test(const std::vector<int>& ice_ids,
                                     TranslatorBackend& translator,
                                     const MethodSpec& spec,
                                     nlohmann::ordered_json config);
  RunReport run_sampled_baseline(TranslatorBackend& translator, const MethodSpec& spec,
                                 int trials);
  RunReport run_retrieval_baseline(TranslatorBackend& translator, const MethodSpec& spec,
                                   bool rerank);
  void finalize_report(RunReport& report) const;

  Corpus corpus_;
  RunnerOptions options_;
  std::optional<TokenizedDocs> train_tokens_;
  std::optional<Bm25Index> index_;
};

}  // namespace icesel

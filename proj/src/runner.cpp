#include "icesel/runner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <thread>

#include "icesel/errors.hpp"
#include "icesel/rng.hpp"
#include "icesel/tokenize.hpp"

namespace icesel {

const char* to_string(Method method) {
  switch (method) {
    case Method::kRandom: return "random";
    case Method::kTaskLevel: return "task-level";
    case Method::kBm25: return "bm25";
    case Method::kRBm25: return "rbm25";
    case Method::kSearch: return "search";
  }
  return "unknown";
}

int MethodSpec::effective_trials() const {
  if (trials > 0) return trials;
  if (method == Method::kRandom) return 3;
  if (method == Method::kTaskLevel) return 100;
  return 1;
}

void MethodSpec::validate(const Corpus& corpus) const {
  if (corpus.test.empty()) throw ConfigError("test split is empty");
  if (p < 0 || q < 0) throw ConfigError("p and q must be non-negative");
  if (p + q > 16) throw ConfigError("p + q must be <= 16");
  switch (method) {
    case Method::kRandom:
    case Method::kTaskLevel:
      if (p < 1 || q != 0) {
        throw ConfigError("random/task-level use p randomly chosen ICEs (p >= 1, q == 0)");
      }
      if (static_cast<std::size_t>(p) > corpus.train.size()) {
        throw ConfigError("p exceeds training set size");
      }
      if (corpus.dev.empty()) throw ConfigError("random/task-level need a dev split");
      break;
    case Method::kBm25:
    case Method::kRBm25:
      if (q < 1 || p != 0) {
        throw ConfigError("bm25/rbm25 use q retrieved ICEs (q >= 1, p == 0)");
      }
      if (corpus.train.empty()) throw ConfigError("train split is empty");
      break;
    case Method::kSearch:
      if (p != 0) throw ConfigError("search methods do not take random ICEs (p must be 0)");
      if (search_config.max_candidates < 1) throw ConfigError("K must be >= 1");
      if (search_config.patience < 1) throw ConfigError("patience must be >= 1");
      if (search_config.termination_score <= 0) {
        throw ConfigError("termination score must be > 0");
      }
      if (search_config.max_candidates > 16) throw ConfigError("p + q must be <= 16");
      if (corpus.train.empty()) throw ConfigError("train split is empty");
      break;
  }
}

IceCountStats ice_count_stats(const std::vector<ItemRecord>& items) {
  IceCountStats stats;
  long long sum = 0;
  std::size_t n = 0;
  for (const ItemRecord& item : items) {
    if (item.failed()) continue;
    int count = static_cast<int>(item.ice_ids.size());
    if (n == 0) {
      stats.min = count;
      stats.max = count;
    } else {
      stats.min = std::min(stats.min, count);
      stats.max = std::max(stats.max, count);
    }
    sum += count;
    ++n;
  }
  stats.mean = n == 0 ? 0.0 : static_cast<double>(sum) / static_cast<double>(n);
  return stats;
}

std::string format_hhmmss(double seconds) {
  long long total = static_cast<long long>(seconds);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%02lld:%02lld:%02lld", total / 3600,
                (total % 3600) / 60, total % 60);
  return buf;
}

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

// Index-sharded worker pool; results land by index so output order never
// depends on completion order. `fn` must not throw.
template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::size_t pool_size = std::min<std::size_t>(static_cast<std::size_t>(workers), n);
  std::vector<std::thread> pool;
  pool.reserve(pool_size);
  for (std::size_t w = 0; w < pool_size; ++w) {
    pool.emplace_back([&] {
      while (true) {
        std::size_t i = next.fetch_add(1);
        if (i >= n) break;
        fn(i);
      }
    });
  }
  for (std::thread& t : pool) t.join();
}

ItemRecord translate_with_fixed_ices(const SentencePair& query,
                                     std::span<const SentencePair> ices,
                                     TranslatorBackend& translator,
                                     const PromptTemplate& tmpl) {
  ItemRecord record;
  record.query_id = query.id;
  for (const SentencePair& ice : ices) record.ice_ids.push_back(ice.id);
  record.iterations = 1;
  Clock::time_point start = Clock::now();
  try {
    record.translation = translator.translate(render(tmpl, ices, query.source)).text;
  } catch (const BackendUnreachableError& e) {
    record.error = e.what();
    record.backend_unreachable = true;
  } catch (const std::exception& e) {
    record.error = e.what();
  }
  record.wall_time_ms = ms_since(start);
  return record;
}

nlohmann::ordered_json base_config(const MethodSpec& spec, const RunnerOptions& options,
                                   const std::string& translator_name,
                                   const std::string& estimator_name) {
  nlohmann::ordered_json cfg;
  cfg["schema_version"] = 1;
  cfg["method"] = to_string(spec.method);
  cfg["p"] = spec.p;
  cfg["q"] = spec.q;
  cfg["seed"] = spec.seed;
  if (spec.method == Method::kRandom || spec.method == Method::kTaskLevel) {
    cfg["trials"] = spec.effective_trials();
  }
  if (spec.method == Method::kSearch) {
    cfg["mode"] = static_cast<int>(spec.search_config.mode);
    cfg["patience"] = spec.search_config.patience;
    cfg["k"] = spec.search_config.max_candidates;
    cfg["termination_score"] = spec.search_config.termination_score;
    cfg["max_prompt_tokens"] = spec.search_config.max_prompt_tokens;
    cfg["retriever_top"] = options.retriever_top;
  }
  if (spec.method == Method::kRBm25) {
    cfg["rbm25_pool"] = options.rbm25_pool;
    cfg["rbm25_ngram_max"] = options.rbm25_ngram_max;
    cfg["rbm25_count_weighted"] = options.rbm25_count_weighted;
  }
  if (spec.method != Method::kRandom && spec.method != Method::kTaskLevel) {
    cfg["bm25"] = {{"k1", options.bm25.k1},
                   {"b", options.bm25.b},
                   {"epsilon", options.bm25.epsilon}};
  }
  cfg["translator"] = translator_name;
  if (!estimator_name.empty()) cfg["estimator"] = estimator_name;
  return cfg;
}

}  // namespace

Runner::Runner(Corpus corpus, RunnerOptions options)
    : corpus_(std::move(corpus)), options_(options) {}

const TokenizedDocs& Runner::train_source_tokens() {
  if (!train_tokens_) {
    TokenizedDocs docs;
    docs.reserve(corpus_.train.size());
    for (const SentencePair& pair : corpus_.train) {
      docs.push_back(tokenize_13a(pair.source));
    }
    train_tokens_ = std::move(docs);
  }
  return *train_tokens_;
}

const Bm25Index& Runner::index() {
  if (!index_) {
    if (corpus_.train.empty()) throw ConfigError("train split is empty");
    index_ = Bm25Index::build(train_source_tokens(), options_.bm25);
  }
  return *index_;
}

void Runner::finalize_report(RunReport& report) const {
  std::vector<std::string> hyps;
  std::vector<std::string> refs;
  for (const ItemRecord& item : report.per_item) {
    if (item.failed()) {
      ++report.failed_items;
      if (item.backend_unreachable) ++report.unreachable_items;
      continue;
    }
    hyps.push_back(item.translation);
    refs.push_back(corpus_.test[static_cast<std::size_t>(item.query_id)].target);
  }
  if (!hyps.empty()) report.corpus_bleu = corpus_bleu(hyps, refs);
  report.ice_stats = ice_count_stats(report.per_item);
}

RunReport Runner::run(const MethodSpec& spec, TranslatorBackend& translator,
                      EstimatorBackend* estimator) {
  spec.validate(corpus_);
  switch (spec.method) {
    case Method::kRandom:
      return run_random_baseline(translator, spec);
    case Method::kTaskLevel:
      return run_task_level_baseline(translator, spec);
    case Method::kBm25:
      return run_bm25_baseline(translator, spec);
    case Method::kRBm25:
      return run_rbm25_baseline(translator, spec);
    case Method::kSearch:
      break;
  }
  std::unique_ptr<EstimatorBackend> oracle;
  if (spec.search_config.mode == SearchMode::kOracle) {
    ReferenceTable refs(corpus_.test);
    refs.add(corpus_.dev);
    oracle = std::make_unique<OracleEstimator>(std::move(refs));
    estimator = oracle.get();
  }
  if (estimator == nullptr) {
    throw ConfigError("search modes 1 and 2 need a quality estimator backend");
  }
  return run_search_mode(translator, *estimator, spec);
}

RunReport Runner::run_fixed_ices_over_test(const std::vector<int>& ice_ids,
                                           TranslatorBackend& translator,
                                           const MethodSpec& spec,
                                           nlohmann::ordered_json config) {
  std::vector<SentencePair> ices;
  ices.reserve(ice_ids.size());
  for (int id : ice_ids) ices.push_back(corpus_.train.at(static_cast<std::size_t>(id)));

  RunReport report;
  report.config = std::move(config);
  report.per_item.resize(corpus_.test.size());
  const PromptTemplate& tmpl = spec.search_config.prompt_template;
  parallel_for(corpus_.test.size(), options_.parallelism, [&](std::size_t i) {
    report.per_item[i] =
        translate_with_fixed_ices(corpus_.test[i], ices, translator, tmpl);
  });
  finalize_report(report);
  return report;
}

RunReport Runner::run_sampled_baseline(TranslatorBackend& translator,
                                       const MethodSpec& spec, int trials) {
  Clock::time_point run_start = Clock::now();
  Rng rng(spec.seed);
  std::vector<std::vector<int>> trial_ice_ids;
  trial_ice_ids.reserve(static_cast<std::size_t>(trials));
  for (int t = 0; t < trials; ++t) {
    std::vector<int> ids;
    for (std::size_t idx : rng.sample_without_replacement(
             corpus_.train.size(), static_cast<std::size_t>(spec.p))) {
      ids.push_back(static_cast<int>(idx));
    }
    trial_ice_ids.push_back(std::move(ids));
  }

  // Score every trial on the dev split; the best dev BLEU wins, ties going
  // to the lowest trial index.
  const PromptTemplate& tmpl = spec.search_config.prompt_template;
  std::vector<double> trial_scores;
  trial_scores.reserve(trial_ice_ids.size());
  for (const std::vector<int>& ids : trial_ice_ids) {
    std::vector<SentencePair> ices;
    for (int id : ids) ices.push_back(corpus_.train.at(static_cast<std::size_t>(id)));
    std::vector<ItemRecord> dev_items(corpus_.dev.size());
    parallel_for(corpus_.dev.size(), options_.parallelism, [&](std::size_t i) {
      dev_items[i] = translate_with_fixed_ices(corpus_.dev[i], ices, translator, tmpl);
    });
    std::vector<std::string> hyps;
    std::vector<std::string> refs;
    for (std::size_t i = 0; i < dev_items.size(); ++i) {
      if (dev_items[i].failed()) continue;
      hyps.push_back(dev_items[i].translation);
      refs.push_back(corpus_.dev[i].target);
    }
    trial_scores.push_back(hyps.empty() ? 0.0 : corpus_bleu(hyps, refs).score);
  }

  int winner = 0;
  for (int t = 1; t < trials; ++t) {
    if (trial_scores[static_cast<std::size_t>(t)] >
        trial_scores[static_cast<std::size_t>(winner)]) {
      winner = t;
    }
  }

  RunReport report = run_fixed_ices_over_test(
      trial_ice_ids[static_cast<std::size_t>(winner)], translator, spec,
      base_config(spec, options_, translator.name(), ""));
  report.trial_dev_bleu = std::move(trial_scores);
  report.winning_trial = winner;
  report.winning_ice_ids = trial_ice_ids[static_cast<std::size_t>(winner)];
  report.ttp_seconds = ms_since(run_start) / 1000.0;
  return report;
}

RunReport Runner::run_random_baseline(TranslatorBackend& translator,
                                      const MethodSpec& spec) {
  return run_sampled_baseline(translator, spec, spec.effective_trials());
}

RunReport Runner::run_task_level_baseline(TranslatorBackend& translator,
                                          const MethodSpec& spec) {
  return run_sampled_baseline(translator, spec, spec.effective_trials());
}

RunReport Runner::run_retrieval_baseline(TranslatorBackend& translator,
                                         const MethodSpec& spec, bool rerank) {
  Clock::time_point run_start = Clock::now();
  const Bm25Index& idx = index();
  const TokenizedDocs& docs = train_source_tokens();
  const PromptTemplate& tmpl = spec.search_config.prompt_template;

  RunReport report;
  report.config = base_config(spec, options_, translator.name(), "");
  report.per_item.resize(corpus_.test.size());
  parallel_for(corpus_.test.size(), options_.parallelism, [&](std::size_t i) {
    const SentencePair& query = corpus_.test[i];
    ItemRecord record;
    record.query_id = query.id;
    record.iterations = 1;
    Clock::time_point start = Clock::now();
    try {
      std::vector<std::string> query_tokens = tokenize_13a(query.source);
      std::vector<RankedCandidate> cands;
      if (rerank) {
        std::vector<RankedCandidate> pool = idx.top_k(query_tokens, options_.rbm25_pool);
        cands = rerank_rbm25(pool, query_tokens, docs, options_.rbm25_ngram_max, spec.q,
                             options_.rbm25_count_weighted);
      } else {
        cands = idx.top_k(query_tokens, spec.q);
      }
      std::vector<SentencePair> ices;
      ices.reserve(cands.size());
      for (const RankedCandidate& c : cands) {
        ices.push_back(corpus_.train.at(static_cast<std::size_t>(c.pair_id)));
        record.ice_ids.push_back(c.pair_id);
      }
      record.translation = translator.translate(render(tmpl, ices, query.source)).text;
    } catch (const BackendUnreachableError& e) {
      record.error = e.what();
      record.backend_unreachable = true;
    } catch (const std::exception& e) {
      record.error = e.what();
    }
    record.wall_time_ms = ms_since(start);
    report.per_item[i] = std::move(record);
  });
  finalize_report(report);
  report.ttp_seconds = ms_since(run_start) / 1000.0;
  return report;
}

RunReport Runner::run_bm25_baseline(TranslatorBackend& translator, const MethodSpec& spec) {
  return run_retrieval_baseline(translator, spec, /*rerank=*/false);
}

RunReport Runner::run_rbm25_baseline(TranslatorBackend& translator,
                                     const MethodSpec& spec) {
  return run_retrieval_baseline(translator, spec, /*rerank=*/true);
}

RunReport Runner::run_search_mode(TranslatorBackend& translator,
                                  EstimatorBackend& estimator, const MethodSpec& spec) {
  Clock::time_point run_start = Clock::now();
  const Bm25Index& idx = index();
  const TokenizedDocs& docs = train_source_tokens();
  const SearchConfig& config = spec.search_config;

  RunReport report;
  report.config = base_config(spec, options_, translator.name(), estimator.name());
  report.per_item.resize(corpus_.test.size());
  parallel_for(corpus_.test.size(), options_.parallelism, [&](std::size_t i) {
    const SentencePair& query = corpus_.test[i];
    ItemRecord record;
    record.query_id = query.id;
    Clock::time_point start = Clock::now();
    try {
      std::vector<std::string> query_tokens = tokenize_13a(query.source);
      std::vector<RankedCandidate> pool = idx.top_k(query_tokens, options_.retriever_top);
      std::vector<RankedCandidate> ordered =
          order_candidates(config.mode, std::move(pool), query_tokens, docs);
      std::vector<SentencePair> candidates;
      candidates.reserve(ordered.size());
      for (const RankedCandidate& c : ordered) {
        candidates.push_back(corpus_.train.at(static_cast<std::size_t>(c.pair_id)));
      }
      SearchResult result = run_search(query.source, candidates, translator, estimator,
                                       config);
      record.iterations = result.iterations;
      record.stop_reason = result.stop_reason;
      if (!result.best) {
        record.error = "prompt over length budget before the first candidate";
      } else {
        record.ice_ids = result.best->ice_ids;
        record.translation = result.best->translation;
        record.estimated_quality = result.best->estimated_quality;
      }
    } catch (const SearchAbortedError& e) {
      record.iterations = static_cast<int>(e.partial_trace.size());
      record.error = e.what();
      record.backend_unreachable = e.backend_unreachable;
    } catch (const BackendUnreachableError& e) {
      record.error = e.what();
      record.backend_unreachable = true;
    } catch (const std::exception& e) {
      record.error = e.what();
    }
    record.wall_time_ms = ms_since(start);
    report.per_item[i] = std::move(record);
  });
  finalize_report(report);
  report.ttp_seconds = ms_since(run_start) / 1000.0;
  return report;
}

}  // namespace icesel

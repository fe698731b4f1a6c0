#include <doctest.h>

#include <atomic>

#include "icesel/errors.hpp"
#include "icesel/runner.hpp"
#include "icesel/tokenize.hpp"
#include "support/synthetic_corpus.hpp"

using namespace icesel;
using icesel::testsupport::make_synthetic_corpus;
using icesel::testsupport::SyntheticCorpusConfig;

namespace {

SyntheticCorpusConfig small_corpus_config() {
  SyntheticCorpusConfig config;
  config.train_size = 80;
  config.dev_size = 8;
  config.test_size = 12;
  config.vocab_size = 30;
  config.seed = 4242;
  return config;
}

ReferenceTable full_reference_table(const Corpus& corpus) {
  ReferenceTable table(corpus.dev);
  table.add(corpus.test);
  return table;
}

// Counts round trips to an inner translator.
class CountingTranslator : public TranslatorBackend {
 public:
  explicit CountingTranslator(TranslatorBackend& inner) : inner_(inner) {}
  std::string name() const override { return inner_.name(); }
  TranslateResult translate(const std::string& prompt) override {
    calls.fetch_add(1);
    return inner_.translate(prompt);
  }
  std::atomic<int> calls{0};

 private:
  TranslatorBackend& inner_;
};

// Fails every prompt whose query segment is the poisoned source.
class PoisonedTranslator : public TranslatorBackend {
 public:
  PoisonedTranslator(TranslatorBackend& inner, const std::string& poisoned_source)
      : inner_(inner), suffix_(poisoned_source + " = ") {}
  std::string name() const override { return inner_.name(); }
  TranslateResult translate(const std::string& prompt) override {
    if (prompt.ends_with(suffix_)) throw BackendError("poisoned item");
    return inner_.translate(prompt);
  }

 private:
  TranslatorBackend& inner_;
  std::string suffix_;
};

MethodSpec search_spec(SearchMode mode, int patience, int k = 16) {
  MethodSpec spec;
  spec.method = Method::kSearch;
  spec.search_config.mode = mode;
  spec.search_config.patience = patience;
  spec.search_config.max_candidates = k;
  spec.q = k;
  return spec;
}

}  // namespace

TEST_CASE("MethodSpec validation") {
  Corpus corpus = make_synthetic_corpus(small_corpus_config());
  MethodSpec spec;

  spec.method = Method::kRandom;
  spec.p = 0;
  CHECK_THROWS_AS(spec.validate(corpus), ConfigError);
  spec.p = 1;
  spec.q = 1;
  CHECK_THROWS_AS(spec.validate(corpus), ConfigError);
  spec.q = 0;
  CHECK_NOTHROW(spec.validate(corpus));
  spec.p = 17;
  CHECK_THROWS_AS(spec.validate(corpus), ConfigError);

  spec = MethodSpec{};
  spec.method = Method::kBm25;
  spec.q = 0;
  CHECK_THROWS_AS(spec.validate(corpus), ConfigError);
  spec.q = 16;
  CHECK_NOTHROW(spec.validate(corpus));

  spec = search_spec(SearchMode::kOracle, 3);
  CHECK_NOTHROW(spec.validate(corpus));
  spec.search_config.patience = 0;
  CHECK_THROWS_AS(spec.validate(corpus), ConfigError);
  spec = search_spec(SearchMode::kOracle, 3, 17);
  CHECK_THROWS_AS(spec.validate(corpus), ConfigError);

  Corpus no_dev = corpus;
  no_dev.dev.clear();
  spec = MethodSpec{};
  spec.method = Method::kTaskLevel;
  spec.p = 2;
  CHECK_THROWS_AS(spec.validate(no_dev), ConfigError);
}

TEST_CASE("effective trial defaults") {
  MethodSpec spec;
  spec.method = Method::kRandom;
  CHECK(spec.effective_trials() == 3);
  spec.method = Method::kTaskLevel;
  CHECK(spec.effective_trials() == 100);
  spec.trials = 7;
  CHECK(spec.effective_trials() == 7);
}

TEST_CASE("ice_count_stats") {
  std::vector<ItemRecord> items(4);
  items[0].ice_ids = {1, 2, 3};
  items[1].ice_ids = {4};
  items[2].ice_ids = {5, 6, 7, 8, 9, 10};
  items[3].error = "failed";
  items[3].ice_ids = {11, 12};  // ignored: failed items do not count
  IceCountStats stats = ice_count_stats(items);
  CHECK(stats.min == 1);
  CHECK(stats.mean == doctest::Approx((3 + 1 + 6) / 3.0));
  CHECK(stats.max == 6);

  CHECK(ice_count_stats({}).min == 0);
  CHECK(ice_count_stats({}).mean == 0.0);
}

TEST_CASE("format_hhmmss") {
  CHECK(format_hhmmss(0.0) == "00:00:00");
  CHECK(format_hhmmss(59.9) == "00:00:59");
  CHECK(format_hhmmss(3661.0) == "01:01:01");
  CHECK(format_hhmmss(18605.0) == "05:10:05");
}

TEST_CASE("random baseline") {
  Corpus corpus = make_synthetic_corpus(small_corpus_config());
  ReferenceTable refs = full_reference_table(corpus);

  SUBCASE("fixed seed reproduces the winning indices") {
    MethodSpec spec;
    spec.method = Method::kRandom;
    spec.p = 2;
    spec.seed = 11;
    CoverageTranslator translator(refs);
    Runner runner_a(corpus, {});
    Runner runner_b(corpus, {});
    RunReport a = runner_a.run(spec, translator);
    RunReport b = runner_b.run(spec, translator);
    CHECK(a.winning_ice_ids == b.winning_ice_ids);
    CHECK(a.winning_trial == b.winning_trial);
    CHECK(a.trial_dev_bleu == b.trial_dev_bleu);
    CHECK(a.corpus_bleu.score == b.corpus_bleu.score);
    REQUIRE(a.per_item.size() == corpus.test.size());
    for (const ItemRecord& item : a.per_item) {
      CHECK(item.ice_ids == a.winning_ice_ids);
    }
  }

  SUBCASE("identical trial scores pick the first trial") {
    // p == train size: every trial draws all training pairs (orders differ,
    // but coverage only depends on the token set), so dev scores tie.
    MethodSpec spec;
    spec.method = Method::kRandom;
    spec.p = 16;
    spec.trials = 3;
    spec.seed = 5;
    SyntheticCorpusConfig tiny = small_corpus_config();
    tiny.train_size = 16;
    Corpus small = make_synthetic_corpus(tiny);
    ReferenceTable small_refs = full_reference_table(small);
    CoverageTranslator translator(small_refs);
    Runner runner(small, {});
    RunReport report = runner.run(spec, translator);
    REQUIRE(report.trial_dev_bleu.size() == 3);
    CHECK(report.trial_dev_bleu[0] == report.trial_dev_bleu[1]);
    CHECK(report.trial_dev_bleu[1] == report.trial_dev_bleu[2]);
    CHECK(report.winning_trial == 0);
  }

  SUBCASE("winner has the best dev BLEU") {
    MethodSpec spec;
    spec.method = Method::kRandom;
    spec.p = 1;
    spec.trials = 5;
    spec.seed = 3;
    CoverageTranslator translator(refs);
    Runner runner(corpus, {});
    RunReport report = runner.run(spec, translator);
    REQUIRE(report.trial_dev_bleu.size() == 5);
    for (double score : report.trial_dev_bleu) {
      CHECK(report.trial_dev_bleu[static_cast<std::size_t>(report.winning_trial)] >= score);
    }
  }
}

TEST_CASE("task-level baseline call accounting") {
  SyntheticCorpusConfig cfg = small_corpus_config();
  cfg.dev_size = 4;
  cfg.test_size = 5;
  Corpus corpus = make_synthetic_corpus(cfg);
  ReferenceTable refs = full_reference_table(corpus);
  CoverageTranslator coverage(refs);
  CountingTranslator counting(coverage);

  MethodSpec spec;
  spec.method = Method::kTaskLevel;
  spec.p = 2;
  spec.trials = 9;
  Runner runner(corpus, {});
  RunReport report = runner.run(spec, counting);
  CHECK(counting.calls.load() == 9 * 4 + 5);
  CHECK(report.per_item.size() == 5);

  // The default 100 trials issue exactly 100 * |dev| + |test| calls.
  SyntheticCorpusConfig tiny = cfg;
  tiny.dev_size = 2;
  tiny.test_size = 3;
  Corpus tiny_corpus = make_synthetic_corpus(tiny);
  ReferenceTable tiny_refs = full_reference_table(tiny_corpus);
  CoverageTranslator tiny_coverage(tiny_refs);
  CountingTranslator tiny_counting(tiny_coverage);
  MethodSpec default_trials;
  default_trials.method = Method::kTaskLevel;
  default_trials.p = 2;
  Runner(tiny_corpus, {}).run(default_trials, tiny_counting);
  CHECK(tiny_counting.calls.load() == 100 * 2 + 3);

  // One configured trial equals the random baseline on the same seed.
  MethodSpec one_trial = spec;
  one_trial.trials = 1;
  one_trial.method = Method::kTaskLevel;
  RunReport task = Runner(corpus, {}).run(one_trial, coverage);
  one_trial.method = Method::kRandom;
  RunReport random = Runner(corpus, {}).run(one_trial, coverage);
  CHECK(task.winning_ice_ids == random.winning_ice_ids);
  CHECK(task.corpus_bleu.score == random.corpus_bleu.score);
}

TEST_CASE("bm25 baseline delegates to top_k") {
  Corpus corpus = make_synthetic_corpus(small_corpus_config());
  ReferenceTable refs = full_reference_table(corpus);
  CoverageTranslator translator(refs);

  MethodSpec spec;
  spec.method = Method::kBm25;
  spec.q = 1;
  Runner runner(corpus, {});
  RunReport q1 = runner.run(spec, translator);
  REQUIRE(q1.per_item.size() == corpus.test.size());
  for (std::size_t i = 0; i < corpus.test.size(); ++i) {
    const ItemRecord& item = q1.per_item[i];
    REQUIRE(item.ice_ids.size() == 1);
    auto expected = runner.index().top_k(
        tokenize_13a(corpus.test[i].source), 1);
    CHECK(item.ice_ids[0] == expected[0].pair_id);
  }
  CHECK(q1.ice_stats.min == 1);
  CHECK(q1.ice_stats.max == 1);

  spec.q = 16;
  RunReport q16 = runner.run(spec, translator);
  for (const ItemRecord& item : q16.per_item) CHECK(item.ice_ids.size() == 16);
  CHECK(q16.corpus_bleu.score >= q1.corpus_bleu.score);
}

TEST_CASE("rbm25 baseline delegates to the re-ranker over the pool") {
  Corpus corpus = make_synthetic_corpus(small_corpus_config());
  ReferenceTable refs = full_reference_table(corpus);
  CoverageTranslator translator(refs);

  RunnerOptions options;
  options.rbm25_pool = 40;
  MethodSpec spec;
  spec.method = Method::kRBm25;
  spec.q = 4;
  Runner runner(corpus, options);
  RunReport report = runner.run(spec, translator);
  for (std::size_t i = 0; i < corpus.test.size(); ++i) {
    auto query_tokens = tokenize_13a(corpus.test[i].source);
    auto pool = runner.index().top_k(query_tokens, 40);
    auto expected = rerank_rbm25(pool, query_tokens, runner.train_source_tokens(), 4, 4);
    REQUIRE(report.per_item[i].ice_ids.size() == expected.size());
    for (std::size_t j = 0; j < expected.size(); ++j) {
      CHECK(report.per_item[i].ice_ids[j] == expected[j].pair_id);
    }
  }

  MethodSpec q1 = spec;
  q1.q = 1;
  RunReport r1 = Runner(corpus, options).run(q1, translator);
  MethodSpec q16 = spec;
  q16.q = 16;
  RunReport r16 = Runner(corpus, options).run(q16, translator);
  CHECK(r16.corpus_bleu.score >= r1.corpus_bleu.score);
}

TEST_CASE("search mode reports") {
  Corpus corpus = make_synthetic_corpus(small_corpus_config());
  ReferenceTable refs = full_reference_table(corpus);
  CoverageTranslator translator(refs);
  Runner runner(corpus, {});

  SUBCASE("oracle mode builds its own estimator and respects bounds") {
    CountingTranslator counting(translator);
    RunReport report = runner.run(search_spec(SearchMode::kOracle, 8), counting);
    REQUIRE(report.per_item.size() == corpus.test.size());
    CHECK(report.failed_items == 0);
    CHECK(report.ice_stats.min >= 1);
    CHECK(report.ice_stats.max <= 16);
    long long total_iterations = 0;
    for (const ItemRecord& item : report.per_item) {
      CHECK(item.iterations >= 1);
      CHECK(item.iterations <= 16);
      total_iterations += item.iterations;
      REQUIRE(item.stop_reason.has_value());
      REQUIRE(item.estimated_quality.has_value());
    }
    // Budget: one translator round trip per iteration, at most |test| * K.
    CHECK(counting.calls.load() == total_iterations);
    CHECK(counting.calls.load() <= static_cast<long long>(corpus.test.size()) * 16);
    CHECK(report.config.at("estimator").get<std::string>() == "mock:oracle");
  }

  SUBCASE("modes 1 and 2 need an estimator") {
    CHECK_THROWS_AS(runner.run(search_spec(SearchMode::kQeBm25, 3), translator),
                    ConfigError);
  }

  SUBCASE("per-item estimates dominate as patience grows") {
    RunReport p3 = runner.run(search_spec(SearchMode::kOracle, 3), translator);
    RunReport p8 = runner.run(search_spec(SearchMode::kOracle, 8), translator);
    RunReport p16 = runner.run(search_spec(SearchMode::kOracle, 16), translator);
    for (std::size_t i = 0; i < corpus.test.size(); ++i) {
      CHECK(*p3.per_item[i].estimated_quality <= *p8.per_item[i].estimated_quality);
      CHECK(*p8.per_item[i].estimated_quality <= *p16.per_item[i].estimated_quality);
      CHECK(p3.per_item[i].ice_ids.size() <= p8.per_item[i].ice_ids.size());
      CHECK(p8.per_item[i].ice_ids.size() <= p16.per_item[i].ice_ids.size());
    }
    CHECK(p3.ice_stats.mean <= p8.ice_stats.mean);
    CHECK(p8.ice_stats.mean <= p16.ice_stats.mean);
  }

  SUBCASE("mode 2 reorders candidates before searching") {
    NoisyOracleEstimator estimator(refs, 5.0, 21);
    RunReport report =
        runner.run(search_spec(SearchMode::kQeUnigram, 4), translator, &estimator);
    CHECK(report.per_item.size() == corpus.test.size());
    CHECK(report.config.at("mode").get<int>() == 2);
  }
}

TEST_CASE("parallel execution matches serial execution") {
  Corpus corpus = make_synthetic_corpus(small_corpus_config());
  ReferenceTable refs = full_reference_table(corpus);
  CoverageTranslator translator(refs);

  RunnerOptions serial;
  serial.parallelism = 1;
  RunnerOptions parallel;
  parallel.parallelism = 4;

  MethodSpec spec = search_spec(SearchMode::kOracle, 8);
  RunReport a = Runner(corpus, serial).run(spec, translator);
  RunReport b = Runner(corpus, parallel).run(spec, translator);
  REQUIRE(a.per_item.size() == b.per_item.size());
  for (std::size_t i = 0; i < a.per_item.size(); ++i) {
    CHECK(a.per_item[i].query_id == b.per_item[i].query_id);
    CHECK(a.per_item[i].translation == b.per_item[i].translation);
    CHECK(a.per_item[i].ice_ids == b.per_item[i].ice_ids);
    CHECK(a.per_item[i].iterations == b.per_item[i].iterations);
  }
  CHECK(a.corpus_bleu.score == b.corpus_bleu.score);
}

TEST_CASE("failed items are marked, excluded from BLEU, and counted") {
  Corpus corpus = make_synthetic_corpus(small_corpus_config());
  ReferenceTable refs = full_reference_table(corpus);
  CoverageTranslator coverage(refs);
  PoisonedTranslator poisoned(coverage, corpus.test[0].source);

  MethodSpec spec;
  spec.method = Method::kBm25;
  spec.q = 2;
  Runner runner(corpus, {});
  RunReport report = runner.run(spec, poisoned);
  REQUIRE(report.per_item.size() == corpus.test.size());
  CHECK(report.failed_items == 1);
  CHECK(report.per_item[0].failed());
  CHECK(report.per_item[0].error->find("poisoned") != std::string::npos);
  for (std::size_t i = 1; i < report.per_item.size(); ++i) {
    CHECK_FALSE(report.per_item[i].failed());
  }

  CoverageTranslator clean(refs);
  RunReport clean_report = Runner(corpus, {}).run(spec, clean);
  CHECK(report.corpus_bleu.score != clean_report.corpus_bleu.score);
}

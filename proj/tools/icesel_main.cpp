// icesel — in-context example selection for machine translation:
// BM25 retrieval, QE-guided greedy prompt search, baselines, and reports.

#include <cstdio>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "icesel/backends.hpp"
#include "icesel/errors.hpp"
#include "icesel/hash.hpp"
#include "icesel/http_backends.hpp"
#include "icesel/report.hpp"
#include "icesel/runner.hpp"
#include "icesel/tokenize.hpp"

namespace {

using namespace icesel;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitBackend = 3;
constexpr int kExitFailureRate = 4;

struct CorpusArgs {
  std::string train_src, train_tgt, train_tsv;
  std::string dev_src, dev_tgt, dev_tsv;
  std::string test_src, test_tgt, test_tsv;
};

void add_corpus_options(CLI::App* cmd, CorpusArgs* args) {
  cmd->add_option("--train-src", args->train_src, "Training source file (one segment per line)");
  cmd->add_option("--train-tgt", args->train_tgt, "Training target file");
  cmd->add_option("--train-tsv", args->train_tsv, "Training TSV (source\\ttarget)");
  cmd->add_option("--dev-src", args->dev_src, "Dev source file");
  cmd->add_option("--dev-tgt", args->dev_tgt, "Dev target file");
  cmd->add_option("--dev-tsv", args->dev_tsv, "Dev TSV");
  cmd->add_option("--test-src", args->test_src, "Test source file");
  cmd->add_option("--test-tgt", args->test_tgt, "Test target file");
  cmd->add_option("--test-tsv", args->test_tsv, "Test TSV");
}

std::vector<SentencePair> load_split(const std::string& src, const std::string& tgt,
                                     const std::string& tsv, const std::string& name,
                                     bool required) {
  if (!tsv.empty()) {
    if (!src.empty() || !tgt.empty()) {
      throw ConfigError(name + ": give either a TSV or a source/target pair, not both");
    }
    return load_tsv(tsv);
  }
  if (src.empty() && tgt.empty()) {
    if (required) throw ConfigError(name + " split is required for this command");
    return {};
  }
  if (src.empty() || tgt.empty()) {
    throw ConfigError(name + ": both --" + name + "-src and --" + name + "-tgt are needed");
  }
  return load_parallel(src, tgt);
}

struct BackendArgs {
  std::string translator = "mock:echo";
  std::string translator_url;
  std::string estimator;
  std::string qe_url;
  int retries = 3;
  int backoff_ms = 250;
  int timeout_s = 30;
  int translator_max_tokens = 0;  // 0 = no declared capability
};

void add_backend_options(CLI::App* cmd, BackendArgs* args) {
  cmd->add_option("--translator", args->translator,
                  "mock:echo | mock:coverage | mock:reference | mock:constant:TEXT | http")
      ->capture_default_str();
  cmd->add_option("--translator-url", args->translator_url, "Translator endpoint URL")
      ->envname("ICESEL_TRANSLATOR_URL");
  cmd->add_option("--estimator", args->estimator,
                  "mock:oracle | mock:noisy:SIGMA | http (modes 1 and 2)");
  cmd->add_option("--qe-url", args->qe_url, "Quality estimator endpoint URL")
      ->envname("ICESEL_QE_URL");
  cmd->add_option("--retries", args->retries, "Transport retries per request")
      ->capture_default_str();
  cmd->add_option("--backoff-ms", args->backoff_ms, "Initial retry backoff")
      ->capture_default_str();
  cmd->add_option("--timeout-s", args->timeout_s, "Request timeout")
      ->capture_default_str();
  cmd->add_option("--translator-max-tokens", args->translator_max_tokens,
                  "Declared window of the http translator (0 = unspecified)");
}

RetryPolicy retry_policy(const BackendArgs& args) {
  RetryPolicy policy;
  policy.max_retries = args.retries;
  policy.initial_backoff_ms = args.backoff_ms;
  policy.timeout_seconds = args.timeout_s;
  return policy;
}

std::unique_ptr<TranslatorBackend> make_translator(const BackendArgs& args,
                                                   const ReferenceTable& refs,
                                                   const PromptTemplate& tmpl = {}) {
  const std::string& kind = args.translator;
  if (kind == "mock:echo") return std::make_unique<EchoTranslator>(tmpl);
  if (kind == "mock:coverage") return std::make_unique<CoverageTranslator>(refs, tmpl);
  if (kind == "mock:reference") return std::make_unique<ReferenceTranslator>(refs, tmpl);
  if (kind.rfind("mock:constant:", 0) == 0) {
    return std::make_unique<ConstantTranslator>(kind.substr(14));
  }
  if (kind == "http") {
    if (args.translator_url.empty()) {
      throw ConfigError("--translator http needs --translator-url");
    }
    std::optional<int> window;
    if (args.translator_max_tokens > 0) window = args.translator_max_tokens;
    return std::make_unique<HttpTranslator>(args.translator_url, retry_policy(args), window);
  }
  throw ConfigError("unknown translator backend: " + kind);
}

std::unique_ptr<EstimatorBackend> make_estimator(const BackendArgs& args,
                                                 const ReferenceTable& refs,
                                                 std::uint64_t seed) {
  const std::string& kind = args.estimator;
  if (kind.empty()) return nullptr;
  if (kind == "mock:oracle") return std::make_unique<OracleEstimator>(refs);
  if (kind.rfind("mock:noisy:", 0) == 0) {
    double sigma = std::stod(kind.substr(11));
    return std::make_unique<NoisyOracleEstimator>(refs, sigma, seed);
  }
  if (kind == "http") {
    if (args.qe_url.empty()) throw ConfigError("--estimator http needs --qe-url");
    return std::make_unique<HttpEstimator>(args.qe_url, retry_policy(args));
  }
  throw ConfigError("unknown estimator backend: " + kind);
}

std::vector<std::string> load_references(const std::string& tgt_path,
                                         const std::string& tsv_path) {
  if (!tsv_path.empty()) {
    std::vector<std::string> refs;
    for (const SentencePair& pair : load_tsv(tsv_path)) refs.push_back(pair.target);
    return refs;
  }
  if (tgt_path.empty()) throw ConfigError("a reference file is required (--test-tgt)");
  return load_lines(tgt_path);
}

Method parse_method(const std::string& name) {
  if (name == "random") return Method::kRandom;
  if (name == "task-level") return Method::kTaskLevel;
  if (name == "bm25") return Method::kBm25;
  if (name == "rbm25") return Method::kRBm25;
  if (name == "search") return Method::kSearch;
  throw ConfigError("unknown method: " + name);
}

int cmd_index(const CorpusArgs& corpus_args, const Bm25Params& params,
              const std::string& out_path) {
  // Only the source side is indexed; the target file is not required here.
  std::vector<std::string> sources;
  std::string hashed_file;
  if (!corpus_args.train_tsv.empty()) {
    for (const SentencePair& pair : load_tsv(corpus_args.train_tsv)) {
      sources.push_back(pair.source);
    }
    hashed_file = corpus_args.train_tsv;
  } else if (!corpus_args.train_src.empty()) {
    sources = load_lines(corpus_args.train_src);
    hashed_file = corpus_args.train_src;
  } else {
    throw ConfigError("index needs --train-src or --train-tsv");
  }
  TokenizedDocs docs;
  docs.reserve(sources.size());
  for (const std::string& source : sources) docs.push_back(tokenize_13a(source));
  Bm25Index index = Bm25Index::build(docs, params);
  index.save(out_path, hash_file(hashed_file));
  std::cout << "indexed " << index.doc_count() << " documents, avg length "
            << index.avg_doc_length() << ", cache " << out_path << "\n";
  return kExitOk;
}

void print_report(const RunReport& report) {
  std::cout << "method            " << report.config.at("method").get<std::string>() << "\n"
            << "items             " << report.per_item.size() << " (" << report.failed_items
            << " failed)\n";
  char line[128];
  std::snprintf(line, sizeof(line), "corpus BLEU       %.2f (BP %.3f, %lld/%lld tokens)",
                report.corpus_bleu.score, report.corpus_bleu.brevity_penalty,
                report.corpus_bleu.hyp_len, report.corpus_bleu.ref_len);
  std::cout << line << "\n";
  std::snprintf(line, sizeof(line), "ICE count         min %d / mean %.2f / max %d",
                report.ice_stats.min, report.ice_stats.mean, report.ice_stats.max);
  std::cout << line << "\n"
            << "TTP               " << format_hhmmss(report.ttp_seconds) << "\n";
  if (!report.trial_dev_bleu.empty()) {
    std::cout << "winning trial     " << report.winning_trial << " of "
              << report.trial_dev_bleu.size() << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"In-context example selection for MT via retrieval and QE-guided search"};
  app.require_subcommand(1);
  // Config keys live under a [run] (or [synth-qe], ...) section; flags given
  // on the command line override file values.
  app.set_config("--config", "", "TOML/INI config file mirroring the flags");
  app.fallthrough();

  // --- index ---------------------------------------------------------------
  CorpusArgs index_corpus;
  Bm25Params index_params;
  std::string index_out = "bm25.idx";
  CLI::App* index_cmd = app.add_subcommand("index", "Build and cache the BM25 index");
  add_corpus_options(index_cmd, &index_corpus);
  index_cmd->add_option("--out", index_out, "Cache file")->capture_default_str();
  index_cmd->add_option("--k1", index_params.k1)->capture_default_str();
  index_cmd->add_option("--b", index_params.b)->capture_default_str();
  index_cmd->add_option("--epsilon", index_params.epsilon)->capture_default_str();

  // --- run -----------------------------------------------------------------
  CorpusArgs run_corpus;
  BackendArgs run_backends;
  RunnerOptions run_options;
  std::string method_name = "search";
  int mode = 1;
  MethodSpec spec;
  std::string run_out = "report";
  std::string index_cache;
  CLI::App* run_cmd = app.add_subcommand("run", "Run a method over the test split");
  add_corpus_options(run_cmd, &run_corpus);
  add_backend_options(run_cmd, &run_backends);
  run_cmd->add_option("--method", method_name, "random | task-level | bm25 | rbm25 | search")
      ->capture_default_str();
  run_cmd->add_option("--mode", mode, "Search mode: 1 QE+BM25, 2 QE+unigram, 3 oracle")
      ->check(CLI::Range(1, 3))
      ->capture_default_str();
  run_cmd->add_option("--patience", spec.search_config.patience,
                      "Consecutive non-improving iterations tolerated")
      ->capture_default_str();
  run_cmd->add_option("--k", spec.search_config.max_candidates, "Max ICEs per prompt")
      ->capture_default_str();
  run_cmd->add_option("--termination-score", spec.search_config.termination_score)
      ->capture_default_str();
  run_cmd->add_option("--max-prompt-tokens", spec.search_config.max_prompt_tokens)
      ->capture_default_str();
  run_cmd->add_option("--retriever-top", run_options.retriever_top,
                      "Candidate pool size for the search")
      ->capture_default_str();
  run_cmd->add_option("--p", spec.p, "Randomly chosen ICEs (random/task-level)");
  run_cmd->add_option("--q", spec.q, "Retrieved ICEs (bm25/rbm25)");
  run_cmd->add_option("--trials", spec.trials, "Trials (default: random 3, task-level 100)");
  run_cmd->add_option("--seed", spec.seed)->capture_default_str();
  run_cmd->add_option("--parallelism", run_options.parallelism, "Concurrent test items")
      ->capture_default_str();
  run_cmd->add_option("--rbm25-pool", run_options.rbm25_pool)->capture_default_str();
  run_cmd->add_option("--rbm25-ngram", run_options.rbm25_ngram_max)->check(CLI::Range(1, 4))
      ->capture_default_str();
  run_cmd->add_flag("--rbm25-count-weighted", run_options.rbm25_count_weighted,
                    "Weight coverage by query n-gram counts");
  run_cmd->add_option("--k1", run_options.bm25.k1)->capture_default_str();
  run_cmd->add_option("--b", run_options.bm25.b)->capture_default_str();
  run_cmd->add_option("--epsilon", run_options.bm25.epsilon)->capture_default_str();
  run_cmd->add_option("--max-failure-rate", run_options.max_failure_rate)
      ->capture_default_str();
  run_cmd->add_option("--index-cache", index_cache, "BM25 cache file (built if stale)");
  run_cmd->add_option("--out", run_out, "Report stem: writes <stem>.jsonl, "
                                        "<stem>.summary.json, <stem>.timing.json")
      ->capture_default_str();
  PromptTemplate tmpl;
  run_cmd->add_option("--template-example", tmpl.example_format,
                      "Example pattern with {src} and {tgt} slots")
      ->capture_default_str();
  run_cmd->add_option("--template-separator", tmpl.separator, "Separator between examples")
      ->capture_default_str();
  run_cmd->add_option("--template-query", tmpl.query_format, "Query pattern with {src}")
      ->capture_default_str();

  // --- synth-qe ------------------------------------------------------------
  CorpusArgs synth_corpus;
  BackendArgs synth_backends;
  std::size_t synth_sample = 1000;
  std::uint64_t synth_seed = 0;
  std::string synth_out = "qe_labels.jsonl";
  CLI::App* synth_cmd =
      app.add_subcommand("synth-qe", "Synthesize QE training labels from the train split");
  add_corpus_options(synth_cmd, &synth_corpus);
  add_backend_options(synth_cmd, &synth_backends);
  synth_cmd->add_option("--sample", synth_sample, "Pairs to sample without replacement")
      ->capture_default_str();
  synth_cmd->add_option("--seed", synth_seed)->capture_default_str();
  synth_cmd->add_option("--out", synth_out, "Output JSONL")->capture_default_str();

  // --- report --------------------------------------------------------------
  CLI::App* report_cmd = app.add_subcommand("report", "Inspect run reports");
  report_cmd->require_subcommand(1);
  std::string verify_stem, verify_test_tgt, verify_test_tsv;
  CLI::App* verify_cmd =
      report_cmd->add_subcommand("verify", "Recompute a report's scores from its items");
  verify_cmd->add_option("--report", verify_stem, "Report stem")->required();
  verify_cmd->add_option("--test-tgt", verify_test_tgt, "Reference target file");
  verify_cmd->add_option("--test-tsv", verify_test_tsv, "Reference TSV");

  std::string cmp_a, cmp_b, cmp_test_tgt, cmp_test_tsv;
  CLI::App* compare_cmd = report_cmd->add_subcommand(
      "compare", "Delta BLEU and KS test on translation lengths");
  compare_cmd->add_option("--a", cmp_a, "First report stem")->required();
  compare_cmd->add_option("--b", cmp_b, "Second report stem")->required();
  compare_cmd->add_option("--test-tgt", cmp_test_tgt,
                          "Optional reference file for per-report KS vs reference");
  compare_cmd->add_option("--test-tsv", cmp_test_tsv, "Reference TSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (index_cmd->parsed()) {
      return cmd_index(index_corpus, index_params, index_out);
    }

    if (run_cmd->parsed()) {
      Corpus corpus;
      corpus.train = load_split(run_corpus.train_src, run_corpus.train_tgt,
                                run_corpus.train_tsv, "train", true);
      corpus.dev = load_split(run_corpus.dev_src, run_corpus.dev_tgt, run_corpus.dev_tsv,
                              "dev", false);
      corpus.test = load_split(run_corpus.test_src, run_corpus.test_tgt,
                               run_corpus.test_tsv, "test", true);

      spec.method = parse_method(method_name);
      spec.search_config.mode = static_cast<SearchMode>(mode);
      spec.search_config.prompt_template = tmpl;
      if (spec.method == Method::kSearch) {
        if (spec.q != 0 && spec.q != spec.search_config.max_candidates) {
          throw ConfigError("for search methods --q must equal --k (or be omitted)");
        }
        spec.q = spec.search_config.max_candidates;
        if (spec.search_config.mode == SearchMode::kOracle &&
            !run_backends.estimator.empty()) {
          throw ConfigError("mode 3 defines its own oracle estimator; drop --estimator");
        }
      }

      ReferenceTable refs(corpus.dev);
      refs.add(corpus.test);
      std::unique_ptr<TranslatorBackend> translator =
          make_translator(run_backends, refs, tmpl);
      std::unique_ptr<EstimatorBackend> estimator =
          make_estimator(run_backends, refs, spec.seed);

      Runner runner(std::move(corpus), run_options);
      if (!index_cache.empty() && spec.method != Method::kRandom &&
          spec.method != Method::kTaskLevel) {
        const std::string& hashed = run_corpus.train_tsv.empty() ? run_corpus.train_src
                                                                 : run_corpus.train_tsv;
        std::uint64_t corpus_hash = hash_file(hashed);
        Bm25Index cached;
        if (Bm25Index::try_load(index_cache, corpus_hash, run_options.bm25, &cached)) {
          runner.set_index(std::move(cached));
        } else {
          runner.index();  // build eagerly, then persist
          runner.index().save(index_cache, corpus_hash);
        }
      }

      RunReport report = runner.run(spec, *translator, estimator.get());
      report_write(report, run_out);
      print_report(report);
      if (!report.per_item.empty() && report.unreachable_items == report.per_item.size()) {
        std::cerr << "backend unreachable: every item failed at the transport level\n";
        return kExitBackend;
      }
      double failure_rate = report.per_item.empty()
                                ? 0.0
                                : static_cast<double>(report.failed_items) /
                                      static_cast<double>(report.per_item.size());
      if (failure_rate > run_options.max_failure_rate) {
        std::cerr << "failure rate " << failure_rate << " exceeds "
                  << run_options.max_failure_rate << "\n";
        return kExitFailureRate;
      }
      return kExitOk;
    }

    if (synth_cmd->parsed()) {
      std::vector<SentencePair> train = load_split(
          synth_corpus.train_src, synth_corpus.train_tgt, synth_corpus.train_tsv, "train",
          true);
      ReferenceTable refs(train);
      std::unique_ptr<TranslatorBackend> translator = make_translator(synth_backends, refs);
      std::ofstream out(synth_out, std::ios::binary | std::ios::trunc);
      if (!out) throw ConfigError("cannot write " + synth_out);
      QeSynthesisStats stats =
          synthesize_qe_labels(train, *translator, synth_sample, synth_seed, out);
      std::cout << "wrote " << stats.written << " records to " << synth_out << " ("
                << stats.skipped << " skipped)\n";
      return kExitOk;
    }

    if (verify_cmd->parsed()) {
      VerifyResult result = report_verify(verify_stem, load_references(verify_test_tgt,
                                                                       verify_test_tsv));
      if (result.ok) {
        std::cout << "report " << verify_stem << ": consistent\n";
        return kExitOk;
      }
      std::cerr << "report " << verify_stem << ": " << result.detail << "\n";
      return 1;
    }

    if (compare_cmd->parsed()) {
      CompareResult cmp = report_compare(cmp_a, cmp_b);
      char line[160];
      std::snprintf(line, sizeof(line),
                    "BLEU: a=%.2f b=%.2f delta=%+.2f\nlength KS: D=%.4f p=%.4g",
                    cmp.bleu_a, cmp.bleu_b, cmp.delta, cmp.length_ks.d,
                    cmp.length_ks.p_value);
      std::cout << line << "\n";
      if (!cmp_test_tgt.empty() || !cmp_test_tsv.empty()) {
        std::vector<std::string> references = load_references(cmp_test_tgt, cmp_test_tsv);
        KsResult a_ks = report_length_ks_vs_reference(cmp_a, references);
        KsResult b_ks = report_length_ks_vs_reference(cmp_b, references);
        std::snprintf(line, sizeof(line),
                      "vs reference: a D=%.4f p=%.4g | b D=%.4f p=%.4g", a_ks.d,
                      a_ks.p_value, b_ks.d, b_ks.p_value);
        std::cout << line << "\n";
      }
      return kExitOk;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const BackendError& e) {
    std::cerr << "backend error: " << e.what() << "\n";
    return kExitBackend;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitOk;
}

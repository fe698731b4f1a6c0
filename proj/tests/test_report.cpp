#include <doctest.h>

#include <fstream>
#include <sstream>

#include "icesel/errors.hpp"
#include "icesel/report.hpp"
#include "support/synthetic_corpus.hpp"
#include "support/temp_dir.hpp"

using namespace icesel;
using icesel::testsupport::make_synthetic_corpus;
using icesel::testsupport::SyntheticCorpusConfig;
using icesel::testsupport::TempDir;

namespace {

struct ReportFixture {
  ReportFixture() {
    SyntheticCorpusConfig cfg;
    cfg.train_size = 60;
    cfg.dev_size = 6;
    cfg.test_size = 10;
    cfg.seed = 777;
    corpus = make_synthetic_corpus(cfg);
    for (const SentencePair& pair : corpus.test) references.push_back(pair.target);
  }

  RunReport make_report(SearchMode mode, int patience, std::uint64_t seed = 0) {
    ReferenceTable refs(corpus.dev);
    refs.add(corpus.test);
    CoverageTranslator translator{refs};
    MethodSpec spec;
    spec.method = Method::kSearch;
    spec.search_config.mode = mode;
    spec.search_config.patience = patience;
    spec.q = spec.search_config.max_candidates;
    spec.seed = seed;
    Runner runner(corpus, {});
    return runner.run(spec, translator);
  }

  Corpus corpus;
  std::vector<std::string> references;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

}  // namespace

TEST_CASE("report round trip") {
  ReportFixture fx;
  TempDir dir;
  RunReport report = fx.make_report(SearchMode::kOracle, 8);
  std::string stem = dir.path("run");
  report_write(report, stem);

  LoadedReport loaded = report_read(stem);
  REQUIRE(loaded.per_item.size() == report.per_item.size());
  for (std::size_t i = 0; i < loaded.per_item.size(); ++i) {
    CHECK(loaded.per_item[i].query_id == report.per_item[i].query_id);
    CHECK(loaded.per_item[i].ice_ids == report.per_item[i].ice_ids);
    CHECK(loaded.per_item[i].translation == report.per_item[i].translation);
    CHECK(loaded.per_item[i].iterations == report.per_item[i].iterations);
    CHECK(loaded.per_item[i].stop_reason == report.per_item[i].stop_reason);
    CHECK(loaded.per_item[i].estimated_quality == report.per_item[i].estimated_quality);
  }
  CHECK(loaded.summary.at("corpus_bleu").at("score").get<double>() ==
        report.corpus_bleu.score);
  CHECK(loaded.summary.at("config_hash").is_string());
  CHECK(loaded.summary.at("items_total").get<std::size_t>() == fx.corpus.test.size());
  CHECK(loaded.summary.at("energy_accounting").get<std::string>() == "unavailable");
}

TEST_CASE("jsonl has one line per test item") {
  ReportFixture fx;
  TempDir dir;
  RunReport report = fx.make_report(SearchMode::kOracle, 3);
  std::string stem = dir.path("run");
  report_write(report, stem);
  std::istringstream lines(slurp(report_paths(stem).items));
  std::string line;
  std::size_t count = 0;
  while (std::getline(lines, line)) ++count;
  CHECK(count == fx.corpus.test.size());
}

TEST_CASE("rewriting an identical report is byte-stable; timing is separate") {
  ReportFixture fx;
  TempDir dir;
  RunReport report = fx.make_report(SearchMode::kOracle, 8);
  std::string a = dir.path("a");
  std::string b = dir.path("b");
  report_write(report, a);
  report_write(report, b);
  CHECK(slurp(report_paths(a).items) == slurp(report_paths(b).items));
  // Summaries embed the timing file name, which differs with the stem.
  auto a_summary = nlohmann::ordered_json::parse(slurp(report_paths(a).summary));
  auto b_summary = nlohmann::ordered_json::parse(slurp(report_paths(b).summary));
  a_summary.erase("timing_file");
  b_summary.erase("timing_file");
  CHECK(a_summary == b_summary);
  CHECK(nlohmann::json::parse(slurp(report_paths(a).timing)).contains("ttp_hhmmss"));
}

TEST_CASE("report verify accepts a consistent report and spots tampering") {
  ReportFixture fx;
  TempDir dir;
  RunReport report = fx.make_report(SearchMode::kOracle, 8);
  std::string stem = dir.path("run");
  report_write(report, stem);

  VerifyResult ok = report_verify(stem, fx.references);
  CHECK(ok.ok);
  CHECK(ok.detail.empty());

  // Tamper with one translation.
  ReportPaths paths = report_paths(stem);
  std::istringstream lines(slurp(paths.items));
  std::string line;
  std::vector<std::string> all;
  while (std::getline(lines, line)) all.push_back(line);
  REQUIRE_FALSE(all.empty());
  auto first = nlohmann::ordered_json::parse(all[0]);
  first["translation"] = "entirely fabricated output";
  all[0] = first.dump();
  {
    std::ofstream out(paths.items, std::ios::binary | std::ios::trunc);
    for (const std::string& l : all) out << l << '\n';
  }
  VerifyResult tampered = report_verify(stem, fx.references);
  CHECK_FALSE(tampered.ok);
  CHECK(tampered.detail.find("BLEU") != std::string::npos);
}

TEST_CASE("report verify rejects schema drift") {
  ReportFixture fx;
  TempDir dir;
  RunReport report = fx.make_report(SearchMode::kOracle, 3);
  std::string stem = dir.path("run");
  report_write(report, stem);
  ReportPaths paths = report_paths(stem);
  auto summary = nlohmann::ordered_json::parse(slurp(paths.summary));
  summary["schema_version"] = 99;
  {
    std::ofstream out(paths.summary, std::ios::binary | std::ios::trunc);
    out << summary.dump(2);
  }
  CHECK_THROWS_AS(report_read(stem), ConfigError);
}

TEST_CASE("report compare: delta BLEU and length KS") {
  ReportFixture fx;
  TempDir dir;
  RunReport weak = fx.make_report(SearchMode::kOracle, 3);
  RunReport strong = fx.make_report(SearchMode::kOracle, 16);
  std::string a = dir.path("weak");
  std::string b = dir.path("strong");
  report_write(weak, a);
  report_write(strong, b);

  CompareResult cmp = report_compare(a, b);
  CHECK(cmp.bleu_a == weak.corpus_bleu.score);
  CHECK(cmp.bleu_b == strong.corpus_bleu.score);
  CHECK(cmp.delta == doctest::Approx(cmp.bleu_b - cmp.bleu_a));
  CHECK(cmp.length_ks.d >= 0.0);
  CHECK(cmp.length_ks.d <= 1.0);

  // Coverage outputs are reference-length, so lengths match the reference
  // distribution exactly.
  KsResult vs_ref = report_length_ks_vs_reference(b, fx.references);
  CHECK(vs_ref.d == 0.0);
}

#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "icesel/ks_test.hpp"
#include "icesel/runner.hpp"

namespace icesel {

inline constexpr int kReportSchemaVersion = 1;

// A report is written as three files derived from one stem:
//   <stem>.jsonl          one record per test item, test-set order
//   <stem>.summary.json   config snapshot + hash, corpus BLEU, ICE stats
//   <stem>.timing.json    TTP and per-item wall times
// The jsonl and summary files are byte-stable for identical inputs; timing
// is kept apart because wall clocks never repeat.
struct ReportPaths {
  std::string items;
  std::string summary;
  std::string timing;
};

ReportPaths report_paths(const std::string& stem);

void report_write(const RunReport& report, const std::string& stem);

struct LoadedReport {
  std::vector<ItemRecord> per_item;
  nlohmann::ordered_json summary;
};

// Throws ConfigError on missing files, malformed lines, or schema mismatch.
LoadedReport report_read(const std::string& stem);

struct VerifyResult {
  bool ok = true;
  std::string detail;  // first discrepancy, empty when ok
};

// Self-consistency check: recomputes corpus BLEU and ICE-count stats from
// the per-item records plus the reference targets and compares them with
// the stored summary.
VerifyResult report_verify(const std::string& stem,
                           const std::vector<std::string>& references);

struct CompareResult {
  double bleu_a = 0.0;
  double bleu_b = 0.0;
  double delta = 0.0;          // b - a
  KsResult length_ks;          // tokenized translation lengths, a vs b
};

CompareResult report_compare(const std::string& stem_a, const std::string& stem_b);

// KS of a report's tokenized translation lengths against reference lengths.
KsResult report_length_ks_vs_reference(const std::string& stem,
                                       const std::vector<std::string>& references);

}  // namespace icesel

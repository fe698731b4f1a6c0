#include "icesel/report.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "icesel/errors.hpp"
#include "icesel/hash.hpp"
#include "icesel/tokenize.hpp"

namespace icesel {
namespace {

using nlohmann::ordered_json;

ordered_json bleu_to_json(const BleuScore& bleu) {
  ordered_json j;
  j["score"] = bleu.score;
  j["precisions"] = {bleu.precisions[0], bleu.precisions[1], bleu.precisions[2],
                     bleu.precisions[3]};
  j["brevity_penalty"] = bleu.brevity_penalty;
  j["hyp_len"] = bleu.hyp_len;
  j["ref_len"] = bleu.ref_len;
  return j;
}

ordered_json item_to_json(const ItemRecord& item) {
  ordered_json j;
  j["query_id"] = item.query_id;
  j["ice_ids"] = item.ice_ids;
  j["translation"] = item.translation;
  j["estimated_quality"] =
      item.estimated_quality ? ordered_json(*item.estimated_quality) : ordered_json();
  j["iterations"] = item.iterations;
  j["stop_reason"] =
      item.stop_reason ? ordered_json(to_string(*item.stop_reason)) : ordered_json();
  j["error"] = item.error ? ordered_json(*item.error) : ordered_json();
  return j;
}

std::optional<StopReason> stop_reason_from(const std::string& name) {
  for (StopReason r : {StopReason::kPatienceExhausted, StopReason::kAllCandidatesUsed,
                       StopReason::kScoreCeiling, StopReason::kPromptTooLong}) {
    if (name == to_string(r)) return r;
  }
  return std::nullopt;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path);
  out << content;
  if (!out) throw ConfigError("short write on " + path);
}

}  // namespace

ReportPaths report_paths(const std::string& stem) {
  return {stem + ".jsonl", stem + ".summary.json", stem + ".timing.json"};
}

void report_write(const RunReport& report, const std::string& stem) {
  ReportPaths paths = report_paths(stem);

  std::ostringstream items;
  for (const ItemRecord& item : report.per_item) {
    items << item_to_json(item).dump() << '\n';
  }
  write_file(paths.items, items.str());

  ordered_json summary;
  summary["schema_version"] = kReportSchemaVersion;
  summary["config"] = report.config;
  summary["config_hash"] = to_hex(fnv1a64(report.config.dump()));
  summary["items_total"] = report.per_item.size();
  summary["items_failed"] = report.failed_items;
  summary["corpus_bleu"] = bleu_to_json(report.corpus_bleu);
  summary["ice_count_stats"] = {{"min", report.ice_stats.min},
                                {"mean", report.ice_stats.mean},
                                {"max", report.ice_stats.max}};
  if (!report.trial_dev_bleu.empty()) {
    summary["trials"] = {{"dev_bleu", report.trial_dev_bleu},
                         {"winner", report.winning_trial},
                         {"winning_ice_ids", report.winning_ice_ids}};
  }
  summary["energy_accounting"] = "unavailable";
  summary["timing_file"] = paths.timing;
  write_file(paths.summary, summary.dump(2) + "\n");

  // Wall clocks never repeat, so timing lives outside the deterministic files.
  ordered_json timing;
  timing["ttp_seconds"] = report.ttp_seconds;
  timing["ttp_hhmmss"] = format_hhmmss(report.ttp_seconds);
  ordered_json per_item_ms = ordered_json::array();
  for (const ItemRecord& item : report.per_item) per_item_ms.push_back(item.wall_time_ms);
  timing["per_item_ms"] = std::move(per_item_ms);
  write_file(paths.timing, timing.dump(2) + "\n");
}

LoadedReport report_read(const std::string& stem) {
  ReportPaths paths = report_paths(stem);
  std::ifstream summary_in(paths.summary, std::ios::binary);
  if (!summary_in) throw ConfigError("cannot open " + paths.summary);
  LoadedReport loaded;
  loaded.summary = ordered_json::parse(summary_in, nullptr, /*allow_exceptions=*/false);
  if (loaded.summary.is_discarded()) {
    throw ConfigError("malformed summary JSON: " + paths.summary);
  }
  if (!loaded.summary.contains("schema_version") ||
      loaded.summary["schema_version"].get<int>() != kReportSchemaVersion) {
    throw ConfigError("unsupported report schema in " + paths.summary);
  }

  std::ifstream items_in(paths.items, std::ios::binary);
  if (!items_in) throw ConfigError("cannot open " + paths.items);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(items_in, line)) {
    ++line_no;
    ordered_json j = ordered_json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded()) {
      throw ConfigError(paths.items + ": malformed JSON at line " +
                        std::to_string(line_no));
    }
    ItemRecord item;
    item.query_id = j.at("query_id").get<int>();
    item.ice_ids = j.at("ice_ids").get<std::vector<int>>();
    item.translation = j.at("translation").get<std::string>();
    if (!j.at("estimated_quality").is_null()) {
      item.estimated_quality = j["estimated_quality"].get<double>();
    }
    item.iterations = j.at("iterations").get<int>();
    if (!j.at("stop_reason").is_null()) {
      item.stop_reason = stop_reason_from(j["stop_reason"].get<std::string>());
    }
    if (!j.at("error").is_null()) item.error = j["error"].get<std::string>();
    loaded.per_item.push_back(std::move(item));
  }
  return loaded;
}

VerifyResult report_verify(const std::string& stem,
                           const std::vector<std::string>& references) {
  LoadedReport loaded = report_read(stem);
  std::ostringstream detail;

  std::size_t declared_total = loaded.summary.at("items_total").get<std::size_t>();
  if (loaded.per_item.size() != declared_total) {
    detail << "items_total " << declared_total << " != jsonl line count "
           << loaded.per_item.size();
    return {false, detail.str()};
  }
  std::size_t failed = 0;
  std::vector<std::string> hyps;
  std::vector<std::string> refs;
  for (const ItemRecord& item : loaded.per_item) {
    if (item.failed()) {
      ++failed;
      continue;
    }
    if (item.query_id < 0 || static_cast<std::size_t>(item.query_id) >= references.size()) {
      detail << "query_id " << item.query_id << " outside reference file ("
             << references.size() << " lines)";
      return {false, detail.str()};
    }
    hyps.push_back(item.translation);
    refs.push_back(references[static_cast<std::size_t>(item.query_id)]);
  }
  if (failed != loaded.summary.at("items_failed").get<std::size_t>()) {
    detail << "items_failed mismatch";
    return {false, detail.str()};
  }

  double stored = loaded.summary.at("corpus_bleu").at("score").get<double>();
  double recomputed = hyps.empty() ? 0.0 : corpus_bleu(hyps, refs).score;
  if (std::abs(stored - recomputed) > 1e-9) {
    detail << "corpus BLEU mismatch: stored " << stored << ", recomputed " << recomputed;
    return {false, detail.str()};
  }

  IceCountStats stats = ice_count_stats(loaded.per_item);
  const auto& stored_stats = loaded.summary.at("ice_count_stats");
  if (stats.min != stored_stats.at("min").get<int>() ||
      stats.max != stored_stats.at("max").get<int>() ||
      std::abs(stats.mean - stored_stats.at("mean").get<double>()) > 1e-9) {
    detail << "ice_count_stats mismatch";
    return {false, detail.str()};
  }
  return {true, ""};
}

namespace {

std::vector<double> translation_token_lengths(const LoadedReport& report) {
  std::vector<double> lengths;
  for (const ItemRecord& item : report.per_item) {
    if (item.failed()) continue;
    lengths.push_back(static_cast<double>(tokenize_13a(item.translation).size()));
  }
  return lengths;
}

}  // namespace

CompareResult report_compare(const std::string& stem_a, const std::string& stem_b) {
  LoadedReport a = report_read(stem_a);
  LoadedReport b = report_read(stem_b);
  CompareResult result;
  result.bleu_a = a.summary.at("corpus_bleu").at("score").get<double>();
  result.bleu_b = b.summary.at("corpus_bleu").at("score").get<double>();
  result.delta = result.bleu_b - result.bleu_a;
  result.length_ks = ks_two_sample(translation_token_lengths(a),
                                   translation_token_lengths(b));
  return result;
}

KsResult report_length_ks_vs_reference(const std::string& stem,
                                       const std::vector<std::string>& references) {
  LoadedReport report = report_read(stem);
  std::vector<double> ref_lengths;
  ref_lengths.reserve(references.size());
  for (const std::string& ref : references) {
    ref_lengths.push_back(static_cast<double>(tokenize_13a(ref).size()));
  }
  return ks_two_sample(translation_token_lengths(report), ref_lengths);
}

}  // namespace icesel

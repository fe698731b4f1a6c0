#include "icesel/backends.hpp"

#include <algorithm>
#include <unordered_set>

#include <json.hpp>

#include "icesel/bleu.hpp"
#include "icesel/errors.hpp"
#include "icesel/hash.hpp"
#include "icesel/rng.hpp"
#include "icesel/tokenize.hpp"

namespace icesel {

std::string first_line_trimmed(std::string_view completion) {
  std::size_t end = completion.find('\n');
  std::string_view line =
      end == std::string_view::npos ? completion : completion.substr(0, end);
  auto is_space = [](unsigned char c) {
    return c == ' ' || c == '\t' || c == '\r' || c == '\f' || c == '\v';
  };
  std::size_t begin = 0;
  std::size_t stop = line.size();
  while (begin < stop && is_space(line[begin])) ++begin;
  while (stop > begin && is_space(line[stop - 1])) --stop;
  return std::string(line.substr(begin, stop - begin));
}

ParsedPrompt parse_prompt(const std::string& prompt_text, const PromptTemplate& tmpl) {
  // The default template renders "src = tgt" segments joined by the
  // separator with a trailing "query = " segment; targets follow the first
  // " = " of each segment.
  std::vector<std::string> segments;
  std::size_t pos = 0;
  while (true) {
    std::size_t hit = prompt_text.find(tmpl.separator, pos);
    if (hit == std::string::npos) {
      segments.push_back(prompt_text.substr(pos));
      break;
    }
    segments.push_back(prompt_text.substr(pos, hit - pos));
    pos = hit + tmpl.separator.size();
  }

  ParsedPrompt parsed;
  for (std::size_t i = 0; i + 1 < segments.size(); ++i) {
    std::size_t eq = segments[i].find(" = ");
    if (eq == std::string::npos) {
      throw ConfigError("parse_prompt: malformed example segment: " + segments[i]);
    }
    parsed.ice_targets.push_back(segments[i].substr(eq + 3));
  }
  std::string& query_segment = segments.back();
  const std::string tail = " = ";
  if (query_segment.size() < tail.size() ||
      query_segment.compare(query_segment.size() - tail.size(), tail.size(), tail) != 0) {
    throw ConfigError("parse_prompt: prompt does not end with a query segment");
  }
  parsed.query_source = query_segment.substr(0, query_segment.size() - tail.size());
  return parsed;
}

ReferenceTable::ReferenceTable(std::span<const SentencePair> pairs) { add(pairs); }

void ReferenceTable::add(std::span<const SentencePair> pairs) {
  for (const SentencePair& p : pairs) by_source_[p.source] = p.target;
}

const std::string& ReferenceTable::lookup(const std::string& source) const {
  auto it = by_source_.find(source);
  if (it == by_source_.end()) {
    throw ConfigError("reference table: unknown source: " + source);
  }
  return it->second;
}

TranslateResult EchoTranslator::translate(const std::string& prompt_text) {
  return {first_line_trimmed(parse_prompt(prompt_text, tmpl_).query_source), std::nullopt};
}

TranslateResult CoverageTranslator::translate(const std::string& prompt_text) {
  ParsedPrompt parsed = parse_prompt(prompt_text, tmpl_);
  const std::string& reference = refs_.lookup(parsed.query_source);

  std::unordered_set<std::string> covered;
  for (const std::string& target : parsed.ice_targets) {
    for (std::string& t : tokenize_13a(target)) covered.insert(std::move(t));
  }

  std::string out;
  for (const std::string& t : tokenize_13a(reference)) {
    if (!out.empty()) out += ' ';
    out += covered.count(t) ? t : "unk";
  }
  return {first_line_trimmed(out), std::nullopt};
}

TranslateResult ReferenceTranslator::translate(const std::string& prompt_text) {
  ParsedPrompt parsed = parse_prompt(prompt_text, tmpl_);
  return {first_line_trimmed(refs_.lookup(parsed.query_source)), std::nullopt};
}

double OracleEstimator::estimate(const std::string& source, const std::string& hypothesis) {
  return sentence_bleu(hypothesis, refs_.lookup(source));
}

std::string NoisyOracleEstimator::name() const {
  return "mock:noisy(sigma=" + std::to_string(sigma_) + ")";
}

double NoisyOracleEstimator::estimate(const std::string& source,
                                      const std::string& hypothesis) {
  double base = oracle_.estimate(source, hypothesis);
  // Noise depends only on (seed, source, hypothesis): call order and thread
  // interleaving cannot change results.
  std::uint64_t h = fnv1a64(source, seed_ ^ 0x9e3779b97f4a7c15ULL);
  h = fnv1a64(hypothesis, h);
  Rng rng(h);
  return std::clamp(base + rng.normal(0.0, sigma_), 0.0, 100.0);
}

QeSynthesisStats synthesize_qe_labels(std::span<const SentencePair> corpus_pairs,
                                      TranslatorBackend& translator,
                                      std::size_t sample_size, std::uint64_t seed,
                                      std::ostream& out, const PromptTemplate& tmpl) {
  if (sample_size > corpus_pairs.size()) {
    throw ConfigError("synthesize_qe_labels: sample_size " + std::to_string(sample_size) +
                      " exceeds corpus size " + std::to_string(corpus_pairs.size()));
  }
  Rng rng(seed);
  std::vector<std::size_t> picks =
      rng.sample_without_replacement(corpus_pairs.size(), sample_size);

  QeSynthesisStats stats;
  for (std::size_t idx : picks) {
    const SentencePair& pair = corpus_pairs[idx];
    std::string prompt = render(tmpl, {}, pair.source);
    QeLabelRecord record;
    record.source = pair.source;
    try {
      record.machine_translation = translator.translate(prompt).text;
    } catch (const std::exception&) {
      ++stats.skipped;
      continue;
    }
    record.label = sentence_bleu(record.machine_translation, pair.target);
    nlohmann::ordered_json line;
    line["source"] = record.source;
    line["mt"] = record.machine_translation;
    line["label"] = record.label;
    out << line.dump() << '\n';
    ++stats.written;
  }
  return stats;
}

}  // namespace icesel

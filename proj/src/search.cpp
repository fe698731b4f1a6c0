#include "icesel/search.hpp"

#include <algorithm>

#include "icesel/errors.hpp"

namespace icesel {

const char* to_string(StopReason reason) {
  switch (reason) {
    case StopReason::kPatienceExhausted: return "patience_exhausted";
    case StopReason::kAllCandidatesUsed: return "all_candidates_used";
    case StopReason::kScoreCeiling: return "score_ceiling";
    case StopReason::kPromptTooLong: return "prompt_too_long";
  }
  return "unknown";
}

namespace {

void fill_best(SearchResult& result) {
  // Highest estimate wins; the trace is in ice_count order, so the first
  // maximum is the earliest (fewest ICEs).
  for (const SearchTraceEntry& entry : result.trace) {
    if (!result.best || entry.estimated_quality > result.best->estimated_quality) {
      result.best = entry;
    }
  }
  result.iterations = static_cast<int>(result.trace.size());
}

}  // namespace

SearchResult run_search(const std::string& query_source,
                        std::span<const SentencePair> candidates,
                        TranslatorBackend& translator, EstimatorBackend& estimator,
                        const SearchConfig& config) {
  if (candidates.empty()) throw ConfigError("run_search: no candidates");
  if (config.max_candidates < 1) throw ConfigError("run_search: K must be >= 1");
  if (config.patience < 1) throw ConfigError("run_search: patience must be >= 1");
  if (config.termination_score <= 0) {
    throw ConfigError("run_search: termination_score must be > 0");
  }

  const std::size_t limit =
      std::min<std::size_t>(candidates.size(),
                            static_cast<std::size_t>(config.max_candidates));
  int max_tokens = config.max_prompt_tokens;
  if (std::optional<int> capability = translator.max_prompt_tokens()) {
    max_tokens = std::min(max_tokens, *capability);
  }

  SearchResult result;
  double best_score = 0.0;  // sentinel; never returned because iteration 1 always runs
  int patience_counter = 0;

  std::string prefix;  // prompts grow by pure prefix extension
  std::vector<int> selected_ids;
  const std::string query_part = render_query(config.prompt_template, query_source);

  for (std::size_t i = 0; i < limit && patience_counter < config.patience; ++i) {
    const SentencePair& candidate = candidates[i];
    prefix += render_one_example(config.prompt_template, candidate);
    prefix += config.prompt_template.separator;
    selected_ids.push_back(candidate.id);

    std::string prompt = prefix + query_part;
    if (estimate_length(prompt) > max_tokens) {
      result.stop_reason = StopReason::kPromptTooLong;
      fill_best(result);
      return result;
    }

    SearchTraceEntry entry;
    entry.ice_count = static_cast<int>(i) + 1;
    entry.ice_ids = selected_ids;
    entry.prompt_text = std::move(prompt);
    try {
      TranslateResult translated = translator.translate(entry.prompt_text);
      if (translated.prompt_tokens && *translated.prompt_tokens > max_tokens) {
        // The backend's own tokenizer count overrides the proxy: the prompt
        // was over budget, so this iteration does not enter the trace.
        result.stop_reason = StopReason::kPromptTooLong;
        fill_best(result);
        return result;
      }
      entry.translation = std::move(translated.text);
      entry.estimated_quality = estimator.estimate(query_source, entry.translation);
    } catch (const PromptTooLongError&) {
      // The backend knows its window better than the proxy does.
      result.stop_reason = StopReason::kPromptTooLong;
      fill_best(result);
      return result;
    } catch (const BackendUnreachableError& e) {
      throw SearchAbortedError(std::string("search aborted at iteration ") +
                                   std::to_string(i + 1) + ": " + e.what(),
                               std::move(result.trace), /*unreachable=*/true);
    } catch (const std::exception& e) {
      throw SearchAbortedError(std::string("search aborted at iteration ") +
                                   std::to_string(i + 1) + ": " + e.what(),
                               std::move(result.trace));
    }

    const double quality = entry.estimated_quality;
    result.trace.push_back(std::move(entry));

    if (quality >= config.termination_score) {
      result.stop_reason = StopReason::kScoreCeiling;
      fill_best(result);
      return result;
    }
    if (quality <= best_score) {
      ++patience_counter;
    } else {
      patience_counter = 0;
    }
    best_score = std::max(best_score, quality);
  }

  result.stop_reason = patience_counter >= config.patience
                           ? StopReason::kPatienceExhausted
                           : StopReason::kAllCandidatesUsed;
  fill_best(result);
  return result;
}

std::vector<RankedCandidate> order_candidates(SearchMode mode,
                                              std::vector<RankedCandidate> bm25_list,
                                              std::span<const std::string> query_tokens,
                                              const TokenizedDocs& docs) {
  if (mode == SearchMode::kQeUnigram) {
    return reorder_unigram_overlap(std::move(bm25_list), query_tokens, docs);
  }
  return bm25_list;
}

}  // namespace icesel

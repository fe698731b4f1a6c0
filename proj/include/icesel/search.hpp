#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "icesel/backends.hpp"
#include "icesel/bm25.hpp"
#include "icesel/corpus.hpp"
#include "icesel/prompt.hpp"

namespace icesel {

enum class SearchMode {
  kQeBm25 = 1,    // QE estimator over BM25-ordered candidates
  kQeUnigram = 2, // QE estimator over unigram-overlap-reordered candidates
  kOracle = 3,    // reference sentence BLEU as the estimator, BM25 order
};

struct SearchConfig {
  SearchMode mode = SearchMode::kQeBm25;
  int max_candidates = 16;         // K
  int patience = 8;                // P: consecutive non-improvements tolerated
  double termination_score = 100.0;
  int max_prompt_tokens = 2048;    // proxy-token budget (estimate_length)
  PromptTemplate prompt_template;
};

// One evaluated prompt prefix.
struct SearchTraceEntry {
  int ice_count = 0;
  std::vector<int> ice_ids;  // prefix of the candidate ordering
  std::string prompt_text;
  std::string translation;
  double estimated_quality = 0.0;
};

enum class StopReason {
  kPatienceExhausted,
  kAllCandidatesUsed,
  kScoreCeiling,
  kPromptTooLong,
};

const char* to_string(StopReason reason);

struct SearchResult {
  // Highest estimated quality; ties go to the earliest (fewest ICEs).
  // Empty only when the prompt was over-length before the first iteration.
  std::optional<SearchTraceEntry> best;
  std::vector<SearchTraceEntry> trace;  // evaluation order
  int iterations = 0;                   // == trace.size()
  StopReason stop_reason = StopReason::kAllCandidatesUsed;
};

// Thrown when a backend fails mid-search; carries the completed iterations.
class SearchAbortedError : public std::runtime_error {
 public:
  SearchAbortedError(const std::string& what, std::vector<SearchTraceEntry> partial,
                     bool unreachable = false)
      : std::runtime_error(what),
        partial_trace(std::move(partial)),
        backend_unreachable(unreachable) {}
  std::vector<SearchTraceEntry> partial_trace;
  bool backend_unreachable = false;
};

// Greedy selection/translation/estimation search over growing candidate
// prefixes. Iteration i renders a prompt from the first i candidates plus
// the query, translates, estimates, and tracks the best score; patience
// counts consecutive iterations whose estimate does not improve on the best
// (plateaus included). Stops on patience, candidate exhaustion, an estimate
// at or above termination_score, or an over-length prompt. Candidates must
// be non-empty and already in mode order.
SearchResult run_search(const std::string& query_source,
                        std::span<const SentencePair> candidates,
                        TranslatorBackend& translator, EstimatorBackend& estimator,
                        const SearchConfig& config);

// Mode 1/3: identity. Mode 2: stable unigram-overlap reorder.
std::vector<RankedCandidate> order_candidates(SearchMode mode,
                                              std::vector<RankedCandidate> bm25_list,
                                              std::span<const std::string> query_tokens,
                                              const TokenizedDocs& docs);

}  // namespace icesel

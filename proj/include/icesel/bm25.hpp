#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace icesel {

struct Bm25Params {
  double k1 = 1.5;
  double b = 0.75;
  double epsilon = 0.25;
};

// A training pair with its retrieval score. Lists are sorted by score
// descending, ties broken by ascending pair_id, ranks consecutive from 0.
struct RankedCandidate {
  int pair_id = 0;
  double bm25_score = 0.0;
  int rank = 0;
};

using TokenizedDocs = std::vector<std::vector<std::string>>;

// Okapi BM25 over tokenized training sources.
//   idf(t) = ln((N - df + 0.5) / (df + 0.5)); values <= 0 are floored to
//   epsilon * mean(raw idf), so realistic corpora score non-negatively.
//   score(q, d) = sum over query tokens t (repeats included) of
//   idf(t) * f(t,d) * (k1+1) / (f(t,d) + k1 * (1 - b + b*|d|/avgdl))
class Bm25Index {
 public:
  // Throws ConfigError on an empty corpus.
  static Bm25Index build(const TokenizedDocs& docs, Bm25Params params = {});

  double score(std::span<const std::string> query_tokens, int doc_id) const;

  // The k highest-scoring documents (fewer if the corpus is smaller).
  std::vector<RankedCandidate> top_k(std::span<const std::string> query_tokens,
                                     int k) const;

  std::size_t doc_count() const { return doc_lengths_.size(); }
  double avg_doc_length() const { return avg_doc_length_; }
  const Bm25Params& params() const { return params_; }
  // Floored idf; 0.0 for terms absent from the corpus.
  double idf(const std::string& term) const;
  int doc_freq(const std::string& term) const;

  // Binary cache, versioned header keyed on params and a corpus hash.
  // save() writes atomically (temp file + rename). try_load() returns an
  // empty optional-like flag via the bool result when the cache is absent,
  // from another version, or keyed differently.
  void save(const std::string& path, std::uint64_t corpus_hash) const;
  static bool try_load(const std::string& path, std::uint64_t corpus_hash,
                       const Bm25Params& params, Bm25Index* out);

 private:
  struct Posting {
    std::int32_t doc_id;
    std::int32_t freq;
  };
  struct TermInfo {
    std::int32_t doc_freq = 0;
    double idf = 0.0;
    std::vector<Posting> postings;  // ascending doc_id
  };

  std::unordered_map<std::string, TermInfo> terms_;
  std::vector<std::int32_t> doc_lengths_;
  double avg_doc_length_ = 0.0;
  Bm25Params params_;
};

// Stable re-sort by unigram overlap with the query, descending. Overlap is
// |unique(query tokens) ∩ unique(candidate source tokens)|; ties keep the
// incoming (BM25) order. Ranks are reassigned consecutively.
std::vector<RankedCandidate> reorder_unigram_overlap(
    std::vector<RankedCandidate> candidates,
    std::span<const std::string> query_tokens, const TokenizedDocs& docs);

// Greedy recall-based coverage re-ranking (R-BM25). Repeatedly picks the
// candidate whose source covers the most query n-grams (orders 1..n_max)
// not yet covered, ties going to the better BM25 rank; once everything is
// covered the uncovered set resets so q candidates can always be produced.
// With count_weighted, each n-gram counts as many times as it occurs in
// the query. Throws ConfigError when q < 1.
std::vector<RankedCandidate> rerank_rbm25(
    const std::vector<RankedCandidate>& candidates,
    std::span<const std::string> query_tokens, const TokenizedDocs& docs,
    int n_max, int q, bool count_weighted = false);

}  // namespace icesel

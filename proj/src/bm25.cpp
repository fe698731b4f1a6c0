#include "icesel/bm25.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <unordered_set>

#include "icesel/errors.hpp"

namespace icesel {
namespace {

void assign_ranks(std::vector<RankedCandidate>& list) {
  for (std::size_t i = 0; i < list.size(); ++i) list[i].rank = static_cast<int>(i);
}

}  // namespace

Bm25Index Bm25Index::build(const TokenizedDocs& docs, Bm25Params params) {
  if (docs.empty()) throw ConfigError("bm25: cannot index an empty corpus");
  Bm25Index index;
  index.params_ = params;
  index.doc_lengths_.reserve(docs.size());

  long long total_len = 0;
  for (std::size_t d = 0; d < docs.size(); ++d) {
    const auto& tokens = docs[d];
    index.doc_lengths_.push_back(static_cast<std::int32_t>(tokens.size()));
    total_len += static_cast<long long>(tokens.size());
    std::map<std::string, std::int32_t> freqs;
    for (const std::string& t : tokens) ++freqs[t];
    for (auto& [term, freq] : freqs) {
      TermInfo& info = index.terms_[term];
      info.doc_freq += 1;
      info.postings.push_back({static_cast<std::int32_t>(d), freq});
    }
  }
  index.avg_doc_length_ = static_cast<double>(total_len) / static_cast<double>(docs.size());

  // Mean raw idf is accumulated in lexicographic term order so that
  // independent reimplementations of the formula land on the same double.
  const double n = static_cast<double>(docs.size());
  std::vector<const std::string*> ordered;
  ordered.reserve(index.terms_.size());
  for (const auto& [term, info] : index.terms_) ordered.push_back(&term);
  std::sort(ordered.begin(), ordered.end(),
            [](const std::string* a, const std::string* b) { return *a < *b; });

  double idf_sum = 0.0;
  for (const std::string* term : ordered) {
    TermInfo& info = index.terms_[*term];
    double df = static_cast<double>(info.doc_freq);
    info.idf = std::log((n - df + 0.5) / (df + 0.5));
    idf_sum += info.idf;
  }
  const double mean_idf = idf_sum / static_cast<double>(index.terms_.size());
  const double floor = params.epsilon * mean_idf;
  for (auto& [term, info] : index.terms_) {
    if (info.idf <= 0.0) info.idf = floor;
  }
  return index;
}

double Bm25Index::idf(const std::string& term) const {
  auto it = terms_.find(term);
  return it == terms_.end() ? 0.0 : it->second.idf;
}

int Bm25Index::doc_freq(const std::string& term) const {
  auto it = terms_.find(term);
  return it == terms_.end() ? 0 : it->second.doc_freq;
}

double Bm25Index::score(std::span<const std::string> query_tokens, int doc_id) const {
  if (doc_id < 0 || static_cast<std::size_t>(doc_id) >= doc_lengths_.size()) {
    throw ConfigError("bm25: doc_id out of range: " + std::to_string(doc_id));
  }
  const double norm =
      params_.k1 * (1.0 - params_.b +
                    params_.b * static_cast<double>(doc_lengths_[doc_id]) / avg_doc_length_);
  double total = 0.0;
  // Repeated query terms contribute repeatedly.
  for (const std::string& t : query_tokens) {
    auto it = terms_.find(t);
    if (it == terms_.end()) continue;
    const auto& postings = it->second.postings;
    auto p = std::lower_bound(postings.begin(), postings.end(), doc_id,
                              [](const Posting& a, int d) { return a.doc_id < d; });
    if (p == postings.end() || p->doc_id != doc_id) continue;
    const double f = static_cast<double>(p->freq);
    total += it->second.idf * f * (params_.k1 + 1.0) / (f + norm);
  }
  return total;
}

std::vector<RankedCandidate> Bm25Index::top_k(std::span<const std::string> query_tokens,
                                              int k) const {
  if (k < 1) throw ConfigError("bm25: top_k needs k >= 1");
  std::vector<double> scores(doc_lengths_.size(), 0.0);
  for (const std::string& t : query_tokens) {
    auto it = terms_.find(t);
    if (it == terms_.end()) continue;
    for (const Posting& p : it->second.postings) {
      const double f = static_cast<double>(p.freq);
      const double norm =
          params_.k1 * (1.0 - params_.b +
                        params_.b * static_cast<double>(doc_lengths_[p.doc_id]) /
                            avg_doc_length_);
      scores[p.doc_id] += it->second.idf * f * (params_.k1 + 1.0) / (f + norm);
    }
  }

  // Zero-score documents still rank (by ascending id) when k exceeds the
  // number of matching documents.
  std::vector<RankedCandidate> all;
  all.reserve(doc_lengths_.size());
  for (std::size_t d = 0; d < doc_lengths_.size(); ++d) {
    all.push_back({static_cast<int>(d), scores[d], 0});
  }
  std::size_t keep = std::min<std::size_t>(static_cast<std::size_t>(k), all.size());
  auto by_score = [](const RankedCandidate& a, const RankedCandidate& b) {
    if (a.bm25_score != b.bm25_score) return a.bm25_score > b.bm25_score;
    return a.pair_id < b.pair_id;
  };
  std::partial_sort(all.begin(), all.begin() + keep, all.end(), by_score);
  all.resize(keep);
  assign_ranks(all);
  return all;
}

std::vector<RankedCandidate> reorder_unigram_overlap(
    std::vector<RankedCandidate> candidates, std::span<const std::string> query_tokens,
    const TokenizedDocs& docs) {
  std::unordered_set<std::string> query_set(query_tokens.begin(), query_tokens.end());
  std::vector<int> overlaps(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& tokens = docs.at(static_cast<std::size_t>(candidates[i].pair_id));
    std::unordered_set<std::string> seen;
    int overlap = 0;
    for (const std::string& t : tokens) {
      if (query_set.count(t) && seen.insert(t).second) ++overlap;
    }
    overlaps[i] = overlap;
  }
  std::vector<std::size_t> order(candidates.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return overlaps[a] > overlaps[b]; });
  std::vector<RankedCandidate> out;
  out.reserve(candidates.size());
  for (std::size_t i : order) out.push_back(candidates[i]);
  assign_ranks(out);
  return out;
}

std::vector<RankedCandidate> rerank_rbm25(const std::vector<RankedCandidate>& candidates,
                                          std::span<const std::string> query_tokens,
                                          const TokenizedDocs& docs, int n_max, int q,
                                          bool count_weighted) {
  if (q < 1) throw ConfigError("rbm25: output size q must be >= 1");
  if (n_max < 1 || n_max > 4) throw ConfigError("rbm25: n_max must be in 1..4");
  if (candidates.empty()) throw ConfigError("rbm25: empty candidate list");

  auto collect = [&](std::span<const std::string> tokens) {
    std::map<std::string, int> grams;
    for (int n = 1; n <= n_max; ++n) {
      if (tokens.size() < static_cast<std::size_t>(n)) break;
      for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
        std::string key = std::to_string(n);
        key += ':';
        key += tokens[i];
        for (int k = 1; k < n; ++k) {
          key += ' ';
          key += tokens[i + k];
        }
        ++grams[key];
      }
    }
    return grams;
  };

  const std::map<std::string, int> query_grams = collect(query_tokens);
  std::vector<std::set<std::string>> cand_grams(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    auto grams = collect(docs.at(static_cast<std::size_t>(candidates[i].pair_id)));
    for (const auto& [g, c] : grams) cand_grams[i].insert(g);
  }

  std::set<std::string> uncovered;
  auto reset_uncovered = [&] {
    uncovered.clear();
    for (const auto& [g, c] : query_grams) uncovered.insert(g);
  };
  reset_uncovered();

  auto gain = [&](std::size_t i) {
    long long total = 0;
    for (const std::string& g : cand_grams[i]) {
      if (uncovered.count(g)) total += count_weighted ? query_grams.at(g) : 1;
    }
    return total;
  };

  std::vector<bool> used(candidates.size(), false);
  std::vector<RankedCandidate> out;
  const std::size_t want = std::min<std::size_t>(static_cast<std::size_t>(q),
                                                 candidates.size());
  while (out.size() < want) {
    long long best_gain = -1;
    std::size_t best_i = 0;
    // Candidates are in BM25 order, so the first maximum is the tie winner.
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      if (used[i]) continue;
      long long g = gain(i);
      if (g > best_gain) {
        best_gain = g;
        best_i = i;
      }
    }
    used[best_i] = true;
    out.push_back(candidates[best_i]);
    for (const std::string& g : cand_grams[best_i]) uncovered.erase(g);
    if (uncovered.empty() && !query_grams.empty()) reset_uncovered();
  }
  assign_ranks(out);
  return out;
}

// ---------------------------------------------------------------------------
// Binary cache
// ---------------------------------------------------------------------------

namespace {

constexpr char kCacheMagic[4] = {'B', 'M', 'I', 'X'};
constexpr std::uint32_t kCacheVersion = 1;

template <typename T>
void write_pod(std::ostream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
bool read_pod(std::istream& in, T* value) {
  in.read(reinterpret_cast<char*>(value), sizeof(T));
  return static_cast<bool>(in);
}

void write_string(std::ostream& out, const std::string& s) {
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

bool read_string(std::istream& in, std::string* s) {
  std::uint32_t len = 0;
  if (!read_pod(in, &len)) return false;
  s->resize(len);
  in.read(s->data(), len);
  return static_cast<bool>(in);
}

}  // namespace

void Bm25Index::save(const std::string& path, std::uint64_t corpus_hash) const {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write index cache: " + tmp);
    out.write(kCacheMagic, sizeof(kCacheMagic));
    write_pod(out, kCacheVersion);
    write_pod(out, corpus_hash);
    write_pod(out, params_.k1);
    write_pod(out, params_.b);
    write_pod(out, params_.epsilon);
    write_pod<std::uint64_t>(out, doc_lengths_.size());
    out.write(reinterpret_cast<const char*>(doc_lengths_.data()),
              static_cast<std::streamsize>(doc_lengths_.size() * sizeof(std::int32_t)));
    write_pod(out, avg_doc_length_);
    write_pod<std::uint64_t>(out, terms_.size());
    for (const auto& [term, info] : terms_) {
      write_string(out, term);
      write_pod(out, info.doc_freq);
      write_pod(out, info.idf);
      write_pod<std::uint64_t>(out, info.postings.size());
      out.write(reinterpret_cast<const char*>(info.postings.data()),
                static_cast<std::streamsize>(info.postings.size() * sizeof(Posting)));
    }
    if (!out) throw ConfigError("short write on index cache: " + tmp);
  }
  std::remove(path.c_str());
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    throw ConfigError("cannot move index cache into place: " + path);
  }
}

bool Bm25Index::try_load(const std::string& path, std::uint64_t corpus_hash,
                         const Bm25Params& params, Bm25Index* out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  char magic[4];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kCacheMagic, sizeof(magic)) != 0) return false;
  std::uint32_t version = 0;
  if (!read_pod(in, &version) || version != kCacheVersion) return false;
  std::uint64_t stored_hash = 0;
  Bm25Params stored;
  if (!read_pod(in, &stored_hash) || !read_pod(in, &stored.k1) ||
      !read_pod(in, &stored.b) || !read_pod(in, &stored.epsilon)) {
    return false;
  }
  if (stored_hash != corpus_hash || stored.k1 != params.k1 || stored.b != params.b ||
      stored.epsilon != params.epsilon) {
    return false;
  }

  Bm25Index index;
  index.params_ = stored;
  std::uint64_t doc_count = 0;
  if (!read_pod(in, &doc_count)) return false;
  index.doc_lengths_.resize(doc_count);
  in.read(reinterpret_cast<char*>(index.doc_lengths_.data()),
          static_cast<std::streamsize>(doc_count * sizeof(std::int32_t)));
  if (!in || !read_pod(in, &index.avg_doc_length_)) return false;
  std::uint64_t term_count = 0;
  if (!read_pod(in, &term_count)) return false;
  for (std::uint64_t i = 0; i < term_count; ++i) {
    std::string term;
    TermInfo info;
    std::uint64_t posting_count = 0;
    if (!read_string(in, &term) || !read_pod(in, &info.doc_freq) ||
        !read_pod(in, &info.idf) || !read_pod(in, &posting_count)) {
      return false;
    }
    info.postings.resize(posting_count);
    in.read(reinterpret_cast<char*>(info.postings.data()),
            static_cast<std::streamsize>(posting_count * sizeof(Posting)));
    if (!in) return false;
    index.terms_.emplace(std::move(term), std::move(info));
  }
  *out = std::move(index);
  return true;
}

}  // namespace icesel

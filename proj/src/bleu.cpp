#include "icesel/bleu.hpp"

#include <algorithm>
#include <cmath>

#include "icesel/errors.hpp"
#include "icesel/tokenize.hpp"

namespace icesel {
namespace {

constexpr int kMaxOrder = 4;
// Stand-in for ln(0) so a zero precision drives the geometric mean to exactly
// 0.0 by double underflow instead of producing -inf/NaN.
constexpr double kLogZeroFloor = -9999999999.0;

struct SufficientStats {
  long long matched[kMaxOrder] = {0, 0, 0, 0};
  long long totals[kMaxOrder] = {0, 0, 0, 0};
  long long hyp_len = 0;
  long long ref_len = 0;
};

void accumulate(SufficientStats& stats, const std::string& hyp, const std::string& ref) {
  std::vector<std::string> h = tokenize_13a(hyp);
  std::vector<std::string> r = tokenize_13a(ref);
  stats.hyp_len += static_cast<long long>(h.size());
  stats.ref_len += static_cast<long long>(r.size());
  for (int n = 1; n <= kMaxOrder; ++n) {
    auto hc = ngrams(h, n);
    if (hc.empty()) continue;
    auto rc = ngrams(r, n);
    stats.totals[n - 1] += static_cast<long long>(h.size()) - n + 1;
    for (const auto& [gram, count] : hc) {
      auto it = rc.find(gram);
      if (it != rc.end()) stats.matched[n - 1] += std::min(count, it->second);
    }
  }
}

double floored_log(double x) { return x == 0.0 ? kLogZeroFloor : std::log(x); }

// Shared scoring core. `exp_smoothing` distinguishes sentence from corpus
// scoring; orders past the first one without windows are always excluded
// from the geometric mean.
BleuScore compute(const SufficientStats& stats, bool exp_smoothing) {
  BleuScore out;
  out.hyp_len = stats.hyp_len;
  out.ref_len = stats.ref_len;
  for (int n = 0; n < kMaxOrder; ++n) {
    out.matched[n] = stats.matched[n];
    out.totals[n] = stats.totals[n];
  }

  if (stats.hyp_len < stats.ref_len) {
    out.brevity_penalty =
        stats.hyp_len > 0
            ? std::exp(1.0 - static_cast<double>(stats.ref_len) / stats.hyp_len)
            : 0.0;
  } else {
    out.brevity_penalty = 1.0;
  }

  double smoothed[kMaxOrder] = {0, 0, 0, 0};
  double smooth_factor = 1.0;
  int effective_order = kMaxOrder;
  for (int n = 0; n < kMaxOrder; ++n) {
    if (stats.totals[n] == 0) break;
    effective_order = n + 1;
    out.precisions[n] =
        static_cast<double>(stats.matched[n]) / static_cast<double>(stats.totals[n]);
    if (stats.matched[n] == 0 && exp_smoothing) {
      smooth_factor *= 2.0;
      smoothed[n] = 1.0 / (smooth_factor * static_cast<double>(stats.totals[n]));
    } else {
      smoothed[n] = out.precisions[n];
    }
  }

  double log_sum = 0.0;
  for (int n = 0; n < effective_order; ++n) log_sum += floored_log(smoothed[n]);
  out.score = 100.0 * out.brevity_penalty * std::exp(log_sum / effective_order);
  return out;
}

}  // namespace

std::map<std::string, int> ngrams(std::span<const std::string> tokens, int n) {
  std::map<std::string, int> counts;
  if (n < 1 || tokens.size() < static_cast<std::size_t>(n)) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    std::string key = tokens[i];
    for (int k = 1; k < n; ++k) {
      key += ' ';
      key += tokens[i + k];
    }
    ++counts[key];
  }
  return counts;
}

BleuScore corpus_bleu(std::span<const std::string> hypotheses,
                      std::span<const std::string> references) {
  if (hypotheses.size() != references.size()) {
    throw ConfigError("corpus_bleu: hypothesis/reference count mismatch " +
                      std::to_string(hypotheses.size()) + " vs " +
                      std::to_string(references.size()));
  }
  if (hypotheses.empty()) throw ConfigError("corpus_bleu: empty input");
  SufficientStats stats;
  for (std::size_t i = 0; i < hypotheses.size(); ++i) {
    accumulate(stats, hypotheses[i], references[i]);
  }
  return compute(stats, /*exp_smoothing=*/false);
}

double sentence_bleu(const std::string& hypothesis, const std::string& reference) {
  SufficientStats stats;
  accumulate(stats, hypothesis, reference);
  return compute(stats, /*exp_smoothing=*/true).score;
}

}  // namespace icesel

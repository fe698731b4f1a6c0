#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

namespace icesel {

// Contiguous n-token windows with multiplicities. Tokens are whitespace-free,
// so joining with a single space is a collision-free key.
std::map<std::string, int> ngrams(std::span<const std::string> tokens, int n);

struct BleuScore {
  double score = 0.0;                      // [0, 100]
  double precisions[4] = {0, 0, 0, 0};     // fractions; 0 for orders with no windows
  double brevity_penalty = 1.0;            // (0, 1]
  long long hyp_len = 0;                   // 13a token counts
  long long ref_len = 0;
  long long matched[4] = {0, 0, 0, 0};
  long long totals[4] = {0, 0, 0, 0};
};

// Corpus BLEU, 13a tokenization, no smoothing: any order with windows but
// zero matches forces score 0 (precisions still reported). Orders where no
// hypothesis has a window are excluded from the geometric mean. Throws
// ConfigError on mismatched or empty inputs.
BleuScore corpus_bleu(std::span<const std::string> hypotheses,
                      std::span<const std::string> references);

// Sentence BLEU with exponential smoothing: the k-th order with windows but
// zero matches scores 1/(2^k * windows). Matches corpus_bleu exactly when
// smoothing never kicks in. Empty hypothesis scores 0.
double sentence_bleu(const std::string& hypothesis, const std::string& reference);

}  // namespace icesel

#pragma once

#include <span>
#include <string>

#include "icesel/corpus.hpp"

namespace icesel {

// Few-shot translation prompt layout. The default instance renders
//   "src1 = tgt1 </s> src2 = tgt2 </s> query = "
// i.e. each example followed by the separator, then the query with an
// empty completion.
struct PromptTemplate {
  std::string example_format = "{src} = {tgt}";
  std::string separator = " </s> ";
  std::string query_format = "{src} = ";
};

// The examples-plus-separators prefix (everything before the query).
// render(t, ices, q) == render_prefix(t, ices) + render_query(t, q), so
// callers that grow the example list one entry at a time can extend the
// prefix instead of re-rendering.
std::string render_prefix(const PromptTemplate& tmpl,
                          std::span<const SentencePair> ices);
std::string render_one_example(const PromptTemplate& tmpl,
                               const SentencePair& ice);
std::string render_query(const PromptTemplate& tmpl,
                         const std::string& query_source);
std::string render(const PromptTemplate& tmpl, std::span<const SentencePair> ices,
                   const std::string& query_source);

// Deterministic upper-bound proxy for the backend tokenizer: whitespace
// token count times two. Monotone under concatenation.
int estimate_length(std::string_view prompt_text);

}  // namespace icesel

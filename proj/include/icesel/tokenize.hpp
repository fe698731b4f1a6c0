#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace icesel {

// 13a tokenization as used by the standard MT evaluation tooling:
//   1. drop "<skipped>" markers and soft line breaks ("-\n"), map "\n" to space
//   2. decode the four XML entities (&quot; &amp; &lt; &gt;)
//   3. pad ASCII punctuation with spaces, except that "." and "," stay
//      attached between digits and "-" stays attached after a non-digit
//   4. split on whitespace
// Case is preserved. Total function; never throws.
std::vector<std::string> tokenize_13a(std::string_view text);

// Word tokenizer used for unigram-overlap ordering. Alias of tokenize_13a;
// one tokenizer serves BLEU, BM25 indexing and overlap ordering.
std::vector<std::string> tokenize_words(std::string_view text);

}  // namespace icesel

#include "icesel/prompt.hpp"

namespace icesel {
namespace {

std::string substitute(std::string_view pattern, std::string_view slot,
                       std::string_view value) {
  std::string out;
  out.reserve(pattern.size() + value.size());
  std::size_t pos = 0;
  while (pos < pattern.size()) {
    std::size_t hit = pattern.find(slot, pos);
    if (hit == std::string_view::npos) {
      out.append(pattern.substr(pos));
      break;
    }
    out.append(pattern.substr(pos, hit - pos));
    out.append(value);
    pos = hit + slot.size();
  }
  return out;
}

}  // namespace

std::string render_one_example(const PromptTemplate& tmpl, const SentencePair& ice) {
  std::string s = substitute(tmpl.example_format, "{src}", ice.source);
  return substitute(s, "{tgt}", ice.target);
}

std::string render_prefix(const PromptTemplate& tmpl,
                          std::span<const SentencePair> ices) {
  std::string out;
  for (const SentencePair& ice : ices) {
    out += render_one_example(tmpl, ice);
    out += tmpl.separator;
  }
  return out;
}

std::string render_query(const PromptTemplate& tmpl, const std::string& query_source) {
  return substitute(tmpl.query_format, "{src}", query_source);
}

std::string render(const PromptTemplate& tmpl, std::span<const SentencePair> ices,
                   const std::string& query_source) {
  return render_prefix(tmpl, ices) + render_query(tmpl, query_source);
}

int estimate_length(std::string_view prompt_text) {
  int words = 0;
  bool in_word = false;
  for (unsigned char c : prompt_text) {
    bool space = c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
    if (!space && !in_word) ++words;
    in_word = !space;
  }
  return words * 2;
}

}  // namespace icesel

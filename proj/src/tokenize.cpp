#include "icesel/tokenize.hpp"

#include <array>
#include <cctype>

namespace icesel {
namespace {

// Non-overlapping left-to-right replacement; never rescans inserted text.
std::string replace_all(std::string_view text, std::string_view from,
                        std::string_view to) {
  std::string out;
  out.reserve(text.size());
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t hit = text.find(from, pos);
    if (hit == std::string_view::npos) {
      out.append(text.substr(pos));
      break;
    }
    out.append(text.substr(pos, hit - pos));
    out.append(to);
    pos = hit + from.size();
  }
  return out;
}

bool is_ascii_digit(unsigned char c) { return c >= '0' && c <= '9'; }

// Punctuation padded unconditionally by the 13a scheme: all ASCII
// punctuation and space except ' . , - and the digit range.
constexpr std::array<bool, 128> make_pad_table() {
  std::array<bool, 128> t{};
  for (int c = 0x20; c <= 0x26; ++c) t[c] = true;  // space ! " # $ % &
  for (int c = 0x28; c <= 0x2B; ++c) t[c] = true;  // ( ) * +
  t[0x2F] = true;                                  // /
  for (int c = 0x3A; c <= 0x40; ++c) t[c] = true;  // : ; < = > ? @
  for (int c = 0x5B; c <= 0x60; ++c) t[c] = true;  // [ \ ] ^ _ `
  for (int c = 0x7B; c <= 0x7E; ++c) t[c] = true;  // { | } ~
  return t;
}
constexpr std::array<bool, 128> kPadTable = make_pad_table();

std::string pad_symbols(std::string_view s) {
  std::string out;
  out.reserve(s.size() * 2);
  for (unsigned char c : s) {
    if (c < 128 && kPadTable[c]) {
      out += ' ';
      out += static_cast<char>(c);
      out += ' ';
    } else {
      out += static_cast<char>(c);
    }
  }
  return out;
}

// "X." / "X," with X not a digit -> "X . " (two-byte window, consumed together).
std::string split_period_comma_after(std::string_view s) {
  std::string out;
  out.reserve(s.size() * 2);
  std::size_t i = 0;
  while (i < s.size()) {
    unsigned char c = s[i];
    if (i + 1 < s.size() && !is_ascii_digit(c) &&
        (s[i + 1] == '.' || s[i + 1] == ',')) {
      out += static_cast<char>(c);
      out += ' ';
      out += s[i + 1];
      out += ' ';
      i += 2;
    } else {
      out += static_cast<char>(c);
      ++i;
    }
  }
  return out;
}

// "." / "," followed by a non-digit -> " . X".
std::string split_period_comma_before(std::string_view s) {
  std::string out;
  out.reserve(s.size() * 2);
  std::size_t i = 0;
  while (i < s.size()) {
    unsigned char c = s[i];
    if ((c == '.' || c == ',') && i + 1 < s.size() &&
        !is_ascii_digit(static_cast<unsigned char>(s[i + 1]))) {
      out += ' ';
      out += static_cast<char>(c);
      out += ' ';
      out += s[i + 1];
      i += 2;
    } else {
      out += static_cast<char>(c);
      ++i;
    }
  }
  return out;
}

// digit followed by "-" -> "digit - ".
std::string split_dash_after_digit(std::string_view s) {
  std::string out;
  out.reserve(s.size() * 2);
  std::size_t i = 0;
  while (i < s.size()) {
    unsigned char c = s[i];
    if (is_ascii_digit(c) && i + 1 < s.size() && s[i + 1] == '-') {
      out += static_cast<char>(c);
      out += ' ';
      out += '-';
      out += ' ';
      i += 2;
    } else {
      out += static_cast<char>(c);
      ++i;
    }
  }
  return out;
}

bool is_ascii_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

std::vector<std::string> split_whitespace(std::string_view s) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && is_ascii_space(s[i])) ++i;
    std::size_t start = i;
    while (i < s.size() && !is_ascii_space(s[i])) ++i;
    if (i > start) tokens.emplace_back(s.substr(start, i - start));
  }
  return tokens;
}

}  // namespace

std::vector<std::string> tokenize_13a(std::string_view text) {
  std::string line = replace_all(text, "<skipped>", "");
  line = replace_all(line, "-\n", "");
  line = replace_all(line, "\n", " ");
  if (line.find('&') != std::string::npos) {
    line = replace_all(line, "&quot;", "\"");
    line = replace_all(line, "&amp;", "&");
    line = replace_all(line, "&lt;", "<");
    line = replace_all(line, "&gt;", ">");
  }
  line = " " + line + " ";
  line = pad_symbols(line);
  line = split_period_comma_after(line);
  line = split_period_comma_before(line);
  line = split_dash_after_digit(line);
  return split_whitespace(line);
}

std::vector<std::string> tokenize_words(std::string_view text) {
  return tokenize_13a(text);
}

}  // namespace icesel

#include "icesel/corpus.hpp"

#include <fstream>
#include <sstream>

#include "icesel/errors.hpp"

namespace icesel {
namespace {

// Strict UTF-8: rejects overlongs, surrogates, and codepoints past U+10FFFF.
bool is_valid_utf8(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size()) {
    unsigned char c = s[i];
    if (c < 0x80) {
      ++i;
      continue;
    }
    int len;
    unsigned int cp;
    if ((c & 0xE0) == 0xC0) {
      len = 2;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      len = 3;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      len = 4;
      cp = c & 0x07;
    } else {
      return false;
    }
    if (i + len > s.size()) return false;
    for (int k = 1; k < len; ++k) {
      unsigned char cc = s[i + k];
      if ((cc & 0xC0) != 0x80) return false;
      cp = (cp << 6) | (cc & 0x3F);
    }
    if (len == 2 && cp < 0x80) return false;
    if (len == 3 && cp < 0x800) return false;
    if (len == 4 && cp < 0x10000) return false;
    if (cp > 0x10FFFF) return false;
    if (cp >= 0xD800 && cp <= 0xDFFF) return false;
    i += len;
  }
  return true;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open file: " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!is_valid_utf8(line)) {
      throw ConfigError(path + ": undecodable UTF-8 at line " +
                        std::to_string(lines.size() + 1));
    }
    lines.push_back(std::move(line));
  }
  return lines;
}

void check_non_empty(const std::string& text, const std::string& path, std::size_t line) {
  if (text.empty()) {
    throw ConfigError(path + ": empty segment at line " + std::to_string(line));
  }
}

}  // namespace

std::vector<SentencePair> load_parallel(const std::string& source_path,
                                        const std::string& target_path) {
  std::vector<std::string> sources = read_lines(source_path);
  std::vector<std::string> targets = read_lines(target_path);
  if (sources.size() != targets.size()) {
    std::ostringstream msg;
    msg << "line count mismatch " << sources.size() << " vs " << targets.size()
        << " (" << source_path << ", " << target_path << ")";
    throw ConfigError(msg.str());
  }
  std::vector<SentencePair> pairs;
  pairs.reserve(sources.size());
  for (std::size_t i = 0; i < sources.size(); ++i) {
    check_non_empty(sources[i], source_path, i + 1);
    check_non_empty(targets[i], target_path, i + 1);
    pairs.push_back({static_cast<int>(i), std::move(sources[i]), std::move(targets[i])});
  }
  return pairs;
}

std::vector<std::string> load_lines(const std::string& path) { return read_lines(path); }

std::vector<SentencePair> load_tsv(const std::string& path) {
  std::vector<std::string> lines = read_lines(path);
  std::vector<SentencePair> pairs;
  pairs.reserve(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string& line = lines[i];
    std::size_t tab = line.find('\t');
    if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos) {
      throw ConfigError(path + ": expected exactly two tab-separated columns at line " +
                        std::to_string(i + 1));
    }
    std::string source = line.substr(0, tab);
    std::string target = line.substr(tab + 1);
    check_non_empty(source, path, i + 1);
    check_non_empty(target, path, i + 1);
    pairs.push_back({static_cast<int>(i), std::move(source), std::move(target)});
  }
  return pairs;
}

}  // namespace icesel

#pragma once

#include <string>
#include <vector>

namespace icesel {

// One parallel example. `id` equals the 0-based line number in its split.
struct SentencePair {
  int id = 0;
  std::string source;
  std::string target;
};

struct Corpus {
  std::vector<SentencePair> train;
  std::vector<SentencePair> dev;
  std::vector<SentencePair> test;
};

// Loads a parallel corpus from two line-aligned UTF-8 text files.
// Hard errors (ConfigError): missing file, line count mismatch (message
// names both counts), invalid UTF-8 (message names the line), empty line.
std::vector<SentencePair> load_parallel(const std::string& source_path,
                                        const std::string& target_path);

// Same validation for a single TSV file: "source\ttarget" per line, no header.
std::vector<SentencePair> load_tsv(const std::string& path);

// Raw UTF-8 validated lines (e.g. a reference file on its own).
std::vector<std::string> load_lines(const std::string& path);

}  // namespace icesel

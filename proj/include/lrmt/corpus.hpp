#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace lrmt::corpus {

enum class Format { jsonl, tsv };
enum class Side { src, tgt };

Format parse_format(std::string_view name);
Side parse_side(std::string_view name);
std::string_view to_string(Side side);

// Characters in Unicode general category P* are replaced by a space, except
// the sentence-terminal marks '.', '!' and '?'. With keep_apostrophes set, an
// apostrophe (U+0027 or U+2019) directly after a letter is kept, since Roman
// Santali uses it as a glottal-stop letter ("etak'", "marsalak'ko").
struct NormalizationPolicy {
  bool lowercase = false;
  bool keep_apostrophes = true;
  std::string extra_punctuation;  // additional characters (UTF-8) to strip
};

struct ParallelUnit {
  std::string id;
  std::string book;
  std::uint64_t chapter = 0;
  std::uint64_t verse = 0;
  std::string src;
  std::string tgt;

  friend bool operator==(const ParallelUnit&, const ParallelUnit&) = default;
};

struct Corpus {
  std::vector<ParallelUnit> units;
  std::string src_lang = "src";
  std::string tgt_lang = "tgt";
};

struct CorpusStats {
  std::uint64_t unit_count = 0;
  std::uint64_t sentence_count = 0;
  std::uint64_t word_count = 0;
  std::uint64_t unique_word_count = 0;
  std::map<std::uint64_t, std::uint64_t> count_histogram;  // frequency -> number of word types
  std::vector<std::pair<std::string, std::uint64_t>> top_k;
  std::vector<std::pair<std::string, std::uint64_t>> bottom_k;
};

/// NFC-normalizes, strips punctuation per policy and collapses whitespace.
/// Throws DataError on invalid UTF-8.
std::string normalize_text(std::string_view raw, const NormalizationPolicy& policy = {});

/// Removes '.', '!' and '?' at the edges of each whitespace token and drops
/// tokens that become empty. This is the form used for word counting and as
/// model input.
std::vector<std::string> words(std::string_view normalized);

/// words() joined back with single spaces.
std::string strip_terminal_marks(std::string_view normalized);

Corpus load_corpus(const std::filesystem::path& path, Format format,
                   const NormalizationPolicy& policy = {});
void save_corpus(const Corpus& corpus, const std::filesystem::path& path, Format format);

CorpusStats corpus_stats(const Corpus& corpus, Side side, std::size_t k);

inline const std::string& side_text(const ParallelUnit& u, Side side) {
  return side == Side::src ? u.src : u.tgt;
}

}  // namespace lrmt::corpus

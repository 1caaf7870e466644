#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "lrmt/corpus.hpp"

namespace lrmt::cli {

struct SyntheticOptions {
  std::size_t units = 1000;
  std::uint64_t seed = 1;
  std::size_t lexicon_size = 60;
  double variable_fraction = 0.25;  // share of multi-sentence units whose target merges two sentences
};

// A word-level bijection between invented source and target vocabularies.
struct SyntheticLexicon {
  std::map<std::string, std::string> forward;
  std::map<std::string, std::string> backward;
};

SyntheticLexicon synthetic_lexicon(std::size_t size, std::uint64_t seed);

/// Verse-shaped units of one to three sentences. The target is the source
/// mapped word by word; in variable units the first two target sentences are
/// joined, so the unit has unequal sentence counts.
corpus::Corpus synthetic_corpus(const SyntheticOptions& options);

}  // namespace lrmt::cli

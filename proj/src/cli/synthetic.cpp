#include "lrmt/cli/synthetic.hpp"

#include <set>
#include <vector>

#include "lrmt/error.hpp"
#include "lrmt/rng.hpp"

namespace lrmt::cli {

namespace {

std::string invent_word(Rng& rng, const std::vector<std::string>& onsets, const std::vector<std::string>& vowels,
                        const std::vector<std::string>& codas) {
  std::string w;
  auto syllables = 1 + rng.uniform_below(3);
  for (std::uint64_t i = 0; i < syllables; ++i) {
    w += onsets[rng.uniform_below(onsets.size())];
    w += vowels[rng.uniform_below(vowels.size())];
    if (rng.bernoulli(0.3)) w += codas[rng.uniform_below(codas.size())];
  }
  return w;
}

}  // namespace

SyntheticLexicon synthetic_lexicon(std::size_t size, std::uint64_t seed) {
  static const std::vector<std::string> src_onsets = {"k", "r", "s", "d", "n", "m", "h", "t", "b", "g", "ñ", "j"};
  static const std::vector<std::string> src_vowels = {"a", "e", "i", "o", "u", "ā"};
  static const std::vector<std::string> src_codas = {"k'", "n", "r", "ñ"};
  static const std::vector<std::string> tgt_onsets = {"th", "w", "l", "p", "f", "st", "br", "c", "v", "sh"};
  static const std::vector<std::string> tgt_vowels = {"a", "e", "i", "o", "ea", "ou"};
  static const std::vector<std::string> tgt_codas = {"nd", "s", "t", "ll", "ng"};
  if (size == 0) throw UsageError("synthetic lexicon size must be positive");

  Rng rng(derive_seed(seed, "synthetic.lexicon"));
  std::set<std::string> src_seen, tgt_seen;
  std::vector<std::string> src, tgt;
  std::size_t attempts = 0;
  while (src.size() < size) {
    if (++attempts > size * 1000) throw UsageError("cannot invent " + std::to_string(size) + " distinct words");
    auto w = invent_word(rng, src_onsets, src_vowels, src_codas);
    if (src_seen.insert(w).second) src.push_back(w);
  }
  while (tgt.size() < size) {
    auto w = invent_word(rng, tgt_onsets, tgt_vowels, tgt_codas);
    if (tgt_seen.insert(w).second) tgt.push_back(w);
  }
  SyntheticLexicon lex;
  for (std::size_t i = 0; i < size; ++i) {
    lex.forward[src[i]] = tgt[i];
    lex.backward[tgt[i]] = src[i];
  }
  return lex;
}

corpus::Corpus synthetic_corpus(const SyntheticOptions& options) {
  auto lex = synthetic_lexicon(options.lexicon_size, options.seed);
  std::vector<std::string> words;
  for (const auto& [w, _] : lex.forward) words.push_back(w);

  Rng rng(derive_seed(options.seed, "synthetic.units"));
  corpus::Corpus c;
  c.units.reserve(options.units);
  for (std::size_t u = 0; u < options.units; ++u) {
    auto sentences = 1 + rng.uniform_below(3);
    std::vector<std::string> src_sents, tgt_sents;
    for (std::uint64_t s = 0; s < sentences; ++s) {
      std::string src, tgt;
      auto len = 3 + rng.uniform_below(5);
      for (std::uint64_t i = 0; i < len; ++i) {
        const auto& w = words[rng.uniform_below(words.size())];
        src += (i ? " " : "") + w;
        tgt += (i ? " " : "") + lex.forward.at(w);
      }
      src_sents.push_back(src + ".");
      tgt_sents.push_back(tgt + ".");
    }
    if (sentences >= 2 && rng.bernoulli(options.variable_fraction)) {
      tgt_sents[0].pop_back();
      tgt_sents[0] += " " + tgt_sents[1];
      tgt_sents.erase(tgt_sents.begin() + 1);
    }
    auto join = [](const std::vector<std::string>& v) {
      std::string out;
      for (const auto& s : v) out += (out.empty() ? "" : " ") + s;
      return out;
    };
    corpus::ParallelUnit unit;
    unit.book = "SYN";
    unit.chapter = u / 30 + 1;
    unit.verse = u % 30 + 1;
    unit.id = "SYN." + std::to_string(unit.chapter) + "." + std::to_string(unit.verse);
    unit.src = join(src_sents);
    unit.tgt = join(tgt_sents);
    c.units.push_back(std::move(unit));
  }
  return c;
}

}  // namespace lrmt::cli

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lrmt/aligner.hpp"
#include "lrmt/corpus.hpp"
#include "lrmt/embeddings.hpp"
#include "lrmt/nmt/seq2seq.hpp"
#include "lrmt/rng.hpp"

namespace lrmt::augment {

using Tokens = std::vector<std::string>;

enum class Op { synonym_replace, random_delete, random_swap, synonym_insert, embed_replace, round_trip };
Op parse_op(std::string_view name);
std::string_view to_string(Op op);
/// Comma-separated list, e.g. "synonym_replace,random_swap".
std::vector<Op> parse_ops(std::string_view list);

struct AugmentPolicy {
  std::vector<Op> ops{Op::synonym_replace, Op::random_delete, Op::random_swap, Op::synonym_insert};
  double alpha = 0.1;  // fraction of tokens touched per EDA op
  std::size_t n_aug = 1;
  std::uint64_t seed = 1;
  double mask_prob = 0.15;      // embed_replace
  std::size_t k_candidates = 5; // embed_replace
  std::optional<std::size_t> max_pairs;  // uniform random subset of eligible pairs

  void validate() const;
};

// word -> synonyms. A word is never listed as its own synonym; entries that
// end up empty are dropped.
class SynonymLexicon {
 public:
  void add(const std::string& word, const std::vector<std::string>& synonyms);
  const std::vector<std::string>* find(const std::string& word) const;
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

 private:
  std::map<std::string, std::vector<std::string>> entries_;
};

/// Lines of `word<TAB>syn1,syn2,...`; blank lines and lines starting with '#' are skipped.
SynonymLexicon load_lexicon(const std::filesystem::path& path);

/// Number of positions an EDA op touches: max(1, round(alpha * length)).
std::size_t touches(double alpha, std::size_t length);

Tokens synonym_replace(const Tokens& tokens, const SynonymLexicon& lexicon, std::size_t n, Rng& rng);
Tokens random_delete(const Tokens& tokens, std::size_t n, Rng& rng);
Tokens random_swap(const Tokens& tokens, std::size_t n, Rng& rng);
Tokens synonym_insert(const Tokens& tokens, const SynonymLexicon& lexicon, std::size_t n, Rng& rng);
Tokens embed_replace(const Tokens& tokens, const analysis::EmbeddingModel& model, double mask_prob,
                     std::size_t k_candidates, Rng& rng);

class Translator {
 public:
  virtual ~Translator() = default;
  virtual std::string translate(const std::string& text) const = 0;
};

/// backward(forward(sentence)). Failures are rethrown as Error with the
/// direction that failed.
std::string round_trip_paraphrase(const std::string& sentence, const Translator& forward, const Translator& backward);

// Translator backed by a trained seq2seq model plus text <-> id conversions.
class Seq2SeqTranslator : public Translator {
 public:
  using Encoder = std::function<std::vector<nmt::TokenId>(const std::string&)>;
  using Decoder = std::function<std::string(const std::vector<nmt::TokenId>&)>;

  Seq2SeqTranslator(const nmt::Seq2SeqModel& model, Encoder encode, Decoder decode, std::size_t max_out_len);
  std::string translate(const std::string& text) const override;

 private:
  const nmt::Seq2SeqModel& model_;
  Encoder encode_;
  Decoder decode_;
  std::size_t max_out_len_;
};

struct Resources {
  const SynonymLexicon* lexicon = nullptr;
  const analysis::EmbeddingModel* embeddings = nullptr;
  const Translator* forward = nullptr;
  const Translator* backward = nullptr;
};

/// Applies the policy's ops, in order, to one token list.
Tokens augment_tokens(const Tokens& tokens, const AugmentPolicy& policy, const Resources& resources, Rng& rng);

/// Adds n_aug perturbed copies of every one-to-one, non-augmented train pair
/// after the original rows. Pair i draws from Rng(derive_seed(seed, i)).
/// Test and validation partitions are returned unchanged.
aligner::DatasetSplit augment_training_set(const aligner::DatasetSplit& split, corpus::Side side,
                                           const AugmentPolicy& policy, const Resources& resources);

}  // namespace lrmt::augment

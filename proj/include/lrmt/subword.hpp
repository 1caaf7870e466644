#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace lrmt::subword {

using TokenId = std::uint32_t;

inline constexpr TokenId kPad = 0;
inline constexpr TokenId kUnk = 1;
inline constexpr TokenId kSos = 2;
inline constexpr TokenId kEos = 3;
inline constexpr std::size_t kSpecialCount = 4;

/// U+2581 LOWER ONE EIGHTH BLOCK, prefixed to every word before training.
inline constexpr std::string_view kWordMarker = "\xE2\x96\x81";

struct Piece {
  std::string text;
  TokenId id = 0;
  double score = 0;  // 0 for specials and base characters, -(rank + 1) for merges
};

// Byte-pair-encoding vocabulary. Ids are dense; 0..3 are <pad>, <unk>, <s>,
// </s>; then the base alphabet (the word marker and every training
// character, bytewise sorted); then merged pieces in the order learned.
class SubwordVocab {
 public:
  SubwordVocab() = default;
  SubwordVocab(std::vector<Piece> pieces, std::size_t target_size, std::uint64_t seed);

  std::size_t size() const { return pieces_.size(); }
  std::size_t target_size() const { return target_size_; }
  std::uint64_t seed() const { return seed_; }
  const std::vector<Piece>& pieces() const { return pieces_; }
  const Piece& piece(TokenId id) const;

  /// Id of a piece string, or kUnk when absent.
  TokenId find(std::string_view text) const;
  bool contains(std::string_view text) const;

 private:
  std::vector<Piece> pieces_;
  std::unordered_map<std::string, TokenId> index_;
  std::size_t target_size_ = 0;
  std::uint64_t seed_ = 0;
};

/// Number of distinct base symbols (characters plus the word marker) in the
/// text; train_tokenizer needs vocab_size >= this + 4.
std::size_t alphabet_size(const std::vector<std::string>& sentences);

/// Trains BPE merges over whitespace-separated words. The most frequent
/// adjacent pair is merged each round; ties go to the lexicographically
/// smallest concatenation, then the smallest left symbol. Training stops at
/// vocab_size pieces or when no pair remains. Training is deterministic; the
/// seed is recorded in the vocabulary for provenance only.
SubwordVocab train_tokenizer(const std::vector<std::string>& sentences, std::size_t vocab_size,
                             std::uint64_t seed = 0);

/// Per word, repeatedly merges the adjacent pair whose concatenation is the
/// earliest-learned piece (leftmost on ties). Characters outside the alphabet
/// become kUnk and never merge.
std::vector<TokenId> encode(const SubwordVocab& vocab, std::string_view text);
std::vector<std::string> encode_pieces(const SubwordVocab& vocab, std::string_view text);

/// Concatenates pieces, turns word markers into spaces and drops
/// <pad>/<s>/</s>. Throws UsageError on an out-of-range id.
std::string decode(const SubwordVocab& vocab, std::span<const TokenId> ids);

void save_vocab(const SubwordVocab& vocab, const std::filesystem::path& path);
SubwordVocab load_vocab(const std::filesystem::path& path);

}  // namespace lrmt::subword

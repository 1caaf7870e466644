#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace lrmt::bleu {

using Tokens = std::vector<std::string>;
using NgramCounts = std::map<std::vector<std::string>, std::uint64_t>;

enum class Smoothing { none, add_one_for_n_ge_2 };
Smoothing parse_smoothing(std::string_view name);
std::string_view to_string(Smoothing s);

struct MatchCounts {
  std::uint64_t clipped = 0;
  std::uint64_t total = 0;
};

struct BleuReport {
  double score = 0;
  std::array<double, 4> precisions{};  // p1..p4 after smoothing; 0 for excluded orders
  std::array<MatchCounts, 4> counts{};  // raw clipped / total per order
  double brevity_penalty = 0;
  std::uint64_t hyp_length = 0;
  std::uint64_t ref_length = 0;
  std::size_t max_n = 4;
  Smoothing smoothing = Smoothing::none;
};

NgramCounts ngram_counts(const Tokens& tokens, std::size_t n);

/// Corpus-level clipped n-gram matches, one reference per hypothesis.
MatchCounts modified_precision(const std::vector<Tokens>& hypotheses, const std::vector<Tokens>& references,
                               std::size_t n);

double brevity_penalty(std::uint64_t hyp_len, std::uint64_t ref_len);

/// Geometric mean of modified precisions times the brevity penalty. Orders
/// with no hypothesis n-grams are dropped and the remaining weights
/// renormalized. add_one_for_n_ge_2 turns a zero numerator into 1/(total+1)
/// for n >= 2.
BleuReport corpus_bleu(const std::vector<Tokens>& hypotheses, const std::vector<Tokens>& references,
                       std::size_t max_n = 4, Smoothing smoothing = Smoothing::none);

/// Whitespace tokenization of normalized text.
Tokens tokenize(std::string_view text);

/// `BLEU4 = 46.71 (71.4/50.0/20.0/0.0, BP=1.000, ratio=1.167)`
std::string summary_line(const BleuReport& report);
std::string to_json(const BleuReport& report);

}  // namespace lrmt::bleu

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "lrmt/corpus.hpp"

namespace lrmt::aligner {

struct SentencePair {
  std::string src;
  std::string tgt;
  std::string origin_id;
  std::uint32_t index = 0;

  friend bool operator==(const SentencePair&, const SentencePair&) = default;
};

struct VariableUnit {
  std::string src;
  std::string tgt;
  std::string origin_id;
  std::uint32_t src_sentence_count = 0;
  std::uint32_t tgt_sentence_count = 0;

  friend bool operator==(const VariableUnit&, const VariableUnit&) = default;
};

enum class Group { one2one, variable };
std::string_view to_string(Group g);
Group parse_group(std::string_view name);

// One row of a train/test/validation partition. Rows produced by
// augmentation carry augmented = true and the list of applied operations.
struct SplitItem {
  std::string src;
  std::string tgt;
  std::string origin_id;
  std::uint32_t index = 0;
  Group group = Group::one2one;
  bool augmented = false;
  std::vector<std::string> aug_ops;

  friend bool operator==(const SplitItem&, const SplitItem&) = default;
};

struct SplitRatios {
  double train = 0.8;
  double test = 0.1;
  double validation = 0.1;
};

struct GroupCounts {
  std::uint64_t train = 0;
  std::uint64_t test = 0;
  std::uint64_t validation = 0;
};

struct SplitManifest {
  std::uint64_t seed = 0;
  SplitRatios ratios;
  GroupCounts one2one;
  GroupCounts variable;
  // Pre-explosion counts, filled when the split comes from align_corpus().
  std::uint64_t units = 0;
  std::uint64_t same_length_units = 0;
  std::uint64_t variable_units = 0;
  std::uint64_t one2one_pairs = 0;
};

struct DatasetSplit {
  std::vector<SplitItem> train;
  std::vector<SplitItem> test;
  std::vector<SplitItem> validation;
  SplitManifest manifest;
};

struct Alignment {
  std::vector<SentencePair> one2one;
  std::vector<VariableUnit> variable;
  std::uint64_t units = 0;
  std::uint64_t same_length_units = 0;
};

/// Rule-based segmentation on '.', '!' and '?' followed by whitespace or end
/// of text. Closing quotes and brackets after the mark stay with the sentence.
std::vector<std::string> segment_sentences(std::string_view text);

using Explosion = std::variant<std::vector<SentencePair>, VariableUnit>;

/// Pairs sentence i with sentence i when both sides have the same count,
/// otherwise returns the unit whole. Throws DataError if a side has no sentences.
Explosion classify_and_explode(const corpus::ParallelUnit& unit);
Explosion classify_and_explode(const SentencePair& pair);

Alignment align_corpus(const corpus::Corpus& corpus);

/// Shuffles each group with one Rng(seed) stream (one-to-one group first),
/// takes floor(n * ratio) items for test, then validation; the remainder goes
/// to train. Groups are merged one-to-one first.
DatasetSplit split_dataset(const std::vector<SentencePair>& one2one,
                           const std::vector<VariableUnit>& variable,
                           const SplitRatios& ratios, std::uint64_t seed);

DatasetSplit split_alignment(const Alignment& alignment, const SplitRatios& ratios,
                             std::uint64_t seed);

void validate_ratios(const SplitRatios& ratios);

// Persistence: <dir>/train.jsonl, test.jsonl, validation.jsonl, manifest.json.
void write_split(const DatasetSplit& split, const std::filesystem::path& dir);
DatasetSplit read_split(const std::filesystem::path& dir);

void write_items(const std::vector<SplitItem>& items, const std::filesystem::path& path);
std::vector<SplitItem> read_items(const std::filesystem::path& path);

}  // namespace lrmt::aligner

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "lrmt/aligner.hpp"
#include "lrmt/augment.hpp"
#include "lrmt/bleu.hpp"
#include "lrmt/corpus.hpp"
#include "lrmt/embeddings.hpp"
#include "lrmt/nmt/seq2seq.hpp"

namespace lrmt::cli {

enum class ValueType { string, boolean, integer, real, ratios };

struct KeySpec {
  std::string key;
  ValueType type;
  std::string default_value;
  std::string help;
};

/// Every recognised key with its default.
const std::vector<KeySpec>& config_keys();

// Flat key=value pipeline configuration. Unset keys hold their defaults.
// Values are validated on assignment, so typed getters never fail.
class PipelineConfig {
 public:
  PipelineConfig();

  /// Throws UsageError for an unknown key or a value of the wrong type.
  void set(const std::string& key, const std::string& value);
  /// Parses `key=value`.
  void set_assignment(std::string_view assignment);

  const std::string& get(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::uint64_t get_uint(const std::string& key) const;
  double get_double(const std::string& key) const;

  /// Sorted `key = value` lines with canonical number formatting.
  std::string canonical() const;
  /// SHA-256 of canonical() without the `workdir` key, which only says where
  /// artifacts live.
  std::string hash() const;

  /// derive_seed(seed, module)
  std::uint64_t module_seed(std::string_view module) const;

  corpus::NormalizationPolicy normalization() const;
  aligner::SplitRatios split_ratios() const;
  analysis::EmbeddingConfig embedding_config() const;
  augment::AugmentPolicy augment_policy() const;
  nmt::ModelConfig model_config(std::size_t src_vocab, std::size_t tgt_vocab, bool reverse) const;
  nmt::TrainConfig train_config(bool reverse) const;
  bleu::Smoothing smoothing() const;

 private:
  std::map<std::string, std::string> values_;
};

/// Reads `key = value` lines; '#' starts a comment line. Errors name the line.
PipelineConfig load_config(const std::filesystem::path& path);
void load_config_into(PipelineConfig& config, const std::filesystem::path& path);

aligner::SplitRatios parse_ratios(std::string_view text);

}  // namespace lrmt::cli

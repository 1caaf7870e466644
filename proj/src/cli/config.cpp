#include "lrmt/cli/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "lrmt/error.hpp"
#include "lrmt/hash.hpp"
#include "lrmt/rng.hpp"

namespace lrmt::cli {

namespace {

const std::string kDefaultOps = "synonym_replace,random_delete,random_swap,synonym_insert";

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

bool parse_bool(std::string_view v, bool& out) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return out = true, true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return out = false, true;
  return false;
}

bool parse_uint(std::string_view v, std::uint64_t& out) {
  if (v.empty()) return false;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  return ec == std::errc() && ptr == v.data() + v.size();
}

bool parse_real(std::string_view v, double& out) {
  if (v.empty()) return false;
  std::string s(v);
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size() && std::isfinite(out);
}

std::string format_real(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

const KeySpec& spec_for(const std::string& key) {
  for (const auto& k : config_keys())
    if (k.key == key) return k;
  throw UsageError("unknown config key '" + key + "'");
}

// Returns the canonical spelling of a value, or throws.
std::string canonical_value(const KeySpec& spec, const std::string& raw) {
  const std::string v = trim(raw);
  auto bad = [&](const char* what) {
    return UsageError("config key '" + spec.key + "' expects " + what + ", got '" + v + "'");
  };
  switch (spec.type) {
    case ValueType::string:
      return v;
    case ValueType::boolean: {
      bool b;
      if (!parse_bool(v, b)) throw bad("true or false");
      return b ? "true" : "false";
    }
    case ValueType::integer: {
      std::uint64_t u;
      if (!parse_uint(v, u)) throw bad("a non-negative integer");
      return std::to_string(u);
    }
    case ValueType::real: {
      double d;
      if (!parse_real(v, d)) throw bad("a number");
      return format_real(d);
    }
    case ValueType::ratios: {
      auto r = parse_ratios(v);
      return format_real(r.train) + "," + format_real(r.test) + "," + format_real(r.validation);
    }
  }
  return v;
}

}  // namespace

const std::vector<KeySpec>& config_keys() {
  using T = ValueType;
  static const std::vector<KeySpec> keys = {
      {"workdir", T::string, "work", "directory for all stage outputs"},
      {"seed", T::integer, "1", "top-level seed; module seeds are derived from it"},
      {"corpus.path", T::string, "", "input corpus for ingest"},
      {"corpus.format", T::string, "jsonl", "jsonl or tsv"},
      {"corpus.src_lang", T::string, "src", "source language tag"},
      {"corpus.tgt_lang", T::string, "tgt", "target language tag"},
      {"corpus.lowercase", T::boolean, "false", "lowercase during normalization"},
      {"corpus.keep_apostrophes", T::boolean, "true", "keep apostrophes after letters"},
      {"split.ratios", T::ratios, "0.8,0.1,0.1", "train,test,validation"},
      {"stats.top_k", T::integer, "10", "entries in frequency reports"},
      {"embed.side", T::string, "src", "corpus side for embeddings"},
      {"embed.dim", T::integer, "100", ""},
      {"embed.window", T::integer, "5", ""},
      {"embed.negatives", T::integer, "5", ""},
      {"embed.epochs", T::integer, "5", ""},
      {"embed.min_count", T::integer, "1", ""},
      {"embed.learning_rate", T::real, "0.025", ""},
      {"tokenizer.src_vocab_size", T::integer, "8000", ""},
      {"tokenizer.tgt_vocab_size", T::integer, "8000", ""},
      {"data.source", T::string, "split", "split or augmented: partitions read by tok-apply, evaluate and export-ft"},
      {"augment.side", T::string, "src", "side perturbed by augmentation"},
      {"augment.ops", T::string, kDefaultOps, "comma-separated operations"},
      {"augment.alpha", T::real, "0.1", ""},
      {"augment.n_aug", T::integer, "1", ""},
      {"augment.mask_prob", T::real, "0.15", ""},
      {"augment.k_candidates", T::integer, "5", ""},
      {"augment.max_pairs", T::integer, "0", "0 augments every eligible pair"},
      {"augment.lexicon", T::string, "", "synonym lexicon file"},
      {"model.hidden", T::integer, "256", ""},
      {"model.max_len", T::integer, "32", ""},
      {"model.dropout", T::real, "0.1", ""},
      {"train.epochs", T::integer, "10", ""},
      {"train.learning_rate", T::real, "0.01", ""},
      {"train.teacher_forcing_ratio", T::real, "0.5", ""},
      {"train.grad_clip_norm", T::real, "5", ""},
      {"translate.max_out_len", T::integer, "32", ""},
      {"evaluate.smoothing", T::string, "none", "none or add_one_for_n_ge_2"},
      {"export.prefix", T::string, "translate {src} to {tgt}: ", "input_text prefix"},
  };
  return keys;
}

aligner::SplitRatios parse_ratios(std::string_view text) {
  std::vector<double> parts;
  std::string s(text);
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) {
    double d;
    if (!parse_real(trim(item), d)) throw UsageError("bad ratio '" + item + "' in '" + s + "'");
    parts.push_back(d);
  }
  if (parts.size() != 3) throw UsageError("ratios need three values train,test,validation; got '" + s + "'");
  aligner::SplitRatios r{parts[0], parts[1], parts[2]};
  aligner::validate_ratios(r);
  return r;
}

PipelineConfig::PipelineConfig() {
  for (const auto& k : config_keys()) values_[k.key] = canonical_value(k, k.default_value);
}

void PipelineConfig::set(const std::string& key, const std::string& value) {
  values_[key] = canonical_value(spec_for(key), value);
}

void PipelineConfig::set_assignment(std::string_view assignment) {
  auto eq = assignment.find('=');
  if (eq == std::string_view::npos) throw UsageError("expected key=value, got '" + std::string(assignment) + "'");
  set(trim(assignment.substr(0, eq)), std::string(assignment.substr(eq + 1)));
}

const std::string& PipelineConfig::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw UsageError("unknown config key '" + key + "'");
  return it->second;
}

bool PipelineConfig::get_bool(const std::string& key) const { return get(key) == "true"; }

std::uint64_t PipelineConfig::get_uint(const std::string& key) const {
  std::uint64_t u = 0;
  parse_uint(get(key), u);
  return u;
}

double PipelineConfig::get_double(const std::string& key) const {
  double d = 0;
  parse_real(get(key), d);
  return d;
}

std::string PipelineConfig::canonical() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
  return out;
}

std::string PipelineConfig::hash() const {
  std::string text;
  for (const auto& [k, v] : values_)
    if (k != "workdir") text += k + " = " + v + "\n";
  return sha256_hex(text);
}

std::uint64_t PipelineConfig::module_seed(std::string_view module) const {
  return derive_seed(get_uint("seed"), module);
}

corpus::NormalizationPolicy PipelineConfig::normalization() const {
  corpus::NormalizationPolicy p;
  p.lowercase = get_bool("corpus.lowercase");
  p.keep_apostrophes = get_bool("corpus.keep_apostrophes");
  return p;
}

aligner::SplitRatios PipelineConfig::split_ratios() const { return parse_ratios(get("split.ratios")); }

analysis::EmbeddingConfig PipelineConfig::embedding_config() const {
  analysis::EmbeddingConfig c;
  c.dim = get_uint("embed.dim");
  c.window = get_uint("embed.window");
  c.negatives = get_uint("embed.negatives");
  c.epochs = get_uint("embed.epochs");
  c.min_count = get_uint("embed.min_count");
  c.learning_rate = get_double("embed.learning_rate");
  c.seed = module_seed("embed");
  return c;
}

augment::AugmentPolicy PipelineConfig::augment_policy() const {
  augment::AugmentPolicy p;
  p.ops = augment::parse_ops(get("augment.ops"));
  p.alpha = get_double("augment.alpha");
  p.n_aug = get_uint("augment.n_aug");
  p.mask_prob = get_double("augment.mask_prob");
  p.k_candidates = get_uint("augment.k_candidates");
  if (auto m = get_uint("augment.max_pairs")) p.max_pairs = m;
  p.seed = module_seed("augment");
  p.validate();
  return p;
}

nmt::ModelConfig PipelineConfig::model_config(std::size_t src_vocab, std::size_t tgt_vocab, bool reverse) const {
  nmt::ModelConfig c;
  c.hidden = get_uint("model.hidden");
  c.max_len = get_uint("model.max_len");
  c.dropout = get_double("model.dropout");
  c.src_vocab = src_vocab;
  c.tgt_vocab = tgt_vocab;
  c.seed = module_seed(reverse ? "model.reverse" : "model");
  c.validate();
  return c;
}

nmt::TrainConfig PipelineConfig::train_config(bool reverse) const {
  nmt::TrainConfig c;
  c.epochs = get_uint("train.epochs");
  c.learning_rate = get_double("train.learning_rate");
  c.teacher_forcing_ratio = get_double("train.teacher_forcing_ratio");
  c.grad_clip_norm = get_double("train.grad_clip_norm");
  c.seed = module_seed(reverse ? "train.reverse" : "train");
  c.validate();
  return c;
}

bleu::Smoothing PipelineConfig::smoothing() const { return bleu::parse_smoothing(get("evaluate.smoothing")); }

void load_config_into(PipelineConfig& config, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read config file " + path.string());
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    auto t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    try {
      config.set_assignment(t);
    } catch (const UsageError& e) {
      throw UsageError(path.string() + " line " + std::to_string(n) + ": " + e.what());
    }
  }
}

PipelineConfig load_config(const std::filesystem::path& path) {
  PipelineConfig c;
  load_config_into(c, path);
  return c;
}

}  // namespace lrmt::cli

#include "lrmt/augment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "lrmt/error.hpp"

namespace lrmt::augment {

namespace {

constexpr std::pair<Op, std::string_view> kOpNames[] = {
    {Op::synonym_replace, "synonym_replace"}, {Op::random_delete, "random_delete"},
    {Op::random_swap, "random_swap"},         {Op::synonym_insert, "synonym_insert"},
    {Op::embed_replace, "embed_replace"},     {Op::round_trip, "round_trip"},
};

std::string join(const Tokens& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out.push_back(' ');
    out += t;
  }
  return out;
}

Tokens split(std::string_view text) {
  Tokens out;
  std::istringstream in{std::string(text)};
  std::string t;
  while (in >> t) out.push_back(t);
  return out;
}

}  // namespace

Op parse_op(std::string_view name) {
  for (const auto& [op, n] : kOpNames)
    if (n == name) return op;
  throw UsageError("unknown augmentation op '" + std::string(name) + "'");
}

std::string_view to_string(Op op) {
  for (const auto& [o, n] : kOpNames)
    if (o == op) return n;
  return "?";
}

std::vector<Op> parse_ops(std::string_view list) {
  std::vector<Op> ops;
  std::size_t start = 0;
  while (start <= list.size()) {
    auto comma = list.find(',', start);
    auto item = list.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
    if (!item.empty()) ops.push_back(parse_op(item));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return ops;
}

void AugmentPolicy::validate() const {
  if (!(alpha > 0 && alpha <= 0.5)) throw UsageError("augmentation alpha must be in (0, 0.5]");
  if (n_aug < 1) throw UsageError("n_aug must be >= 1");
  if (ops.empty()) throw UsageError("augmentation policy has no operations");
  if (!(mask_prob >= 0 && mask_prob <= 1)) throw UsageError("mask_prob must be in [0, 1]");
}

void SynonymLexicon::add(const std::string& word, const std::vector<std::string>& synonyms) {
  auto& list = entries_[word];
  for (const auto& s : synonyms)
    if (!s.empty() && s != word && std::find(list.begin(), list.end(), s) == list.end()) list.push_back(s);
  if (list.empty()) entries_.erase(word);
}

const std::vector<std::string>* SynonymLexicon::find(const std::string& word) const {
  auto it = entries_.find(word);
  return it == entries_.end() ? nullptr : &it->second;
}

SynonymLexicon load_lexicon(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open lexicon " + path.string());
  SynonymLexicon lex;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0)
      throw DataError(path.string() + ": line " + std::to_string(lineno) + ": expected word<TAB>synonyms");
    std::vector<std::string> syns;
    std::stringstream ss(line.substr(tab + 1));
    std::string s;
    while (std::getline(ss, s, ',')) {
      auto b = s.find_first_not_of(' ');
      auto e = s.find_last_not_of(' ');
      if (b != std::string::npos) syns.push_back(s.substr(b, e - b + 1));
    }
    lex.add(line.substr(0, tab), syns);
  }
  return lex;
}

std::size_t touches(double alpha, std::size_t length) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(alpha * static_cast<double>(length))));
}

Tokens synonym_replace(const Tokens& tokens, const SynonymLexicon& lexicon, std::size_t n, Rng& rng) {
  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < tokens.size(); ++i)
    if (lexicon.find(tokens[i])) eligible.push_back(i);
  rng.shuffle(eligible);
  Tokens out = tokens;
  for (std::size_t k = 0; k < std::min(n, eligible.size()); ++k) {
    const auto& syns = *lexicon.find(tokens[eligible[k]]);
    out[eligible[k]] = syns[rng.uniform_below(syns.size())];
  }
  return out;
}

Tokens random_delete(const Tokens& tokens, std::size_t n, Rng& rng) {
  if (tokens.size() <= 1 || n == 0) return tokens;
  const std::size_t remove = std::min(n, tokens.size() - 1);
  std::vector<std::size_t> idx(tokens.size());
  std::iota(idx.begin(), idx.end(), 0);
  rng.shuffle(idx);
  std::vector<bool> drop(tokens.size(), false);
  for (std::size_t k = 0; k < remove; ++k) drop[idx[k]] = true;
  Tokens out;
  for (std::size_t i = 0; i < tokens.size(); ++i)
    if (!drop[i]) out.push_back(tokens[i]);
  return out;
}

Tokens random_swap(const Tokens& tokens, std::size_t n, Rng& rng) {
  Tokens out = tokens;
  if (out.size() < 2) return out;
  for (std::size_t k = 0; k < n; ++k) {
    auto i = rng.uniform_below(out.size());
    auto j = rng.uniform_below(out.size());
    std::swap(out[i], out[j]);
  }
  return out;
}

Tokens synonym_insert(const Tokens& tokens, const SynonymLexicon& lexicon, std::size_t n, Rng& rng) {
  std::vector<const std::vector<std::string>*> sources;
  for (const auto& t : tokens)
    if (auto* s = lexicon.find(t)) sources.push_back(s);
  Tokens out = tokens;
  if (sources.empty()) return out;
  for (std::size_t k = 0; k < n; ++k) {
    const auto& syns = *sources[rng.uniform_below(sources.size())];
    const auto& word = syns[rng.uniform_below(syns.size())];
    auto pos = rng.uniform_below(out.size() + 1);
    out.insert(out.begin() + static_cast<std::ptrdiff_t>(pos), word);
  }
  return out;
}

Tokens embed_replace(const Tokens& tokens, const analysis::EmbeddingModel& model, double mask_prob,
                     std::size_t k_candidates, Rng& rng) {
  Tokens out = tokens;
  if (k_candidates == 0) return out;
  for (auto& t : out) {
    if (!model.contains(t)) continue;
    if (!rng.bernoulli(mask_prob)) continue;
    auto candidates = analysis::most_similar(model, t, k_candidates);
    if (candidates.empty()) continue;
    t = candidates[rng.uniform_below(candidates.size())].first;
  }
  return out;
}

std::string round_trip_paraphrase(const std::string& sentence, const Translator& forward, const Translator& backward) {
  std::string pivot;
  try {
    pivot = forward.translate(sentence);
  } catch (const std::exception& e) {
    throw Error("round-trip forward translation failed: " + std::string(e.what()));
  }
  try {
    return backward.translate(pivot);
  } catch (const std::exception& e) {
    throw Error("round-trip backward translation failed: " + std::string(e.what()));
  }
}

Seq2SeqTranslator::Seq2SeqTranslator(const nmt::Seq2SeqModel& model, Encoder encode, Decoder decode,
                                     std::size_t max_out_len)
    : model_(model), encode_(std::move(encode)), decode_(std::move(decode)), max_out_len_(max_out_len) {}

std::string Seq2SeqTranslator::translate(const std::string& text) const {
  auto ids = encode_(text);
  if (ids.empty()) return {};
  // Leave room for the appended </s>.
  if (ids.size() + 1 > model_.config.max_len) ids.resize(model_.config.max_len - 1);
  return decode_(nmt::translate(model_, ids, max_out_len_).ids);
}

Tokens augment_tokens(const Tokens& tokens, const AugmentPolicy& policy, const Resources& res, Rng& rng) {
  Tokens cur = tokens;
  static const SynonymLexicon kEmpty;
  const SynonymLexicon& lex = res.lexicon ? *res.lexicon : kEmpty;
  for (Op op : policy.ops) {
    const std::size_t n = touches(policy.alpha, cur.size());
    switch (op) {
      case Op::synonym_replace: cur = synonym_replace(cur, lex, n, rng); break;
      case Op::random_delete: cur = random_delete(cur, n, rng); break;
      case Op::random_swap: cur = random_swap(cur, n, rng); break;
      case Op::synonym_insert: cur = synonym_insert(cur, lex, n, rng); break;
      case Op::embed_replace:
        cur = embed_replace(cur, *res.embeddings, policy.mask_prob, policy.k_candidates, rng);
        break;
      case Op::round_trip: cur = split(round_trip_paraphrase(join(cur), *res.forward, *res.backward)); break;
    }
  }
  return cur;
}

aligner::DatasetSplit augment_training_set(const aligner::DatasetSplit& split_in, corpus::Side side,
                                           const AugmentPolicy& policy, const Resources& res) {
  policy.validate();
  for (Op op : policy.ops) {
    if (op == Op::embed_replace && !res.embeddings)
      throw UsageError("augmentation op embed_replace requires an embedding model");
    if (op == Op::round_trip && (!res.forward || !res.backward))
      throw UsageError("augmentation op round_trip requires forward and backward translators");
  }
  if (split_in.train.empty()) throw UsageError("cannot augment an empty train partition");

  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < split_in.train.size(); ++i) {
    const auto& item = split_in.train[i];
    if (item.group == aligner::Group::one2one && !item.augmented) eligible.push_back(i);
  }
  if (policy.max_pairs && *policy.max_pairs < eligible.size()) {
    Rng pick(derive_seed(policy.seed, "max_pairs"));
    pick.shuffle(eligible);
    eligible.resize(*policy.max_pairs);
    std::sort(eligible.begin(), eligible.end());
  }

  std::vector<std::string> op_names;
  for (Op op : policy.ops) op_names.emplace_back(to_string(op));

  aligner::DatasetSplit out = split_in;
  out.train.reserve(split_in.train.size() + eligible.size() * policy.n_aug);
  for (std::size_t i : eligible) {
    const auto& original = split_in.train[i];
    Rng rng(derive_seed(policy.seed, static_cast<std::uint64_t>(i)));
    const auto tokens = split(side == corpus::Side::src ? original.src : original.tgt);
    for (std::size_t v = 0; v < policy.n_aug; ++v) {
      auto item = original;
      auto text = join(augment_tokens(tokens, policy, res, rng));
      (side == corpus::Side::src ? item.src : item.tgt) = std::move(text);
      item.augmented = true;
      item.aug_ops = op_names;
      out.train.push_back(std::move(item));
    }
  }
  return out;
}

}  // namespace lrmt::augment

#include "lrmt/subword.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "lrmt/error.hpp"
#include "lrmt/unicode.hpp"

namespace lrmt::subword {

namespace {

constexpr const char* kSpecialText[kSpecialCount] = {"<pad>", "<unk>", "<s>", "</s>"};

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && text[i] == ' ') ++i;
    std::size_t j = i;
    while (j < text.size() && text[j] != ' ') ++j;
    if (j > i) out.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

std::vector<std::string> word_symbols(std::string_view word) {
  std::vector<std::string> syms{std::string(kWordMarker)};
  for (auto& cp : unicode::code_points(word)) syms.push_back(std::move(cp));
  return syms;
}

}  // namespace

SubwordVocab::SubwordVocab(std::vector<Piece> pieces, std::size_t target_size, std::uint64_t seed)
    : pieces_(std::move(pieces)), target_size_(target_size), seed_(seed) {
  if (pieces_.size() < kSpecialCount) throw DataError("vocabulary lacks the special pieces");
  for (std::size_t i = 0; i < pieces_.size(); ++i) {
    const auto& p = pieces_[i];
    if (p.id != i) throw DataError("vocabulary ids are not dense at id " + std::to_string(i));
    if (p.text.empty()) throw DataError("empty piece at id " + std::to_string(i));
    if (i < kSpecialCount && p.text != kSpecialText[i])
      throw DataError("id " + std::to_string(i) + " must be the special piece " + kSpecialText[i]);
    if (!index_.emplace(p.text, p.id).second) throw DataError("duplicate piece '" + p.text + "'");
  }
}

const Piece& SubwordVocab::piece(TokenId id) const {
  if (id >= pieces_.size()) throw UsageError("token id " + std::to_string(id) + " is out of range");
  return pieces_[id];
}

TokenId SubwordVocab::find(std::string_view text) const {
  auto it = index_.find(std::string(text));
  return it == index_.end() ? kUnk : it->second;
}

bool SubwordVocab::contains(std::string_view text) const { return index_.count(std::string(text)) != 0; }

std::size_t alphabet_size(const std::vector<std::string>& sentences) {
  std::set<std::string> chars{std::string(kWordMarker)};
  for (const auto& s : sentences)
    for (const auto& w : split_words(s))
      for (auto& cp : unicode::code_points(w)) chars.insert(std::move(cp));
  return chars.size();
}

namespace {

using Pair = std::pair<int, int>;

class BpeTrainer {
 public:
  explicit BpeTrainer(const std::vector<std::string>& sentences) {
    std::map<std::string, std::int64_t> freq;
    for (const auto& s : sentences)
      for (auto& w : split_words(s)) ++freq[std::move(w)];
    std::set<std::string> alphabet{std::string(kWordMarker)};
    for (const auto& [w, f] : freq)
      for (auto& cp : unicode::code_points(w)) alphabet.insert(std::move(cp));
    for (const auto& a : alphabet) symbol_id(a);
    alphabet_ = alphabet.size();
    for (const auto& [w, f] : freq) {
      std::vector<int> syms;
      for (const auto& s : word_symbols(w)) syms.push_back(symbol_id(s));
      words_.push_back(std::move(syms));
      freqs_.push_back(f);
    }
    for (std::size_t w = 0; w < words_.size(); ++w) add_pairs(w, +1);
  }

  std::size_t alphabet() const { return alphabet_; }
  const std::vector<std::string>& symbols() const { return symbols_; }

  // Returns the merged symbol string, or empty when nothing is left to merge.
  // `is_new` reports whether the merge introduced a previously unseen string.
  std::string merge_best(bool& is_new) {
    if (queue_.empty()) return {};
    auto [neg_count, concat, left, pair] = *queue_.begin();
    (void)neg_count;
    (void)left;
    is_new = !symbol_index_.count(concat);
    const int merged = symbol_id(concat);
    const auto affected = where_[pair];
    for (auto w : affected) {
      add_pairs(w, -1);
      auto& syms = words_[w];
      std::vector<int> out;
      out.reserve(syms.size());
      for (std::size_t i = 0; i < syms.size(); ++i) {
        if (i + 1 < syms.size() && syms[i] == pair.first && syms[i + 1] == pair.second) {
          out.push_back(merged);
          ++i;
        } else {
          out.push_back(syms[i]);
        }
      }
      syms = std::move(out);
      add_pairs(w, +1);
    }
    return concat;
  }

 private:
  using Key = std::tuple<std::int64_t, std::string, std::string, Pair>;

  int symbol_id(const std::string& s) {
    auto [it, inserted] = symbol_index_.emplace(s, static_cast<int>(symbols_.size()));
    if (inserted) symbols_.push_back(s);
    return it->second;
  }

  Key key(const Pair& p, std::int64_t count) const {
    return {-count, symbols_[p.first] + symbols_[p.second], symbols_[p.first], p};
  }

  void add_pairs(std::size_t w, int sign) {
    const auto& syms = words_[w];
    for (std::size_t i = 0; i + 1 < syms.size(); ++i) {
      Pair p{syms[i], syms[i + 1]};
      auto& count = counts_[p];
      if (count > 0) queue_.erase(key(p, count));
      count += sign * freqs_[w];
      if (count > 0) {
        queue_.insert(key(p, count));
        where_[p].insert(w);
      } else {
        counts_.erase(p);
        where_.erase(p);
      }
    }
  }

  std::vector<std::string> symbols_;
  std::map<std::string, int> symbol_index_;
  std::size_t alphabet_ = 0;
  std::vector<std::vector<int>> words_;
  std::vector<std::int64_t> freqs_;
  std::map<Pair, std::int64_t> counts_;
  // May hold stale word indices; merge_best re-scans each listed word.
  std::map<Pair, std::set<std::size_t>> where_;
  std::set<Key> queue_;
};

}  // namespace

SubwordVocab train_tokenizer(const std::vector<std::string>& sentences, std::size_t vocab_size, std::uint64_t seed) {
  bool any = std::any_of(sentences.begin(), sentences.end(),
                         [](const std::string& s) { return !split_words(s).empty(); });
  if (!any) throw UsageError("tokenizer training needs at least one non-empty sentence");

  BpeTrainer trainer(sentences);
  const std::size_t minimum = trainer.alphabet() + kSpecialCount;
  if (vocab_size < minimum)
    throw UsageError("vocab_size " + std::to_string(vocab_size) + " is too small for the alphabet; required minimum is " +
                     std::to_string(minimum));

  std::vector<Piece> pieces;
  for (std::size_t i = 0; i < kSpecialCount; ++i) pieces.push_back({kSpecialText[i], static_cast<TokenId>(i), 0});
  for (std::size_t i = 0; i < trainer.alphabet(); ++i)
    pieces.push_back({trainer.symbols()[i], static_cast<TokenId>(pieces.size()), 0});

  std::size_t rank = 0;
  while (pieces.size() < vocab_size) {
    bool is_new = false;
    auto merged = trainer.merge_best(is_new);
    if (merged.empty()) break;
    if (is_new) {
      ++rank;
      pieces.push_back({merged, static_cast<TokenId>(pieces.size()), -static_cast<double>(rank)});
    }
  }
  return SubwordVocab(std::move(pieces), vocab_size, seed);
}

std::vector<TokenId> encode(const SubwordVocab& vocab, std::string_view text) {
  std::vector<TokenId> out;
  for (const auto& word : split_words(text)) {
    auto syms = word_symbols(word);
    std::vector<TokenId> ids;
    for (const auto& s : syms) ids.push_back(vocab.find(s));
    for (;;) {
      std::size_t best = syms.size();
      double best_score = 0;
      TokenId best_id = kUnk;
      for (std::size_t i = 0; i + 1 < syms.size(); ++i) {
        if (ids[i] == kUnk || ids[i + 1] == kUnk) continue;
        TokenId id = vocab.find(syms[i] + syms[i + 1]);
        if (id == kUnk) continue;
        double score = vocab.piece(id).score;
        if (best == syms.size() || score > best_score) {
          best = i;
          best_score = score;
          best_id = id;
        }
      }
      if (best == syms.size()) break;
      syms[best] += syms[best + 1];
      ids[best] = best_id;
      syms.erase(syms.begin() + static_cast<std::ptrdiff_t>(best) + 1);
      ids.erase(ids.begin() + static_cast<std::ptrdiff_t>(best) + 1);
    }
    out.insert(out.end(), ids.begin(), ids.end());
  }
  return out;
}

std::vector<std::string> encode_pieces(const SubwordVocab& vocab, std::string_view text) {
  std::vector<std::string> out;
  for (auto id : encode(vocab, text)) out.push_back(vocab.piece(id).text);
  return out;
}

std::string decode(const SubwordVocab& vocab, std::span<const TokenId> ids) {
  std::string out;
  for (auto id : ids) {
    const auto& p = vocab.piece(id);
    if (id == kPad || id == kSos || id == kEos) continue;
    out += p.text;
  }
  std::string text;
  std::size_t i = 0;
  while (i < out.size()) {
    if (out.compare(i, kWordMarker.size(), kWordMarker) == 0) {
      text.push_back(' ');
      i += kWordMarker.size();
    } else {
      text.push_back(out[i++]);
    }
  }
  auto b = text.find_first_not_of(' ');
  if (b == std::string::npos) return {};
  return text.substr(b);
}

void save_vocab(const SubwordVocab& vocab, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << "# algorithm: bpe\n";
  out << "# vocab_size: " << vocab.target_size() << '\n';
  out << "# marker: " << kWordMarker << '\n';
  out << "# specials: <pad>=0 <unk>=1 <s>=2 </s>=3\n";
  out << "# seed: " << vocab.seed() << '\n';
  for (const auto& p : vocab.pieces()) out << p.text << '\t' << p.id << '\t' << static_cast<long long>(p.score) << '\n';
}

SubwordVocab load_vocab(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open vocabulary file " + path.string());
  std::string line;
  std::size_t lineno = 0;
  bool in_header = true;
  std::map<std::string, std::string> header;
  std::vector<Piece> pieces;
  while (std::getline(in, line)) {
    ++lineno;
    if (in_header && line.rfind("# ", 0) == 0) {
      auto colon = line.find(": ");
      if (colon != std::string::npos) header[line.substr(2, colon - 2)] = line.substr(colon + 2);
      continue;
    }
    in_header = false;
    if (line.empty()) continue;
    auto t1 = line.find('\t');
    auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string::npos) throw DataError(path.string() + ": line " + std::to_string(lineno) + ": expected piece\\tid\\tscore");
    Piece p;
    p.text = line.substr(0, t1);
    long long id = 0, score = 0;
    auto id_str = line.substr(t1 + 1, t2 - t1 - 1);
    auto score_str = line.substr(t2 + 1);
    if (std::from_chars(id_str.data(), id_str.data() + id_str.size(), id).ec != std::errc{} || id < 0 ||
        std::from_chars(score_str.data(), score_str.data() + score_str.size(), score).ec != std::errc{})
      throw DataError(path.string() + ": line " + std::to_string(lineno) + ": bad id or score");
    p.id = static_cast<TokenId>(id);
    p.score = static_cast<double>(score);
    pieces.push_back(std::move(p));
  }
  if (header["algorithm"] != "bpe") throw DataError(path.string() + ": unsupported algorithm '" + header["algorithm"] + "'");
  if (header["marker"] != kWordMarker) throw DataError(path.string() + ": unexpected word marker");
  std::size_t target = 0;
  std::uint64_t seed = 0;
  try {
    target = std::stoull(header.at("vocab_size"));
    seed = header.count("seed") ? std::stoull(header["seed"]) : 0;
  } catch (const std::exception&) {
    throw DataError(path.string() + ": bad vocabulary header");
  }
  return SubwordVocab(std::move(pieces), target, seed);
}

}  // namespace lrmt::subword

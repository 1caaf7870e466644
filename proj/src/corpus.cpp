#include "lrmt/corpus.hpp"

#include <unicode/locid.h>
#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "lrmt/aligner.hpp"
#include "lrmt/error.hpp"
#include "lrmt/frequency.hpp"
#include "lrmt/unicode.hpp"

namespace lrmt::corpus {

using nlohmann::ordered_json;

Format parse_format(std::string_view name) {
  if (name == "jsonl") return Format::jsonl;
  if (name == "tsv") return Format::tsv;
  throw UsageError("unknown corpus format '" + std::string(name) + "' (expected jsonl|tsv)");
}

Side parse_side(std::string_view name) {
  if (name == "src") return Side::src;
  if (name == "tgt") return Side::tgt;
  throw UsageError("unknown side '" + std::string(name) + "' (expected src|tgt)");
}

std::string_view to_string(Side side) { return side == Side::src ? "src" : "tgt"; }

namespace {

bool is_terminal(UChar32 c) { return c == '.' || c == '!' || c == '?'; }
bool is_apostrophe(UChar32 c) { return c == 0x27 || c == 0x2019; }

bool is_letter_like(UChar32 c) {
  auto mask = U_GET_GC_MASK(c);
  return (mask & (U_GC_L_MASK | U_GC_M_MASK)) != 0;
}

}  // namespace

std::string normalize_text(std::string_view raw, const NormalizationPolicy& policy) {
  if (!unicode::is_valid_utf8(raw)) throw DataError("invalid UTF-8 in text");

  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* nfc = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) throw Error("ICU NFC normalizer unavailable");

  icu::UnicodeString text = icu::UnicodeString::fromUTF8(icu::StringPiece(raw.data(), static_cast<int32_t>(raw.size())));
  if (policy.lowercase) text.toLower(icu::Locale::getRoot());
  icu::UnicodeString composed = nfc->normalize(text, status);
  if (U_FAILURE(status)) throw DataError("NFC normalization failed");

  std::set<UChar32> extra;
  for (const auto& cp : unicode::code_points(policy.extra_punctuation)) {
    icu::UnicodeString u = icu::UnicodeString::fromUTF8(cp);
    extra.insert(u.char32At(0));
  }

  icu::UnicodeString out;
  bool pending_space = false;
  UChar32 prev = 0;
  for (int32_t i = 0; i < composed.length(); i = composed.moveIndex32(i, 1)) {
    UChar32 c = composed.char32At(i);
    bool space = u_isUWhiteSpace(c) || u_isspace(c);
    if (!space && !is_terminal(c) && (u_ispunct(c) || extra.count(c))) {
      space = !(policy.keep_apostrophes && is_apostrophe(c) && is_letter_like(prev));
    }
    prev = c;
    if (space) {
      pending_space = true;
      continue;
    }
    if (pending_space && !out.isEmpty()) out.append(UChar32(' '));
    pending_space = false;
    out.append(c);
  }
  std::string result;
  out.toUTF8String(result);
  return result;
}

std::vector<std::string> words(std::string_view normalized) {
  std::vector<std::string> out;
  std::istringstream in{std::string(normalized)};
  std::string tok;
  while (in >> tok) {
    auto b = tok.find_first_not_of(".!?");
    if (b == std::string::npos) continue;
    auto e = tok.find_last_not_of(".!?");
    out.push_back(tok.substr(b, e - b + 1));
  }
  return out;
}

std::string strip_terminal_marks(std::string_view normalized) {
  std::string out;
  for (const auto& w : words(normalized)) {
    if (!out.empty()) out.push_back(' ');
    out += w;
  }
  return out;
}

namespace {

std::string read_string_field(const ordered_json& rec, const char* key, bool required, std::size_t line) {
  auto it = rec.find(key);
  if (it == rec.end()) {
    if (required) throw DataError("line " + std::to_string(line) + ": missing field '" + key + "'");
    return {};
  }
  if (!it->is_string()) throw DataError("line " + std::to_string(line) + ": field '" + key + "' must be a string");
  return it->get<std::string>();
}

std::uint64_t read_uint_field(const ordered_json& rec, const char* key, std::size_t line) {
  auto it = rec.find(key);
  if (it == rec.end()) return 0;
  if (!it->is_number_unsigned())
    throw DataError("line " + std::to_string(line) + ": field '" + key + "' must be a non-negative integer");
  return it->get<std::uint64_t>();
}

std::uint64_t parse_uint(const std::string& s, const char* key, std::size_t line) {
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
    throw DataError("line " + std::to_string(line) + ": field '" + key + "' must be a non-negative integer");
  try {
    return std::stoull(s);
  } catch (const std::exception&) {
    throw DataError("line " + std::to_string(line) + ": field '" + key + "' out of range");
  }
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    auto pos = line.find('\t', start);
    out.push_back(line.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

constexpr const char* kTsvHeader = "id\tbook\tchapter\tverse\tsrc\ttgt";

}  // namespace

Corpus load_corpus(const std::filesystem::path& path, Format format, const NormalizationPolicy& policy) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open corpus file " + path.string());

  Corpus corpus;
  std::set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;

  auto add = [&](ParallelUnit u, std::size_t at) {
    if (u.id.empty()) throw DataError("line " + std::to_string(at) + ": empty id");
    try {
      u.src = normalize_text(u.src, policy);
      u.tgt = normalize_text(u.tgt, policy);
    } catch (const DataError& e) {
      throw DataError("line " + std::to_string(at) + ": " + e.what());
    }
    if (u.src.empty()) throw DataError("line " + std::to_string(at) + ": empty src");
    if (u.tgt.empty()) throw DataError("line " + std::to_string(at) + ": empty tgt");
    if (!seen.insert(u.id).second) throw DataError("duplicate id '" + u.id + "' at line " + std::to_string(at));
    corpus.units.push_back(std::move(u));
  };

  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (format == Format::jsonl) {
      ordered_json rec;
      try {
        rec = ordered_json::parse(line);
      } catch (const nlohmann::json::exception& e) {
        throw DataError("line " + std::to_string(lineno) + ": malformed JSON record");
      }
      if (!rec.is_object()) throw DataError("line " + std::to_string(lineno) + ": record is not an object");
      ParallelUnit u;
      u.id = read_string_field(rec, "id", true, lineno);
      u.book = read_string_field(rec, "book", false, lineno);
      u.chapter = read_uint_field(rec, "chapter", lineno);
      u.verse = read_uint_field(rec, "verse", lineno);
      u.src = read_string_field(rec, "src", true, lineno);
      u.tgt = read_string_field(rec, "tgt", true, lineno);
      add(std::move(u), lineno);
    } else {
      if (!header_seen) {
        if (line != kTsvHeader) throw DataError("line " + std::to_string(lineno) + ": expected TSV header '" + std::string(kTsvHeader) + "'");
        header_seen = true;
        continue;
      }
      auto f = split_tabs(line);
      if (f.size() != 6)
        throw DataError("line " + std::to_string(lineno) + ": expected 6 tab-separated fields, got " + std::to_string(f.size()));
      ParallelUnit u;
      u.id = f[0];
      u.book = f[1];
      u.chapter = parse_uint(f[2], "chapter", lineno);
      u.verse = parse_uint(f[3], "verse", lineno);
      u.src = f[4];
      u.tgt = f[5];
      add(std::move(u), lineno);
    }
  }
  if (corpus.units.empty()) throw DataError("corpus file " + path.string() + " contains no records");
  return corpus;
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path, Format format) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write corpus file " + path.string());
  if (format == Format::jsonl) {
    for (const auto& u : corpus.units) {
      ordered_json rec;
      rec["id"] = u.id;
      rec["book"] = u.book;
      rec["chapter"] = u.chapter;
      rec["verse"] = u.verse;
      rec["src"] = u.src;
      rec["tgt"] = u.tgt;
      out << rec.dump() << '\n';
    }
  } else {
    out << kTsvHeader << '\n';
    for (const auto& u : corpus.units) {
      for (const auto* field : {&u.id, &u.book, &u.src, &u.tgt})
        if (field->find_first_of("\t\n") != std::string::npos)
          throw DataError("unit '" + u.id + "' has a tab or newline and cannot be written as TSV");
      out << u.id << '\t' << u.book << '\t' << u.chapter << '\t' << u.verse << '\t' << u.src << '\t' << u.tgt << '\n';
    }
  }
}

CorpusStats corpus_stats(const Corpus& corpus, Side side, std::size_t k) {
  CorpusStats stats;
  std::map<std::string, std::uint64_t> counts;
  for (const auto& u : corpus.units) {
    const auto& text = side_text(u, side);
    stats.sentence_count += aligner::segment_sentences(text).size();
    for (auto& w : words(text)) {
      ++counts[std::move(w)];
      ++stats.word_count;
    }
  }
  stats.unit_count = corpus.units.size();
  stats.unique_word_count = counts.size();
  for (const auto& [word, count] : counts) ++stats.count_histogram[count];
  if (k > 0 && !counts.empty()) {
    stats.top_k = analysis::frequency_report(counts, k, analysis::Direction::most).ranked;
    stats.bottom_k = analysis::frequency_report(counts, k, analysis::Direction::least).ranked;
  }
  return stats;
}

}  // namespace lrmt::corpus

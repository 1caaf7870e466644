#include "lrmt/aligner.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "json.hpp"
#include "lrmt/error.hpp"
#include "lrmt/rng.hpp"

namespace lrmt::aligner {

using nlohmann::ordered_json;

std::string_view to_string(Group g) { return g == Group::one2one ? "one2one" : "variable"; }

Group parse_group(std::string_view name) {
  if (name == "one2one") return Group::one2one;
  if (name == "variable") return Group::variable;
  throw DataError("unknown group '" + std::string(name) + "'");
}

namespace {

bool is_terminal(char c) { return c == '.' || c == '!' || c == '?'; }
bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

// Length in bytes of a closing quote or bracket starting at text[i], or 0.
std::size_t closer_length(std::string_view text, std::size_t i) {
  static constexpr std::string_view kAscii = "\"')]}";
  if (kAscii.find(text[i]) != std::string_view::npos) return 1;
  // U+2019 ’, U+201D ”, U+00BB »
  for (std::string_view closer : {"\xE2\x80\x99", "\xE2\x80\x9D", "\xC2\xBB"})
    if (text.substr(i, closer.size()) == closer) return closer.size();
  return 0;
}

void push_trimmed(std::vector<std::string>& out, std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  if (b < e) out.emplace_back(s.substr(b, e - b));
}

}  // namespace

std::vector<std::string> segment_sentences(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  std::size_t i = 0;
  while (i < text.size()) {
    if (!is_terminal(text[i])) {
      ++i;
      continue;
    }
    std::size_t end = i;
    while (end < text.size() && is_terminal(text[end])) ++end;
    while (end < text.size()) {
      auto n = closer_length(text, end);
      if (n == 0) break;
      end += n;
    }
    if (end == text.size() || is_space(text[end])) {
      push_trimmed(out, text.substr(start, end - start));
      start = end;
    }
    i = end;
  }
  push_trimmed(out, text.substr(start));
  return out;
}

Explosion classify_and_explode(const corpus::ParallelUnit& unit) {
  auto src = segment_sentences(unit.src);
  auto tgt = segment_sentences(unit.tgt);
  if (src.empty() || tgt.empty())
    throw DataError("unit '" + unit.id + "' has no sentences on the " + (src.empty() ? "src" : "tgt") + " side");
  if (src.size() != tgt.size()) {
    return VariableUnit{unit.src, unit.tgt, unit.id, static_cast<std::uint32_t>(src.size()),
                        static_cast<std::uint32_t>(tgt.size())};
  }
  std::vector<SentencePair> pairs;
  pairs.reserve(src.size());
  for (std::size_t i = 0; i < src.size(); ++i)
    pairs.push_back({std::move(src[i]), std::move(tgt[i]), unit.id, static_cast<std::uint32_t>(i)});
  return pairs;
}

Explosion classify_and_explode(const SentencePair& pair) {
  corpus::ParallelUnit unit;
  unit.id = pair.origin_id;
  unit.src = pair.src;
  unit.tgt = pair.tgt;
  auto result = classify_and_explode(unit);
  if (auto* pairs = std::get_if<std::vector<SentencePair>>(&result))
    for (auto& p : *pairs) p.index += pair.index;
  return result;
}

Alignment align_corpus(const corpus::Corpus& corpus) {
  Alignment a;
  a.units = corpus.units.size();
  for (const auto& unit : corpus.units) {
    auto r = classify_and_explode(unit);
    if (auto* pairs = std::get_if<std::vector<SentencePair>>(&r)) {
      ++a.same_length_units;
      for (auto& p : *pairs) a.one2one.push_back(std::move(p));
    } else {
      a.variable.push_back(std::get<VariableUnit>(std::move(r)));
    }
  }
  return a;
}

void validate_ratios(const SplitRatios& r) {
  if (r.train < 0 || r.test < 0 || r.validation < 0) throw UsageError("split ratios must be non-negative");
  if (std::abs(r.train + r.test + r.validation - 1.0) > 1e-9) throw UsageError("split ratios must sum to 1");
}

namespace {

// floor(n * ratio), tolerant of products like 1094.9999999999998.
std::size_t portion(std::size_t n, double ratio) {
  return static_cast<std::size_t>(std::floor(static_cast<double>(n) * ratio + 1e-9));
}

struct Partition {
  std::vector<SplitItem> train, test, validation;
};

Partition partition(std::vector<SplitItem> items, const SplitRatios& r, Rng& rng) {
  rng.shuffle(items);
  const std::size_t n = items.size();
  const std::size_t n_test = portion(n, r.test);
  const std::size_t n_val = portion(n, r.validation);
  Partition p;
  auto it = items.begin();
  p.test.assign(std::make_move_iterator(it), std::make_move_iterator(it + n_test));
  it += n_test;
  p.validation.assign(std::make_move_iterator(it), std::make_move_iterator(it + n_val));
  it += n_val;
  p.train.assign(std::make_move_iterator(it), std::make_move_iterator(items.end()));
  return p;
}

void append(std::vector<SplitItem>& dst, std::vector<SplitItem>& src) {
  dst.insert(dst.end(), std::make_move_iterator(src.begin()), std::make_move_iterator(src.end()));
}

}  // namespace

DatasetSplit split_dataset(const std::vector<SentencePair>& one2one, const std::vector<VariableUnit>& variable,
                           const SplitRatios& ratios, std::uint64_t seed) {
  validate_ratios(ratios);
  std::vector<SplitItem> a, b;
  a.reserve(one2one.size());
  for (const auto& p : one2one) a.push_back({p.src, p.tgt, p.origin_id, p.index, Group::one2one, false, {}});
  b.reserve(variable.size());
  for (const auto& v : variable) b.push_back({v.src, v.tgt, v.origin_id, 0, Group::variable, false, {}});

  Rng rng(seed);
  auto pa = partition(std::move(a), ratios, rng);
  auto pb = partition(std::move(b), ratios, rng);

  DatasetSplit split;
  split.manifest.seed = seed;
  split.manifest.ratios = ratios;
  split.manifest.one2one = {pa.train.size(), pa.test.size(), pa.validation.size()};
  split.manifest.variable = {pb.train.size(), pb.test.size(), pb.validation.size()};
  split.manifest.one2one_pairs = one2one.size();
  split.manifest.variable_units = variable.size();
  append(split.train, pa.train);
  append(split.train, pb.train);
  append(split.test, pa.test);
  append(split.test, pb.test);
  append(split.validation, pa.validation);
  append(split.validation, pb.validation);
  return split;
}

DatasetSplit split_alignment(const Alignment& alignment, const SplitRatios& ratios, std::uint64_t seed) {
  auto split = split_dataset(alignment.one2one, alignment.variable, ratios, seed);
  split.manifest.units = alignment.units;
  split.manifest.same_length_units = alignment.same_length_units;
  return split;
}

namespace {

ordered_json to_json(const SplitItem& item) {
  ordered_json j;
  j["src"] = item.src;
  j["tgt"] = item.tgt;
  j["origin_id"] = item.origin_id;
  j["index"] = item.index;
  j["group"] = to_string(item.group);
  if (item.augmented) {
    j["augmented"] = true;
    j["aug_ops"] = item.aug_ops;
  }
  return j;
}

SplitItem item_from_json(const ordered_json& j, std::size_t line) {
  try {
    SplitItem item;
    item.src = j.at("src").get<std::string>();
    item.tgt = j.at("tgt").get<std::string>();
    item.origin_id = j.at("origin_id").get<std::string>();
    item.index = j.value("index", 0u);
    item.group = parse_group(j.at("group").get<std::string>());
    item.augmented = j.value("augmented", false);
    if (item.augmented) item.aug_ops = j.at("aug_ops").get<std::vector<std::string>>();
    return item;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("line " + std::to_string(line) + ": bad split record: " + e.what());
  }
}

ordered_json counts_json(const GroupCounts& c) {
  return ordered_json{{"train", c.train}, {"test", c.test}, {"validation", c.validation}};
}

GroupCounts counts_from_json(const ordered_json& j) {
  return {j.at("train").get<std::uint64_t>(), j.at("test").get<std::uint64_t>(), j.at("validation").get<std::uint64_t>()};
}

}  // namespace

void write_items(const std::vector<SplitItem>& items, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& item : items) out << to_json(item).dump() << '\n';
}

std::vector<SplitItem> read_items(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("missing split file " + path.string());
  std::vector<SplitItem> items;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    ordered_json j;
    try {
      j = ordered_json::parse(line);
    } catch (const nlohmann::json::exception&) {
      throw DataError(path.string() + ": line " + std::to_string(lineno) + ": malformed JSON record");
    }
    items.push_back(item_from_json(j, lineno));
  }
  return items;
}

void write_split(const DatasetSplit& split, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_items(split.train, dir / "train.jsonl");
  write_items(split.test, dir / "test.jsonl");
  write_items(split.validation, dir / "validation.jsonl");
  const auto& m = split.manifest;
  ordered_json j;
  j["seed"] = m.seed;
  j["ratios"] = {m.ratios.train, m.ratios.test, m.ratios.validation};
  j["groups"] = {{"one2one", counts_json(m.one2one)}, {"variable", counts_json(m.variable)}};
  j["pre_explosion"] = {{"units", m.units}, {"same_length_units", m.same_length_units}, {"variable_units", m.variable_units}};
  j["post_explosion"] = {{"one2one_pairs", m.one2one_pairs}, {"variable_units", m.variable_units}};
  j["totals"] = {{"train", split.train.size()}, {"test", split.test.size()}, {"validation", split.validation.size()}};
  std::ofstream out(dir / "manifest.json", std::ios::binary | std::ios::trunc);
  out << j.dump(2) << '\n';
}

DatasetSplit read_split(const std::filesystem::path& dir) {
  DatasetSplit split;
  split.train = read_items(dir / "train.jsonl");
  split.test = read_items(dir / "test.jsonl");
  split.validation = read_items(dir / "validation.jsonl");
  std::ifstream in(dir / "manifest.json");
  if (!in) throw DataError("missing split manifest " + (dir / "manifest.json").string());
  try {
    auto j = ordered_json::parse(in);
    auto& m = split.manifest;
    m.seed = j.at("seed").get<std::uint64_t>();
    auto r = j.at("ratios");
    m.ratios = {r.at(0).get<double>(), r.at(1).get<double>(), r.at(2).get<double>()};
    m.one2one = counts_from_json(j.at("groups").at("one2one"));
    m.variable = counts_from_json(j.at("groups").at("variable"));
    m.units = j.at("pre_explosion").at("units").get<std::uint64_t>();
    m.same_length_units = j.at("pre_explosion").at("same_length_units").get<std::uint64_t>();
    m.variable_units = j.at("pre_explosion").at("variable_units").get<std::uint64_t>();
    m.one2one_pairs = j.at("post_explosion").at("one2one_pairs").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError("bad split manifest: " + std::string(e.what()));
  }
  return split;
}

}  // namespace lrmt::aligner

#include "lrmt/cli/pipeline.hpp"

#include <cstdlib>
#include <deque>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "json.hpp"
#include "lrmt/aligner.hpp"
#include "lrmt/augment.hpp"
#include "lrmt/bleu.hpp"
#include "lrmt/cli/config.hpp"
#include "lrmt/cli/export_ft.hpp"
#include "lrmt/cli/synthetic.hpp"
#include "lrmt/corpus.hpp"
#include "lrmt/embeddings.hpp"
#include "lrmt/error.hpp"
#include "lrmt/frequency.hpp"
#include "lrmt/hash.hpp"
#include "lrmt/nmt/model.hpp"
#include "lrmt/nmt/seq2seq.hpp"
#include "lrmt/subword.hpp"

namespace lrmt::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const char* const kParts[] = {"train", "test", "validation"};

// Per-invocation state: effective config, workdir and the manifest being built.
class Stage {
 public:
  Stage(std::string name, PipelineConfig config, fs::path workdir, bool strict, std::ostream& out, std::ostream& err)
      : out(out),
        err(err),
        name_(std::move(name)),
        config_(std::move(config)),
        workdir_(std::move(workdir)),
        strict_(strict) {}

  const PipelineConfig& config() const { return config_; }
  fs::path path(const std::string& rel) const { return workdir_ / rel; }

  /// Checks that a workdir artifact exists and still matches the manifest of
  /// the stage that produced it.
  fs::path input(const std::string& rel, const std::string& producer) {
    auto p = path(rel);
    if (!fs::exists(p))
      throw DataError("missing input " + p.string() + " (produced by `lrmt " + producer + "`)");
    auto digest = sha256_file(p);
    auto manifest_path = path("manifests/" + producer + ".json");
    if (fs::exists(manifest_path)) {
      json m;
      try {
        m = json::parse(std::ifstream(manifest_path));
      } catch (const json::exception& e) {
        throw DataError("cannot parse " + manifest_path.string() + ": " + e.what());
      }
      if (m.value("config_hash", "") != config_.hash())
        mismatch(rel + " was produced by `" + producer + "` under config " + m.value("config_hash", "?").substr(0, 12) +
                 ", current config is " + config_.hash().substr(0, 12));
      auto outputs = m.value("outputs", json::object());
      if (outputs.contains(rel) && outputs[rel] != digest)
        mismatch(rel + " changed since `" + producer + "` wrote it");
    }
    inputs_[rel] = digest;
    return p;
  }

  /// A file outside the workdir (corpus, lexicon, hypothesis files).
  fs::path external_input(const std::string& given) {
    fs::path p(given);
    if (!fs::exists(p)) throw DataError("missing input " + p.string());
    inputs_[given] = sha256_file(p);
    return p;
  }

  fs::path output(const std::string& rel) {
    auto p = path(rel);
    fs::create_directories(p.parent_path());
    outputs_.push_back(rel);
    return p;
  }

  void finish(std::uint64_t seed, json details = json::object()) {
    json m;
    m["stage"] = name_;
    m["config_hash"] = config_.hash();
    m["seed"] = seed;
    m["inputs"] = inputs_;
    json outs = json::object();
    for (const auto& rel : outputs_) outs[rel] = sha256_file(path(rel));
    m["outputs"] = outs;
    m["details"] = std::move(details);
    fs::create_directories(path("manifests"));
    std::ofstream(path("manifests/" + name_ + ".json"), std::ios::binary | std::ios::trunc) << m.dump(2) << '\n';
  }

  std::ostream& out;
  std::ostream& err;

 private:
  void mismatch(const std::string& message) {
    if (strict_) throw UsageError("manifest mismatch: " + message);
    err << "warning: " << message << '\n';
  }

  std::string name_;
  PipelineConfig config_;
  fs::path workdir_;
  bool strict_;
  json inputs_ = json::object();
  std::vector<std::string> outputs_;
};

corpus::Side side_of(const std::string& name) { return corpus::parse_side(name); }

std::vector<std::string> side_words(const corpus::Corpus& c, corpus::Side side) {
  std::vector<std::string> out;
  for (const auto& u : c.units) {
    auto w = corpus::words(corpus::side_text(u, side));
    out.insert(out.end(), w.begin(), w.end());
  }
  return out;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');)
    if (!item.empty()) out.push_back(item);
  return out;
}

std::string source_dir(const PipelineConfig& config) {
  const auto& s = config.get("data.source");
  if (s != "split" && s != "augmented") throw UsageError("data.source must be split or augmented, got '" + s + "'");
  return s;
}

std::string source_producer(const std::string& dir) { return dir == "split" ? "split" : "augment"; }

corpus::Corpus read_workdir_corpus(Stage& st) {
  return corpus::load_corpus(st.input("corpus.jsonl", "ingest"), corpus::Format::jsonl, st.config().normalization());
}

aligner::DatasetSplit read_partitions(Stage& st, const std::string& dir) {
  aligner::DatasetSplit s;
  s.train = aligner::read_items(st.input(dir + "/train.jsonl", source_producer(dir)));
  s.test = aligner::read_items(st.input(dir + "/test.jsonl", source_producer(dir)));
  s.validation = aligner::read_items(st.input(dir + "/validation.jsonl", source_producer(dir)));
  return s;
}

std::vector<aligner::SplitItem>& partition(aligner::DatasetSplit& s, const std::string& name) {
  if (name == "train") return s.train;
  if (name == "test") return s.test;
  if (name == "validation") return s.validation;
  throw UsageError("unknown partition '" + name + "' (expected train, test or validation)");
}

void write_lines(const fs::path& p, const std::vector<std::string>& lines) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + p.string());
  for (const auto& l : lines) out << l << '\n';
}

std::vector<std::string> read_lines(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw DataError("cannot read " + p.string());
  std::vector<std::string> lines;
  for (std::string l; std::getline(in, l);) {
    if (!l.empty() && l.back() == '\r') l.pop_back();
    lines.push_back(l);
  }
  return lines;
}

struct Vocabs {
  subword::SubwordVocab src, tgt;
};

Vocabs read_vocabs(Stage& st) {
  return {subword::load_vocab(st.input("tokenizer/src.vocab", "tok-train")),
          subword::load_vocab(st.input("tokenizer/tgt.vocab", "tok-train"))};
}

struct TokenizedRow {
  std::vector<subword::TokenId> src, tgt;
};

std::vector<TokenizedRow> read_tokenized(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw DataError("cannot read " + p.string());
  std::vector<TokenizedRow> rows;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    try {
      auto j = json::parse(line);
      rows.push_back({j.at("src_ids").get<std::vector<subword::TokenId>>(),
                      j.at("tgt_ids").get<std::vector<subword::TokenId>>()});
    } catch (const json::exception& e) {
      throw DataError(p.string() + " line " + std::to_string(n) + ": " + e.what());
    }
  }
  return rows;
}

std::string model_name(bool reverse) { return reverse ? "backward" : "forward"; }
std::string train_stage(bool reverse) { return reverse ? "train-reverse" : "train"; }

// ---- stages ---------------------------------------------------------------

void cmd_ingest(Stage& st, std::size_t synthetic) {
  const auto& cfg = st.config();
  corpus::Corpus c;
  std::uint64_t seed = cfg.get_uint("seed");
  json details;
  if (synthetic > 0) {
    seed = cfg.module_seed("synthetic");
    c = synthetic_corpus({synthetic, seed});
    for (auto& u : c.units) {
      u.src = corpus::normalize_text(u.src, cfg.normalization());
      u.tgt = corpus::normalize_text(u.tgt, cfg.normalization());
    }
    details["synthetic"] = synthetic;
  } else {
    const auto& given = cfg.get("corpus.path");
    if (given.empty()) throw UsageError("ingest needs --input, corpus.path or --synthetic N");
    c = corpus::load_corpus(st.external_input(given), corpus::parse_format(cfg.get("corpus.format")),
                            cfg.normalization());
  }
  c.src_lang = cfg.get("corpus.src_lang");
  c.tgt_lang = cfg.get("corpus.tgt_lang");
  corpus::save_corpus(c, st.output("corpus.jsonl"), corpus::Format::jsonl);
  details["units"] = c.units.size();
  st.finish(seed, details);
  st.out << "ingested " << c.units.size() << " units -> " << st.path("corpus.jsonl").string() << '\n';
}

void cmd_split(Stage& st) {
  auto c = read_workdir_corpus(st);
  auto seed = st.config().module_seed("split");
  auto alignment = aligner::align_corpus(c);
  auto split = aligner::split_alignment(alignment, st.config().split_ratios(), seed);
  aligner::write_split(split, st.path("split"));
  for (const char* f : {"split/train.jsonl", "split/test.jsonl", "split/validation.jsonl", "split/manifest.json"})
    st.output(f);
  const auto& m = split.manifest;
  st.finish(seed, {{"train", split.train.size()}, {"test", split.test.size()}, {"validation", split.validation.size()}});
  st.out << "units " << m.units << " (same-length " << m.same_length_units << ", variable " << m.variable_units
         << "), one-to-one pairs " << m.one2one_pairs << '\n';
  st.out << "train " << split.train.size() << "  test " << split.test.size() << "  validation "
         << split.validation.size() << '\n';
}

std::vector<corpus::Side> sides_for(const std::string& side) {
  if (side == "both") return {corpus::Side::src, corpus::Side::tgt};
  return {side_of(side)};
}

void cmd_stats(Stage& st, const std::string& side) {
  auto c = read_workdir_corpus(st);
  auto k = st.config().get_uint("stats.top_k");
  json details;
  for (auto s : sides_for(side)) {
    auto stats = corpus::corpus_stats(c, s, k);
    json j;
    j["units"] = stats.unit_count;
    j["sentences"] = stats.sentence_count;
    j["words"] = stats.word_count;
    j["unique_words"] = stats.unique_word_count;
    j["hapax"] = stats.count_histogram.count(1) ? stats.count_histogram.at(1) : 0;
    json hist = json::object();
    for (auto [freq, n] : stats.count_histogram) hist[std::to_string(freq)] = n;
    j["count_histogram"] = hist;
    j["top_k"] = stats.top_k;
    j["bottom_k"] = stats.bottom_k;
    auto name = std::string(corpus::to_string(s));
    std::ofstream(st.output("stats/" + name + ".json"), std::ios::binary | std::ios::trunc) << j.dump(2) << '\n';
    details[name] = stats.word_count;
    st.out << name << ": units " << stats.unit_count << "  sentences " << stats.sentence_count << "  words "
           << stats.word_count << "  unique " << stats.unique_word_count << "  hapax " << j["hapax"] << '\n';
  }
  st.finish(st.config().get_uint("seed"), details);
}

void cmd_report(Stage& st, const std::string& side, const std::string& word, std::size_t k_sim, std::size_t k_dis) {
  auto c = read_workdir_corpus(st);
  auto k = st.config().get_uint("stats.top_k");
  for (auto s : sides_for(side)) {
    auto counts = analysis::count_tokens(side_words(c, s));
    auto name = std::string(corpus::to_string(s));
    for (auto dir : {analysis::Direction::most, analysis::Direction::least}) {
      auto rel = "report/frequency_" + name + (dir == analysis::Direction::most ? "_most" : "_least") + ".tsv";
      std::ofstream out(st.output(rel), std::ios::binary | std::ios::trunc);
      analysis::write_frequency_tsv(analysis::frequency_report(counts, k, dir), out);
      st.out << "wrote " << st.path(rel).string() << '\n';
    }
  }
  if (!word.empty()) {
    auto emb_side = st.config().get("embed.side");
    auto model = analysis::load_embeddings(st.input("embed/" + emb_side + ".bin", "embed"));
    auto points = analysis::project_2d(model, word, k_sim, k_dis);
    std::ofstream out(st.output("report/projection.tsv"), std::ios::binary | std::ios::trunc);
    analysis::write_projection_tsv(points, out);
    st.out << "wrote " << st.path("report/projection.tsv").string() << '\n';
  }
  st.finish(st.config().get_uint("seed"));
}

struct EmbedQuery {
  std::string most_similar, least_similar, positive, negative;
  std::size_t k = 10;
  bool no_train = false;
};

void print_neighbors(std::ostream& out, const analysis::Neighbors& n) {
  for (const auto& [w, s] : n) out << w << '\t' << s << '\n';
}

void cmd_embed(Stage& st, const EmbedQuery& q) {
  const auto& side = st.config().get("embed.side");
  auto rel = "embed/" + side + ".bin";
  analysis::EmbeddingModel model;
  if (q.no_train) {
    model = analysis::load_embeddings(st.input(rel, "embed"));
  } else {
    auto c = read_workdir_corpus(st);
    std::vector<std::vector<std::string>> sentences;
    for (const auto& u : c.units) sentences.push_back(corpus::words(corpus::side_text(u, side_of(side))));
    auto config = st.config().embedding_config();
    model = analysis::train_embeddings(sentences, config);
    analysis::save_embeddings(model, st.output(rel));
    st.finish(config.seed, {{"vocab", model.size()}, {"dim", model.dim()}});
    st.out << "trained " << model.size() << " x " << model.dim() << " embeddings -> " << st.path(rel).string() << '\n';
  }
  if (!q.most_similar.empty()) print_neighbors(st.out, analysis::most_similar(model, q.most_similar, q.k));
  if (!q.least_similar.empty()) print_neighbors(st.out, analysis::least_similar(model, q.least_similar, q.k));
  if (!q.positive.empty())
    print_neighbors(st.out, analysis::analogy(model, split_list(q.positive), split_list(q.negative), q.k));
}

void cmd_tok_train(Stage& st) {
  auto train = aligner::read_items(st.input("split/train.jsonl", "split"));
  std::vector<std::string> src, tgt;
  for (const auto& item : train) {
    src.push_back(corpus::strip_terminal_marks(item.src));
    tgt.push_back(corpus::strip_terminal_marks(item.tgt));
  }
  const auto& cfg = st.config();
  auto src_vocab = subword::train_tokenizer(src, cfg.get_uint("tokenizer.src_vocab_size"), cfg.module_seed("tokenizer.src"));
  auto tgt_vocab = subword::train_tokenizer(tgt, cfg.get_uint("tokenizer.tgt_vocab_size"), cfg.module_seed("tokenizer.tgt"));
  subword::save_vocab(src_vocab, st.output("tokenizer/src.vocab"));
  subword::save_vocab(tgt_vocab, st.output("tokenizer/tgt.vocab"));
  st.finish(cfg.module_seed("tokenizer.src"), {{"src_pieces", src_vocab.size()}, {"tgt_pieces", tgt_vocab.size()}});
  st.out << "source vocabulary " << src_vocab.size() << " pieces, target vocabulary " << tgt_vocab.size()
         << " pieces\n";
}

void cmd_tok_apply(Stage& st, const std::string& text, const std::string& side) {
  auto vocabs = read_vocabs(st);
  if (!text.empty()) {
    const auto& v = side_of(side) == corpus::Side::src ? vocabs.src : vocabs.tgt;
    auto normalized = corpus::strip_terminal_marks(corpus::normalize_text(text, st.config().normalization()));
    auto ids = subword::encode(v, normalized);
    auto pieces = subword::encode_pieces(v, normalized);
    for (std::size_t i = 0; i < ids.size(); ++i) st.out << (i ? " " : "") << ids[i];
    st.out << '\n';
    for (std::size_t i = 0; i < pieces.size(); ++i) st.out << (i ? " " : "") << pieces[i];
    st.out << '\n';
    return;
  }
  auto dir = source_dir(st.config());
  auto split = read_partitions(st, dir);
  std::size_t unk = 0;
  for (const char* part : kParts) {
    std::ofstream out(st.output(std::string("tokenized/") + part + ".jsonl"), std::ios::binary | std::ios::trunc);
    for (const auto& item : partition(split, part)) {
      auto s = subword::encode(vocabs.src, corpus::strip_terminal_marks(item.src));
      auto t = subword::encode(vocabs.tgt, corpus::strip_terminal_marks(item.tgt));
      unk += std::count(s.begin(), s.end(), subword::kUnk) + std::count(t.begin(), t.end(), subword::kUnk);
      json row = {{"origin_id", item.origin_id}, {"index", item.index},
                  {"group", std::string(aligner::to_string(item.group))}, {"augmented", item.augmented},
                  {"src_ids", s}, {"tgt_ids", t}};
      out << row.dump() << '\n';
    }
  }
  st.finish(st.config().get_uint("seed"), {{"source", dir}, {"unk_tokens", unk}});
  st.out << "tokenized " << split.train.size() << '/' << split.test.size() << '/' << split.validation.size()
         << " rows from " << dir << " (" << unk << " unknown pieces)\n";
}

std::unique_ptr<augment::Seq2SeqTranslator> make_translator(const nmt::Seq2SeqModel& model,
                                                            const subword::SubwordVocab& from,
                                                            const subword::SubwordVocab& to, std::size_t max_out) {
  return std::make_unique<augment::Seq2SeqTranslator>(
      model,
      [&from](const std::string& text) { return subword::encode(from, corpus::strip_terminal_marks(text)); },
      [&to](const std::vector<nmt::TokenId>& ids) { return subword::decode(to, ids); }, max_out);
}

void cmd_augment(Stage& st) {
  const auto& cfg = st.config();
  auto policy = cfg.augment_policy();
  auto side = side_of(cfg.get("augment.side"));
  auto split = read_partitions(st, "split");
  augment::Resources res;
  augment::SynonymLexicon lexicon;
  if (!cfg.get("augment.lexicon").empty()) {
    lexicon = augment::load_lexicon(st.external_input(cfg.get("augment.lexicon")));
    res.lexicon = &lexicon;
  }
  auto uses = [&](augment::Op op) { return std::find(policy.ops.begin(), policy.ops.end(), op) != policy.ops.end(); };
  analysis::EmbeddingModel embeddings;
  if (uses(augment::Op::embed_replace)) {
    embeddings = analysis::load_embeddings(st.input("embed/" + cfg.get("augment.side") + ".bin", "embed"));
    res.embeddings = &embeddings;
  }
  std::optional<Vocabs> vocabs;
  nmt::Seq2SeqModel fwd_model, bwd_model;
  std::unique_ptr<augment::Seq2SeqTranslator> fwd, bwd;
  if (uses(augment::Op::round_trip)) {
    vocabs = read_vocabs(st);
    fwd_model = nmt::load_checkpoint(st.input("model/forward.bin", "train"));
    bwd_model = nmt::load_checkpoint(st.input("model/backward.bin", "train-reverse"));
    auto max_out = cfg.get_uint("translate.max_out_len");
    auto to_tgt = make_translator(fwd_model, vocabs->src, vocabs->tgt, max_out);
    auto to_src = make_translator(bwd_model, vocabs->tgt, vocabs->src, max_out);
    // The perturbed side goes out and comes back.
    fwd = side == corpus::Side::src ? std::move(to_tgt) : std::move(to_src);
    bwd = side == corpus::Side::src ? std::move(to_src) : std::move(to_tgt);
    res.forward = fwd.get();
    res.backward = bwd.get();
  }
  auto out = augment::augment_training_set(split, side, policy, res);
  out.manifest = aligner::read_split(st.path("split")).manifest;
  aligner::write_split(out, st.path("augmented"));
  for (const char* f : {"augmented/train.jsonl", "augmented/test.jsonl", "augmented/validation.jsonl",
                        "augmented/manifest.json"})
    st.output(f);
  st.finish(policy.seed, {{"train_before", split.train.size()}, {"train_after", out.train.size()}});
  st.out << "train " << split.train.size() << " -> " << out.train.size() << " pairs ("
         << out.train.size() - split.train.size() << " augmented)\n";
}

void cmd_train(Stage& st, bool reverse) {
  const auto& cfg = st.config();
  auto vocabs = read_vocabs(st);
  auto train_rows = read_tokenized(st.input("tokenized/train.jsonl", "tok-apply"));
  auto val_rows = read_tokenized(st.input("tokenized/validation.jsonl", "tok-apply"));
  const auto& src_vocab = reverse ? vocabs.tgt : vocabs.src;
  const auto& tgt_vocab = reverse ? vocabs.src : vocabs.tgt;
  auto model_config = cfg.model_config(src_vocab.size(), tgt_vocab.size(), reverse);
  std::size_t skipped = 0;
  auto to_pairs = [&](const std::vector<TokenizedRow>& rows) {
    std::vector<nmt::SequencePair> pairs;
    for (const auto& r : rows) {
      const auto& s = reverse ? r.tgt : r.src;
      const auto& t = reverse ? r.src : r.tgt;
      if (s.empty() || t.empty() || s.size() + 1 > model_config.max_len || t.size() + 1 > model_config.max_len) {
        ++skipped;
        continue;
      }
      pairs.push_back({s, t});
    }
    return pairs;
  };
  auto pairs = to_pairs(train_rows);
  auto validation = to_pairs(val_rows);
  if (pairs.empty()) throw DataError("no training pair fits model.max_len = " + std::to_string(model_config.max_len));
  if (skipped) st.err << "note: skipped " << skipped << " pairs longer than model.max_len\n";

  auto model = nmt::init_model(model_config);
  auto train_config = cfg.train_config(reverse);
  auto history = nmt::train(model, pairs, train_config, validation.empty() ? nullptr : &validation,
                            [&](std::size_t epoch, double loss, std::optional<double> val) {
                              st.out << "epoch " << epoch + 1 << "  train_loss " << loss;
                              if (val) st.out << "  validation_loss " << *val;
                              st.out << '\n';
                            });
  auto name = model_name(reverse);
  nmt::save_checkpoint(model, st.output("model/" + name + ".bin"));
  {
    std::ofstream csv(st.output("model/" + name + "_loss.csv"), std::ios::binary | std::ios::trunc);
    nmt::write_loss_csv(history, csv);
  }
  st.finish(train_config.seed, {{"pairs", pairs.size()}, {"skipped", skipped}, {"epochs", train_config.epochs}});
  st.out << "saved " << st.path("model/" + name + ".bin").string() << '\n';
}

void cmd_translate(Stage& st, const std::string& part, const std::string& text, bool reverse) {
  const auto& cfg = st.config();
  auto vocabs = read_vocabs(st);
  const auto& from = reverse ? vocabs.tgt : vocabs.src;
  const auto& to = reverse ? vocabs.src : vocabs.tgt;
  auto model = nmt::load_checkpoint(st.input("model/" + model_name(reverse) + ".bin", train_stage(reverse)));
  auto max_out = cfg.get_uint("translate.max_out_len");
  auto run_one = [&](std::vector<subword::TokenId> ids) -> std::string {
    if (ids.empty()) return {};
    if (ids.size() + 1 > model.config.max_len) ids.resize(model.config.max_len - 1);
    return subword::decode(to, nmt::translate(model, ids, max_out).ids);
  };
  if (!text.empty()) {
    auto normalized = corpus::strip_terminal_marks(corpus::normalize_text(text, cfg.normalization()));
    st.out << run_one(subword::encode(from, normalized)) << '\n';
    return;
  }
  auto rows = read_tokenized(st.input("tokenized/" + part + ".jsonl", "tok-apply"));
  std::vector<std::string> lines;
  lines.reserve(rows.size());
  for (const auto& r : rows) lines.push_back(run_one(reverse ? r.tgt : r.src));
  auto rel = "translations/" + part + (reverse ? ".reverse" : "") + ".txt";
  write_lines(st.output(rel), lines);
  st.finish(cfg.get_uint("seed"), {{"sentences", lines.size()}});
  st.out << "translated " << lines.size() << " sentences -> " << st.path(rel).string() << '\n';
}

struct EvalOptions {
  std::string part = "test", hyp, ref, output;
  bool reverse = false;
};

void cmd_evaluate(Stage& st, const EvalOptions& o) {
  std::vector<std::string> hyps, refs;
  if (!o.hyp.empty() || !o.ref.empty()) {
    if (o.hyp.empty() || o.ref.empty()) throw UsageError("--hyp and --ref must be given together");
    hyps = read_lines(st.external_input(o.hyp));
    refs = read_lines(st.external_input(o.ref));
  } else {
    auto dir = source_dir(st.config());
    auto rel = "translations/" + o.part + (o.reverse ? ".reverse" : "") + ".txt";
    hyps = read_lines(st.input(rel, "translate"));
    for (const auto& item : aligner::read_items(st.input(dir + "/" + o.part + ".jsonl", source_producer(dir))))
      refs.push_back(corpus::strip_terminal_marks(o.reverse ? item.src : item.tgt));
  }
  if (hyps.size() != refs.size())
    throw DataError("hypotheses have " + std::to_string(hyps.size()) + " lines but references have " +
                    std::to_string(refs.size()));
  std::vector<bleu::Tokens> h, r;
  for (const auto& l : hyps) h.push_back(bleu::tokenize(l));
  for (const auto& l : refs) r.push_back(bleu::tokenize(l));
  auto report = bleu::corpus_bleu(h, r, 4, st.config().smoothing());
  auto rel = o.output.empty() ? "eval/" + o.part + (o.reverse ? ".reverse" : "") + ".json" : o.output;
  std::ofstream(st.output(rel), std::ios::binary | std::ios::trunc) << bleu::to_json(report) << '\n';
  st.finish(st.config().get_uint("seed"), {{"score", report.score}});
  st.out << bleu::summary_line(report) << '\n';
}

void cmd_export(Stage& st) {
  const auto& cfg = st.config();
  auto dir = source_dir(cfg);
  auto split = read_partitions(st, dir);
  ExportOptions options{cfg.get("corpus.src_lang"), cfg.get("corpus.tgt_lang"), cfg.get("export.prefix")};
  export_ft(split, st.path("export"), options);
  auto schema = json::parse(std::ifstream(st.output("export/schema.json")));
  std::size_t total = 0;
  for (const char* part : kParts) total += validate_jsonl(schema, st.output(std::string("export/") + part + ".jsonl"));
  st.finish(cfg.get_uint("seed"), {{"records", total}, {"source", dir}});
  st.out << "exported " << total << " records (schema-valid) -> " << st.path("export").string() << '\n';
}

// Binds a subcommand option to a config key; applied after the config file.
class Overrides {
 public:
  void bind(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
    auto& slot = values_.emplace_back();
    options_.push_back({app->add_option(flag, slot, help + " (config: " + key + ")"), key, &slot});
  }
  void apply(PipelineConfig& config) const {
    for (const auto& o : options_)
      if (o.option->count() > 0) config.set(o.key, *o.value);
  }

 private:
  struct Bound {
    CLI::Option* option;
    std::string key;
    std::string* value;
  };
  std::deque<std::string> values_;
  std::vector<Bound> options_;
};

int exit_code_for(const std::exception& e, std::ostream& err) {
  err << "error: " << e.what() << '\n';
  if (dynamic_cast<const UsageError*>(&e)) return 2;
  if (dynamic_cast<const DataError*>(&e)) return 3;
  if (dynamic_cast<const NumericalError*>(&e)) return 4;
  return 1;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Low-resource machine translation pipeline", "lrmt"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path, workdir;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  bool strict = false;
  app.add_option("--config", config_path, "key = value configuration file");
  app.add_option("--workdir", workdir, "working directory (overrides LRMT_WORKDIR and the config)");
  app.add_option("--set", sets, "override a config key, KEY=VALUE (repeatable)");
  app.add_option("--seed", seed, "top-level seed (config: seed)");
  app.add_flag("--strict", strict, "treat manifest/config hash mismatches as errors");

  Overrides ov;
  std::size_t synthetic = 0;
  auto* ingest = app.add_subcommand("ingest", "load and normalize a parallel corpus");
  ov.bind(ingest, "--input", "corpus.path", "corpus file");
  ov.bind(ingest, "--format", "corpus.format", "jsonl or tsv");
  ingest->add_option("--synthetic", synthetic, "generate N synthetic reversible units instead");

  auto* split = app.add_subcommand("split", "align units and split train/test/validation");
  ov.bind(split, "--ratios", "split.ratios", "train,test,validation ratios");

  std::string stats_side = "both";
  auto* stats = app.add_subcommand("stats", "corpus statistics");
  stats->add_option("--side", stats_side, "src, tgt or both");
  ov.bind(stats, "--k", "stats.top_k", "top/bottom entries");

  std::string report_side = "both", report_word;
  std::size_t k_sim = 10, k_dis = 10;
  auto* report = app.add_subcommand("report", "frequency and projection TSVs for plotting");
  report->add_option("--side", report_side, "src, tgt or both");
  ov.bind(report, "--k", "stats.top_k", "entries per frequency table");
  report->add_option("--word", report_word, "also project this word and its neighbours (needs embed)");
  report->add_option("--k-similar", k_sim, "nearest neighbours in the projection");
  report->add_option("--k-dissimilar", k_dis, "farthest neighbours in the projection");

  EmbedQuery eq;
  auto* embed = app.add_subcommand("embed", "train or query skip-gram embeddings");
  ov.bind(embed, "--side", "embed.side", "corpus side");
  ov.bind(embed, "--dim", "embed.dim", "vector size");
  ov.bind(embed, "--epochs", "embed.epochs", "training epochs");
  ov.bind(embed, "--min-count", "embed.min_count", "minimum word count");
  embed->add_flag("--no-train", eq.no_train, "query the existing model");
  embed->add_option("--most-similar", eq.most_similar, "print nearest neighbours of a word");
  embed->add_option("--least-similar", eq.least_similar, "print farthest words");
  embed->add_option("--positive", eq.positive, "analogy: comma-separated positive words");
  embed->add_option("--negative", eq.negative, "analogy: comma-separated negative words");
  embed->add_option("--k", eq.k, "results per query");

  auto* tok_train = app.add_subcommand("tok-train", "train source and target subword vocabularies");
  ov.bind(tok_train, "--src-vocab-size", "tokenizer.src_vocab_size", "source pieces");
  ov.bind(tok_train, "--tgt-vocab-size", "tokenizer.tgt_vocab_size", "target pieces");

  std::string tok_text, tok_side = "src";
  auto* tok_apply = app.add_subcommand("tok-apply", "encode partitions to subword ids");
  ov.bind(tok_apply, "--source", "data.source", "split or augmented");
  tok_apply->add_option("--text", tok_text, "encode one sentence and print ids and pieces");
  tok_apply->add_option("--side", tok_side, "vocabulary for --text: src or tgt");

  auto* aug = app.add_subcommand("augment", "augment one-to-one training pairs");
  ov.bind(aug, "--side", "augment.side", "side to perturb");
  ov.bind(aug, "--ops", "augment.ops", "comma-separated operations");
  ov.bind(aug, "--alpha", "augment.alpha", "fraction of tokens touched");
  ov.bind(aug, "--n-aug", "augment.n_aug", "variants per pair");
  ov.bind(aug, "--lexicon", "augment.lexicon", "synonym lexicon");
  ov.bind(aug, "--max-pairs", "augment.max_pairs", "cap on augmented pairs (0 = all)");

  bool train_reverse = false;
  auto* train = app.add_subcommand("train", "train the seq2seq model");
  train->add_flag("--reverse", train_reverse, "train the target-to-source model");
  ov.bind(train, "--epochs", "train.epochs", "epochs");
  ov.bind(train, "--lr", "train.learning_rate", "SGD learning rate");
  ov.bind(train, "--teacher-forcing", "train.teacher_forcing_ratio", "teacher forcing ratio");
  ov.bind(train, "--hidden", "model.hidden", "hidden size");
  ov.bind(train, "--max-len", "model.max_len", "maximum sequence length");

  std::string tr_part = "test", tr_text;
  bool tr_reverse = false;
  auto* translate = app.add_subcommand("translate", "greedy translation");
  translate->add_option("--partition", tr_part, "train, test or validation");
  translate->add_option("--text", tr_text, "translate one sentence to stdout");
  translate->add_flag("--reverse", tr_reverse, "use the target-to-source model");
  ov.bind(translate, "--max-out-len", "translate.max_out_len", "output length limit");

  EvalOptions eo;
  auto* evaluate = app.add_subcommand("evaluate", "corpus BLEU-4");
  evaluate->add_option("--partition", eo.part, "partition translated by `translate`");
  evaluate->add_option("--hyp", eo.hyp, "hypothesis file, one sentence per line");
  evaluate->add_option("--ref", eo.ref, "reference file, one sentence per line");
  evaluate->add_option("--output", eo.output, "report path relative to the workdir");
  evaluate->add_flag("--reverse", eo.reverse, "score the target-to-source translations");
  ov.bind(evaluate, "--smoothing", "evaluate.smoothing", "none or add_one_for_n_ge_2");

  auto* exp = app.add_subcommand("export-ft", "fine-tuning JSONL with schema");
  ov.bind(exp, "--source", "data.source", "split or augmented");
  ov.bind(exp, "--prefix", "export.prefix", "input_text prefix");

  auto* show = app.add_subcommand("config", "print the effective configuration and its hash");

  std::vector<const char*> argv{"lrmt"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 2;
  }

  try {
    PipelineConfig config;
    if (!config_path.empty()) load_config_into(config, config_path);
    if (const char* env = std::getenv("LRMT_WORKDIR"); env && *env) config.set("workdir", env);
    for (const auto& s : sets) config.set_assignment(s);
    if (seed) config.set("seed", std::to_string(*seed));
    if (!workdir.empty()) config.set("workdir", workdir);
    ov.apply(config);

    auto* sub = app.get_subcommands().front();
    if (sub == show) {
      out << config.canonical() << "# config_hash = " << config.hash() << '\n';
      return 0;
    }
    std::string stage_name = sub->get_name();
    if (sub == train && train_reverse) stage_name = "train-reverse";
    fs::path wd = config.get("workdir");
    fs::create_directories(wd);
    Stage st(stage_name, config, wd, strict, out, err);

    if (sub == ingest) cmd_ingest(st, synthetic);
    else if (sub == split) cmd_split(st);
    else if (sub == stats) cmd_stats(st, stats_side);
    else if (sub == report) cmd_report(st, report_side, report_word, k_sim, k_dis);
    else if (sub == embed) cmd_embed(st, eq);
    else if (sub == tok_train) cmd_tok_train(st);
    else if (sub == tok_apply) cmd_tok_apply(st, tok_text, tok_side);
    else if (sub == aug) cmd_augment(st);
    else if (sub == train) cmd_train(st, train_reverse);
    else if (sub == translate) cmd_translate(st, tr_part, tr_text, tr_reverse);
    else if (sub == evaluate) cmd_evaluate(st, eo);
    else if (sub == exp) cmd_export(st);
    return 0;
  } catch (const std::exception& e) {
    return exit_code_for(e, err);
  }
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace lrmt::cli

#include <gtest/gtest.h>

#include <cstdlib>
#include <set>
#include <sstream>

#include "json.hpp"
#include "lrmt/cli/config.hpp"
#include "lrmt/cli/export_ft.hpp"
#include "lrmt/cli/pipeline.hpp"
#include "lrmt/cli/synthetic.hpp"
#include "lrmt/error.hpp"
#include "lrmt/hash.hpp"
#include "test_util.hpp"

using namespace lrmt;
using namespace lrmt::cli;
using lrmt::testing::TempDir;
using lrmt::testing::read_file;
using lrmt::testing::write_file;
using nlohmann::json;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result lrmt_run(std::vector<std::string> args) {
  std::ostringstream out, err;
  int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::string> words(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string w; in >> w;) {
    while (!w.empty() && w.back() == '.') w.pop_back();
    out.push_back(w);
  }
  return out;
}

}  // namespace

TEST(Config, DefaultsAndTypedViews) {
  PipelineConfig c;
  EXPECT_EQ(c.get("workdir"), "work");
  EXPECT_EQ(c.get_uint("model.hidden"), 256u);
  EXPECT_DOUBLE_EQ(c.split_ratios().test, 0.1);
  EXPECT_EQ(c.augment_policy().ops.size(), 4u);
  EXPECT_EQ(c.train_config(false).teacher_forcing_ratio, 0.5);
  EXPECT_EQ(c.smoothing(), bleu::Smoothing::none);
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  PipelineConfig c;
  EXPECT_THROW(c.set("model.hiden", "8"), UsageError);
  EXPECT_THROW(c.set("model.hidden", "eight"), UsageError);
  EXPECT_THROW(c.set("split.ratios", "0.8,0.1"), UsageError);
  EXPECT_THROW(c.set("split.ratios", "0.5,0.1,0.1"), UsageError);
  EXPECT_THROW(c.set("corpus.lowercase", "maybe"), UsageError);
  EXPECT_THROW(c.set_assignment("seed"), UsageError);
  c.set_assignment("seed = 9");
  EXPECT_EQ(c.get_uint("seed"), 9u);
}

TEST(Config, FileErrorsNameTheLine) {
  TempDir dir;
  write_file(dir / "a.conf", "# comment\nseed = 3\n\nmodel.hidden = x\n");
  try {
    load_config(dir / "a.conf");
    FAIL();
  } catch (const UsageError& e) {
    EXPECT_NE(std::string(e.what()).find("line 4"), std::string::npos) << e.what();
  }
  write_file(dir / "b.conf", "seed = 3\nsplit.ratios = 0.7, 0.2, 0.1\n");
  auto c = load_config(dir / "b.conf");
  EXPECT_EQ(c.get_uint("seed"), 3u);
  EXPECT_DOUBLE_EQ(c.split_ratios().train, 0.7);
}

TEST(Config, HashIsCanonicalAndIgnoresWorkdir) {
  PipelineConfig a, b;
  a.set("augment.alpha", "0.1");
  b.set("augment.alpha", "0.10");
  EXPECT_EQ(a.hash(), b.hash());
  b.set("workdir", "/elsewhere");
  EXPECT_EQ(a.hash(), b.hash());
  b.set("seed", "2");
  EXPECT_NE(a.hash(), b.hash());
  EXPECT_EQ(a.hash().size(), 64u);
}

TEST(Config, ModuleSeedsAreDerivedAndDistinct) {
  PipelineConfig c;
  std::set<std::uint64_t> seeds = {c.module_seed("split"), c.module_seed("embed"), c.module_seed("augment"),
                                   c.module_seed("model"), c.module_seed("train")};
  EXPECT_EQ(seeds.size(), 5u);
  EXPECT_EQ(c.embedding_config().seed, c.module_seed("embed"));
  PipelineConfig d;
  d.set("seed", "2");
  EXPECT_NE(c.module_seed("split"), d.module_seed("split"));
}

TEST(Synthetic, DeterministicAndReversible) {
  auto a = synthetic_corpus({200, 5});
  auto b = synthetic_corpus({200, 5});
  EXPECT_EQ(a.units, b.units);
  EXPECT_NE(synthetic_corpus({200, 6}).units, a.units);
  auto lex = synthetic_lexicon(60, 5);
  EXPECT_EQ(lex.forward.size(), 60u);
  EXPECT_EQ(lex.backward.size(), 60u);
  std::size_t variable = 0;
  std::set<std::string> ids;
  for (const auto& u : a.units) {
    EXPECT_TRUE(ids.insert(u.id).second);
    EXPECT_EQ(corpus::normalize_text(u.src), u.src);
    auto s = words(u.src), t = words(u.tgt);
    ASSERT_EQ(s.size(), t.size());
    for (std::size_t i = 0; i < s.size(); ++i) EXPECT_EQ(lex.backward.at(t[i]), s[i]);
    variable += std::count(u.src.begin(), u.src.end(), '.') != std::count(u.tgt.begin(), u.tgt.end(), '.');
  }
  EXPECT_GT(variable, 0u);
  EXPECT_LT(variable, a.units.size() / 2);
}

TEST(ExportFt, SchemaValidatorCatchesViolations) {
  auto schema = ft_schema();
  aligner::SplitItem item{"isor do", "god", "GEN.1.1", 0, aligner::Group::one2one};
  auto rec = ft_record(item, "train", {"sat", "en", "translate {src} to {tgt}: "});
  EXPECT_EQ(rec["input_text"], "translate sat to en: isor do");
  EXPECT_TRUE(validate_json(schema, rec).empty());

  auto missing = rec;
  missing.erase("target_text");
  EXPECT_FALSE(validate_json(schema, missing).empty());
  auto wrong_type = rec;
  wrong_type["index"] = "0";
  EXPECT_FALSE(validate_json(schema, wrong_type).empty());
  auto bad_enum = rec;
  bad_enum["split"] = "dev";
  EXPECT_FALSE(validate_json(schema, bad_enum).empty());
  auto extra = rec;
  extra["note"] = 1;
  EXPECT_FALSE(validate_json(schema, extra).empty());
  auto empty = rec;
  empty["target_text"] = "";
  EXPECT_FALSE(validate_json(schema, empty).empty());
  auto negative = rec;
  negative["index"] = -1;
  EXPECT_FALSE(validate_json(schema, negative).empty());
}

TEST(Run, UsageErrorsExitTwo) {
  EXPECT_EQ(lrmt_run({}).code, 2);
  EXPECT_EQ(lrmt_run({"frobnicate"}).code, 2);
  EXPECT_EQ(lrmt_run({"--set", "nope=1", "config"}).code, 2);
  EXPECT_EQ(lrmt_run({"--help"}).code, 0);
  auto r = lrmt_run({"--set", "model.hidden=8", "config"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("model.hidden = 8"), std::string::npos);
  EXPECT_NE(r.out.find("config_hash"), std::string::npos);
}

TEST(Run, MissingInputNamesThePath) {
  TempDir dir;
  auto r = lrmt_run({"--workdir", dir.path().string(), "split"});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find((dir / "corpus.jsonl").string()), std::string::npos) << r.err;
  r = lrmt_run({"--workdir", dir.path().string(), "ingest", "--input", (dir / "absent.jsonl").string()});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("absent.jsonl"), std::string::npos);
}

TEST(Run, SplitIsReproducible) {
  TempDir a, b;
  for (const auto* dir : {&a, &b}) {
    ASSERT_EQ(lrmt_run({"--workdir", dir->path().string(), "ingest", "--synthetic", "300"}).code, 0);
    auto r = lrmt_run({"--workdir", dir->path().string(), "split", "--ratios", "0.8,0.1,0.1", "--seed", "7"});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  for (const char* f : {"split/train.jsonl", "split/test.jsonl", "split/validation.jsonl", "split/manifest.json",
                        "manifests/split.json"})
    EXPECT_EQ(sha256_file(a / f), sha256_file(b / f)) << f;
  auto m = json::parse(read_file(a / "manifests/split.json"));
  EXPECT_TRUE(m.contains("config_hash"));
  EXPECT_TRUE(m["inputs"].contains("corpus.jsonl"));
  EXPECT_EQ(m["outputs"]["split/train.jsonl"], sha256_file(a / "split/train.jsonl"));
}

TEST(Run, EvaluateIdentityPrintsHundred) {
  TempDir dir;
  write_file(dir / "h.txt", "the cat is on the mat\nisor do sermae sirjaukeda\n");
  auto r = lrmt_run({"--workdir", dir.path().string(), "evaluate", "--hyp", (dir / "h.txt").string(), "--ref",
                     (dir / "h.txt").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.rfind("BLEU4 = 100.00", 0), 0u) << r.out;
  auto report = json::parse(read_file(dir / "eval/test.json"));
  EXPECT_DOUBLE_EQ(report["score"].get<double>(), 1.0);
  write_file(dir / "short.txt", "one line\n");
  EXPECT_EQ(lrmt_run({"--workdir", dir.path().string(), "evaluate", "--hyp", (dir / "short.txt").string(), "--ref",
                      (dir / "h.txt").string()})
                .code,
            3);
}

TEST(Run, ConfigMismatchWarnsOrFails) {
  TempDir dir;
  auto wd = dir.path().string();
  ASSERT_EQ(lrmt_run({"--workdir", wd, "ingest", "--synthetic", "50"}).code, 0);
  auto warn = lrmt_run({"--workdir", wd, "--seed", "3", "split"});
  EXPECT_EQ(warn.code, 0);
  EXPECT_NE(warn.err.find("warning"), std::string::npos);
  auto strict = lrmt_run({"--workdir", wd, "--seed", "3", "--strict", "split"});
  EXPECT_EQ(strict.code, 2);
  EXPECT_EQ(lrmt_run({"--workdir", wd, "--strict", "split"}).code, 0);

  write_file(dir / "corpus.jsonl", read_file(dir / "corpus.jsonl") + "\n");
  EXPECT_EQ(lrmt_run({"--workdir", wd, "--strict", "split"}).code, 2);
}

TEST(Run, WorkdirFromEnvironment) {
  TempDir dir;
  ::setenv("LRMT_WORKDIR", dir.path().string().c_str(), 1);
  auto r = lrmt_run({"ingest", "--synthetic", "10"});
  ::unsetenv("LRMT_WORKDIR");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(std::filesystem::exists(dir / "corpus.jsonl"));
}

TEST(Run, FullPipelineOnSyntheticCorpus) {
  TempDir dir;
  write_file(dir / "run.conf",
             "workdir = " + dir.path().string() +
                 "\nseed = 11\nembed.dim = 20\nembed.epochs = 2\ntokenizer.src_vocab_size = 200\n"
                 "tokenizer.tgt_vocab_size = 200\nmodel.hidden = 32\nmodel.max_len = 40\ntrain.epochs = 2\n"
                 "augment.ops = random_swap,random_delete,embed_replace\ndata.source = augmented\n");
  const std::string conf = (dir / "run.conf").string();
  auto step = [&](std::vector<std::string> args) {
    args.insert(args.begin(), {"--config", conf, "--strict"});
    auto r = lrmt_run(args);
    EXPECT_EQ(r.code, 0) << args[3] << ": " << r.err;
    return r;
  };
  step({"ingest", "--synthetic", "1000"});
  step({"split"});
  step({"stats"});
  step({"embed"});
  auto first = read_file(dir / "corpus.jsonl");
  auto query = words(json::parse(first.substr(0, first.find('\n')))["src"].get<std::string>()).front();
  step({"report", "--word", query});
  step({"tok-train"});
  step({"augment"});
  step({"tok-apply"});
  step({"train"});
  step({"translate"});
  auto eval = step({"evaluate"});
  EXPECT_EQ(eval.out.rfind("BLEU4 = ", 0), 0u);
  auto report = json::parse(read_file(dir / "eval/test.json"));
  EXPECT_GE(report["score"].get<double>(), 0.0);
  EXPECT_LE(report["score"].get<double>(), 1.0);
  step({"export-ft"});
  EXPECT_TRUE(std::filesystem::exists(dir / "export/schema.json"));
  for (const char* stage : {"ingest", "split", "stats", "embed", "report", "tok-train", "augment", "tok-apply", "train",
                            "translate", "evaluate", "export-ft"})
    EXPECT_TRUE(std::filesystem::exists(dir / (std::string("manifests/") + stage + ".json"))) << stage;

  // Re-running a stage with unchanged inputs reproduces its outputs byte for byte.
  auto before = sha256_file(dir / "model/forward.bin");
  step({"train"});
  EXPECT_EQ(sha256_file(dir / "model/forward.bin"), before);
}

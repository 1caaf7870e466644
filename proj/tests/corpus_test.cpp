#include <gtest/gtest.h>

#include "lrmt/corpus.hpp"
#include "lrmt/error.hpp"
#include "lrmt/rng.hpp"
#include "test_util.hpp"

using namespace lrmt;
using namespace lrmt::corpus;
using lrmt::testing::TempDir;
using lrmt::testing::read_file;
using lrmt::testing::write_file;

TEST(NormalizeText, StripsPunctuationKeepsTerminalMarks) {
  EXPECT_EQ(normalize_text("  God   said,  \"Let there be lights.\"  "), "God said Let there be lights.");
}

TEST(NormalizeText, IdentityOnCleanText) { EXPECT_EQ(normalize_text("sirjaukeda"), "sirjaukeda"); }

TEST(NormalizeText, PreservesDiacritics) {
  EXPECT_EQ(normalize_text("nindā khon siñe"), "nindā khon siñe");
  EXPECT_EQ(normalize_text("ađi moñjge"), "ađi moñjge");
}

TEST(NormalizeText, ComposesToNfc) {
  // "a" + COMBINING MACRON -> U+0101
  EXPECT_EQ(normalize_text("ninda\xCC\x84"), "nind\xC4\x81");
}

TEST(NormalizeText, KeepsWordApostrophes) {
  EXPECT_EQ(normalize_text("marsalak'ko hoyok'ma, ar"), "marsalak'ko hoyok'ma ar");
  EXPECT_EQ(normalize_text("'quoted"), "quoted");
  NormalizationPolicy strip;
  strip.keep_apostrophes = false;
  EXPECT_EQ(normalize_text("etak' etak'", strip), "etak etak");
}

TEST(NormalizeText, LowercaseIsOptIn) {
  EXPECT_EQ(normalize_text("Isor Do"), "Isor Do");
  NormalizationPolicy lower;
  lower.lowercase = true;
  EXPECT_EQ(normalize_text("Isor Do", lower), "isor do");
}

TEST(NormalizeText, ExtraPunctuation) {
  NormalizationPolicy p;
  p.extra_punctuation = "+";
  EXPECT_EQ(normalize_text("a+b", p), "a b");
  EXPECT_EQ(normalize_text("a+b"), "a+b");
}

TEST(NormalizeText, RejectsInvalidUtf8) { EXPECT_THROW(normalize_text("bad \xC3\x28 byte"), DataError); }

TEST(NormalizeText, IdempotentOnRandomText) {
  const std::vector<std::string> alphabet = {"a", "B", "ñ", "ā", "\xCC\x84", "đ", " ", "  ", "\t", ",", ".", "!",
                                             "?", "\"", "'", "’", "(", ")", "…", "-", "x", "ç", "\xE2\x80\x9C"};
  Rng rng(42);
  for (int trial = 0; trial < 500; ++trial) {
    std::string s;
    auto len = rng.uniform_below(20);
    for (std::uint64_t i = 0; i < len; ++i) s += alphabet[rng.uniform_below(alphabet.size())];
    for (bool lower : {false, true}) {
      NormalizationPolicy p;
      p.lowercase = lower;
      auto once = normalize_text(s, p);
      EXPECT_EQ(normalize_text(once, p), once) << "input: " << s;
      EXPECT_EQ(once.find("  "), std::string::npos);
      if (!once.empty()) {
        EXPECT_NE(once.front(), ' ');
        EXPECT_NE(once.back(), ' ');
      }
    }
  }
}

TEST(Words, StripsTerminalMarksAtTokenEdges) {
  EXPECT_EQ(words("a b a."), (std::vector<std::string>{"a", "b", "a"}));
  EXPECT_EQ(words("what?! 3.5 ."), (std::vector<std::string>{"what", "3.5"}));
  EXPECT_EQ(strip_terminal_marks("Hello. World."), "Hello World");
}

TEST(LoadCorpus, ReadsJsonlInOrder) {
  TempDir dir;
  write_file(dir / "c.jsonl",
             "{\"id\":\"u1\",\"book\":\"GEN\",\"chapter\":1,\"verse\":1,\"src\":\"Isor, do.\",\"tgt\":\"God.\"}\n"
             "{\"id\":\"u2\",\"book\":\"GEN\",\"chapter\":1,\"verse\":2,\"src\":\"b\",\"tgt\":\"c\"}\n");
  auto c = load_corpus(dir / "c.jsonl", Format::jsonl);
  ASSERT_EQ(c.units.size(), 2u);
  EXPECT_EQ(c.units[0].id, "u1");
  EXPECT_EQ(c.units[0].src, "Isor do.");
  EXPECT_EQ(c.units[1].id, "u2");
  EXPECT_EQ(c.units[1].verse, 2u);
}

TEST(LoadCorpus, ErrorsNameTheLine) {
  TempDir dir;
  write_file(dir / "c.jsonl", "{\"id\":\"u1\",\"src\":\"a\",\"tgt\":\"b\"}\n{\"id\":\"u2\",\"src\":\"a\",\"tgt\":\"\"}\n");
  try {
    load_corpus(dir / "c.jsonl", Format::jsonl);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }

  write_file(dir / "m.jsonl", "{\"id\":\"u1\",\"src\":\"a\",\"tgt\":\"b\"}\n{not json\n");
  try {
    load_corpus(dir / "m.jsonl", Format::jsonl);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }

  // Punctuation-only text normalizes to empty.
  write_file(dir / "p.jsonl", "{\"id\":\"u1\",\"src\":\",,\",\"tgt\":\"b\"}\n");
  EXPECT_THROW(load_corpus(dir / "p.jsonl", Format::jsonl), DataError);
}

TEST(LoadCorpus, DuplicateIdIsNamed) {
  TempDir dir;
  write_file(dir / "c.jsonl", "{\"id\":\"v7\",\"src\":\"a\",\"tgt\":\"b\"}\n{\"id\":\"v7\",\"src\":\"c\",\"tgt\":\"d\"}\n");
  try {
    load_corpus(dir / "c.jsonl", Format::jsonl);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("v7"), std::string::npos);
  }
}

TEST(LoadCorpus, EmptyFileIsAnError) {
  TempDir dir;
  write_file(dir / "e.jsonl", "");
  EXPECT_THROW(load_corpus(dir / "e.jsonl", Format::jsonl), DataError);
  EXPECT_THROW(load_corpus(dir / "missing.jsonl", Format::jsonl), DataError);
}

TEST(LoadCorpus, TsvRequiresHeaderAndSixColumns) {
  TempDir dir;
  write_file(dir / "c.tsv", "id\tbook\tchapter\tverse\tsrc\ttgt\nu1\tGEN\t1\t2\tIsor.\tGod.\n");
  auto c = load_corpus(dir / "c.tsv", Format::tsv);
  ASSERT_EQ(c.units.size(), 1u);
  EXPECT_EQ(c.units[0].chapter, 1u);
  write_file(dir / "bad.tsv", "id\tbook\tchapter\tverse\tsrc\ttgt\nu1\tGEN\t1\tIsor.\tGod.\n");
  EXPECT_THROW(load_corpus(dir / "bad.tsv", Format::tsv), DataError);
  write_file(dir / "nohdr.tsv", "u1\tGEN\t1\t2\tIsor.\tGod.\n");
  EXPECT_THROW(load_corpus(dir / "nohdr.tsv", Format::tsv), DataError);
}

TEST(SaveCorpus, RoundTripIsByteIdentical) {
  TempDir dir;
  const std::string canonical =
      "{\"id\":\"u1\",\"book\":\"GEN\",\"chapter\":1,\"verse\":14,\"src\":\"Isore menkeda Sermare.\",\"tgt\":\"And God said.\"}\n"
      "{\"id\":\"u2\",\"book\":\"GEN\",\"chapter\":1,\"verse\":25,\"src\":\"nindā khon siñe\",\"tgt\":\"night\"}\n";
  write_file(dir / "a.jsonl", canonical);
  for (auto fmt : {Format::jsonl, Format::tsv}) {
    auto c = load_corpus(dir / "a.jsonl", Format::jsonl);
    auto out = dir / (fmt == Format::jsonl ? "b.jsonl" : "b.tsv");
    save_corpus(c, out, fmt);
    auto again = load_corpus(out, fmt);
    EXPECT_EQ(again.units, c.units);
    if (fmt == Format::jsonl) EXPECT_EQ(read_file(out), canonical);
  }
}

TEST(CorpusStats, EmptyCorpusIsAllZero) {
  auto s = corpus_stats(Corpus{}, Side::src, 10);
  EXPECT_EQ(s.unit_count, 0u);
  EXPECT_EQ(s.sentence_count, 0u);
  EXPECT_EQ(s.word_count, 0u);
  EXPECT_EQ(s.unique_word_count, 0u);
  EXPECT_TRUE(s.count_histogram.empty());
  EXPECT_TRUE(s.top_k.empty());
}

TEST(CorpusStats, HandCountedExample) {
  Corpus c;
  c.units.push_back({"u1", "", 0, 0, "a b a.", "x"});
  c.units.push_back({"u2", "", 0, 0, "b c.", "y"});
  auto s = corpus_stats(c, Side::src, 2);
  EXPECT_EQ(s.unit_count, 2u);
  EXPECT_EQ(s.sentence_count, 2u);
  EXPECT_EQ(s.word_count, 5u);
  EXPECT_EQ(s.unique_word_count, 3u);
  EXPECT_EQ(s.count_histogram.at(1), 1u);  // hapax: c
  EXPECT_EQ(s.count_histogram.at(2), 2u);  // a, b
  using P = std::vector<std::pair<std::string, std::uint64_t>>;
  EXPECT_EQ(s.top_k, (P{{"a", 2}, {"b", 2}}));
  EXPECT_EQ(s.bottom_k, (P{{"c", 1}, {"a", 2}}));
}

TEST(CorpusStats, HistogramConservesMass) {
  Rng rng(5);
  Corpus c;
  for (int u = 0; u < 50; ++u) {
    std::string text;
    auto n = 1 + rng.uniform_below(12);
    for (std::uint64_t i = 0; i < n; ++i) {
      text += "w" + std::to_string(rng.uniform_below(30));
      text += rng.bernoulli(0.2) ? ". " : " ";
    }
    c.units.push_back({"u" + std::to_string(u), "", 0, 0, normalize_text(text), "t"});
  }
  auto s = corpus_stats(c, Side::src, 5);
  std::uint64_t mass = 0, types = 0;
  for (auto [freq, n] : s.count_histogram) {
    mass += freq * n;
    types += n;
  }
  EXPECT_EQ(mass, s.word_count);
  EXPECT_EQ(types, s.unique_word_count);
}

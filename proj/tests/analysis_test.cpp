#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "lrmt/embeddings.hpp"
#include "lrmt/error.hpp"
#include "lrmt/frequency.hpp"
#include "lrmt/rng.hpp"
#include "test_util.hpp"

using namespace lrmt;
using namespace lrmt::analysis;

namespace {

using Sentences = std::vector<std::vector<std::string>>;

Sentences two_clusters(std::uint64_t seed) {
  Rng rng(seed);
  Sentences out;
  for (char prefix : {'a', 'b'})
    for (int i = 0; i < 500; ++i) {
      std::vector<std::string> s;
      for (int k = 0; k < 8; ++k) s.push_back(std::string(1, prefix) + std::to_string(1 + rng.uniform_below(5)));
      out.push_back(s);
    }
  return out;
}

double cluster_gap(const EmbeddingModel& m) {
  double intra = 0, inter = 0;
  int ni = 0, nx = 0;
  for (int i = 1; i <= 5; ++i)
    for (int j = 1; j <= 5; ++j) {
      for (char p : {'a', 'b'})
        if (i < j) {
          intra += m.cosine(std::string(1, p) + std::to_string(i), std::string(1, p) + std::to_string(j));
          ++ni;
        }
      inter += m.cosine("a" + std::to_string(i), "b" + std::to_string(j));
      ++nx;
    }
  return intra / ni - inter / nx;
}

EmbeddingConfig small_config(std::uint64_t seed) {
  EmbeddingConfig c;
  c.dim = 20;
  c.epochs = 3;
  c.seed = seed;
  return c;
}

}  // namespace

TEST(FrequencyReport, Examples) {
  std::vector<std::string> t1 = {"a", "a", "b"};
  auto most = frequency_report(t1, 2, Direction::most);
  using R = std::vector<std::pair<std::string, std::uint64_t>>;
  EXPECT_EQ(most.ranked, (R{{"a", 2}, {"b", 1}}));
  std::vector<std::string> t2 = {"a", "a", "b", "c"};
  EXPECT_EQ(frequency_report(t2, 2, Direction::least).ranked, (R{{"b", 1}, {"c", 1}}));
  EXPECT_TRUE(frequency_report(std::vector<std::string>{}, 3, Direction::most).ranked.empty());
  EXPECT_THROW(frequency_report(t1, 0, Direction::most), UsageError);
}

TEST(FrequencyReport, FullReportSumsToTokenCount) {
  Rng rng(1);
  std::vector<std::string> tokens;
  for (int i = 0; i < 1000; ++i) tokens.push_back("w" + std::to_string(rng.uniform_below(50)));
  auto counts = count_tokens(tokens);
  auto r = frequency_report(counts, counts.size(), Direction::most);
  std::uint64_t total = 0;
  for (std::size_t i = 0; i < r.ranked.size(); ++i) {
    total += r.ranked[i].second;
    if (i) {
      EXPECT_GE(r.ranked[i - 1].second, r.ranked[i].second);
      if (r.ranked[i - 1].second == r.ranked[i].second) EXPECT_LT(r.ranked[i - 1].first, r.ranked[i].first);
    }
  }
  EXPECT_EQ(total, tokens.size());
  std::ostringstream out;
  write_frequency_tsv(frequency_report(counts, 2, Direction::most), out);
  EXPECT_EQ(out.str().substr(0, 15), "rank\tword\tcount");
}

TEST(Embeddings, SelfCosineIsOne) {
  auto m = train_embeddings(two_clusters(1), small_config(1));
  for (std::size_t i = 0; i < m.size(); ++i) EXPECT_EQ(m.cosine(i, i), 1.0);
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = 0; j < m.size(); ++j) {
      EXPECT_LE(m.cosine(i, j), 1.0);
      EXPECT_GE(m.cosine(i, j), -1.0);
    }
}

TEST(Embeddings, TwoClustersSeparate) {
  for (std::uint64_t seed : {1, 2}) {
    EmbeddingConfig c;
    c.seed = seed;
    auto m = train_embeddings(two_clusters(seed), c);
    EXPECT_GT(cluster_gap(m), 0.2) << "seed " << seed;
  }
}

TEST(Embeddings, DeterministicForSeed) {
  auto s = two_clusters(3);
  auto a = train_embeddings(s, small_config(9));
  auto b = train_embeddings(s, small_config(9));
  auto c = train_embeddings(s, small_config(10));
  EXPECT_EQ(a.vocab(), b.vocab());
  EXPECT_EQ(a.vectors(), b.vectors());
  EXPECT_NE(a.vectors(), c.vectors());
}

TEST(Embeddings, MinCountDropsRareWords) {
  auto s = two_clusters(4);
  s.push_back({"rare", "a1"});
  auto c = small_config(1);
  c.min_count = 2;
  auto m = train_embeddings(s, c);
  EXPECT_FALSE(m.contains("rare"));
  EXPECT_TRUE(m.contains("a1"));
  c.min_count = 100000;
  EXPECT_THROW(train_embeddings(s, c), DataError);
  c.min_count = 1;
  c.dim = 1;
  EXPECT_THROW(train_embeddings(s, c), UsageError);
  EXPECT_THROW(train_embeddings({}, small_config(1)), UsageError);
}

TEST(Embeddings, MostSimilarContract) {
  auto m = train_embeddings(two_clusters(5), small_config(5));
  auto n = most_similar(m, "a1", 5);
  ASSERT_EQ(n.size(), 5u);
  for (std::size_t i = 0; i < n.size(); ++i) {
    EXPECT_NE(n[i].first, "a1");
    EXPECT_TRUE(m.contains(n[i].first));
    if (i) EXPECT_GE(n[i - 1].second, n[i].second);
  }
  auto far = least_similar(m, "a1", 3);
  for (std::size_t i = 1; i < far.size(); ++i) EXPECT_LE(far[i - 1].second, far[i].second);
  try {
    most_similar(m, "zzz", 3);
    FAIL();
  } catch (const UsageError& e) {
    EXPECT_NE(std::string(e.what()).find("zzz"), std::string::npos);
  }
}

TEST(Embeddings, AnalogyWithSinglePositiveIsMostSimilar) {
  auto m = train_embeddings(two_clusters(6), small_config(6));
  auto a = analogy(m, {"b2"}, {}, 4);
  auto b = most_similar(m, "b2", 4);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].first, b[i].first);
    EXPECT_NEAR(a[i].second, b[i].second, 1e-12);
  }
}

TEST(Embeddings, AnalogyRecoversPlantedOffset) {
  std::vector<std::string> vocab = {"king", "queen", "man", "woman", "apple", "stone"};
  std::vector<double> v = {1, 0, 1, 0,  //
                           0, 1, 1, 0,  //
                           1, 0, 0.1, 0,  //
                           0, 1, 0.1, 0,  //
                           0.3, 0.3, -1, 0.5,  //
                           -1, 0.2, 0, 1};
  EmbeddingConfig c;
  c.dim = 4;
  EmbeddingModel m(vocab, v, c);
  auto r = analogy(m, {"king", "woman"}, {"man"}, 3);
  ASSERT_FALSE(r.empty());
  EXPECT_EQ(r[0].first, "queen");
  for (const auto& [w, s] : r) {
    EXPECT_NE(w, "king");
    EXPECT_NE(w, "woman");
    EXPECT_NE(w, "man");
  }
  EXPECT_THROW(analogy(m, {"king", "nope"}, {}, 1), UsageError);
}

TEST(Embeddings, ZeroVectorCosineIsZero) {
  EmbeddingConfig c;
  c.dim = 2;
  EmbeddingModel m({"x", "y"}, {0, 0, 1, 0}, c);
  EXPECT_EQ(m.cosine("x", "y"), 0.0);
  EXPECT_EQ(m.cosine("x", "x"), 0.0);
}

TEST(Projection, RowsAndClasses) {
  auto m = train_embeddings(two_clusters(7), small_config(7));
  auto pts = project_2d(m, "a3", 3, 4);
  ASSERT_EQ(pts.size(), 8u);
  EXPECT_EQ(pts[0].word, "a3");
  EXPECT_EQ(std::count_if(pts.begin(), pts.end(), [](auto& p) { return p.cls == PointClass::source; }), 1);
  EXPECT_EQ(std::count_if(pts.begin(), pts.end(), [](auto& p) { return p.cls == PointClass::similar; }), 3);
  EXPECT_EQ(std::count_if(pts.begin(), pts.end(), [](auto& p) { return p.cls == PointClass::dissimilar; }), 4);
  EXPECT_THROW(project_2d(m, "a3", 6, 6), UsageError);
  std::ostringstream out;
  write_projection_tsv(pts, out);
  EXPECT_EQ(out.str().substr(0, 13), "word\tx\ty\tclas");
}

TEST(Projection, PcaIsLosslessOnPlanarData) {
  Rng rng(8);
  const std::size_t dim = 10, n = 12;
  std::vector<double> u(dim), w(dim), offset(dim);
  for (std::size_t k = 0; k < dim; ++k) {
    u[k] = rng.uniform(-1, 1);
    w[k] = rng.uniform(-1, 1);
    offset[k] = rng.uniform(-3, 3);
  }
  std::vector<double> rows;
  for (std::size_t i = 0; i < n; ++i) {
    double a = rng.uniform(-2, 2), b = rng.uniform(-2, 2);
    for (std::size_t k = 0; k < dim; ++k) rows.push_back(offset[k] + a * u[k] + b * w[k]);
  }
  auto p = pca_2d(rows, dim);
  ASSERT_EQ(p.size(), n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      double full = 0;
      for (std::size_t k = 0; k < dim; ++k) full += std::pow(rows[i * dim + k] - rows[j * dim + k], 2);
      double proj = std::pow(p[i].first - p[j].first, 2) + std::pow(p[i].second - p[j].second, 2);
      EXPECT_NEAR(std::sqrt(proj), std::sqrt(full), 1e-9);
    }
}

TEST(EmbeddingFile, RoundTrip) {
  lrmt::testing::TempDir dir;
  auto m = train_embeddings(two_clusters(9), small_config(9));
  save_embeddings(m, dir / "e.bin");
  auto back = load_embeddings(dir / "e.bin");
  EXPECT_EQ(back.vocab(), m.vocab());
  EXPECT_EQ(back.vectors(), m.vectors());
  EXPECT_EQ(back.config().seed, 9u);
  lrmt::testing::write_file(dir / "bad.bin", "LRMTEMB");
  EXPECT_THROW(load_embeddings(dir / "bad.bin"), DataError);
}

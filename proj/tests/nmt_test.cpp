#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "lrmt/error.hpp"
#include "lrmt/nmt/model.hpp"
#include "lrmt/nmt/seq2seq.hpp"
#include "lrmt/rng.hpp"
#include "lrmt/subword.hpp"
#include "test_util.hpp"

using namespace lrmt;
using namespace lrmt::nmt;
using lrmt::subword::kEos;
using lrmt::subword::kPad;
using lrmt::subword::kSos;

namespace {

ModelConfig tiny(std::uint64_t seed = 1) {
  ModelConfig c;
  c.hidden = 8;
  c.max_len = 6;
  c.src_vocab = 12;
  c.tgt_vocab = 12;
  c.dropout = 0.1;
  c.seed = seed;
  return c;
}

std::vector<TokenId> random_ids(Rng& rng, std::size_t len, std::size_t vocab) {
  std::vector<TokenId> ids;
  for (std::size_t i = 0; i < len; ++i) ids.push_back(static_cast<TokenId>(4 + rng.uniform_below(vocab - 4)));
  return ids;
}

std::vector<double> flatten(const Parameters& p) {
  std::vector<double> out;
  for (const auto& t : p.tensors()) out.insert(out.end(), t.data.begin(), t.data.end());
  return out;
}

std::vector<SequencePair> copy_pairs(std::uint64_t seed, std::size_t n, std::size_t vocab, std::size_t max_len) {
  Rng rng(seed);
  std::vector<SequencePair> pairs;
  for (std::size_t i = 0; i < n; ++i) {
    auto ids = random_ids(rng, 1 + rng.uniform_below(max_len - 1), vocab);
    pairs.push_back({ids, ids});
  }
  return pairs;
}

}  // namespace

TEST(InitModel, ShapesAndDeterminism) {
  auto a = init_model(tiny(3));
  auto b = init_model(tiny(3));
  auto c = init_model(tiny(4));
  EXPECT_EQ(flatten(a.params), flatten(b.params));
  EXPECT_NE(flatten(a.params), flatten(c.params));
  EXPECT_EQ(a.params.enc_embedding.rows(), 12);
  EXPECT_EQ(a.params.enc_embedding.cols(), 8);
  EXPECT_EQ(a.params.attn_w.rows(), 6);
  EXPECT_EQ(a.params.attn_w.cols(), 16);
  EXPECT_EQ(a.params.comb_w.rows(), 8);
  EXPECT_EQ(a.params.comb_w.cols(), 16);
  EXPECT_EQ(a.params.out_w.rows(), 12);
  EXPECT_EQ(a.params.dec_gru.w_hn.rows(), 8);
  const double bound = 1.0 / std::sqrt(8.0);
  for (double x : flatten(a.params)) EXPECT_LE(std::abs(x), bound);
  EXPECT_NO_THROW(check_model(a));
}

TEST(InitModel, RejectsBadConfig) {
  auto c = tiny();
  c.max_len = 1;
  EXPECT_THROW(init_model(c), UsageError);
  c = tiny();
  c.tgt_vocab = 3;
  EXPECT_THROW(init_model(c), UsageError);
  c = tiny();
  c.dropout = 1.0;
  EXPECT_THROW(init_model(c), UsageError);
}

TEST(Encoder, ZeroParametersKeepZeroHidden) {
  Seq2SeqModel m{tiny(), Parameters::zeros(tiny())};
  std::vector<TokenId> src = {4, 5, 6};
  auto enc = encode_sequence(m, src);
  EXPECT_EQ(enc.final_hidden.norm(), 0.0);
  EXPECT_EQ(enc.outputs.norm(), 0.0);
}

TEST(Encoder, PaddingRowsAreZero) {
  auto m = init_model(tiny());
  std::vector<TokenId> src = {7};
  auto enc = encode_sequence(m, src);
  EXPECT_GT(enc.outputs.row(0).norm(), 0.0);
  for (Eigen::Index r = 1; r < enc.outputs.rows(); ++r) EXPECT_EQ(enc.outputs.row(r).norm(), 0.0);
  std::vector<TokenId> too_long(7, 4);
  try {
    encode_sequence(m, too_long);
    FAIL();
  } catch (const UsageError& e) {
    EXPECT_NE(std::string(e.what()).find("6"), std::string::npos);
  }
  EXPECT_THROW(encode_sequence(m, std::vector<TokenId>{}), UsageError);
}

TEST(Encoder, FiniteOnRandomInputs) {
  auto m = init_model(tiny(9));
  Rng rng(9);
  for (int i = 0; i < 1000; ++i) {
    auto ids = random_ids(rng, 1 + rng.uniform_below(6), 12);
    auto enc = encode_sequence(m, ids);
    EXPECT_TRUE(enc.final_hidden.allFinite());
    EXPECT_LE(enc.final_hidden.cwiseAbs().maxCoeff(), 1.0);
  }
}

TEST(Decoder, DistributionsNormalize) {
  Rng rng(2);
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    auto m = init_model(tiny(seed));
    auto enc = encode_sequence(m, random_ids(rng, 3, 12));
    auto step = decode_step(m, kSos, enc.final_hidden, enc.outputs, false, nullptr);
    EXPECT_NEAR(step.attention.sum(), 1.0, 1e-12);
    EXPECT_NEAR(step.log_probs.array().exp().sum(), 1.0, 1e-9);
    auto again = decode_step(m, kSos, enc.final_hidden, enc.outputs, false, nullptr);
    EXPECT_EQ(step.log_probs, again.log_probs);
    EXPECT_EQ(step.hidden, again.hidden);
  }
  auto m = init_model(tiny());
  auto enc = encode_sequence(m, std::vector<TokenId>{4});
  EXPECT_THROW(decode_step(m, 12, enc.final_hidden, enc.outputs, false, nullptr), UsageError);
}

TEST(Loss, FullTeacherForcingFeedsGoldSequence) {
  auto m = init_model(tiny());
  SequencePair p{{4, 5, 6}, {7, 8, 9, 10}};
  Rng rng(1);
  auto r = loss_and_gradients(m, p, {1.0, false}, &rng, nullptr);
  EXPECT_EQ(r.decoder_inputs, (std::vector<TokenId>{kSos, 7, 8, 9, 10}));
  EXPECT_GT(r.loss, 0.0);
}

TEST(Loss, UnusedEmbeddingRowsGetZeroGradient) {
  auto m = init_model(tiny());
  SequencePair p{{4, 5}, {6, 7}};
  auto g = Parameters::zeros(m.config);
  loss_and_gradients(m, p, {1.0, false}, nullptr, &g);
  for (int row : {8, 9, 10, 11}) {
    EXPECT_EQ(g.enc_embedding.row(row).norm(), 0.0);
    EXPECT_EQ(g.dec_embedding.row(row).norm(), 0.0);
  }
  EXPECT_GT(g.enc_embedding.row(4).norm(), 0.0);
  EXPECT_GT(g.dec_embedding.row(6).norm(), 0.0);
}

TEST(GradientCheck, AnalyticMatchesFiniteDifferences) {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    auto m = init_model(tiny(seed));
    Rng rng(seed + 100);
    SequencePair p{random_ids(rng, 4, 12), random_ids(rng, 3, 12)};
    GradientCheckOptions o;
    o.seed = seed;
    auto r = gradient_check(m, p, o);
    EXPECT_EQ(r.checked, 200u);
    EXPECT_LT(r.max_relative_error, 1e-4) << "seed " << seed << " worst " << r.worst_tensor;
    o.corrupt_tensor = "decoder.out_w";
    EXPECT_GT(gradient_check(m, p, o).max_relative_error, 0.5);
  }
}

TEST(Train, ZeroLearningRateLeavesParameters) {
  auto m = init_model(tiny());
  auto before = flatten(m.params);
  TrainConfig tc;
  tc.epochs = 2;
  tc.learning_rate = 0;
  train(m, copy_pairs(1, 10, 12, 6), tc);
  EXPECT_EQ(flatten(m.params), before);
  tc.learning_rate = -1;
  EXPECT_THROW(tc.validate(), UsageError);
  tc = TrainConfig{};
  tc.teacher_forcing_ratio = 1.5;
  EXPECT_THROW(tc.validate(), UsageError);
}

TEST(Train, DeterministicForSeed) {
  auto pairs = copy_pairs(2, 20, 12, 6);
  TrainConfig tc;
  tc.epochs = 2;
  auto a = init_model(tiny(5));
  auto b = init_model(tiny(5));
  auto ha = train(a, pairs, tc);
  auto hb = train(b, pairs, tc);
  EXPECT_EQ(ha.train_loss, hb.train_loss);
  EXPECT_EQ(flatten(a.params), flatten(b.params));
}

TEST(Train, SmallCopyTaskLearns) {
  ModelConfig c;
  c.hidden = 32;
  c.max_len = 6;
  c.src_vocab = c.tgt_vocab = 10;
  c.seed = 3;
  auto m = init_model(c);
  auto pairs = copy_pairs(3, 60, 10, 6);
  TrainConfig tc;
  tc.epochs = 5;
  tc.learning_rate = 0.05;
  tc.teacher_forcing_ratio = 1.0;
  std::vector<SequencePair> val(pairs.begin(), pairs.begin() + 10);
  auto h = train(m, pairs, tc, &val);
  ASSERT_EQ(h.train_loss.size(), 5u);
  ASSERT_EQ(h.validation_loss.size(), 5u);
  EXPECT_LT(h.train_loss.back(), h.train_loss.front());
  std::ostringstream csv;
  write_loss_csv(h, csv);
  EXPECT_EQ(csv.str().substr(0, 16), "epoch,mean_loss\n");
}

TEST(Translate, RespectsLimitsAndNormalizes) {
  auto m = init_model(tiny(6));
  Rng rng(6);
  for (int i = 0; i < 50; ++i) {
    auto src = random_ids(rng, 1 + rng.uniform_below(5), 12);
    auto t = translate(m, src, 4);
    EXPECT_LE(t.ids.size(), 4u);
    for (auto id : t.ids) {
      EXPECT_NE(id, kPad);
      EXPECT_NE(id, kSos);
      EXPECT_NE(id, kEos);
    }
    for (const auto& row : t.attention) {
      double s = 0;
      for (double a : row) s += a;
      EXPECT_NEAR(s, 1.0, 1e-9);
    }
  }
}

TEST(Checkpoint, RoundTripIsBitwise) {
  lrmt::testing::TempDir dir;
  auto m = init_model(tiny(7));
  save_checkpoint(m, dir / "m.bin");
  auto back = load_checkpoint(dir / "m.bin");
  EXPECT_EQ(flatten(back.params), flatten(m.params));
  EXPECT_EQ(back.config.hidden, 8u);
  std::vector<TokenId> src = {4, 9, 5};
  EXPECT_EQ(translate(back, src, 5).ids, translate(m, src, 5).ids);

  auto bytes = lrmt::testing::read_file(dir / "m.bin");
  lrmt::testing::write_file(dir / "short.bin", bytes.substr(0, bytes.size() - 3));
  EXPECT_THROW(load_checkpoint(dir / "short.bin"), DataError);
  lrmt::testing::write_file(dir / "magic.bin", "NOTAMODEL" + bytes);
  EXPECT_THROW(load_checkpoint(dir / "magic.bin"), DataError);
}

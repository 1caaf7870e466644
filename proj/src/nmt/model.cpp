#include <cmath>

#include "lrmt/error.hpp"
#include "lrmt/nmt/model.hpp"
#include "lrmt/rng.hpp"

namespace lrmt::nmt {

void ModelConfig::validate() const {
  if (hidden == 0) throw UsageError("hidden size must be positive");
  if (max_len < 2) throw UsageError("max_len must be >= 2");
  if (!(dropout >= 0 && dropout < 1)) throw UsageError("dropout must be in [0, 1)");
  if (src_vocab < 4 || tgt_vocab < 4) throw UsageError("vocabularies must hold at least the 4 special tokens");
}

namespace {

GruParams gru_zeros(std::size_t in, std::size_t h) {
  const auto H = static_cast<Eigen::Index>(h), I = static_cast<Eigen::Index>(in);
  GruParams g;
  g.w_ir = g.w_iz = g.w_in = Matrix::Zero(H, I);
  g.w_hr = g.w_hz = g.w_hn = Matrix::Zero(H, H);
  g.b_ir = g.b_iz = g.b_in = g.b_hr = g.b_hz = g.b_hn = Vector::Zero(H);
  return g;
}

template <typename P, typename F>
void visit_gru(P& g, const std::string& prefix, F&& f) {
  f(prefix + ".w_ir", g.w_ir);
  f(prefix + ".w_iz", g.w_iz);
  f(prefix + ".w_in", g.w_in);
  f(prefix + ".w_hr", g.w_hr);
  f(prefix + ".w_hz", g.w_hz);
  f(prefix + ".w_hn", g.w_hn);
  f(prefix + ".b_ir", g.b_ir);
  f(prefix + ".b_iz", g.b_iz);
  f(prefix + ".b_in", g.b_in);
  f(prefix + ".b_hr", g.b_hr);
  f(prefix + ".b_hz", g.b_hz);
  f(prefix + ".b_hn", g.b_hn);
}

template <typename P, typename F>
void visit(P& p, F&& f) {
  f(std::string("encoder.embedding"), p.enc_embedding);
  visit_gru(p.enc_gru, "encoder.gru", f);
  f(std::string("decoder.embedding"), p.dec_embedding);
  f(std::string("decoder.attn_w"), p.attn_w);
  f(std::string("decoder.attn_b"), p.attn_b);
  f(std::string("decoder.comb_w"), p.comb_w);
  f(std::string("decoder.comb_b"), p.comb_b);
  visit_gru(p.dec_gru, "decoder.gru", f);
  f(std::string("decoder.out_w"), p.out_w);
  f(std::string("decoder.out_b"), p.out_b);
}

}  // namespace

Parameters Parameters::zeros(const ModelConfig& c) {
  const auto H = static_cast<Eigen::Index>(c.hidden);
  const auto L = static_cast<Eigen::Index>(c.max_len);
  Parameters p;
  p.enc_embedding = Matrix::Zero(static_cast<Eigen::Index>(c.src_vocab), H);
  p.enc_gru = gru_zeros(c.hidden, c.hidden);
  p.dec_embedding = Matrix::Zero(static_cast<Eigen::Index>(c.tgt_vocab), H);
  p.attn_w = Matrix::Zero(L, 2 * H);
  p.attn_b = Vector::Zero(L);
  p.comb_w = Matrix::Zero(H, 2 * H);
  p.comb_b = Vector::Zero(H);
  p.dec_gru = gru_zeros(c.hidden, c.hidden);
  p.out_w = Matrix::Zero(static_cast<Eigen::Index>(c.tgt_vocab), H);
  p.out_b = Vector::Zero(static_cast<Eigen::Index>(c.tgt_vocab));
  return p;
}

std::vector<TensorView> Parameters::tensors() {
  std::vector<TensorView> out;
  visit(*this, [&](const std::string& name, auto& t) {
    out.push_back({name, std::span<double>(t.data(), static_cast<std::size_t>(t.size())),
                   static_cast<std::size_t>(t.rows()), static_cast<std::size_t>(t.cols())});
  });
  return out;
}

std::vector<ConstTensorView> Parameters::tensors() const {
  std::vector<ConstTensorView> out;
  visit(*this, [&](const std::string& name, const auto& t) {
    out.push_back({name, std::span<const double>(t.data(), static_cast<std::size_t>(t.size())),
                   static_cast<std::size_t>(t.rows()), static_cast<std::size_t>(t.cols())});
  });
  return out;
}

std::size_t Parameters::parameter_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors()) n += t.data.size();
  return n;
}

Seq2SeqModel init_model(const ModelConfig& config) {
  config.validate();
  Seq2SeqModel model{config, Parameters::zeros(config)};
  Rng rng(config.seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(config.hidden));
  for (auto& t : model.params.tensors())
    for (auto& x : t.data) x = rng.uniform(-bound, bound);
  return model;
}

void check_model(const Seq2SeqModel& model) {
  model.config.validate();
  auto expected = Parameters::zeros(model.config);
  auto want = std::as_const(expected).tensors();
  auto have = model.params.tensors();
  for (std::size_t i = 0; i < want.size(); ++i) {
    if (have[i].rows != want[i].rows || have[i].cols != want[i].cols)
      throw DataError("tensor " + want[i].name + " has shape " + std::to_string(have[i].rows) + "x" +
                      std::to_string(have[i].cols) + ", expected " + std::to_string(want[i].rows) + "x" +
                      std::to_string(want[i].cols));
    for (double x : have[i].data)
      if (!std::isfinite(x)) throw NumericalError("tensor " + want[i].name + " has a non-finite entry");
  }
}

}  // namespace lrmt::nmt

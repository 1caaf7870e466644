#include <cmath>
#include <limits>

#include "lrmt/error.hpp"
#include "lrmt/nmt/seq2seq.hpp"

namespace lrmt::nmt {

namespace {

constexpr TokenId kPad = 0;
constexpr TokenId kUnk = 1;
constexpr TokenId kSos = 2;
constexpr TokenId kEos = 3;

double sigmoid(double v) { return v >= 0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v)); }

Vector sigmoid(const Vector& x) { return x.unaryExpr([](double v) { return sigmoid(v); }); }

Vector softmax(const Vector& x) {
  Vector e = (x.array() - x.maxCoeff()).exp().matrix();
  return e / e.sum();
}

Vector log_softmax(const Vector& x) {
  const double m = x.maxCoeff();
  const double lse = m + std::log((x.array() - m).exp().sum());
  return (x.array() - lse).matrix();
}

Vector concat(const Vector& a, const Vector& b) {
  Vector out(a.size() + b.size());
  out << a, b;
  return out;
}

struct GruCache {
  Vector x, h, r, z, n, hn;  // hn = w_hn h + b_hn
};

Vector gru_forward(const GruParams& g, const Vector& x, const Vector& h, GruCache* cache) {
  Vector r = sigmoid(g.w_ir * x + g.b_ir + g.w_hr * h + g.b_hr);
  Vector z = sigmoid(g.w_iz * x + g.b_iz + g.w_hz * h + g.b_hz);
  Vector hn = g.w_hn * h + g.b_hn;
  Vector n = (g.w_in * x + g.b_in + r.cwiseProduct(hn)).array().tanh().matrix();
  Vector out = (1.0 - z.array()).matrix().cwiseProduct(h) + z.cwiseProduct(n);
  if (cache) *cache = {x, h, std::move(r), std::move(z), std::move(n), std::move(hn)};
  return out;
}

// Accumulates parameter gradients into `grad`; writes input and previous-state gradients.
void gru_backward(const GruParams& g, const GruCache& c, const Vector& dh_new, GruParams& grad, Vector& dx,
                  Vector& dh_prev) {
  const auto one = [](const Vector& v) { return (1.0 - v.array()).matrix(); };
  Vector dz = dh_new.cwiseProduct(c.n - c.h);
  Vector dn = dh_new.cwiseProduct(c.z);
  Vector dan = dn.cwiseProduct((1.0 - c.n.array().square()).matrix());
  Vector dr = dan.cwiseProduct(c.hn);
  Vector dhn = dan.cwiseProduct(c.r);
  Vector daz = dz.cwiseProduct(c.z).cwiseProduct(one(c.z));
  Vector dar = dr.cwiseProduct(c.r).cwiseProduct(one(c.r));

  grad.w_in.noalias() += dan * c.x.transpose();
  grad.b_in += dan;
  grad.w_hn.noalias() += dhn * c.h.transpose();
  grad.b_hn += dhn;
  grad.w_iz.noalias() += daz * c.x.transpose();
  grad.b_iz += daz;
  grad.w_hz.noalias() += daz * c.h.transpose();
  grad.b_hz += daz;
  grad.w_ir.noalias() += dar * c.x.transpose();
  grad.b_ir += dar;
  grad.w_hr.noalias() += dar * c.h.transpose();
  grad.b_hr += dar;

  dx.noalias() = g.w_in.transpose() * dan + g.w_iz.transpose() * daz + g.w_ir.transpose() * dar;
  dh_prev = dh_new.cwiseProduct(one(c.z));
  dh_prev.noalias() += g.w_hn.transpose() * dhn + g.w_hz.transpose() * daz + g.w_hr.transpose() * dar;
}

struct DecoderCache {
  TokenId token = 0;
  Vector mask;  // empty when dropout is inactive
  Vector attn_in, attn, ctx, comb_in, comb_pre;
  GruCache gru;
  Vector h_new, probs;
};

EncoderOutput encode_impl(const Seq2SeqModel& model, std::span<const TokenId> ids, std::vector<TokenId>* mapped,
                          std::vector<GruCache>* caches) {
  const auto& cfg = model.config;
  if (ids.empty()) throw UsageError("cannot encode an empty sequence");
  if (ids.size() > cfg.max_len)
    throw UsageError("source sequence of length " + std::to_string(ids.size()) + " exceeds max_len " +
                     std::to_string(cfg.max_len));
  const auto H = static_cast<Eigen::Index>(cfg.hidden);
  EncoderOutput out{Matrix::Zero(static_cast<Eigen::Index>(cfg.max_len), H), Vector::Zero(H)};
  if (caches) caches->resize(ids.size());
  for (std::size_t t = 0; t < ids.size(); ++t) {
    TokenId id = ids[t] < cfg.src_vocab ? ids[t] : kUnk;
    if (mapped) mapped->push_back(id);
    Vector x = model.params.enc_embedding.row(id).transpose();
    out.final_hidden = gru_forward(model.params.enc_gru, x, out.final_hidden, caches ? &(*caches)[t] : nullptr);
    out.outputs.row(static_cast<Eigen::Index>(t)) = out.final_hidden.transpose();
  }
  return out;
}

DecodeStep decode_impl(const Seq2SeqModel& model, TokenId prev, const Vector& hidden, const Matrix& enc,
                       bool dropout_active, Rng* rng, DecoderCache* cache) {
  const auto& cfg = model.config;
  const auto& p = model.params;
  if (prev >= cfg.tgt_vocab)
    throw UsageError("decoder token id " + std::to_string(prev) + " is out of range for target vocabulary of " +
                     std::to_string(cfg.tgt_vocab));
  const auto H = static_cast<Eigen::Index>(cfg.hidden);
  Vector e = p.dec_embedding.row(prev).transpose();
  Vector mask;
  if (dropout_active && cfg.dropout > 0) {
    if (!rng) throw UsageError("dropout requires a random stream");
    mask.resize(H);
    const double keep_scale = 1.0 / (1.0 - cfg.dropout);
    for (Eigen::Index i = 0; i < H; ++i) mask(i) = rng->bernoulli(cfg.dropout) ? 0.0 : keep_scale;
    e = e.cwiseProduct(mask);
  }
  Vector attn_in = concat(e, hidden);
  Vector attn = softmax(p.attn_w * attn_in + p.attn_b);
  Vector ctx = enc.transpose() * attn;
  Vector comb_in = concat(e, ctx);
  Vector comb_pre = p.comb_w * comb_in + p.comb_b;
  Vector combined = comb_pre.cwiseMax(0.0);
  GruCache gc;
  Vector h_new = gru_forward(p.dec_gru, combined, hidden, cache ? &gc : nullptr);
  Vector logits = p.out_w * h_new + p.out_b;
  DecodeStep step{log_softmax(logits), h_new, attn};
  if (cache) {
    *cache = {prev, std::move(mask), std::move(attn_in), std::move(attn), std::move(ctx), std::move(comb_in),
              std::move(comb_pre), std::move(gc), std::move(h_new), step.log_probs.array().exp().matrix()};
  }
  return step;
}

TokenId argmax_output(const Vector& log_probs) {
  TokenId best = kEos;
  double best_v = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < log_probs.size(); ++i) {
    if (i == kPad || i == kSos) continue;
    if (log_probs(i) > best_v) {
      best_v = log_probs(i);
      best = static_cast<TokenId>(i);
    }
  }
  return best;
}

std::vector<TokenId> with_eos(std::span<const TokenId> ids) {
  std::vector<TokenId> out(ids.begin(), ids.end());
  out.push_back(kEos);
  return out;
}

}  // namespace

EncoderOutput encode_sequence(const Seq2SeqModel& model, std::span<const TokenId> src_ids) {
  return encode_impl(model, src_ids, nullptr, nullptr);
}

DecodeStep decode_step(const Seq2SeqModel& model, TokenId prev, const Vector& hidden, const Matrix& encoder_outputs,
                       bool train_mode, Rng* rng) {
  return decode_impl(model, prev, hidden, encoder_outputs, train_mode, rng, nullptr);
}

LossResult loss_and_gradients(const Seq2SeqModel& model, const SequencePair& pair, const LossOptions& options, Rng* rng,
                              Parameters* grads) {
  const auto& cfg = model.config;
  const auto& p = model.params;
  const auto src = with_eos(pair.src);
  const auto tgt = with_eos(pair.tgt);
  if (tgt.size() > cfg.max_len)
    throw UsageError("target sequence of length " + std::to_string(tgt.size()) + " exceeds max_len " +
                     std::to_string(cfg.max_len));
  for (auto id : tgt)
    if (id >= cfg.tgt_vocab) throw UsageError("target token id " + std::to_string(id) + " is out of range");

  std::vector<TokenId> src_mapped;
  std::vector<GruCache> enc_caches;
  auto enc = encode_impl(model, src, &src_mapped, grads ? &enc_caches : nullptr);

  const std::size_t T = tgt.size();
  std::vector<DecoderCache> dec_caches(grads ? T : 0);
  LossResult result;
  Vector h = enc.final_hidden;
  TokenId prev = kSos;
  double nll = 0;
  for (std::size_t t = 0; t < T; ++t) {
    result.decoder_inputs.push_back(prev);
    auto step = decode_impl(model, prev, h, enc.outputs, options.dropout, rng, grads ? &dec_caches[t] : nullptr);
    nll -= step.log_probs(tgt[t]);
    h = std::move(step.hidden);
    if (t + 1 < T) {
      bool forced = true;
      if (options.teacher_forcing_ratio < 1.0) {
        if (options.teacher_forcing_ratio <= 0.0) {
          forced = false;
        } else {
          if (!rng) throw UsageError("stochastic teacher forcing requires a random stream");
          forced = rng->bernoulli(options.teacher_forcing_ratio);
        }
      }
      prev = forced ? tgt[t] : argmax_output(step.log_probs);
    }
  }
  result.loss = nll / static_cast<double>(T);
  if (!grads) return result;

  auto& G = *grads;
  const auto H = static_cast<Eigen::Index>(cfg.hidden);
  const double inv_T = 1.0 / static_cast<double>(T);
  Matrix d_enc = Matrix::Zero(enc.outputs.rows(), H);
  Vector dh_next = Vector::Zero(H);
  Vector dx(H), dh_prev(H);
  for (std::size_t t = T; t-- > 0;) {
    const auto& c = dec_caches[t];
    Vector dlogits = c.probs * inv_T;
    dlogits(tgt[t]) -= inv_T;
    G.out_w.noalias() += dlogits * c.h_new.transpose();
    G.out_b += dlogits;
    Vector dh = dh_next;
    dh.noalias() += p.out_w.transpose() * dlogits;

    Vector dcombined(H);
    gru_backward(p.dec_gru, c.gru, dh, G.dec_gru, dcombined, dh_prev);

    Vector dcomb_pre = dcombined.cwiseProduct((c.comb_pre.array() > 0.0).cast<double>().matrix());
    G.comb_w.noalias() += dcomb_pre * c.comb_in.transpose();
    G.comb_b += dcomb_pre;
    Vector dcomb_in = p.comb_w.transpose() * dcomb_pre;
    Vector de = dcomb_in.head(H);
    Vector dctx = dcomb_in.tail(H);

    d_enc.noalias() += c.attn * dctx.transpose();
    Vector dattn = enc.outputs * dctx;
    Vector ds = c.attn.cwiseProduct((dattn.array() - c.attn.dot(dattn)).matrix());
    G.attn_w.noalias() += ds * c.attn_in.transpose();
    G.attn_b += ds;
    Vector dattn_in = p.attn_w.transpose() * ds;
    de += dattn_in.head(H);
    dh_prev += dattn_in.tail(H);

    if (c.mask.size() > 0) de = de.cwiseProduct(c.mask);
    G.dec_embedding.row(c.token) += de.transpose();
    dh_next = dh_prev;
  }

  Vector dh = dh_next;
  for (std::size_t s = src_mapped.size(); s-- > 0;) {
    dh += d_enc.row(static_cast<Eigen::Index>(s)).transpose();
    gru_backward(p.enc_gru, enc_caches[s], dh, G.enc_gru, dx, dh_prev);
    G.enc_embedding.row(src_mapped[s]) += dx.transpose();
    dh = dh_prev;
  }
  return result;
}

Translation translate(const Seq2SeqModel& model, std::span<const TokenId> src_ids, std::size_t max_out_len) {
  const auto src = with_eos(src_ids);
  auto enc = encode_sequence(model, src);
  Translation out;
  Vector h = enc.final_hidden;
  TokenId prev = kSos;
  for (std::size_t step = 0; step < max_out_len; ++step) {
    auto s = decode_step(model, prev, h, enc.outputs, false, nullptr);
    TokenId next = argmax_output(s.log_probs);
    if (next == kEos) break;
    out.ids.push_back(next);
    out.attention.emplace_back(s.attention.data(), s.attention.data() + s.attention.size());
    h = std::move(s.hidden);
    prev = next;
  }
  return out;
}

}  // namespace lrmt::nmt

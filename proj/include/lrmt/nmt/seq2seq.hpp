#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "lrmt/nmt/model.hpp"
#include "lrmt/rng.hpp"

namespace lrmt::nmt {

using TokenId = std::uint32_t;

struct EncoderOutput {
  Matrix outputs;  // max_len x hidden, zero beyond the sequence
  Vector final_hidden;
};

/// Runs the encoder GRU from a zero state. Ids outside the source vocabulary
/// are read as <unk>. Throws UsageError when the sequence is empty or longer
/// than max_len.
EncoderOutput encode_sequence(const Seq2SeqModel& model, std::span<const TokenId> src_ids);

struct DecodeStep {
  Vector log_probs;  // tgt_vocab
  Vector hidden;
  Vector attention;  // max_len
};

/// One attention-decoder step:
///   e   = dropout(dec_embedding[prev])            (train_mode only, inverted)
///   a   = softmax(attn_w [e; h] + attn_b)
///   ctx = a^T encoder_outputs
///   c   = relu(comb_w [e; ctx] + comb_b)
///   h'  = GRU(c, h)
///   out = log_softmax(out_w h' + out_b)
/// Throws UsageError if prev is outside the target vocabulary.
DecodeStep decode_step(const Seq2SeqModel& model, TokenId prev, const Vector& hidden, const Matrix& encoder_outputs,
                       bool train_mode, Rng* rng);

struct SequencePair {
  std::vector<TokenId> src;  // without </s>; one is appended internally
  std::vector<TokenId> tgt;
};

struct LossOptions {
  double teacher_forcing_ratio = 1.0;
  bool dropout = false;
};

struct LossResult {
  double loss = 0;                      // mean NLL over len(tgt) + 1 steps
  std::vector<TokenId> decoder_inputs;  // token fed at each step, starting with <s>
};

/// Forward pass plus manual backpropagation through every layer. Gradients are
/// accumulated into `grads` when non-null. The rng drives teacher forcing and
/// dropout and may be null when neither is stochastic.
LossResult loss_and_gradients(const Seq2SeqModel& model, const SequencePair& pair, const LossOptions& options,
                              Rng* rng, Parameters* grads);

struct TrainConfig {
  std::size_t epochs = 10;
  double learning_rate = 0.01;
  double teacher_forcing_ratio = 0.5;
  double grad_clip_norm = 5.0;
  std::uint64_t seed = 1;
  bool shuffle = true;

  void validate() const;
};

struct TrainHistory {
  std::vector<double> train_loss;       // per-epoch mean
  std::vector<double> validation_loss;  // teacher-forced, no dropout; empty without validation data
};

using EpochCallback = std::function<void(std::size_t epoch, double train_loss, std::optional<double> validation_loss)>;

/// Per-pair SGD with global-norm clipping. Throws NumericalError naming the
/// epoch and pair index if the loss turns non-finite.
TrainHistory train(Seq2SeqModel& model, const std::vector<SequencePair>& pairs, const TrainConfig& config,
                   const std::vector<SequencePair>* validation = nullptr, const EpochCallback& on_epoch = {});

/// Teacher-forced mean loss without dropout.
double evaluate_loss(const Seq2SeqModel& model, const std::vector<SequencePair>& pairs);

struct Translation {
  std::vector<TokenId> ids;                // </s> excluded
  std::vector<std::vector<double>> attention;  // one row per generated step
};

/// Greedy decoding from <s>; <pad> and <s> are never emitted.
Translation translate(const Seq2SeqModel& model, std::span<const TokenId> src_ids, std::size_t max_out_len);

struct GradientCheckOptions {
  double epsilon = 1e-5;
  std::size_t samples = 200;
  std::uint64_t seed = 1;
  std::string corrupt_tensor;  // negative control: flip the sign of this tensor's analytic gradient
};

struct GradientCheckResult {
  double max_relative_error = 0;
  std::size_t checked = 0;
  std::string worst_tensor;
  double worst_analytic = 0;  // the two gradients at the worst entry
  double worst_numeric = 0;
};

/// Compares analytic gradients with central differences on a deterministic
/// (teacher-forced, dropout-free) loss. Relative error is
/// |g_a - g_n| / max(|g_a|, |g_n|, 1e-12).
GradientCheckResult gradient_check(const Seq2SeqModel& model, const SequencePair& pair,
                                   const GradientCheckOptions& options = {});

/// CSV `epoch,mean_loss`.
void write_loss_csv(const TrainHistory& history, std::ostream& out);

}  // namespace lrmt::nmt

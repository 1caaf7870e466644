#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace lrmt::nmt {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

struct ModelConfig {
  std::size_t hidden = 256;  // also the embedding width
  std::size_t max_len = 32;  // encoder positions, including the appended </s>
  double dropout = 0.1;
  std::size_t src_vocab = 0;
  std::size_t tgt_vocab = 0;
  std::uint64_t seed = 1;

  /// Throws UsageError when a field is out of range.
  void validate() const;
};

// GRU cell, gates ordered reset, update, candidate:
//   r  = sigmoid(w_ir x + b_ir + w_hr h + b_hr)
//   z  = sigmoid(w_iz x + b_iz + w_hz h + b_hz)
//   n  = tanh(w_in x + b_in + r * (w_hn h + b_hn))
//   h' = (1 - z) * h + z * n
struct GruParams {
  Matrix w_ir, w_iz, w_in;  // hidden x input
  Matrix w_hr, w_hz, w_hn;  // hidden x hidden
  Vector b_ir, b_iz, b_in;
  Vector b_hr, b_hz, b_hn;
};

template <typename T>
struct BasicTensorView {
  std::string name;
  std::span<T> data;
  std::size_t rows = 0;
  std::size_t cols = 0;
};
using TensorView = BasicTensorView<double>;
using ConstTensorView = BasicTensorView<const double>;

// Full parameter set; also used as the gradient accumulator.
struct Parameters {
  Matrix enc_embedding;  // src_vocab x hidden
  GruParams enc_gru;
  Matrix dec_embedding;  // tgt_vocab x hidden
  Matrix attn_w;         // max_len x 2*hidden, input [embedded; hidden]
  Vector attn_b;         // max_len
  Matrix comb_w;         // hidden x 2*hidden, input [embedded; context]
  Vector comb_b;         // hidden
  GruParams dec_gru;
  Matrix out_w;          // tgt_vocab x hidden
  Vector out_b;          // tgt_vocab

  static Parameters zeros(const ModelConfig& config);

  /// Every tensor in checkpoint order. Vectors report cols == 1.
  std::vector<TensorView> tensors();
  std::vector<ConstTensorView> tensors() const;
  std::size_t parameter_count() const;
};

struct Seq2SeqModel {
  ModelConfig config;
  Parameters params;
};

/// Uniform draws in [-1/sqrt(hidden), 1/sqrt(hidden)] from Rng(config.seed),
/// consumed tensor by tensor in checkpoint order, row-major within a tensor.
Seq2SeqModel init_model(const ModelConfig& config);

/// Checks tensor shapes against the config and that every entry is finite.
void check_model(const Seq2SeqModel& model);

// Checkpoint: magic "LRMTS2S\0", u32 version, u64 hidden, u64 max_len,
// u64 src_vocab, u64 tgt_vocab, f64 dropout, u64 seed, u32 tensor count, then
// per tensor: length-prefixed name, u64 rows, u64 cols and rows x cols
// little-endian f64 in row-major order.
void save_checkpoint(const Seq2SeqModel& model, const std::filesystem::path& path);
Seq2SeqModel load_checkpoint(const std::filesystem::path& path);

}  // namespace lrmt::nmt

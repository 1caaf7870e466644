#include <algorithm>
#include <fstream>

#include "lrmt/binary_io.hpp"
#include "lrmt/error.hpp"
#include "lrmt/nmt/model.hpp"

namespace lrmt::nmt {

namespace {
constexpr char kMagic[8] = {'L', 'R', 'M', 'T', 'S', '2', 'S', '\0'};
constexpr std::uint32_t kVersion = 1;
}  // namespace

void save_checkpoint(const Seq2SeqModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  const auto& c = model.config;
  out.write(kMagic, sizeof kMagic);
  binary::write_u32(out, kVersion);
  binary::write_u64(out, c.hidden);
  binary::write_u64(out, c.max_len);
  binary::write_u64(out, c.src_vocab);
  binary::write_u64(out, c.tgt_vocab);
  binary::write_f64(out, c.dropout);
  binary::write_u64(out, c.seed);
  auto tensors = model.params.tensors();
  binary::write_u32(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& t : tensors) {
    binary::write_string(out, t.name);
    binary::write_u64(out, t.rows);
    binary::write_u64(out, t.cols);
    binary::write_f64s(out, t.data);
  }
  if (!out) throw DataError("failed writing checkpoint " + path.string());
}

Seq2SeqModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  char magic[8];
  binary::read_exact(in, magic, sizeof magic);
  if (!std::equal(std::begin(magic), std::end(magic), std::begin(kMagic)))
    throw DataError(path.string() + " is not a seq2seq checkpoint");
  if (auto v = binary::read_u32(in); v != kVersion) throw DataError("unsupported checkpoint version " + std::to_string(v));
  ModelConfig c;
  c.hidden = binary::read_u64(in);
  c.max_len = binary::read_u64(in);
  c.src_vocab = binary::read_u64(in);
  c.tgt_vocab = binary::read_u64(in);
  c.dropout = binary::read_f64(in);
  c.seed = binary::read_u64(in);
  try {
    c.validate();
  } catch (const UsageError& e) {
    throw DataError("checkpoint config invalid: " + std::string(e.what()));
  }
  if (c.hidden > 65536 || c.max_len > 65536 || c.src_vocab > (1u << 24) || c.tgt_vocab > (1u << 24))
    throw DataError("implausible checkpoint dimensions");

  Seq2SeqModel model{c, Parameters::zeros(c)};
  auto tensors = model.params.tensors();
  if (auto n = binary::read_u32(in); n != tensors.size())
    throw DataError("checkpoint has " + std::to_string(n) + " tensors, expected " + std::to_string(tensors.size()));
  for (auto& t : tensors) {
    auto name = binary::read_string(in, 256);
    auto rows = binary::read_u64(in);
    auto cols = binary::read_u64(in);
    if (name != t.name) throw DataError("checkpoint tensor '" + name + "' found where '" + t.name + "' was expected");
    if (rows != t.rows || cols != t.cols)
      throw DataError("checkpoint tensor " + name + " has shape " + std::to_string(rows) + "x" + std::to_string(cols) +
                      ", expected " + std::to_string(t.rows) + "x" + std::to_string(t.cols));
    binary::read_f64s(in, t.data);
  }
  check_model(model);
  return model;
}

}  // namespace lrmt::nmt

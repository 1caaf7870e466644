#include "lrmt/embeddings.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include "lrmt/binary_io.hpp"
#include "lrmt/error.hpp"
#include "lrmt/rng.hpp"

namespace lrmt::analysis {

EmbeddingModel::EmbeddingModel(std::vector<std::string> vocab, std::vector<double> vectors, EmbeddingConfig config)
    : vocab_(std::move(vocab)), vectors_(std::move(vectors)), config_(config) {
  if (config_.dim == 0) throw DataError("embedding dimension must be positive");
  if (vectors_.size() != vocab_.size() * config_.dim)
    throw DataError("embedding table size does not match |V| x dim");
  for (std::size_t i = 0; i < vocab_.size(); ++i) {
    if (!index_.emplace(vocab_[i], i).second) throw DataError("duplicate vocabulary word '" + vocab_[i] + "'");
  }
  norms_.resize(vocab_.size());
  for (std::size_t i = 0; i < vocab_.size(); ++i) {
    double s = 0;
    for (double v : vector(i)) {
      if (!std::isfinite(v)) throw NumericalError("non-finite embedding component for '" + vocab_[i] + "'");
      s += v * v;
    }
    norms_[i] = std::sqrt(s);
  }
}

bool EmbeddingModel::contains(std::string_view word) const { return index_.count(std::string(word)) != 0; }

std::size_t EmbeddingModel::index_of(std::string_view word) const {
  auto it = index_.find(std::string(word));
  if (it == index_.end()) throw UsageError("word '" + std::string(word) + "' is not in the embedding vocabulary");
  return it->second;
}

std::span<const double> EmbeddingModel::vector(std::size_t index) const {
  return std::span<const double>(vectors_).subspan(index * config_.dim, config_.dim);
}

double EmbeddingModel::cosine(std::size_t a, std::size_t b) const {
  if (norms_[a] == 0 || norms_[b] == 0) return 0;
  if (a == b) return 1.0;
  auto u = vector(a), v = vector(b);
  double dot = 0;
  for (std::size_t i = 0; i < u.size(); ++i) dot += u[i] * v[i];
  return std::clamp(dot / (norms_[a] * norms_[b]), -1.0, 1.0);
}

std::vector<double> EmbeddingModel::cosine_all(std::span<const double> query) const {
  double qn = 0;
  for (double q : query) qn += q * q;
  qn = std::sqrt(qn);
  std::vector<double> out(size(), 0.0);
  if (qn == 0) return out;
  for (std::size_t r = 0; r < size(); ++r) {
    if (norms_[r] == 0) continue;
    auto v = vector(r);
    double dot = 0;
    for (std::size_t i = 0; i < v.size(); ++i) dot += v[i] * query[i];
    out[r] = std::clamp(dot / (norms_[r] * qn), -1.0, 1.0);
  }
  return out;
}

namespace {

double log_sigmoid(double x) { return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x)); }
double sigmoid(double x) { return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); }

}  // namespace

EmbeddingModel train_embeddings(const std::vector<std::vector<std::string>>& sentences, const EmbeddingConfig& cfg) {
  if (cfg.dim < 2) throw UsageError("embedding dim must be >= 2");
  if (cfg.window < 1) throw UsageError("embedding window must be >= 1");
  if (cfg.negatives < 1) throw UsageError("embedding negatives must be >= 1");
  if (!(cfg.learning_rate > 0)) throw UsageError("embedding learning rate must be positive");
  if (sentences.empty()) throw UsageError("embedding training needs at least one sentence");

  std::map<std::string, std::uint64_t> counts;
  for (const auto& s : sentences)
    for (const auto& w : s) ++counts[w];
  std::vector<std::pair<std::string, std::uint64_t>> kept;
  for (const auto& [w, c] : counts)
    if (c >= cfg.min_count) kept.emplace_back(w, c);
  if (kept.empty()) throw DataError("no word reaches min_count " + std::to_string(cfg.min_count));
  std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) { return a.second > b.second; });

  const std::size_t V = kept.size();
  const std::size_t d = cfg.dim;
  std::vector<std::string> vocab;
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < V; ++i) {
    vocab.push_back(kept[i].first);
    index.emplace(kept[i].first, i);
  }

  std::vector<std::vector<std::size_t>> corpus;
  std::size_t total_tokens = 0;
  for (const auto& s : sentences) {
    std::vector<std::size_t> ids;
    for (const auto& w : s)
      if (auto it = index.find(w); it != index.end()) ids.push_back(it->second);
    total_tokens += ids.size();
    corpus.push_back(std::move(ids));
  }

  // Noise distribution proportional to count^0.75.
  std::vector<double> cumulative(V);
  double acc = 0;
  for (std::size_t i = 0; i < V; ++i) {
    acc += std::pow(static_cast<double>(kept[i].second), 0.75);
    cumulative[i] = acc;
  }

  Rng rng(cfg.seed);
  std::vector<double> input(V * d), output(V * d, 0.0);
  for (auto& x : input) x = (rng.uniform01() - 0.5) / static_cast<double>(d);

  auto draw_noise = [&]() {
    double u = rng.uniform01() * acc;
    auto pos = std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin();
    return std::min<std::size_t>(static_cast<std::size_t>(pos), V - 1);
  };

  const double total_steps = static_cast<double>(std::max<std::size_t>(1, cfg.epochs * total_tokens));
  std::size_t processed = 0;
  std::vector<double> grad_in(d);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    double loss = 0;
    for (const auto& ids : corpus) {
      for (std::size_t i = 0; i < ids.size(); ++i, ++processed) {
        const double lr = cfg.learning_rate * std::max(1e-4, 1.0 - static_cast<double>(processed) / total_steps);
        const std::size_t reduce = static_cast<std::size_t>(rng.uniform_below(cfg.window));
        const std::size_t span = cfg.window - reduce;
        const std::size_t lo = i >= span ? i - span : 0;
        const std::size_t hi = std::min(ids.size() - 1, i + span);
        double* in = &input[ids[i] * d];
        for (std::size_t j = lo; j <= hi; ++j) {
          if (j == i) continue;
          std::fill(grad_in.begin(), grad_in.end(), 0.0);
          for (std::size_t s = 0; s <= cfg.negatives; ++s) {
            std::size_t target;
            double label;
            if (s == 0) {
              target = ids[j];
              label = 1;
            } else {
              target = draw_noise();
              if (target == ids[j]) continue;
              label = 0;
            }
            double* out = &output[target * d];
            double dot = 0;
            for (std::size_t k = 0; k < d; ++k) dot += in[k] * out[k];
            loss -= label > 0 ? log_sigmoid(dot) : log_sigmoid(-dot);
            const double g = (label - sigmoid(dot)) * lr;
            for (std::size_t k = 0; k < d; ++k) {
              grad_in[k] += g * out[k];
              out[k] += g * in[k];
            }
          }
          for (std::size_t k = 0; k < d; ++k) in[k] += grad_in[k];
        }
      }
    }
    if (!std::isfinite(loss))
      throw NumericalError("embedding loss became non-finite in epoch " + std::to_string(epoch));
  }
  return EmbeddingModel(std::move(vocab), std::move(input), cfg);
}

namespace {

std::vector<double> unit(std::span<const double> v) {
  double n = 0;
  for (double x : v) n += x * x;
  n = std::sqrt(n);
  std::vector<double> out(v.begin(), v.end());
  if (n > 0)
    for (auto& x : out) x /= n;
  return out;
}

Neighbors rank(const EmbeddingModel& model, const std::vector<double>& scores, const std::set<std::size_t>& exclude,
               std::size_t k, bool descending) {
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < scores.size(); ++i)
    if (!exclude.count(i)) order.push_back(i);
  const auto& vocab = model.vocab();
  auto cmp = [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return descending ? scores[a] > scores[b] : scores[a] < scores[b];
    return vocab[a] < vocab[b];
  };
  const std::size_t n = std::min(k, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n), order.end(), cmp);
  Neighbors out;
  for (std::size_t i = 0; i < n; ++i) out.emplace_back(vocab[order[i]], scores[order[i]]);
  return out;
}

}  // namespace

Neighbors most_similar(const EmbeddingModel& model, std::string_view word, std::size_t k) {
  return analogy(model, {std::string(word)}, {}, k);
}

Neighbors least_similar(const EmbeddingModel& model, std::string_view word, std::size_t k) {
  if (k == 0) throw UsageError("k must be >= 1");
  auto idx = model.index_of(word);
  auto scores = model.cosine_all(unit(model.vector(idx)));
  return rank(model, scores, {idx}, k, false);
}

Neighbors analogy(const EmbeddingModel& model, const std::vector<std::string>& positive,
                  const std::vector<std::string>& negative, std::size_t k) {
  if (k == 0) throw UsageError("k must be >= 1");
  if (positive.empty() && negative.empty()) throw UsageError("analogy needs at least one query word");
  std::vector<double> query(model.dim(), 0.0);
  std::set<std::size_t> exclude;
  for (const auto* words : {&positive, &negative}) {
    const double sign = words == &positive ? 1.0 : -1.0;
    for (const auto& w : *words) {
      auto idx = model.index_of(w);
      exclude.insert(idx);
      auto u = unit(model.vector(idx));
      for (std::size_t i = 0; i < u.size(); ++i) query[i] += sign * u[i];
    }
  }
  return rank(model, model.cosine_all(query), exclude, k, true);
}

std::string_view to_string(PointClass c) {
  switch (c) {
    case PointClass::source: return "source";
    case PointClass::similar: return "similar";
    case PointClass::dissimilar: return "dissimilar";
  }
  return "?";
}

std::vector<std::pair<double, double>> pca_2d(std::span<const double> rows, std::size_t dim) {
  if (dim == 0 || rows.size() % dim != 0) throw UsageError("pca_2d: row data does not match dimension");
  const auto n = static_cast<Eigen::Index>(rows.size() / dim);
  Eigen::MatrixXd x(n, static_cast<Eigen::Index>(dim));
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < x.cols(); ++c) x(r, c) = rows[static_cast<std::size_t>(r) * dim + static_cast<std::size_t>(c)];
  x.rowwise() -= x.colwise().mean();

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinV);
  Eigen::MatrixXd axes = Eigen::MatrixXd::Zero(x.cols(), 2);
  const auto available = std::min<Eigen::Index>(2, svd.matrixV().cols());
  for (Eigen::Index a = 0; a < available; ++a) {
    Eigen::VectorXd v = svd.matrixV().col(a);
    Eigen::Index arg;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0) v = -v;
    axes.col(a) = v;
  }
  Eigen::MatrixXd projected = x * axes;
  std::vector<std::pair<double, double>> out;
  for (Eigen::Index r = 0; r < n; ++r) out.emplace_back(projected(r, 0), projected(r, 1));
  return out;
}

std::vector<ProjectedPoint> project_2d(const EmbeddingModel& model, std::string_view word, std::size_t k_similar,
                                       std::size_t k_dissimilar) {
  const auto query = model.index_of(word);
  if (model.size() < 1 + k_similar + k_dissimilar)
    throw UsageError("vocabulary has " + std::to_string(model.size()) + " words; projection needs " +
                     std::to_string(1 + k_similar + k_dissimilar));
  std::vector<ProjectedPoint> points{{std::string(word), 0, 0, PointClass::source}};
  std::set<std::string> taken{std::string(word)};
  if (k_similar > 0)
    for (auto& [w, c] : most_similar(model, word, k_similar)) {
      taken.insert(w);
      points.push_back({w, 0, 0, PointClass::similar});
    }
  if (k_dissimilar > 0) {
    auto scores = model.cosine_all(unit(model.vector(query)));
    std::set<std::size_t> exclude;
    for (const auto& w : taken) exclude.insert(model.index_of(w));
    for (auto& [w, c] : rank(model, scores, exclude, k_dissimilar, false)) points.push_back({w, 0, 0, PointClass::dissimilar});
  }
  std::vector<double> rows;
  for (const auto& p : points) {
    auto v = model.vector(p.word);
    rows.insert(rows.end(), v.begin(), v.end());
  }
  auto xy = pca_2d(rows, model.dim());
  for (std::size_t i = 0; i < points.size(); ++i) std::tie(points[i].x, points[i].y) = xy[i];
  return points;
}

void write_projection_tsv(const std::vector<ProjectedPoint>& points, std::ostream& out) {
  out << "word\tx\ty\tclass\n";
  out.precision(17);
  for (const auto& p : points) out << p.word << '\t' << p.x << '\t' << p.y << '\t' << to_string(p.cls) << '\n';
}

namespace {
constexpr char kMagic[8] = {'L', 'R', 'M', 'T', 'E', 'M', 'B', '\0'};
constexpr std::uint32_t kVersion = 1;
}  // namespace

void save_embeddings(const EmbeddingModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  const auto& c = model.config();
  out.write(kMagic, sizeof kMagic);
  binary::write_u32(out, kVersion);
  binary::write_u64(out, model.size());
  binary::write_u64(out, c.dim);
  binary::write_u64(out, c.window);
  binary::write_u64(out, c.negatives);
  binary::write_u64(out, c.epochs);
  binary::write_u64(out, c.min_count);
  binary::write_f64(out, c.learning_rate);
  binary::write_u64(out, c.seed);
  for (const auto& w : model.vocab()) binary::write_string(out, w);
  binary::write_f64s(out, model.vectors());
}

EmbeddingModel load_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open embeddings file " + path.string());
  char magic[8];
  binary::read_exact(in, magic, sizeof magic);
  if (!std::equal(std::begin(magic), std::end(magic), std::begin(kMagic)))
    throw DataError(path.string() + " is not an embeddings file");
  if (auto v = binary::read_u32(in); v != kVersion) throw DataError("unsupported embeddings version " + std::to_string(v));
  const auto n = binary::read_u64(in);
  EmbeddingConfig c;
  c.dim = binary::read_u64(in);
  c.window = binary::read_u64(in);
  c.negatives = binary::read_u64(in);
  c.epochs = binary::read_u64(in);
  c.min_count = binary::read_u64(in);
  c.learning_rate = binary::read_f64(in);
  c.seed = binary::read_u64(in);
  if (n > (1ull << 32) || c.dim > (1ull << 20)) throw DataError("implausible embeddings header");
  std::vector<std::string> vocab;
  for (std::uint64_t i = 0; i < n; ++i) vocab.push_back(binary::read_string(in));
  std::vector<double> vectors(n * c.dim);
  binary::read_f64s(in, vectors);
  return EmbeddingModel(std::move(vocab), std::move(vectors), c);
}

}  // namespace lrmt::analysis

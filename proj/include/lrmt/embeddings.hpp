#pragma once

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace lrmt::analysis {

struct EmbeddingConfig {
  std::size_t dim = 100;
  std::size_t window = 5;
  std::size_t negatives = 5;
  std::size_t epochs = 5;
  std::size_t min_count = 1;
  double learning_rate = 0.025;
  std::uint64_t seed = 1;
};

// Word-vector table. Rows are stored row-major, one per vocabulary word, in
// vocabulary order (count descending, then word ascending).
class EmbeddingModel {
 public:
  EmbeddingModel() = default;
  EmbeddingModel(std::vector<std::string> vocab, std::vector<double> vectors, EmbeddingConfig config);

  std::size_t size() const { return vocab_.size(); }
  std::size_t dim() const { return config_.dim; }
  const EmbeddingConfig& config() const { return config_; }
  const std::vector<std::string>& vocab() const { return vocab_; }
  const std::vector<double>& vectors() const { return vectors_; }

  bool contains(std::string_view word) const;
  /// Throws UsageError naming the word when it is out of vocabulary.
  std::size_t index_of(std::string_view word) const;
  std::span<const double> vector(std::size_t index) const;
  std::span<const double> vector(std::string_view word) const { return vector(index_of(word)); }

  /// Cosine between two rows; 0 when either row is the zero vector.
  double cosine(std::size_t a, std::size_t b) const;
  double cosine(std::string_view a, std::string_view b) const { return cosine(index_of(a), index_of(b)); }

  /// Cosine of every row against an arbitrary query vector.
  std::vector<double> cosine_all(std::span<const double> query) const;

 private:
  std::vector<std::string> vocab_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<double> vectors_;
  std::vector<double> norms_;
  EmbeddingConfig config_;
};

using Neighbors = std::vector<std::pair<std::string, double>>;

/// Skip-gram with negative sampling, single-threaded. Throws UsageError on
/// bad hyperparameters, DataError when no word reaches min_count, and
/// NumericalError if the loss turns non-finite.
EmbeddingModel train_embeddings(const std::vector<std::vector<std::string>>& sentences,
                                const EmbeddingConfig& config);

/// Top-k by cosine, excluding the query; ties broken by word ascending.
Neighbors most_similar(const EmbeddingModel& model, std::string_view word, std::size_t k);

/// Bottom-k by cosine (ascending), excluding the query.
Neighbors least_similar(const EmbeddingModel& model, std::string_view word, std::size_t k);

/// 3CosAdd over unit-normalized vectors: rank by cosine to
/// sum(positive) - sum(negative), excluding every query word.
Neighbors analogy(const EmbeddingModel& model, const std::vector<std::string>& positive,
                  const std::vector<std::string>& negative, std::size_t k);

enum class PointClass { source, similar, dissimilar };
std::string_view to_string(PointClass c);

struct ProjectedPoint {
  std::string word;
  double x = 0;
  double y = 0;
  PointClass cls = PointClass::source;
};

/// PCA of the query word, its k_similar nearest and k_dissimilar farthest
/// neighbours, projected onto the top two principal axes of that subset.
std::vector<ProjectedPoint> project_2d(const EmbeddingModel& model, std::string_view word,
                                       std::size_t k_similar, std::size_t k_dissimilar);

/// PCA projection of arbitrary row vectors (n x dim, row-major) to 2-D.
/// Axis signs are fixed so the largest-magnitude loading of each axis is positive.
std::vector<std::pair<double, double>> pca_2d(std::span<const double> rows, std::size_t dim);

/// TSV with header `word\tx\ty\tclass`.
void write_projection_tsv(const std::vector<ProjectedPoint>& points, std::ostream& out);

// Binary file: magic "LRMTEMB\0", u32 version, u64 |V|, u64 dim, u64 window,
// u64 negatives, u64 epochs, u64 min_count, f64 learning_rate, u64 seed,
// then |V| length-prefixed UTF-8 words, then |V| x dim little-endian f64.
void save_embeddings(const EmbeddingModel& model, const std::filesystem::path& path);
EmbeddingModel load_embeddings(const std::filesystem::path& path);

}  // namespace lrmt::analysis

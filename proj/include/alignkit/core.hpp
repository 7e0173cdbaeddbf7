#pragma once

#include <Eigen/Core>

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace alignkit {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using ObjectIndex = std::uint32_t;

enum class ErrorCode {
  InvalidArgument,
  IndexOutOfRange,
  DuplicateIndexInTriplet,
  NonFiniteEmbedding,
  ShapeMismatch,
  LengthMismatch,
  ZeroNormVector,
  ZeroVarianceRow,
  DegenerateGram,
  NonPositiveTau,
  EmptySplit,
  NonFiniteLoss,
  ConstantInput,
  LabelMismatch,
  SingularSystem,
  InsufficientClassMembers,
  EntropyOutOfRange,
  ParseError,
  IoError,
};

std::string_view to_string(ErrorCode code) noexcept;

// Every failure in the library surfaces as an Error carrying a stable code.
// `where` is the offending record/row index when one exists.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::optional<std::size_t> where = std::nullopt);

  ErrorCode code() const noexcept { return code_; }
  std::optional<std::size_t> where() const noexcept { return where_; }

 private:
  ErrorCode code_;
  std::optional<std::size_t> where_;
};

/// Real-valued object embeddings: one row per object, one column per feature.
///
/// Rows are index-aligned with `labels`. Labels must be unique; when none are
/// given, the decimal row index is used. All entries must be finite.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix(Matrix values, std::vector<std::string> labels = {},
                  std::string layer_tag = {});

  const Matrix& values() const noexcept { return values_; }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  const std::string& layer_tag() const noexcept { return layer_tag_; }

  std::size_t rows() const noexcept { return static_cast<std::size_t>(values_.rows()); }
  std::size_t cols() const noexcept { return static_cast<std::size_t>(values_.cols()); }
  auto row(std::size_t i) const { return values_.row(static_cast<Eigen::Index>(i)); }

  std::optional<std::size_t> index_of(std::string_view label) const;

 private:
  Matrix values_;
  std::vector<std::string> labels_;
  std::string layer_tag_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// One odd-one-out judgment: {a, b} is the most-similar pair, `ooo` the
/// odd-one-out. Stored canonically with a < b.
struct Triplet {
  ObjectIndex a = 0;
  ObjectIndex b = 0;
  ObjectIndex ooo = 0;

  Triplet() = default;
  Triplet(ObjectIndex a_, ObjectIndex b_, ObjectIndex ooo_);

  // Object indices in ascending order.
  std::array<ObjectIndex, 3> sorted() const noexcept;

  friend bool operator==(const Triplet&, const Triplet&) = default;
};

class TripletDataset {
 public:
  TripletDataset() = default;
  TripletDataset(std::vector<Triplet> records, std::size_t num_objects);

  const std::vector<Triplet>& records() const noexcept { return records_; }
  std::size_t num_objects() const noexcept { return num_objects_; }
  std::size_t size() const noexcept { return records_.size(); }
  bool empty() const noexcept { return records_.empty(); }
  const Triplet& operator[](std::size_t i) const { return records_[i]; }

  TripletDataset subset(std::span<const std::size_t> record_indices) const;

 private:
  std::vector<Triplet> records_;
  std::size_t num_objects_ = 0;
};

// Throws IndexOutOfRange / DuplicateIndexInTriplet naming the first bad record.
void validate_records(std::span<const Triplet> records, std::size_t num_objects);

// Succeeds iff the dataset addresses exactly the rows of `embeddings`.
void validate_dataset(const EmbeddingMatrix& embeddings, const TripletDataset& dataset);

/// Pairwise similarities for the three objects of one triplet. Positions
/// 0, 1, 2 refer to `indices`; the diagonal is never read.
struct TripletSim {
  std::array<std::array<double, 3>, 3> s{};
  std::array<ObjectIndex, 3> indices{};

  double pair(int u, int v) const { return s[u][v]; }
};

// Pair order used wherever the three pairs of a triplet are enumerated.
inline constexpr std::array<std::array<int, 2>, 3> kTripletPairs{{{0, 1}, {0, 2}, {1, 2}}};

/// Probability of each pair (in kTripletPairs order) being the most similar.
class TripletProbabilities {
 public:
  explicit TripletProbabilities(std::array<double, 3> p);
  const std::array<double, 3>& values() const noexcept { return p_; }
  double operator[](std::size_t i) const { return p_[i]; }

 private:
  std::array<double, 3> p_;
};

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double val_accuracy = 0.0;
  double weight_norm = 0.0;
};

struct LinearProbe {
  Matrix w;
  double lambda = 0.0;
  std::uint64_t seed = 0;
  int best_epoch = 0;
  std::vector<EpochLog> train_log;
};

/// Nonnegative concept-dimension loadings (m objects x d dimensions). Column
/// order is importance order.
class ConceptEmbedding {
 public:
  explicit ConceptEmbedding(Matrix y, std::vector<std::string> labels = {});

  const Matrix& values() const noexcept { return y_; }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  std::size_t rows() const noexcept { return static_cast<std::size_t>(y_.rows()); }
  std::size_t dims() const noexcept { return static_cast<std::size_t>(y_.cols()); }

 private:
  Matrix y_;
  std::vector<std::string> labels_;
};

/// Symmetric object-by-object similarity matrix.
class Rsm {
 public:
  Rsm(Matrix values, std::vector<std::string> labels = {});

  const Matrix& values() const noexcept { return values_; }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(values_.rows()); }

  // Strict upper triangle, row-major.
  std::vector<double> upper_triangle() const;

 private:
  Matrix values_;
  std::vector<std::string> labels_;
};

/// x -> a x + b, one output row of `a` per target dimension.
struct AffineMap {
  Matrix a;
  Vector b;

  Matrix apply(const Matrix& rows) const;
};

std::vector<std::string> default_labels(std::size_t n);

}  // namespace alignkit

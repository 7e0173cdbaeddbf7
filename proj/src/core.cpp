#include "alignkit/core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace alignkit {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::DuplicateIndexInTriplet: return "DuplicateIndexInTriplet";
    case ErrorCode::NonFiniteEmbedding: return "NonFiniteEmbedding";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::ZeroNormVector: return "ZeroNormVector";
    case ErrorCode::ZeroVarianceRow: return "ZeroVarianceRow";
    case ErrorCode::DegenerateGram: return "DegenerateGram";
    case ErrorCode::NonPositiveTau: return "NonPositiveTau";
    case ErrorCode::EmptySplit: return "EmptySplit";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::ConstantInput: return "ConstantInput";
    case ErrorCode::LabelMismatch: return "LabelMismatch";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::InsufficientClassMembers: return "InsufficientClassMembers";
    case ErrorCode::EntropyOutOfRange: return "EntropyOutOfRange";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message, std::optional<std::size_t> where)
    : std::runtime_error(std::string(to_string(code)) + ": " + message),
      code_(code),
      where_(where) {}

std::vector<std::string> default_labels(std::size_t n) {
  std::vector<std::string> labels;
  labels.reserve(n);
  for (std::size_t i = 0; i < n; ++i) labels.push_back(std::to_string(i));
  return labels;
}

namespace {

void check_finite(const Matrix& values) {
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
      if (!std::isfinite(values(i, j))) {
        std::ostringstream msg;
        msg << "entry (" << i << ", " << j << ") is not finite";
        throw Error(ErrorCode::NonFiniteEmbedding, msg.str(), static_cast<std::size_t>(i));
      }
    }
  }
}

std::vector<std::string> checked_labels(std::vector<std::string> labels, std::size_t rows) {
  if (labels.empty()) return default_labels(rows);
  if (labels.size() != rows) {
    throw Error(ErrorCode::LengthMismatch, "got " + std::to_string(labels.size()) +
                                               " labels for " + std::to_string(rows) + " rows");
  }
  return labels;
}

}  // namespace

EmbeddingMatrix::EmbeddingMatrix(Matrix values, std::vector<std::string> labels,
                                 std::string layer_tag)
    : values_(std::move(values)), layer_tag_(std::move(layer_tag)) {
  if (values_.rows() < 1 || values_.cols() < 1) {
    throw Error(ErrorCode::ShapeMismatch, "embedding matrix must have at least one row and column");
  }
  check_finite(values_);
  labels_ = checked_labels(std::move(labels), rows());
  index_.reserve(labels_.size());
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (!index_.emplace(labels_[i], i).second) {
      throw Error(ErrorCode::InvalidArgument, "duplicate label '" + labels_[i] + "'", i);
    }
  }
}

std::optional<std::size_t> EmbeddingMatrix::index_of(std::string_view label) const {
  auto it = index_.find(std::string(label));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Triplet::Triplet(ObjectIndex a_, ObjectIndex b_, ObjectIndex ooo_)
    : a(std::min(a_, b_)), b(std::max(a_, b_)), ooo(ooo_) {}

std::array<ObjectIndex, 3> Triplet::sorted() const noexcept {
  std::array<ObjectIndex, 3> idx{a, b, ooo};
  std::sort(idx.begin(), idx.end());
  return idx;
}

void validate_records(std::span<const Triplet> records, std::size_t num_objects) {
  for (std::size_t s = 0; s < records.size(); ++s) {
    const Triplet& t = records[s];
    if (t.a >= num_objects || t.b >= num_objects || t.ooo >= num_objects) {
      std::ostringstream msg;
      msg << "record " << s << " (" << t.a << ", " << t.b << ", " << t.ooo
          << ") references an object >= " << num_objects;
      throw Error(ErrorCode::IndexOutOfRange, msg.str(), s);
    }
    if (t.a == t.b || t.a == t.ooo || t.b == t.ooo) {
      std::ostringstream msg;
      msg << "record " << s << " (" << t.a << ", " << t.b << ", " << t.ooo
          << ") repeats an object";
      throw Error(ErrorCode::DuplicateIndexInTriplet, msg.str(), s);
    }
  }
}

TripletDataset::TripletDataset(std::vector<Triplet> records, std::size_t num_objects)
    : records_(std::move(records)), num_objects_(num_objects) {
  for (auto& t : records_) t = Triplet(t.a, t.b, t.ooo);
  validate_records(records_, num_objects_);
}

TripletDataset TripletDataset::subset(std::span<const std::size_t> record_indices) const {
  std::vector<Triplet> out;
  out.reserve(record_indices.size());
  for (std::size_t i : record_indices) out.push_back(records_.at(i));
  return TripletDataset(std::move(out), num_objects_);
}

void validate_dataset(const EmbeddingMatrix& embeddings, const TripletDataset& dataset) {
  if (embeddings.rows() < 3) {
    throw Error(ErrorCode::ShapeMismatch, "triplet analyses need at least 3 objects");
  }
  // Out-of-range indices are reported before the object-count mismatch so the
  // diagnostic names a concrete record.
  validate_records(dataset.records(), embeddings.rows());
  if (dataset.num_objects() != embeddings.rows()) {
    throw Error(ErrorCode::ShapeMismatch,
                "dataset declares " + std::to_string(dataset.num_objects()) +
                    " objects but the embedding has " + std::to_string(embeddings.rows()));
  }
  check_finite(embeddings.values());
}

TripletProbabilities::TripletProbabilities(std::array<double, 3> p) : p_(p) {
  double total = 0.0;
  for (double v : p_) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw Error(ErrorCode::InvalidArgument, "pair probability outside [0, 1]");
    }
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw Error(ErrorCode::InvalidArgument, "pair probabilities must sum to 1");
  }
}

ConceptEmbedding::ConceptEmbedding(Matrix y, std::vector<std::string> labels) : y_(std::move(y)) {
  if (y_.rows() < 1 || y_.cols() < 1) {
    throw Error(ErrorCode::ShapeMismatch, "concept embedding must be non-empty");
  }
  check_finite(y_);
  for (Eigen::Index i = 0; i < y_.rows(); ++i) {
    for (Eigen::Index j = 0; j < y_.cols(); ++j) {
      if (y_(i, j) < 0.0) {
        throw Error(ErrorCode::InvalidArgument,
                    "concept loading (" + std::to_string(i) + ", " + std::to_string(j) +
                        ") is negative",
                    static_cast<std::size_t>(i));
      }
    }
  }
  labels_ = checked_labels(std::move(labels), rows());
}

Rsm::Rsm(Matrix values, std::vector<std::string> labels) : values_(std::move(values)) {
  if (values_.rows() != values_.cols() || values_.rows() < 1) {
    throw Error(ErrorCode::ShapeMismatch, "RSM must be square and non-empty");
  }
  check_finite(values_);
  for (Eigen::Index i = 0; i < values_.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < values_.cols(); ++j) {
      if (std::abs(values_(i, j) - values_(j, i)) > 1e-9) {
        throw Error(ErrorCode::InvalidArgument,
                    "RSM is not symmetric at (" + std::to_string(i) + ", " + std::to_string(j) +
                        ")",
                    static_cast<std::size_t>(i));
      }
    }
  }
  labels_ = checked_labels(std::move(labels), size());
}

std::vector<double> Rsm::upper_triangle() const {
  const Eigen::Index m = values_.rows();
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(m * (m - 1) / 2));
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i + 1; j < m; ++j) out.push_back(values_(i, j));
  }
  return out;
}

Matrix AffineMap::apply(const Matrix& rows) const {
  if (rows.cols() != a.cols() || b.size() != a.rows()) {
    throw Error(ErrorCode::ShapeMismatch, "affine map expects " + std::to_string(a.cols()) +
                                              " input features, got " +
                                              std::to_string(rows.cols()));
  }
  Matrix out = rows * a.transpose();
  out.rowwise() += b.transpose();
  return out;
}

}  // namespace alignkit

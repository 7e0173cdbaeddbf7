#include "alignkit/similarity.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace alignkit {

std::string_view to_string(Measure measure) noexcept {
  return measure == Measure::Cosine ? "cosine" : "dot";
}

Measure parse_measure(std::string_view name) {
  if (name == "cosine") return Measure::Cosine;
  if (name == "dot") return Measure::Dot;
  throw Error(ErrorCode::InvalidArgument, "unknown similarity measure '" + std::string(name) +
                                              "' (expected cosine or dot)");
}

double cosine_similarity(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& y) {
  if (x.size() != y.size()) {
    throw Error(ErrorCode::ShapeMismatch, "cosine_similarity: vectors differ in length");
  }
  const double nx = x.norm();
  const double ny = y.norm();
  if (nx == 0.0 || ny == 0.0) {
    throw Error(ErrorCode::ZeroNormVector, "cosine similarity of a zero-norm vector");
  }
  return x.dot(y) / (nx * ny);
}

TripletSim triplet_similarities(const Matrix& rows, const std::array<ObjectIndex, 3>& triplet,
                                Measure measure) {
  TripletSim sim;
  sim.indices = triplet;
  std::array<double, 3> norms{1.0, 1.0, 1.0};
  if (measure == Measure::Cosine) {
    for (int u = 0; u < 3; ++u) {
      norms[u] = rows.row(triplet[u]).norm();
      if (norms[u] == 0.0) {
        throw Error(ErrorCode::ZeroNormVector,
                    "object " + std::to_string(triplet[u]) + " has a zero-norm embedding",
                    triplet[u]);
      }
    }
  }
  for (const auto& [u, v] : kTripletPairs) {
    const double value =
        rows.row(triplet[u]).dot(rows.row(triplet[v])) / (norms[u] * norms[v]);
    sim.s[u][v] = value;
    sim.s[v][u] = value;
  }
  for (int u = 0; u < 3; ++u) {
    sim.s[u][u] = measure == Measure::Cosine ? 1.0 : rows.row(triplet[u]).squaredNorm();
  }
  return sim;
}

TripletSim triplet_similarities(const EmbeddingMatrix& embeddings,
                                const std::array<ObjectIndex, 3>& triplet, Measure measure) {
  for (ObjectIndex i : triplet) {
    if (i >= embeddings.rows()) {
      throw Error(ErrorCode::IndexOutOfRange, "object " + std::to_string(i) + " out of range");
    }
  }
  if (triplet[0] == triplet[1] || triplet[0] == triplet[2] || triplet[1] == triplet[2]) {
    throw Error(ErrorCode::DuplicateIndexInTriplet, "triplet repeats an object");
  }
  return triplet_similarities(embeddings.values(), triplet, measure);
}

Rsm pearson_rsm(const EmbeddingMatrix& embeddings) {
  const Matrix& x = embeddings.values();
  if (x.cols() < 2) {
    throw Error(ErrorCode::InvalidArgument, "Pearson RSM needs at least two features");
  }
  Matrix centered = x.colwise() - x.rowwise().mean();
  for (Eigen::Index i = 0; i < centered.rows(); ++i) {
    const double norm = centered.row(i).norm();
    if (norm == 0.0) {
      throw Error(ErrorCode::ZeroVarianceRow,
                  "row " + std::to_string(i) + " has zero variance across features",
                  static_cast<std::size_t>(i));
    }
    centered.row(i) /= norm;
  }
  Matrix r = centered * centered.transpose();
  for (Eigen::Index i = 0; i < r.rows(); ++i) {
    r(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < r.cols(); ++j) {
      const double v = std::clamp(0.5 * (r(i, j) + r(j, i)), -1.0, 1.0);
      r(i, j) = v;
      r(j, i) = v;
    }
  }
  return Rsm(std::move(r), embeddings.labels());
}

double linear_cka(const Matrix& x, const Matrix& y) {
  if (x.rows() != y.rows()) {
    throw Error(ErrorCode::ShapeMismatch, "CKA inputs must describe the same objects");
  }
  if (x.rows() < 2) throw Error(ErrorCode::ShapeMismatch, "CKA needs at least two objects");
  const Matrix xc = x.rowwise() - x.colwise().mean();
  const Matrix yc = y.rowwise() - y.colwise().mean();
  // vec(XX^T).vec(YY^T) = ||X^T Y||_F^2 and ||XX^T||_F = ||X^T X||_F.
  const double xx = (xc.transpose() * xc).norm();
  const double yy = (yc.transpose() * yc).norm();
  if (xx == 0.0 || yy == 0.0) {
    throw Error(ErrorCode::DegenerateGram, "centered Gram matrix is all zero");
  }
  const double cross = (xc.transpose() * yc).norm();
  return std::clamp((cross / xx) * (cross / yy), 0.0, 1.0);
}

double linear_cka(const EmbeddingMatrix& x, const EmbeddingMatrix& y) {
  return linear_cka(x.values(), y.values());
}

Rsm full_similarity_matrix(const EmbeddingMatrix& embeddings, Measure measure) {
  Matrix rows = embeddings.values();
  if (measure == Measure::Cosine) {
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
      const double norm = rows.row(i).norm();
      if (norm == 0.0) {
        throw Error(ErrorCode::ZeroNormVector,
                    "object " + std::to_string(i) + " has a zero-norm embedding",
                    static_cast<std::size_t>(i));
      }
      rows.row(i) /= norm;
    }
  }
  Matrix s = rows * rows.transpose();
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < s.cols(); ++j) s(j, i) = s(i, j);
  }
  return Rsm(std::move(s), embeddings.labels());
}

}  // namespace alignkit

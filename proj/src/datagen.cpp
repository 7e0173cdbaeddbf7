#include "alignkit/datagen.hpp"

#include "alignkit/oddoneout.hpp"
#include "alignkit/similarity.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace alignkit {

std::vector<TripletIndices> sample_triplets(std::size_t m, std::size_t n, Rng& rng) {
  if (m < 3) throw Error(ErrorCode::InvalidArgument, "need at least 3 objects to form triplets");
  std::vector<TripletIndices> out;
  out.reserve(n);
  for (std::size_t s = 0; s < n; ++s) {
    const auto i = static_cast<ObjectIndex>(rng.below(m));
    ObjectIndex j, k;
    do { j = static_cast<ObjectIndex>(rng.below(m)); } while (j == i);
    do { k = static_cast<ObjectIndex>(rng.below(m)); } while (k == i || k == j);
    out.push_back({i, j, k});
  }
  return out;
}

TripletDataset gen_random_responses(std::size_t m, std::size_t n, Rng& rng) {
  std::vector<Triplet> records;
  records.reserve(n);
  for (const auto& t : sample_triplets(m, n, rng)) {
    const auto odd = static_cast<int>(rng.below(3));
    records.emplace_back(t[(odd + 1) % 3], t[(odd + 2) % 3], t[odd]);
  }
  return TripletDataset(std::move(records), m);
}

TripletDataset gen_class_triplets(std::span<const int> labels, std::size_t n, Rng& rng) {
  std::map<int, std::vector<ObjectIndex>> members;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    members[labels[i]].push_back(static_cast<ObjectIndex>(i));
  }
  if (members.size() < 2) {
    throw Error(ErrorCode::InsufficientClassMembers, "class triplets need at least two classes");
  }
  std::vector<const std::vector<ObjectIndex>*> classes;
  for (const auto& [label, objects] : members) {
    if (objects.size() < 2) {
      throw Error(ErrorCode::InsufficientClassMembers,
                  "class " + std::to_string(label) + " has fewer than two objects");
    }
    classes.push_back(&objects);
  }

  std::vector<Triplet> records;
  records.reserve(n);
  for (std::size_t s = 0; s < n; ++s) {
    const auto c = static_cast<std::size_t>(rng.below(classes.size()));
    const auto& same = *classes[c];
    const auto first = static_cast<std::size_t>(rng.below(same.size()));
    auto second = static_cast<std::size_t>(rng.below(same.size() - 1));
    if (second >= first) ++second;
    ObjectIndex odd;
    do {
      odd = static_cast<ObjectIndex>(rng.below(labels.size()));
    } while (labels[odd] == labels[same[first]]);
    records.emplace_back(same[first], same[second], odd);
  }
  return TripletDataset(std::move(records), labels.size());
}

TripletDataset gen_bayes_responses(const Matrix& ground_truth,
                                   std::span<const TripletIndices> triplets,
                                   const ResponseOptions& options, Rng& rng) {
  if (options.mode == ResponseMode::Sample && !(options.tau > 0.0)) {
    throw Error(ErrorCode::NonPositiveTau, "sampling responses needs a positive temperature");
  }
  const std::size_t m = static_cast<std::size_t>(ground_truth.rows());
  std::vector<Triplet> records;
  records.reserve(triplets.size());
  for (const auto& raw : triplets) {
    for (ObjectIndex i : raw) {
      if (i >= m) throw Error(ErrorCode::IndexOutOfRange, "triplet references a missing object");
    }
    TripletIndices idx = raw;
    std::sort(idx.begin(), idx.end());
    const TripletSim sim = triplet_similarities(ground_truth, idx, Measure::Dot);

    int pair = 0;
    if (options.mode == ResponseMode::Argmax) {
      const OooPrediction pred = predict_ooo(sim);
      pair = pred.ooo_position == 2 ? 0 : (pred.ooo_position == 1 ? 1 : 2);
      if (options.min_margin >= 0.0) {
        std::array<double, 3> v{sim.pair(0, 1), sim.pair(0, 2), sim.pair(1, 2)};
        std::sort(v.begin(), v.end());
        if (v[2] - v[1] <= options.min_margin) continue;
      }
    } else {
      const auto p = pair_probabilities(sim, options.tau).values();
      const double u = rng.uniform();
      pair = u < p[0] ? 0 : (u < p[0] + p[1] ? 1 : 2);
    }
    const auto [u, v] = kTripletPairs[pair];
    records.emplace_back(idx[u], idx[v], idx[3 - u - v]);
  }
  return TripletDataset(std::move(records), m);
}

ConceptEmbedding gen_sparse_concepts(std::size_t m, std::size_t dims, Rng& rng,
                                     std::size_t min_active, std::size_t max_active, double low,
                                     double high) {
  if (dims < 1 || min_active < 1 || min_active > max_active || max_active > dims) {
    throw Error(ErrorCode::InvalidArgument, "need 1 <= min_active <= max_active <= dims");
  }
  if (!(low >= 0.0 && high > low)) {
    throw Error(ErrorCode::InvalidArgument, "active values need 0 <= low < high");
  }
  Matrix y = Matrix::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(dims));
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t active = min_active + rng.below(max_active - min_active + 1);
    for (ObjectIndex j : sample_without_replacement(dims, active, rng)) {
      y(static_cast<Eigen::Index>(i), j) = low + (high - low) * rng.uniform();
    }
  }
  // Order dimensions by total loading, most important first.
  std::vector<Eigen::Index> order(dims);
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  const Eigen::RowVectorXd mass = y.colwise().sum();
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return mass(a) > mass(b); });
  Matrix sorted(y.rows(), y.cols());
  for (std::size_t j = 0; j < dims; ++j) sorted.col(static_cast<Eigen::Index>(j)) = y.col(order[j]);
  return ConceptEmbedding(std::move(sorted));
}

EmbeddingMatrix gen_gaussian_embeddings(std::size_t m, std::size_t p, Rng& rng) {
  Matrix x(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(p));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = rng.normal();
  }
  return EmbeddingMatrix(std::move(x));
}

Matrix random_orthogonal(std::size_t n, Rng& rng) {
  Matrix g(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < g.rows(); ++i) {
    for (Eigen::Index j = 0; j < g.cols(); ++j) g(i, j) = rng.normal();
  }
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < q.cols(); ++j) {
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  }
  return q;
}

Matrix random_invertible(std::size_t n, double condition_number, Rng& rng) {
  if (!(condition_number >= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "condition number must be >= 1");
  }
  const Matrix u = random_orthogonal(n, rng);
  const Matrix v = random_orthogonal(n, rng);
  Vector s(static_cast<Eigen::Index>(n));
  const double log_c = std::log(condition_number);
  for (Eigen::Index k = 0; k < s.size(); ++k) {
    const double t = n == 1 ? 0.0
                     : k == 0 ? 0.0
                     : k + 1 == s.size() ? 1.0
                                         : rng.uniform();
    s(k) = std::exp(-t * log_c);
  }
  return u * s.asDiagonal() * v.transpose();
}

Misalignment gen_misaligned_embeddings(const Matrix& ground_truth, DistortionKind kind,
                                       double noise_std, Rng& rng, double condition_number) {
  if (!(noise_std >= 0.0)) throw Error(ErrorCode::InvalidArgument, "noise_std must be >= 0");
  const auto d = static_cast<std::size_t>(ground_truth.cols());
  Matrix q = kind == DistortionKind::RandomOrthogonal ? random_orthogonal(d, rng)
                                                      : random_invertible(d, condition_number, rng);
  Matrix x = ground_truth * q;
  if (noise_std > 0.0) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) += noise_std * rng.normal();
    }
  }
  return {EmbeddingMatrix(std::move(x)), std::move(q)};
}

}  // namespace alignkit

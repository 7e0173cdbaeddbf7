#include "alignkit/concepts.hpp"

#include "alignkit/oddoneout.hpp"
#include "alignkit/probing.hpp"

#include <algorithm>
#include <cmath>

namespace alignkit {

TripletDataset filter_vice_correct(const TripletDataset& dataset,
                                   std::span<const ObjectIndex> predicted_ooo) {
  if (predicted_ooo.size() != dataset.size()) {
    throw Error(ErrorCode::LengthMismatch,
                "got " + std::to_string(predicted_ooo.size()) + " predictions for " +
                    std::to_string(dataset.size()) + " records");
  }
  std::vector<Triplet> kept;
  for (std::size_t s = 0; s < dataset.size(); ++s) {
    if (predicted_ooo[s] == dataset[s].ooo) kept.push_back(dataset[s]);
  }
  return TripletDataset(std::move(kept), dataset.num_objects());
}

std::size_t assign_concept(const Triplet& record, const ConceptEmbedding& concepts) {
  const auto m = concepts.rows();
  if (record.a >= m || record.b >= m || record.ooo >= m) {
    throw Error(ErrorCode::IndexOutOfRange, "record references an object without concept loadings");
  }
  const Matrix& y = concepts.values();
  Eigen::Index best = 0;
  double best_value = y(record.a, 0) + y(record.b, 0);
  for (Eigen::Index j = 1; j < y.cols(); ++j) {
    const double v = y(record.a, j) + y(record.b, j);
    if (v > best_value) {
      best = j;
      best_value = v;
    }
  }
  return static_cast<std::size_t>(best);
}

std::vector<TripletDataset> partition_by_concept(const TripletDataset& dataset,
                                                 const ConceptEmbedding& concepts) {
  std::vector<std::vector<Triplet>> buckets(concepts.dims());
  for (const Triplet& t : dataset.records()) buckets[assign_concept(t, concepts)].push_back(t);
  std::vector<TripletDataset> out;
  out.reserve(buckets.size());
  for (auto& b : buckets) out.emplace_back(std::move(b), dataset.num_objects());
  return out;
}

std::vector<ConceptAccuracy> per_concept_accuracy(const EmbeddingMatrix& x,
                                                  const std::vector<TripletDataset>& partitions,
                                                  Measure measure, const LinearProbe* probe) {
  std::optional<EmbeddingMatrix> probed;
  if (probe != nullptr) probed = apply_probe(*probe, x);
  std::vector<ConceptAccuracy> table;
  table.reserve(partitions.size());
  for (std::size_t j = 0; j < partitions.size(); ++j) {
    ConceptAccuracy row;
    row.dimension = j;
    row.n = partitions[j].size();
    if (row.n > 0) {
      row.zero_shot = zero_shot_accuracy(x, partitions[j], measure).accuracy;
      if (probed) row.probed = zero_shot_accuracy(*probed, partitions[j], Measure::Dot).accuracy;
    }
    table.push_back(row);
  }
  return table;
}

std::vector<EntropyBin> entropy_binned_error(const TripletDataset& dataset,
                                             const std::vector<double>& entropies,
                                             const std::vector<bool>& correct, int bins) {
  if (entropies.size() != dataset.size() || correct.size() != dataset.size()) {
    throw Error(ErrorCode::LengthMismatch, "entropies, correctness and records differ in length");
  }
  if (bins < 1) throw Error(ErrorCode::InvalidArgument, "need at least one entropy bin");
  const double top = std::log(3.0);
  const double width = top / bins;
  std::vector<EntropyBin> table(static_cast<std::size_t>(bins));
  std::vector<std::size_t> errors(table.size(), 0);
  for (int i = 0; i < bins; ++i) {
    table[i].lower = width * i;
    table[i].upper = i + 1 == bins ? top : width * (i + 1);
  }
  for (std::size_t s = 0; s < entropies.size(); ++s) {
    const double h = entropies[s];
    if (!(h >= -1e-9 && h <= top + 1e-9)) {
      throw Error(ErrorCode::EntropyOutOfRange,
                  "entropy " + std::to_string(h) + " outside [0, ln 3]", s);
    }
    auto i = static_cast<int>(std::floor(h / width));
    i = std::clamp(i, 0, bins - 1);
    // Guard against the division landing one bin too high at an edge.
    if (i > 0 && h < table[i].lower) --i;
    ++table[i].n;
    if (!correct[s]) ++errors[i];
  }
  for (std::size_t i = 0; i < table.size(); ++i) {
    if (table[i].n > 0) {
      table[i].error_rate = static_cast<double>(errors[i]) / static_cast<double>(table[i].n);
    }
  }
  return table;
}

Matrix agreement_matrix(const std::vector<std::vector<ObjectIndex>>& predictions) {
  const auto k = static_cast<Eigen::Index>(predictions.size());
  Matrix agree = Matrix::Identity(k, k);
  if (k == 0) return agree;
  const std::size_t n = predictions.front().size();
  for (const auto& p : predictions) {
    if (p.size() != n) throw Error(ErrorCode::LengthMismatch, "prediction vectors differ in length");
  }
  if (n == 0) throw Error(ErrorCode::LengthMismatch, "agreement needs at least one record");
  for (Eigen::Index u = 0; u < k; ++u) {
    for (Eigen::Index v = u + 1; v < k; ++v) {
      std::size_t same = 0;
      for (std::size_t s = 0; s < n; ++s) same += predictions[u][s] == predictions[v][s] ? 1 : 0;
      agree(u, v) = agree(v, u) = static_cast<double>(same) / static_cast<double>(n);
    }
  }
  return agree;
}

std::vector<ObjectIndex> ooo_from_probabilities(const TripletDataset& dataset,
                                                const std::vector<std::array<double, 3>>& probs) {
  if (probs.size() != dataset.size()) {
    throw Error(ErrorCode::LengthMismatch,
                "got " + std::to_string(probs.size()) + " probability rows for " +
                    std::to_string(dataset.size()) + " records");
  }
  std::vector<ObjectIndex> out;
  out.reserve(probs.size());
  for (std::size_t s = 0; s < probs.size(); ++s) {
    const Triplet& t = dataset[s];
    const std::array<ObjectIndex, 3> objects{t.a, t.b, t.ooo};
    int best = 0;
    for (int c = 1; c < 3; ++c) {
      if (probs[s][c] > probs[s][best]) best = c;
    }
    out.push_back(objects[best]);
  }
  return out;
}

}  // namespace alignkit

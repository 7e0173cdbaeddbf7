#pragma once

#include "alignkit/core.hpp"
#include "alignkit/similarity.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace alignkit {

// Keeps the records whose predicted odd-one-out matches the response.
TripletDataset filter_vice_correct(const TripletDataset& dataset,
                                   std::span<const ObjectIndex> predicted_ooo);

// argmax_j Y[a, j] + Y[b, j] over the chosen pair; ties favor the lower j.
std::size_t assign_concept(const Triplet& record, const ConceptEmbedding& concepts);

// One dataset per concept dimension; every record lands in exactly one.
std::vector<TripletDataset> partition_by_concept(const TripletDataset& dataset,
                                                 const ConceptEmbedding& concepts);

struct ConceptAccuracy {
  std::size_t dimension = 0;
  std::size_t n = 0;
  std::optional<double> zero_shot;  // absent when n == 0
  std::optional<double> probed;     // absent when n == 0 or no probe given
};

// Probed accuracies use the inner product, matching how probes are trained.
std::vector<ConceptAccuracy> per_concept_accuracy(const EmbeddingMatrix& x,
                                                  const std::vector<TripletDataset>& partitions,
                                                  Measure measure,
                                                  const LinearProbe* probe = nullptr);

struct EntropyBin {
  double lower = 0.0;
  double upper = 0.0;
  std::size_t n = 0;
  std::optional<double> error_rate;  // absent for empty bins
};

/// Equal-width bins over [0, ln 3]; bin i holds [lower, upper) except the last,
/// which is closed. Entropies beyond ln 3 by more than 1e-9 throw
/// EntropyOutOfRange.
std::vector<EntropyBin> entropy_binned_error(const TripletDataset& dataset,
                                             const std::vector<double>& entropies,
                                             const std::vector<bool>& correct, int bins = 11);

// Entry (u, v): share of records on which models u and v pick the same
// odd-one-out.
Matrix agreement_matrix(const std::vector<std::vector<ObjectIndex>>& predictions);

// Predicted odd-one-out for each record from per-record probabilities
// (p_a, p_b, p_c): probability that obj_a, obj_b, ooo respectively is the
// odd-one-out. Ties resolve in that column order.
std::vector<ObjectIndex> ooo_from_probabilities(const TripletDataset& dataset,
                                                const std::vector<std::array<double, 3>>& probs);

}  // namespace alignkit

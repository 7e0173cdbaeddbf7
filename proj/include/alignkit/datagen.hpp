#pragma once

#include "alignkit/core.hpp"
#include "alignkit/rng.hpp"

#include <array>
#include <span>
#include <vector>

namespace alignkit {

using TripletIndices = std::array<ObjectIndex, 3>;

// n triplets of distinct objects drawn uniformly from [0, m).
std::vector<TripletIndices> sample_triplets(std::size_t m, std::size_t n, Rng& rng);

// Uniformly random triplets with a uniformly random odd-one-out (chance responder).
TripletDataset gen_random_responses(std::size_t m, std::size_t n, Rng& rng);

/// Two objects from one class form the pair, the odd-one-out comes from
/// another class. The pair class is uniform over classes. Every class needs at
/// least two members and there must be two or more classes.
TripletDataset gen_class_triplets(std::span<const int> labels, std::size_t n, Rng& rng);

enum class ResponseMode { Argmax, Sample };

struct ResponseOptions {
  ResponseMode mode = ResponseMode::Argmax;
  double tau = 1.0;
  // Argmax mode only: skip triplets whose best pair does not beat the
  // runner-up by more than this margin. Negative keeps every triplet, ties
  // included (resolved toward the first pair of the sorted triplet).
  double min_margin = -1.0;
};

/// Simulated responder on dot-product similarities of `ground_truth` rows.
TripletDataset gen_bayes_responses(const Matrix& ground_truth,
                                   std::span<const TripletIndices> triplets,
                                   const ResponseOptions& options, Rng& rng);

// Sparse nonnegative concept loadings: each object is active on between
// min_active and max_active of `dims` dimensions, active values drawn
// uniformly from [low, high).
ConceptEmbedding gen_sparse_concepts(std::size_t m, std::size_t dims, Rng& rng,
                                     std::size_t min_active = 1, std::size_t max_active = 3,
                                     double low = 0.5, double high = 1.5);

EmbeddingMatrix gen_gaussian_embeddings(std::size_t m, std::size_t p, Rng& rng);

// Haar-distributed orthogonal matrix.
Matrix random_orthogonal(std::size_t n, Rng& rng);

// U diag(s) V^T with log-uniform singular values spanning [1/condition, 1].
Matrix random_invertible(std::size_t n, double condition_number, Rng& rng);

enum class DistortionKind { RandomInvertible, RandomOrthogonal };

struct Misalignment {
  EmbeddingMatrix embeddings;
  Matrix transform;
};

// X = G Q + noise, Q square (d x d).
Misalignment gen_misaligned_embeddings(const Matrix& ground_truth, DistortionKind kind,
                                       double noise_std, Rng& rng,
                                       double condition_number = 100.0);

}  // namespace alignkit

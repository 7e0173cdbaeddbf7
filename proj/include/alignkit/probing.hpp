#pragma once

#include "alignkit/core.hpp"
#include "alignkit/rng.hpp"
#include "alignkit/similarity.hpp"

#include <span>
#include <vector>

namespace alignkit {

struct ProbeConfig {
  double learning_rate = 1e-3;
  int max_epochs = 100;
  double early_stop_delta = 1e-4;
  int early_stop_patience = 10;
  std::vector<double> lambda_grid{1e-4, 1e-3, 1e-2, 1e-1, 1.0};
  int k_folds = 3;
  int batch_size = 1024;
  double init_std = 0.03162277660168379;  // sqrt(1e-3)
  std::uint64_t seed = 0;
  // Share of train objects held out (object-disjoint) for early stopping.
  double val_fraction = 0.1;
  // Similarity used to score probed embeddings.
  Measure eval_measure = Measure::Dot;

  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;

  void validate() const;
};

struct ObjectSplit {
  TripletDataset train;
  TripletDataset test;
  std::vector<ObjectIndex> train_objects;  // ascending
  std::vector<ObjectIndex> test_objects;   // ascending
};

/// Object-disjoint split: floor(train_fraction * m) objects are drawn
/// uniformly without replacement; a record is kept on a side only when all
/// three of its objects belong to that side, mixed records are dropped.
/// Throws EmptySplit when either side ends up without records.
ObjectSplit partition_objects(const TripletDataset& dataset, double train_fraction, Rng& rng);

// Same rule for an explicit object set; never throws on empty sides.
ObjectSplit split_by_objects(const TripletDataset& dataset,
                             std::span<const ObjectIndex> train_objects);

// Mean negative log-likelihood of the chosen pairs under S = (Wx_i)^T (Wx_j),
// plus lambda * ||W||_F^2.
double probe_loss(const Matrix& w, const Matrix& x, std::span<const Triplet> batch, double lambda);
Matrix probe_gradient(const Matrix& w, const Matrix& x, std::span<const Triplet> batch,
                      double lambda);

struct LossAndGradient {
  double loss = 0.0;
  Matrix gradient;
};
LossAndGradient probe_loss_and_gradient(const Matrix& w, const Matrix& x,
                                        std::span<const Triplet> batch, double lambda);

/// Adam on shuffled mini-batches from `train`; validation odd-one-out accuracy
/// on `val` after every epoch drives early stopping, and the weights of the
/// best validation epoch are returned. `lambda` is taken from the argument,
/// not from config.lambda_grid.
LinearProbe train_probe(const EmbeddingMatrix& x, const TripletDataset& train,
                        const TripletDataset& val, double lambda, const ProbeConfig& config);

EmbeddingMatrix apply_probe(const LinearProbe& probe, const EmbeddingMatrix& x);
EmbeddingMatrix apply_probe(const Matrix& w, const EmbeddingMatrix& x);

double probe_accuracy(const LinearProbe& probe, const EmbeddingMatrix& x,
                      const TripletDataset& dataset, Measure measure = Measure::Dot);

struct LambdaCell {
  double lambda = 0.0;
  double val_accuracy = 0.0;
  double test_accuracy = 0.0;
  int epochs_run = 0;
  int best_epoch = 0;
};

struct FoldReport {
  int fold = 0;
  std::size_t n_fit = 0;
  std::size_t n_val = 0;
  std::size_t n_test = 0;
  std::size_t n_discarded = 0;  // mixed records dropped by either split
  std::vector<LambdaCell> cells;  // lambda_grid order
  double selected_lambda = 0.0;
  double test_accuracy = 0.0;
  Matrix selected_weights;
};

struct CrossValidationResult {
  double best_lambda = 0.0;
  double mean_test_accuracy = 0.0;
  std::vector<double> mean_val_accuracy;  // lambda_grid order
  std::vector<FoldReport> folds;
};

/// k rounds of object partitioning with train_fraction (k-1)/k. Within each
/// round the train objects are split again into fit and validation objects;
/// one probe per lambda is trained on the fit records. Every (fold, lambda)
/// cell gets its own RNG stream derived from (seed, fold, lambda index).
CrossValidationResult cross_validate_probe(const EmbeddingMatrix& x, const TripletDataset& dataset,
                                           const ProbeConfig& config);

// Probe for deployment: all records, one fit/validation object split.
LinearProbe train_final_probe(const EmbeddingMatrix& x, const TripletDataset& dataset,
                              double lambda, const ProbeConfig& config);

}  // namespace alignkit

#pragma once

#include "alignkit/core.hpp"

#include <vector>

namespace alignkit {

struct RegressionConfig {
  int outer_folds = 5;
  std::vector<double> alpha_grid{0.01, 0.1, 1.0, 10.0, 100.0, 1e3, 1e4, 1e5, 1e6};
  std::uint64_t seed = 0;

  void validate() const;
};

struct RidgeFit {
  Vector weights;
  double bias = 0.0;

  Vector predict(const Matrix& rows) const;
};

/// Ridge regression with an unpenalized intercept:
///   min_w,b  sum_i (y_i - w^T x_i - b)^2 + alpha ||w||^2
/// solved on centered data. alpha = 0 is allowed and throws SingularSystem
/// when the centered design is rank deficient.
RidgeFit ridge_fit(const Matrix& rows, const Vector& y, double alpha);

// Leave-one-out mean squared error for every alpha, via the hat-matrix
// identity e_i / (1 - H_ii) (no refitting).
std::vector<double> loocv_mse(const Matrix& rows, const Vector& y,
                              const std::vector<double>& alpha_grid);

// Grid alpha with the lowest LOO MSE; exact ties prefer the smaller alpha.
double loocv_alpha(const Matrix& rows, const Vector& y, const std::vector<double>& alpha_grid);

// 1 - SS_res / SS_tot, not clamped. A constant target scores 1 when predicted
// exactly and 0 otherwise.
double r2_score(const Vector& truth, const Vector& predicted);

struct ConceptFit {
  std::vector<double> per_dimension_r2;            // mean held-out R^2
  std::vector<double> per_dimension_alpha;         // modal alpha used for the refit
  std::vector<std::vector<double>> fold_alphas;    // [dimension][outer fold]
  std::vector<std::vector<double>> fold_r2;        // [dimension][outer fold]
  AffineMap affine;

  double mean_r2() const;
};

// k-fold split of `n` rows; fold f holds rows order[f], order[f + k], ...
std::vector<std::vector<std::size_t>> outer_folds(std::size_t n, int k, std::uint64_t seed,
                                                  std::uint64_t stream);

/// Per concept dimension: outer k-fold CV over objects with LOO alpha
/// selection inside each training fold, then a full-data refit with the modal
/// alpha. Dimension j's folds are drawn from the stream (seed, j).
ConceptFit nested_cv_concept_fit(const EmbeddingMatrix& x, const ConceptEmbedding& y,
                                 const RegressionConfig& config);

// Zero-shot accuracy under S_ij = (A x_i + b)^T (A x_j + b).
double regression_ooo_accuracy(const EmbeddingMatrix& x, const AffineMap& affine,
                               const TripletDataset& dataset);

}  // namespace alignkit

#include "alignkit/regression.hpp"

#include "alignkit/oddoneout.hpp"
#include "alignkit/parallel.hpp"
#include "alignkit/rng.hpp"

#include <Eigen/Cholesky>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace alignkit {

void RegressionConfig::validate() const {
  if (outer_folds < 2) throw Error(ErrorCode::InvalidArgument, "outer_folds must be >= 2");
  if (alpha_grid.empty()) throw Error(ErrorCode::InvalidArgument, "alpha_grid must not be empty");
  for (double a : alpha_grid) {
    if (!(a > 0.0) || !std::isfinite(a)) {
      throw Error(ErrorCode::InvalidArgument, "alpha values must be positive and finite");
    }
  }
}

Vector RidgeFit::predict(const Matrix& rows) const {
  if (rows.cols() != weights.size()) {
    throw Error(ErrorCode::ShapeMismatch, "ridge model expects " +
                                              std::to_string(weights.size()) + " features");
  }
  return (rows * weights).array() + bias;
}

namespace {

void check_xy(const Matrix& rows, const Vector& y, Eigen::Index min_rows) {
  if (rows.rows() != y.size()) {
    throw Error(ErrorCode::LengthMismatch, "design has " + std::to_string(rows.rows()) +
                                               " rows but target has " +
                                               std::to_string(y.size()));
  }
  if (rows.rows() < min_rows) {
    throw Error(ErrorCode::InvalidArgument,
                "ridge regression needs at least " + std::to_string(min_rows) + " rows");
  }
}

}  // namespace

RidgeFit ridge_fit(const Matrix& rows, const Vector& y, double alpha) {
  check_xy(rows, y, 2);
  if (!(alpha >= 0.0)) throw Error(ErrorCode::InvalidArgument, "alpha must be >= 0");
  const Eigen::RowVectorXd x_mean = rows.colwise().mean();
  const double y_mean = y.mean();
  const Matrix xc = rows.rowwise() - x_mean;
  const Vector yc = y.array() - y_mean;

  Matrix gram = xc.transpose() * xc;
  gram.diagonal().array() += alpha;
  Eigen::LDLT<Matrix> ldlt(gram);
  const Vector pivots = ldlt.vectorD();
  if (ldlt.info() != Eigen::Success ||
      (alpha == 0.0 && !(pivots.minCoeff() > 1e-12 * pivots.cwiseAbs().maxCoeff()))) {
    throw Error(ErrorCode::SingularSystem, "normal equations are singular; use alpha > 0");
  }
  RidgeFit fit;
  fit.weights = ldlt.solve(xc.transpose() * yc);
  fit.bias = y_mean - x_mean.dot(fit.weights);
  return fit;
}

std::vector<double> loocv_mse(const Matrix& rows, const Vector& y,
                              const std::vector<double>& alpha_grid) {
  check_xy(rows, y, 3);
  const auto n = static_cast<double>(rows.rows());
  const Matrix xc = rows.rowwise() - rows.colwise().mean();
  const Vector yc = y.array() - y.mean();

  Eigen::BDCSVD<Matrix> svd(xc, Eigen::ComputeThinU);
  const Vector s2 = svd.singularValues().array().square();
  const Matrix& u = svd.matrixU();
  const Vector uty = u.transpose() * yc;
  const Matrix u2 = u.array().square();

  std::vector<double> mse;
  mse.reserve(alpha_grid.size());
  for (double alpha : alpha_grid) {
    if (!(alpha >= 0.0)) throw Error(ErrorCode::InvalidArgument, "alpha must be >= 0");
    Vector shrink(s2.size());
    for (Eigen::Index k = 0; k < s2.size(); ++k) {
      shrink(k) = s2(k) + alpha > 0.0 ? s2(k) / (s2(k) + alpha) : 0.0;
    }
    // H = 11^T/n + U diag(shrink) U^T for the intercept-plus-ridge smoother.
    const Vector fitted_c = u * shrink.cwiseProduct(uty);
    const Vector leverage = (u2 * shrink).array() + 1.0 / n;
    double total = 0.0;
    for (Eigen::Index i = 0; i < yc.size(); ++i) {
      const double r = (yc(i) - fitted_c(i)) / (1.0 - leverage(i));
      total += r * r;
    }
    mse.push_back(total / n);
  }
  return mse;
}

double loocv_alpha(const Matrix& rows, const Vector& y, const std::vector<double>& alpha_grid) {
  if (alpha_grid.empty()) throw Error(ErrorCode::InvalidArgument, "alpha grid is empty");
  const auto mse = loocv_mse(rows, y, alpha_grid);
  std::size_t best = 0;
  for (std::size_t i = 1; i < mse.size(); ++i) {
    if (mse[i] < mse[best] || (mse[i] == mse[best] && alpha_grid[i] < alpha_grid[best])) best = i;
  }
  return alpha_grid[best];
}

double r2_score(const Vector& truth, const Vector& predicted) {
  if (truth.size() != predicted.size() || truth.size() == 0) {
    throw Error(ErrorCode::LengthMismatch, "R^2 inputs differ in length or are empty");
  }
  const double ss_res = (truth - predicted).squaredNorm();
  const double ss_tot = (truth.array() - truth.mean()).square().sum();
  if (ss_tot == 0.0) return ss_res == 0.0 ? 1.0 : 0.0;
  return 1.0 - ss_res / ss_tot;
}

double ConceptFit::mean_r2() const {
  if (per_dimension_r2.empty()) return 0.0;
  return std::accumulate(per_dimension_r2.begin(), per_dimension_r2.end(), 0.0) /
         static_cast<double>(per_dimension_r2.size());
}

std::vector<std::vector<std::size_t>> outer_folds(std::size_t n, int k, std::uint64_t seed,
                                                  std::uint64_t stream) {
  if (k < 2 || static_cast<std::size_t>(k) > n) {
    throw Error(ErrorCode::InvalidArgument, "fold count must lie in [2, rows]");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng = Rng(seed).derive({0xf01du, stream});
  shuffle(order, rng);
  std::vector<std::vector<std::size_t>> folds(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < n; ++i) folds[i % folds.size()].push_back(order[i]);
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

namespace {

Matrix take_rows(const Matrix& m, const std::vector<std::size_t>& idx) {
  Matrix out(static_cast<Eigen::Index>(idx.size()), m.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(idx[i]));
  return out;
}

Vector take(const Vector& v, const std::vector<std::size_t>& idx) {
  Vector out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out(static_cast<Eigen::Index>(i)) = v(static_cast<Eigen::Index>(idx[i]));
  return out;
}

// Most frequent value; ties go to the smaller one.
double modal_value(const std::vector<double>& values) {
  std::map<double, int> counts;
  for (double v : values) ++counts[v];
  double best = values.front();
  int best_count = 0;
  for (const auto& [value, count] : counts) {
    if (count > best_count) {
      best = value;
      best_count = count;
    }
  }
  return best;
}

}  // namespace

ConceptFit nested_cv_concept_fit(const EmbeddingMatrix& x, const ConceptEmbedding& y,
                                 const RegressionConfig& config) {
  config.validate();
  if (x.rows() != y.rows()) {
    throw Error(ErrorCode::ShapeMismatch, "embedding has " + std::to_string(x.rows()) +
                                              " objects but concepts have " +
                                              std::to_string(y.rows()));
  }
  const std::size_t m = x.rows();
  const std::size_t d = y.dims();
  const auto k = static_cast<std::size_t>(config.outer_folds);
  if (m < k * 3 + 1) {
    throw Error(ErrorCode::InvalidArgument, "too few objects for nested cross-validation");
  }

  ConceptFit fit;
  fit.per_dimension_r2.assign(d, 0.0);
  fit.per_dimension_alpha.assign(d, 0.0);
  fit.fold_alphas.assign(d, std::vector<double>(k, 0.0));
  fit.fold_r2.assign(d, std::vector<double>(k, 0.0));
  fit.affine.a = Matrix::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(x.cols()));
  fit.affine.b = Vector::Zero(static_cast<Eigen::Index>(d));

  const Matrix& features = x.values();
  parallel_for(d, [&](std::size_t j) {
    const Vector target = y.values().col(static_cast<Eigen::Index>(j));
    const auto folds = outer_folds(m, config.outer_folds, config.seed, j);
    for (std::size_t f = 0; f < k; ++f) {
      std::vector<std::size_t> train;
      train.reserve(m);
      for (std::size_t g = 0; g < k; ++g) {
        if (g != f) train.insert(train.end(), folds[g].begin(), folds[g].end());
      }
      std::sort(train.begin(), train.end());
      const Matrix x_train = take_rows(features, train);
      const Vector y_train = take(target, train);
      const double alpha = loocv_alpha(x_train, y_train, config.alpha_grid);
      const RidgeFit model = ridge_fit(x_train, y_train, alpha);
      const Vector y_test = take(target, folds[f]);
      fit.fold_alphas[j][f] = alpha;
      fit.fold_r2[j][f] = r2_score(y_test, model.predict(take_rows(features, folds[f])));
    }
    fit.per_dimension_r2[j] =
        std::accumulate(fit.fold_r2[j].begin(), fit.fold_r2[j].end(), 0.0) / static_cast<double>(k);
    const double alpha = modal_value(fit.fold_alphas[j]);
    fit.per_dimension_alpha[j] = alpha;
    const RidgeFit full = ridge_fit(features, target, alpha);
    fit.affine.a.row(static_cast<Eigen::Index>(j)) = full.weights.transpose();
    fit.affine.b(static_cast<Eigen::Index>(j)) = full.bias;
  });
  return fit;
}

double regression_ooo_accuracy(const EmbeddingMatrix& x, const AffineMap& affine,
                               const TripletDataset& dataset) {
  validate_dataset(x, dataset);
  return zero_shot_accuracy(affine.apply(x.values()), dataset, Measure::Dot).accuracy;
}

}  // namespace alignkit

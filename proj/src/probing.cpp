#include "alignkit/probing.hpp"

#include "alignkit/oddoneout.hpp"
#include "alignkit/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace alignkit {

void ProbeConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidArgument, what); };
  if (!(learning_rate >= 0.0)) fail("learning_rate must be >= 0");
  if (max_epochs < 1) fail("max_epochs must be >= 1");
  if (!(early_stop_delta >= 0.0)) fail("early_stop_delta must be >= 0");
  if (early_stop_patience < 1) fail("early_stop_patience must be >= 1");
  if (lambda_grid.empty()) fail("lambda_grid must not be empty");
  for (double l : lambda_grid) {
    if (!(l >= 0.0) || !std::isfinite(l)) fail("lambda values must be finite and >= 0");
  }
  if (k_folds < 2) fail("k_folds must be >= 2");
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (!(init_std > 0.0)) fail("init_std must be > 0");
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) fail("val_fraction must lie in (0, 1)");
}

ObjectSplit split_by_objects(const TripletDataset& dataset,
                             std::span<const ObjectIndex> train_objects) {
  const std::size_t m = dataset.num_objects();
  std::vector<char> is_train(m, 0);
  for (ObjectIndex o : train_objects) {
    if (o >= m) throw Error(ErrorCode::IndexOutOfRange, "train object out of range", o);
    is_train[o] = 1;
  }

  ObjectSplit split;
  for (std::size_t o = 0; o < m; ++o) {
    (is_train[o] ? split.train_objects : split.test_objects).push_back(static_cast<ObjectIndex>(o));
  }
  std::vector<Triplet> train, test;
  for (const Triplet& t : dataset.records()) {
    const int sides = is_train[t.a] + is_train[t.b] + is_train[t.ooo];
    if (sides == 3) {
      train.push_back(t);
    } else if (sides == 0) {
      test.push_back(t);
    }
  }
  split.train = TripletDataset(std::move(train), m);
  split.test = TripletDataset(std::move(test), m);
  return split;
}

ObjectSplit partition_objects(const TripletDataset& dataset, double train_fraction, Rng& rng) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "train_fraction must lie in (0, 1)");
  }
  const std::size_t m = dataset.num_objects();
  const auto n_train = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(m)));
  const auto chosen = sample_without_replacement(m, n_train, rng);
  ObjectSplit split = split_by_objects(dataset, chosen);
  if (split.train.empty() || split.test.empty()) {
    throw Error(ErrorCode::EmptySplit,
                "object partition left " + std::to_string(split.train.size()) + " train and " +
                    std::to_string(split.test.size()) + " test records");
  }
  return split;
}

namespace {

struct BatchRows {
  Matrix xa, xb, xk;
};

BatchRows gather(const Matrix& x, std::span<const Triplet> batch) {
  const auto n = static_cast<Eigen::Index>(batch.size());
  BatchRows rows{Matrix(n, x.cols()), Matrix(n, x.cols()), Matrix(n, x.cols())};
  for (Eigen::Index s = 0; s < n; ++s) {
    const Triplet& t = batch[static_cast<std::size_t>(s)];
    rows.xa.row(s) = x.row(t.a);
    rows.xb.row(s) = x.row(t.b);
    rows.xk.row(s) = x.row(t.ooo);
  }
  return rows;
}

void check_shapes(const Matrix& w, const Matrix& x, std::span<const Triplet> batch) {
  if (w.rows() != w.cols() || w.cols() != x.cols()) {
    throw Error(ErrorCode::ShapeMismatch,
                "probe is " + std::to_string(w.rows()) + "x" + std::to_string(w.cols()) +
                    " but embeddings have " + std::to_string(x.cols()) + " features");
  }
  for (std::size_t s = 0; s < batch.size(); ++s) {
    const Triplet& t = batch[s];
    const auto m = static_cast<ObjectIndex>(x.rows());
    if (t.a >= m || t.b >= m || t.ooo >= m) {
      throw Error(ErrorCode::IndexOutOfRange, "batch record references a missing object", s);
    }
  }
}

LossAndGradient evaluate(const Matrix& w, const Matrix& x, std::span<const Triplet> batch,
                         double lambda, bool want_gradient) {
  check_shapes(w, x, batch);
  LossAndGradient out;
  const double penalty = lambda * w.squaredNorm();
  if (want_gradient) out.gradient = 2.0 * lambda * w;
  if (batch.empty()) {
    out.loss = penalty;
    return out;
  }

  const BatchRows rows = gather(x, batch);
  const Matrix za = rows.xa * w.transpose();
  const Matrix zb = rows.xb * w.transpose();
  const Matrix zk = rows.xk * w.transpose();
  const Vector s_ab = (za.cwiseProduct(zb)).rowwise().sum();
  const Vector s_ak = (za.cwiseProduct(zk)).rowwise().sum();
  const Vector s_bk = (zb.cwiseProduct(zk)).rowwise().sum();

  const auto n = static_cast<Eigen::Index>(batch.size());
  const double inv_n = 1.0 / static_cast<double>(n);
  Vector g_ab(n), g_ak(n), g_bk(n);
  double nll = 0.0;
  for (Eigen::Index s = 0; s < n; ++s) {
    const double shift = std::max({s_ab(s), s_ak(s), s_bk(s)});
    const double e_ab = std::exp(s_ab(s) - shift);
    const double e_ak = std::exp(s_ak(s) - shift);
    const double e_bk = std::exp(s_bk(s) - shift);
    const double total = e_ab + e_ak + e_bk;
    nll -= (s_ab(s) - shift) - std::log(total);
    g_ab(s) = (e_ab / total - 1.0) * inv_n;
    g_ak(s) = (e_ak / total) * inv_n;
    g_bk(s) = (e_bk / total) * inv_n;
  }
  out.loss = nll * inv_n + penalty;

  if (want_gradient) {
    // dS_uv/dz_u = z_v; dL/dW = sum_i (dL/dz_i) x_i^T.
    const Matrix dza = zb.array().colwise() * g_ab.array() + zk.array().colwise() * g_ak.array();
    const Matrix dzb = za.array().colwise() * g_ab.array() + zk.array().colwise() * g_bk.array();
    const Matrix dzk = za.array().colwise() * g_ak.array() + zb.array().colwise() * g_bk.array();
    out.gradient.noalias() += dza.transpose() * rows.xa;
    out.gradient.noalias() += dzb.transpose() * rows.xb;
    out.gradient.noalias() += dzk.transpose() * rows.xk;
  }
  return out;
}

}  // namespace

double probe_loss(const Matrix& w, const Matrix& x, std::span<const Triplet> batch, double lambda) {
  return evaluate(w, x, batch, lambda, false).loss;
}

Matrix probe_gradient(const Matrix& w, const Matrix& x, std::span<const Triplet> batch,
                      double lambda) {
  return evaluate(w, x, batch, lambda, true).gradient;
}

LossAndGradient probe_loss_and_gradient(const Matrix& w, const Matrix& x,
                                        std::span<const Triplet> batch, double lambda) {
  return evaluate(w, x, batch, lambda, true);
}

EmbeddingMatrix apply_probe(const Matrix& w, const EmbeddingMatrix& x) {
  if (w.rows() != w.cols() || w.cols() != static_cast<Eigen::Index>(x.cols())) {
    throw Error(ErrorCode::ShapeMismatch,
                "probe is " + std::to_string(w.rows()) + "x" + std::to_string(w.cols()) +
                    " but embeddings have " + std::to_string(x.cols()) + " features");
  }
  return EmbeddingMatrix(x.values() * w.transpose(), x.labels(), x.layer_tag());
}

EmbeddingMatrix apply_probe(const LinearProbe& probe, const EmbeddingMatrix& x) {
  return apply_probe(probe.w, x);
}

double probe_accuracy(const LinearProbe& probe, const EmbeddingMatrix& x,
                      const TripletDataset& dataset, Measure measure) {
  return zero_shot_accuracy(apply_probe(probe, x), dataset, measure).accuracy;
}

LinearProbe train_probe(const EmbeddingMatrix& x, const TripletDataset& train,
                        const TripletDataset& val, double lambda, const ProbeConfig& config) {
  config.validate();
  if (train.empty() || val.empty()) {
    throw Error(ErrorCode::EmptySplit, "probe training needs non-empty train and validation sets");
  }
  validate_dataset(x, train);
  validate_dataset(x, val);
  if (!(lambda >= 0.0)) throw Error(ErrorCode::InvalidArgument, "lambda must be >= 0");

  const auto p = static_cast<Eigen::Index>(x.cols());
  Rng rng(config.seed);
  Matrix w(p, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    for (Eigen::Index i = 0; i < p; ++i) w(i, j) = config.init_std * rng.normal();
  }

  Matrix first_moment = Matrix::Zero(p, p);
  Matrix second_moment = Matrix::Zero(p, p);
  double beta1_power = 1.0;
  double beta2_power = 1.0;

  LinearProbe probe;
  probe.lambda = lambda;
  probe.seed = config.seed;
  probe.w = w;
  double best_accuracy = -1.0;
  double previous_accuracy = -1.0;
  int flat_epochs = 0;

  std::vector<Triplet> order = train.records();
  const auto batch = static_cast<std::size_t>(config.batch_size);
  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    shuffle(order, rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t len = std::min(batch, order.size() - start);
      const std::span<const Triplet> chunk(order.data() + start, len);
      LossAndGradient lg = evaluate(w, x.values(), chunk, lambda, true);
      if (!std::isfinite(lg.loss) || !lg.gradient.allFinite()) {
        throw Error(ErrorCode::NonFiniteLoss,
                    "probe loss diverged in epoch " + std::to_string(epoch) +
                        "; lower the learning rate or raise lambda");
      }
      loss_sum += lg.loss * static_cast<double>(len);

      beta1_power *= config.adam_beta1;
      beta2_power *= config.adam_beta2;
      first_moment = config.adam_beta1 * first_moment + (1.0 - config.adam_beta1) * lg.gradient;
      second_moment = config.adam_beta2 * second_moment +
                      (1.0 - config.adam_beta2) * lg.gradient.cwiseAbs2();
      const double step = config.learning_rate / (1.0 - beta1_power);
      const double v_scale = 1.0 / (1.0 - beta2_power);
      w.array() -= step * first_moment.array() /
                   ((second_moment.array() * v_scale).sqrt() + config.adam_epsilon);
    }

    const double accuracy =
        zero_shot_accuracy(Matrix(x.values() * w.transpose()), val, config.eval_measure).accuracy;
    probe.train_log.push_back(
        {epoch, loss_sum / static_cast<double>(order.size()), accuracy, w.norm()});
    if (accuracy > best_accuracy) {
      best_accuracy = accuracy;
      probe.w = w;
      probe.best_epoch = epoch;
    }
    if (previous_accuracy >= 0.0 && std::abs(accuracy - previous_accuracy) < config.early_stop_delta) {
      if (++flat_epochs >= config.early_stop_patience) break;
    } else {
      flat_epochs = 0;
    }
    previous_accuracy = accuracy;
  }
  return probe;
}

namespace {

struct FoldSplits {
  ObjectSplit outer;
  ObjectSplit inner;
};

// Fit/validation split carved from `train_objects` only.
ObjectSplit inner_split(const TripletDataset& records, std::span<const ObjectIndex> train_objects,
                        double val_fraction, Rng& rng) {
  const std::size_t n_objects = train_objects.size();
  const auto n_val = std::max<std::size_t>(
      3, static_cast<std::size_t>(std::floor(val_fraction * static_cast<double>(n_objects))));
  if (n_val >= n_objects) {
    throw Error(ErrorCode::EmptySplit, "too few train objects for a validation split");
  }
  const auto picks = sample_without_replacement(n_objects, n_objects - n_val, rng);
  std::vector<ObjectIndex> fit_objects;
  fit_objects.reserve(picks.size());
  for (auto i : picks) fit_objects.push_back(train_objects[i]);
  ObjectSplit split = split_by_objects(records, fit_objects);
  // Objects outside the train side are never validation objects.
  std::vector<char> is_train(records.num_objects(), 0);
  for (ObjectIndex o : train_objects) is_train[o] = 1;
  std::erase_if(split.test_objects, [&](ObjectIndex o) { return !is_train[o]; });
  if (split.train.empty() || split.test.empty()) {
    throw Error(ErrorCode::EmptySplit,
                "fit/validation split left " + std::to_string(split.train.size()) + " fit and " +
                    std::to_string(split.test.size()) + " validation records");
  }
  return split;
}

}  // namespace

CrossValidationResult cross_validate_probe(const EmbeddingMatrix& x, const TripletDataset& dataset,
                                           const ProbeConfig& config) {
  config.validate();
  validate_dataset(x, dataset);
  const Rng root(config.seed);
  const double train_fraction =
      static_cast<double>(config.k_folds - 1) / static_cast<double>(config.k_folds);

  const auto k = static_cast<std::size_t>(config.k_folds);
  const std::size_t n_lambda = config.lambda_grid.size();
  std::vector<FoldSplits> splits;
  splits.reserve(k);
  for (std::size_t f = 0; f < k; ++f) {
    Rng fold_rng = root.derive({0x51u, f});
    ObjectSplit outer = partition_objects(dataset, train_fraction, fold_rng);
    ObjectSplit inner = inner_split(outer.train, outer.train_objects, config.val_fraction, fold_rng);
    splits.push_back({std::move(outer), std::move(inner)});
  }

  std::vector<LinearProbe> probes(k * n_lambda);
  std::vector<double> test_acc(k * n_lambda, 0.0);
  parallel_for(k * n_lambda, [&](std::size_t cell) {
    const std::size_t f = cell / n_lambda;
    const std::size_t l = cell % n_lambda;
    ProbeConfig cell_config = config;
    cell_config.seed = root.derive({0xce11u, f, l})();
    const FoldSplits& s = splits[f];
    probes[cell] = train_probe(x, s.inner.train, s.inner.test, config.lambda_grid[l], cell_config);
    test_acc[cell] = probe_accuracy(probes[cell], x, s.outer.test, config.eval_measure);
  });

  CrossValidationResult result;
  result.mean_val_accuracy.assign(n_lambda, 0.0);
  for (std::size_t f = 0; f < k; ++f) {
    FoldReport report;
    report.fold = static_cast<int>(f);
    report.n_fit = splits[f].inner.train.size();
    report.n_val = splits[f].inner.test.size();
    report.n_test = splits[f].outer.test.size();
    report.n_discarded = dataset.size() - report.n_fit - report.n_val - report.n_test;
    std::size_t chosen = 0;
    for (std::size_t l = 0; l < n_lambda; ++l) {
      const LinearProbe& probe = probes[f * n_lambda + l];
      const double val = probe.train_log.at(static_cast<std::size_t>(probe.best_epoch - 1)).val_accuracy;
      report.cells.push_back({config.lambda_grid[l], val, test_acc[f * n_lambda + l],
                              static_cast<int>(probe.train_log.size()), probe.best_epoch});
      result.mean_val_accuracy[l] += val / static_cast<double>(k);
      if (val > report.cells[chosen].val_accuracy) chosen = l;
    }
    report.selected_lambda = config.lambda_grid[chosen];
    report.test_accuracy = report.cells[chosen].test_accuracy;
    report.selected_weights = probes[f * n_lambda + chosen].w;
    result.mean_test_accuracy += report.test_accuracy / static_cast<double>(k);
    result.folds.push_back(std::move(report));
  }
  const auto best = static_cast<std::size_t>(
      std::max_element(result.mean_val_accuracy.begin(), result.mean_val_accuracy.end()) -
      result.mean_val_accuracy.begin());
  result.best_lambda = config.lambda_grid[best];
  return result;
}

LinearProbe train_final_probe(const EmbeddingMatrix& x, const TripletDataset& dataset,
                              double lambda, const ProbeConfig& config) {
  config.validate();
  validate_dataset(x, dataset);
  Rng rng = Rng(config.seed).derive({0xf1a1u});
  std::vector<ObjectIndex> all(dataset.num_objects());
  std::iota(all.begin(), all.end(), 0u);
  ObjectSplit split = inner_split(dataset, all, config.val_fraction, rng);
  ProbeConfig final_config = config;
  final_config.seed = rng();
  LinearProbe probe = train_probe(x, split.train, split.test, lambda, final_config);
  probe.seed = config.seed;
  return probe;
}

}  // namespace alignkit

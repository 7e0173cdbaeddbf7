#include "alignkit/datagen.hpp"
#include "alignkit/oddoneout.hpp"
#include "alignkit/probing.hpp"

#include "helpers.hpp"

#include <doctest.h>

#include <cmath>
#include <set>

using namespace alignkit;
using testing::error_code_of;

namespace {

// Eq. 1 + Eq. 2 written out term by term, no shared code with the library.
double loss_oracle(const Matrix& w, const Matrix& x, const std::vector<Triplet>& batch,
                   double lambda) {
  double total = 0.0;
  for (const Triplet& t : batch) {
    const Vector za = w * x.row(t.a).transpose();
    const Vector zb = w * x.row(t.b).transpose();
    const Vector zk = w * x.row(t.ooo).transpose();
    const double sab = za.dot(zb), sak = za.dot(zk), sbk = zb.dot(zk);
    total += -std::log(std::exp(sab) / (std::exp(sab) + std::exp(sak) + std::exp(sbk)));
  }
  double frob = 0.0;
  for (Eigen::Index i = 0; i < w.rows(); ++i) {
    for (Eigen::Index j = 0; j < w.cols(); ++j) frob += w(i, j) * w(i, j);
  }
  return total / static_cast<double>(batch.size()) + lambda * frob;
}

Matrix finite_difference(const Matrix& w, const Matrix& x, const std::vector<Triplet>& batch,
                         double lambda, double h = 1e-5) {
  Matrix g(w.rows(), w.cols());
  for (Eigen::Index i = 0; i < w.rows(); ++i) {
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      Matrix up = w, down = w;
      up(i, j) += h;
      down(i, j) -= h;
      g(i, j) = (probe_loss(up, x, batch, lambda) - probe_loss(down, x, batch, lambda)) / (2 * h);
    }
  }
  return g;
}

}  // namespace

TEST_CASE("probe loss") {
  Rng rng(1);
  const Matrix x = testing::gaussian(12, 4, rng);
  const TripletDataset d = gen_random_responses(12, 10, rng);
  const auto& batch = d.records();

  CHECK(probe_loss(Matrix::Zero(4, 4), x, batch, 0.0) == doctest::Approx(std::log(3.0)));
  CHECK(probe_loss(Matrix::Zero(4, 4), x, batch, 5.0) == doctest::Approx(std::log(3.0)));

  const Matrix w = 0.3 * testing::gaussian(4, 4, rng);
  CHECK(probe_loss(w, x, batch, 0.7) == doctest::Approx(loss_oracle(w, x, batch, 0.7)).epsilon(1e-12));
  CHECK(probe_loss(w, x, batch, 0.0) >= 0.0);

  const double pen1 = probe_loss(w, x, batch, 0.5) - probe_loss(w, x, batch, 0.0);
  const Matrix w2 = 2.0 * w;
  const double pen2 = probe_loss(w2, x, batch, 0.5) - probe_loss(w2, x, batch, 0.0);
  CHECK(pen2 == doctest::Approx(4.0 * pen1).epsilon(1e-10));

  CHECK(error_code_of([&] { probe_loss(Matrix::Zero(3, 3), x, batch, 0.0); }) ==
        ErrorCode::ShapeMismatch);
}

TEST_CASE("probe gradient against finite differences") {
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = static_cast<Eigen::Index>(1 + rng.below(8));
    const std::size_t m = 6 + rng.below(20);
    const Matrix x = testing::gaussian(static_cast<Eigen::Index>(m), p, rng);
    const TripletDataset d = gen_random_responses(m, 1 + rng.below(32), rng);
    const Matrix w = testing::gaussian(p, p, rng) * 0.5;
    const double lambda = rng.uniform();
    const Matrix g = probe_gradient(w, x, d.records(), lambda);
    const Matrix fd = finite_difference(w, x, d.records(), lambda);
    CHECK((g - fd).norm() / std::max(g.norm(), fd.norm()) < 1e-6);

    const LossAndGradient both = probe_loss_and_gradient(w, x, d.records(), lambda);
    CHECK(both.loss == doctest::Approx(probe_loss(w, x, d.records(), lambda)).epsilon(1e-14));
    CHECK((both.gradient - g).norm() <= 1e-14 * (1.0 + g.norm()));
  }
}

TEST_CASE("probe gradient special cases") {
  Rng rng(3);
  const Matrix x = testing::gaussian(10, 3, rng);
  const TripletDataset d = gen_random_responses(10, 20, rng);
  CHECK(probe_gradient(Matrix::Zero(3, 3), x, d.records(), 0.0).norm() == 0.0);

  const Matrix w = testing::gaussian(3, 3, rng);
  const Matrix g = probe_gradient(w, x, std::span<const Triplet>{}, 0.25);
  CHECK((g - 0.5 * w).norm() < 1e-14);
}

TEST_CASE("algorithm 1 object partitioning") {
  Rng rng(4);
  const TripletDataset d = gen_random_responses(60, 5000, rng);
  Rng split_rng(10);
  const ObjectSplit s = partition_objects(d, 2.0 / 3.0, split_rng);
  CHECK(s.train_objects.size() == 40);
  CHECK(s.test_objects.size() == 20);
  std::set<ObjectIndex> train(s.train_objects.begin(), s.train_objects.end());
  for (ObjectIndex o : s.test_objects) CHECK(train.count(o) == 0);
  for (const Triplet& t : s.train.records()) {
    CHECK(train.count(t.a));
    CHECK(train.count(t.b));
    CHECK(train.count(t.ooo));
  }
  for (const Triplet& t : s.test.records()) {
    CHECK_FALSE(train.count(t.a));
    CHECK_FALSE(train.count(t.b));
    CHECK_FALSE(train.count(t.ooo));
  }
  // Every pure record is kept on its side.
  std::size_t pure = 0;
  for (const Triplet& t : d.records()) {
    const int in = static_cast<int>(train.count(t.a) + train.count(t.b) + train.count(t.ooo));
    pure += (in == 0 || in == 3) ? 1 : 0;
  }
  CHECK(pure == s.train.size() + s.test.size());

  Rng again(10);
  const ObjectSplit s2 = partition_objects(d, 2.0 / 3.0, again);
  CHECK(s2.train_objects == s.train_objects);
  CHECK(s2.train.records() == s.train.records());

  // m = 3 with two train objects can keep nothing on either side.
  const TripletDataset tiny({{0, 1, 2}}, 3);
  Rng r3(0);
  CHECK(error_code_of([&] { partition_objects(tiny, 2.0 / 3.0, r3); }) == ErrorCode::EmptySplit);
}

TEST_CASE("train_probe behaviour") {
  Rng rng(5);
  const EmbeddingMatrix x(testing::gaussian(30, 4, rng));
  const TripletDataset d = gen_random_responses(30, 3000, rng);
  Rng split_rng(1);
  const ObjectSplit s = partition_objects(d, 0.5, split_rng);

  SUBCASE("zero learning rate keeps the initialization") {
    ProbeConfig c;
    c.learning_rate = 0.0;
    c.max_epochs = 1;
    c.seed = 77;
    const LinearProbe probe = train_probe(x, s.train, s.test, 0.01, c);
    Rng init(77);
    Matrix w0(4, 4);
    for (Eigen::Index j = 0; j < 4; ++j) {
      for (Eigen::Index i = 0; i < 4; ++i) w0(i, j) = c.init_std * init.normal();
    }
    CHECK(probe.w == w0);
    REQUIRE(probe.train_log.size() == 1);
  }
  SUBCASE("heavy regularization shrinks the weights every epoch") {
    ProbeConfig c;
    c.learning_rate = 1e-3;
    c.max_epochs = 15;
    c.early_stop_patience = 1000;
    c.init_std = 1.0;
    const LinearProbe probe = train_probe(x, s.train, s.test, 1e6, c);
    for (std::size_t e = 1; e < probe.train_log.size(); ++e) {
      CHECK(probe.train_log[e].weight_norm < probe.train_log[e - 1].weight_norm);
    }
  }
  SUBCASE("fixed seed is bit reproducible") {
    ProbeConfig c;
    c.max_epochs = 5;
    c.batch_size = 64;
    c.seed = 9;
    const LinearProbe a = train_probe(x, s.train, s.test, 0.01, c);
    const LinearProbe b = train_probe(x, s.train, s.test, 0.01, c);
    CHECK(a.w == b.w);
    CHECK(a.best_epoch == b.best_epoch);
  }
  SUBCASE("returns the best validation epoch") {
    ProbeConfig c;
    c.max_epochs = 20;
    c.batch_size = 32;
    c.learning_rate = 0.05;
    const LinearProbe probe = train_probe(x, s.train, s.test, 1e-3, c);
    double best = -1;
    for (const EpochLog& e : probe.train_log) best = std::max(best, e.val_accuracy);
    CHECK(probe.train_log[probe.best_epoch - 1].val_accuracy == best);
    CHECK(probe_accuracy(probe, x, s.test) == doctest::Approx(best));
  }
  SUBCASE("empty sides are rejected") {
    CHECK(error_code_of([&] { train_probe(x, TripletDataset({}, 30), s.test, 0.1, {}); }) ==
          ErrorCode::EmptySplit);
  }
  SUBCASE("divergence is reported") {
    ProbeConfig c;
    c.init_std = 1e200;
    CHECK(error_code_of([&] { train_probe(x, s.train, s.test, 0.0, c); }) ==
          ErrorCode::NonFiniteLoss);
  }
}

TEST_CASE("apply_probe") {
  Rng rng(6);
  const EmbeddingMatrix x(testing::gaussian(20, 3, rng));
  CHECK(apply_probe(Matrix::Identity(3, 3), x).values() == x.values());
  const TripletDataset d = gen_random_responses(20, 400, rng);
  CHECK(zero_shot_accuracy(apply_probe(Matrix(2.0 * Matrix::Identity(3, 3)), x), d).accuracy ==
        zero_shot_accuracy(x, d).accuracy);
  CHECK(error_code_of([&] { apply_probe(Matrix::Identity(2, 2), x); }) == ErrorCode::ShapeMismatch);
}

TEST_CASE("cross validation") {
  Rng rng(7);
  const ConceptEmbedding g = gen_sparse_concepts(60, 4, rng);
  const EmbeddingMatrix x(g.values());
  const auto triplets = sample_triplets(60, 20000, rng);
  const TripletDataset d = gen_bayes_responses(g.values(), triplets, {ResponseMode::Argmax, 1.0, 0.0}, rng);

  ProbeConfig c;
  c.lambda_grid = {0.01};
  c.max_epochs = 5;
  c.batch_size = 256;
  c.val_fraction = 0.3;
  c.seed = 3;
  const CrossValidationResult r = cross_validate_probe(x, d, c);
  CHECK(r.best_lambda == 0.01);
  REQUIRE(r.folds.size() == 3);
  for (const FoldReport& f : r.folds) {
    CHECK(f.n_fit + f.n_val + f.n_test + f.n_discarded == d.size());
    CHECK(f.cells.size() == 1);
  }

  SUBCASE("rerun is identical") {
    const CrossValidationResult again = cross_validate_probe(x, d, c);
    for (std::size_t f = 0; f < 3; ++f) CHECK(again.folds[f].selected_weights == r.folds[f].selected_weights);
  }
  SUBCASE("test records never influence training") {
    Rng fold_rng = Rng(c.seed).derive({0x51u, 0u});
    const ObjectSplit outer = partition_objects(d, 2.0 / 3.0, fold_rng);
    std::set<ObjectIndex> test(outer.test_objects.begin(), outer.test_objects.end());
    std::vector<Triplet> without;
    for (const Triplet& t : d.records()) {
      if (!(test.count(t.a) && test.count(t.b) && test.count(t.ooo))) without.push_back(t);
    }
    // Keep one test-side record so fold 0 still has a test set.
    without.push_back(outer.test[0]);
    const CrossValidationResult pruned = cross_validate_probe(x, TripletDataset(without, 60), c);
    CHECK(pruned.folds[0].selected_weights == r.folds[0].selected_weights);
  }
  SUBCASE("lambda selection follows validation accuracy") {
    ProbeConfig grid = c;
    grid.lambda_grid = {1e-3, 10.0};
    const CrossValidationResult two = cross_validate_probe(x, d, grid);
    for (const FoldReport& f : two.folds) {
      const auto& cells = f.cells;
      const double chosen = cells[0].val_accuracy >= cells[1].val_accuracy ? 1e-3 : 10.0;
      CHECK(f.selected_lambda == chosen);
    }
    const double winner = two.mean_val_accuracy[0] >= two.mean_val_accuracy[1] ? 1e-3 : 10.0;
    CHECK(two.best_lambda == winner);
  }
}

TEST_CASE("probe config validation") {
  ProbeConfig c;
  CHECK_NOTHROW(c.validate());
  c.lambda_grid.clear();
  CHECK(error_code_of([&] { c.validate(); }) == ErrorCode::InvalidArgument);
  c = {};
  c.k_folds = 1;
  CHECK(error_code_of([&] { c.validate(); }) == ErrorCode::InvalidArgument);
  c = {};
  c.batch_size = 0;
  CHECK(error_code_of([&] { c.validate(); }) == ErrorCode::InvalidArgument);
}

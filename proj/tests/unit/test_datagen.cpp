#include "alignkit/datagen.hpp"
#include "alignkit/oddoneout.hpp"

#include "helpers.hpp"

#include <doctest.h>

#include <Eigen/SVD>

#include <cmath>
#include <set>

using namespace alignkit;
using testing::error_code_of;

TEST_CASE("sample triplets") {
  Rng rng(1);
  const auto t = sample_triplets(5, 2000, rng);
  CHECK(t.size() == 2000);
  std::vector<int> hits(5, 0);
  for (const auto& idx : t) {
    CHECK(idx[0] != idx[1]);
    CHECK(idx[0] != idx[2]);
    CHECK(idx[1] != idx[2]);
    for (auto o : idx) {
      REQUIRE(o < 5);
      ++hits[o];
    }
  }
  for (int h : hits) CHECK(h == doctest::Approx(1200).epsilon(0.1));
}

TEST_CASE("class triplets") {
  Rng rng(2);
  SUBCASE("two classes of two") {
    const std::vector<int> labels{0, 0, 1, 1};
    const TripletDataset d = gen_class_triplets(labels, 200, rng);
    for (const Triplet& t : d.records()) {
      CHECK(labels[t.a] == labels[t.b]);
      CHECK(labels[t.ooo] != labels[t.a]);
    }
  }
  SUBCASE("twenty classes at full size") {
    std::vector<int> labels;
    for (int c = 0; c < 20; ++c) {
      for (int k = 0; k < 10; ++k) labels.push_back(c);
    }
    const TripletDataset d = gen_class_triplets(labels, 50000, rng);
    CHECK(d.size() == 50000);
    std::vector<double> counts(20, 0.0);
    for (const Triplet& t : d.records()) {
      CHECK(t.a != t.b);
      CHECK(labels[t.a] == labels[t.b]);
      CHECK(labels[t.ooo] != labels[t.a]);
      counts[static_cast<std::size_t>(labels[t.a])] += 1;
    }
    const TripletDataset more = gen_class_triplets(labels, 100000, rng);
    std::vector<double> pair_counts(20, 0.0);
    for (const Triplet& t : more.records()) pair_counts[static_cast<std::size_t>(labels[t.a])] += 1;
    double chi2 = 0.0;
    for (double c : pair_counts) chi2 += (c - 5000.0) * (c - 5000.0) / 5000.0;
    // 19 degrees of freedom; 43.8 is the 0.999 quantile.
    CHECK(chi2 < 43.8);
  }
  SUBCASE("reproducible") {
    const std::vector<int> labels{0, 0, 1, 1, 2, 2};
    Rng a(5), b(5);
    CHECK(gen_class_triplets(labels, 50, a).records() == gen_class_triplets(labels, 50, b).records());
  }
  SUBCASE("errors") {
    const std::vector<int> single{0, 0, 0};
    CHECK(error_code_of([&] { gen_class_triplets(single, 5, rng); }) ==
          ErrorCode::InsufficientClassMembers);
    const std::vector<int> lonely{0, 0, 1};
    CHECK(error_code_of([&] { gen_class_triplets(lonely, 5, rng); }) ==
          ErrorCode::InsufficientClassMembers);
  }
}

TEST_CASE("bayes responses") {
  Rng rng(3);
  const ConceptEmbedding g = gen_sparse_concepts(50, 8, rng);
  const auto triplets = sample_triplets(50, 5000, rng);

  const TripletDataset argmax = gen_bayes_responses(g.values(), triplets, {}, rng);
  CHECK(argmax.size() == triplets.size());
  CHECK(zero_shot_accuracy(EmbeddingMatrix(g.values()), argmax, Measure::Dot).accuracy == 1.0);
  Rng other(99);
  CHECK(gen_bayes_responses(g.values(), triplets, {}, other).records() == argmax.records());

  ResponseOptions margin;
  margin.min_margin = 0.2;
  const TripletDataset filtered = gen_bayes_responses(g.values(), triplets, margin, rng);
  CHECK(filtered.size() < triplets.size());
  CHECK(zero_shot_accuracy(EmbeddingMatrix(g.values()), filtered, Measure::Dot).accuracy == 1.0);

  // Gaussian rows avoid the exact ties of sparse loadings.
  const Matrix h = gen_gaussian_embeddings(50, 8, rng).values();
  const TripletDataset h_argmax = gen_bayes_responses(h, triplets, {}, rng);
  auto agreement = [&](double tau) {
    Rng r(4);
    const TripletDataset s = gen_bayes_responses(h, triplets, {ResponseMode::Sample, tau, -1.0}, r);
    std::size_t same = 0;
    for (std::size_t i = 0; i < s.size(); ++i) same += s[i] == h_argmax[i] ? 1 : 0;
    return static_cast<double>(same) / static_cast<double>(s.size());
  };
  const double cold = agreement(1e-6), mid = agreement(1.0), hot = agreement(1000.0);
  CHECK(cold == doctest::Approx(1.0 / 3.0).epsilon(0.06));
  CHECK(mid > cold);
  CHECK(hot > mid);
  CHECK(hot > 0.97);

  CHECK(error_code_of([&] {
          gen_bayes_responses(g.values(), triplets, {ResponseMode::Sample, 0.0, -1.0}, rng);
        }) == ErrorCode::NonPositiveTau);
}

TEST_CASE("sparse concepts") {
  Rng rng(4);
  const ConceptEmbedding g = gen_sparse_concepts(100, 16, rng);
  CHECK(g.rows() == 100);
  CHECK(g.dims() == 16);
  for (Eigen::Index i = 0; i < 100; ++i) {
    int active = 0;
    for (Eigen::Index j = 0; j < 16; ++j) {
      const double v = g.values()(i, j);
      CHECK(v >= 0.0);
      if (v > 0.0) {
        ++active;
        CHECK(v >= 0.5);
        CHECK(v < 1.5);
      }
    }
    CHECK(active >= 1);
    CHECK(active <= 3);
  }
}

TEST_CASE("random transforms") {
  Rng rng(5);
  const Matrix q = random_orthogonal(7, rng);
  CHECK((q.transpose() * q - Matrix::Identity(7, 7)).norm() < 1e-12);

  const Matrix a = random_invertible(9, 100.0, rng);
  Eigen::JacobiSVD<Matrix> svd(a);
  const Vector s = svd.singularValues();
  CHECK(s(0) == doctest::Approx(1.0));
  CHECK(s(0) / s(8) == doctest::Approx(100.0));
  CHECK(error_code_of([&] { random_invertible(3, 0.5, rng); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("misaligned embeddings") {
  Rng rng(6);
  const ConceptEmbedding g = gen_sparse_concepts(80, 8, rng);
  const auto triplets = sample_triplets(80, 4000, rng);
  // The margin keeps exact similarity ties out of the comparison.
  const TripletDataset d = gen_bayes_responses(g.values(), triplets, {ResponseMode::Argmax, 1.0, 0.1}, rng);
  const double oracle = zero_shot_accuracy(EmbeddingMatrix(g.values()), d, Measure::Cosine).accuracy;

  const Misalignment rotated = gen_misaligned_embeddings(g.values(), DistortionKind::RandomOrthogonal, 0.0, rng);
  CHECK((rotated.embeddings.values() - g.values() * rotated.transform).norm() < 1e-12);
  CHECK(zero_shot_accuracy(rotated.embeddings, d, Measure::Cosine).accuracy == doctest::Approx(oracle));

  const Misalignment bent =
      gen_misaligned_embeddings(g.values(), DistortionKind::RandomInvertible, 0.0, rng, 100.0);
  CHECK(zero_shot_accuracy(bent.embeddings, d, Measure::Cosine).accuracy < oracle);

  const Misalignment noisy =
      gen_misaligned_embeddings(g.values(), DistortionKind::RandomOrthogonal, 1e4, rng);
  CHECK(zero_shot_accuracy(noisy.embeddings, d, Measure::Cosine).accuracy ==
        doctest::Approx(1.0 / 3.0).epsilon(0.08));
  CHECK(error_code_of([&] {
          gen_misaligned_embeddings(g.values(), DistortionKind::RandomOrthogonal, -1.0, rng);
        }) == ErrorCode::InvalidArgument);
}

TEST_CASE("gaussian embeddings") {
  Rng rng(7);
  const EmbeddingMatrix x = gen_gaussian_embeddings(400, 50, rng);
  CHECK(x.rows() == 400);
  CHECK(x.cols() == 50);
  CHECK(std::abs(x.values().mean()) < 0.03);
  CHECK(x.values().squaredNorm() / 20000.0 == doctest::Approx(1.0).epsilon(0.03));
}

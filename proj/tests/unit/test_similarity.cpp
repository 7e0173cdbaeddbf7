#include "alignkit/datagen.hpp"
#include "alignkit/similarity.hpp"

#include "helpers.hpp"

#include <doctest.h>

#include <cmath>

using namespace alignkit;
using testing::error_code_of;

namespace {

// Straight HSIC-style definition on n x n kernels, H = I - 11^T/n.
double cka_oracle(const Matrix& x, const Matrix& y) {
  const auto n = x.rows();
  const Matrix h = Matrix::Identity(n, n) - Matrix::Constant(n, n, 1.0 / n);
  const Matrix k = h * (x * x.transpose()) * h;
  const Matrix l = h * (y * y.transpose()) * h;
  return (k.cwiseProduct(l)).sum() / (k.norm() * l.norm());
}

double pearson_oracle(const Vector& a, const Vector& b) {
  const double ma = a.mean(), mb = b.mean();
  double sab = 0, saa = 0, sbb = 0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    sab += (a(i) - ma) * (b(i) - mb);
    saa += (a(i) - ma) * (a(i) - ma);
    sbb += (b(i) - mb) * (b(i) - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

}  // namespace

TEST_CASE("cosine similarity examples") {
  Vector x(2), y(2);
  x << 1, 0;
  y << 1, 0;
  CHECK(cosine_similarity(x, y) == doctest::Approx(1.0));
  y << 0, 1;
  CHECK(cosine_similarity(x, y) == doctest::Approx(0.0));
  y << 1, 1;
  CHECK(cosine_similarity(x, y) == doctest::Approx(0.70710678).epsilon(1e-8));
  CHECK(cosine_similarity(x, Vector(3.5 * x)) == doctest::Approx(1.0));
  CHECK(cosine_similarity(x, Vector(-2.0 * x)) == doctest::Approx(-1.0));
  y << 0, 0;
  CHECK(error_code_of([&] { cosine_similarity(x, y); }) == ErrorCode::ZeroNormVector);
}

TEST_CASE("triplet similarity matrices") {
  Matrix v(3, 2);
  v << 1, 0, 1, 0, 0, 1;
  EmbeddingMatrix x(v);
  const TripletSim s = triplet_similarities(x, {0, 1, 2}, Measure::Cosine);
  CHECK(s.pair(0, 1) == doctest::Approx(1.0));
  CHECK(s.pair(0, 2) == doctest::Approx(0.0));
  CHECK(s.pair(1, 2) == doctest::Approx(0.0));
  CHECK(s.pair(1, 0) == s.pair(0, 1));

  Rng rng(1);
  EmbeddingMatrix g(testing::gaussian(5, 4, rng));
  const TripletSim dot = triplet_similarities(g, {0, 2, 4}, Measure::Dot);
  const TripletSim cos = triplet_similarities(g, {0, 2, 4}, Measure::Cosine);
  CHECK(dot.pair(0, 1) == doctest::Approx(g.row(0).dot(g.row(2))));
  CHECK(dot.pair(0, 1) != doctest::Approx(cos.pair(0, 1)));
}

TEST_CASE("full similarity matrix matches triplet similarities") {
  Rng rng(2);
  EmbeddingMatrix x(testing::gaussian(8, 5, rng));
  for (Measure m : {Measure::Cosine, Measure::Dot}) {
    const Rsm full = full_similarity_matrix(x, m);
    const TripletSim s = triplet_similarities(x, {1, 4, 6}, m);
    CHECK(full.values()(1, 4) == doctest::Approx(s.pair(0, 1)).epsilon(1e-12));
    CHECK(full.values()(1, 6) == doctest::Approx(s.pair(0, 2)).epsilon(1e-12));
    CHECK(full.values()(4, 6) == doctest::Approx(s.pair(1, 2)).epsilon(1e-12));
  }
  Matrix two(2, 2);
  two << 1, 0, 1, 1;
  const Rsm r = full_similarity_matrix(EmbeddingMatrix(two), Measure::Cosine);
  CHECK(r.values()(0, 1) == doctest::Approx(1 / std::sqrt(2.0)));

  // Unit rows: dot and cosine agree.
  Matrix v = testing::gaussian(6, 3, rng);
  v.rowwise().normalize();
  const Matrix a = full_similarity_matrix(EmbeddingMatrix(v), Measure::Dot).values();
  const Matrix b = full_similarity_matrix(EmbeddingMatrix(v), Measure::Cosine).values();
  CHECK((a - b).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("pearson rsm") {
  Rng rng(3);
  Matrix v = testing::gaussian(6, 10, rng);
  v.row(3) = 2.0 * v.row(0).array() + 3.0;
  v.row(4) = -v.row(1);
  const Rsm r = pearson_rsm(EmbeddingMatrix(v));
  for (int i = 0; i < 6; ++i) CHECK(r.values()(i, i) == 1.0);
  CHECK(r.values()(0, 3) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.values()(1, 4) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK((r.values() - r.values().transpose()).cwiseAbs().maxCoeff() < 1e-9);
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < 6; ++j) {
      if (i == j) continue;
      CHECK(r.values()(i, j) ==
            doctest::Approx(pearson_oracle(v.row(i).transpose(), v.row(j).transpose())).epsilon(1e-12));
    }
  }
  v.row(5).setConstant(2.0);
  try {
    pearson_rsm(EmbeddingMatrix(v));
    FAIL("expected ZeroVarianceRow");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ZeroVarianceRow);
    CHECK(e.where() == 5);
  }
  CHECK(error_code_of([] { pearson_rsm(EmbeddingMatrix(Matrix::Ones(3, 1))); }) ==
        ErrorCode::InvalidArgument);
}

TEST_CASE("linear cka matches the kernel definition") {
  Rng rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix x = testing::gaussian(12, 3 + trial % 4, rng);
    const Matrix y = testing::gaussian(12, 2 + trial % 3, rng);
    CHECK(linear_cka(x, y) == doctest::Approx(cka_oracle(x, y)).epsilon(1e-10));
  }
  Matrix a(3, 1), b(3, 1);
  a << 1, 2, 3;
  b << 3, 2, 1;
  CHECK(linear_cka(a, b) == doctest::Approx(1.0));
}

TEST_CASE("linear cka invariances") {
  Rng rng(5);
  const Matrix x = testing::gaussian(40, 6, rng);
  CHECK(linear_cka(x, x) == 1.0);
  const Matrix r = random_orthogonal(6, rng);
  CHECK(std::abs(linear_cka(x, x * r) - 1.0) < 1e-6);
  CHECK(std::abs(linear_cka(x, 7.5 * x) - 1.0) < 1e-6);
  CHECK(std::abs(linear_cka(Matrix(x.rowwise() + x.row(0)), x) - 1.0) < 1e-6);

  CHECK(error_code_of([&] { linear_cka(x, Matrix::Ones(40, 2)); }) == ErrorCode::DegenerateGram);
  CHECK(error_code_of([&] { linear_cka(x, Matrix::Ones(39, 2)); }) == ErrorCode::ShapeMismatch);
}

TEST_CASE("measure names") {
  CHECK(parse_measure("cosine") == Measure::Cosine);
  CHECK(parse_measure("dot") == Measure::Dot);
  CHECK(to_string(Measure::Dot) == "dot");
  CHECK(error_code_of([] { parse_measure("euclid"); }) == ErrorCode::InvalidArgument);
}

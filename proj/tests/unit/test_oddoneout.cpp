#include "alignkit/datagen.hpp"
#include "alignkit/oddoneout.hpp"

#include "helpers.hpp"

#include <doctest.h>

#include <cmath>

using namespace alignkit;
using testing::error_code_of;

namespace {

TripletSim sim_of(double s01, double s02, double s12) {
  TripletSim s;
  s.indices = {0, 1, 2};
  s.s[0][1] = s.s[1][0] = s01;
  s.s[0][2] = s.s[2][0] = s02;
  s.s[1][2] = s.s[2][1] = s12;
  return s;
}

// Direct restatement: the most similar pair under cosine/dot, first pair on ties.
double accuracy_oracle(const Matrix& x, const TripletDataset& d, bool cosine) {
  std::size_t hits = 0;
  for (const Triplet& t : d.records()) {
    const std::array<ObjectIndex, 3> o = t.sorted();
    auto sim = [&](ObjectIndex i, ObjectIndex j) {
      const double dot = x.row(i).dot(x.row(j));
      return cosine ? dot / (x.row(i).norm() * x.row(j).norm()) : dot;
    };
    const double s01 = sim(o[0], o[1]), s02 = sim(o[0], o[2]), s12 = sim(o[1], o[2]);
    ObjectIndex odd = o[2];
    double best = s01;
    if (s02 > best) {
      best = s02;
      odd = o[1];
    }
    if (s12 > best) odd = o[0];
    hits += odd == t.ooo ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(d.size());
}

}  // namespace

TEST_CASE("predict_ooo argmax and tie rule") {
  CHECK(predict_ooo(sim_of(0.9, 0.1, 0.2)).ooo_position == 2);
  CHECK(predict_ooo(sim_of(0.1, 0.9, 0.2)).ooo_position == 1);
  CHECK(predict_ooo(sim_of(0.1, 0.2, 0.9)).ooo_position == 0);
  CHECK(predict_ooo(sim_of(0.5, 0.5, 0.5)).ooo_position == 2);
  CHECK(predict_ooo(sim_of(0.1, 0.5, 0.5)).ooo_position == 1);

  // Scaling and shifting all pairs leaves the decision alone.
  for (double c : {0.01, 3.0, 1e6}) {
    CHECK(predict_ooo(sim_of(0.1 * c + 4, 0.7 * c + 4, 0.3 * c + 4)).ooo_position == 1);
  }

  Matrix v = Matrix::Identity(3, 3);
  v.row(1) = v.row(0);
  const TripletSim s = triplet_similarities(EmbeddingMatrix(v), {0, 1, 2}, Measure::Cosine);
  CHECK(predict_ooo(s).ooo == 2);
}

TEST_CASE("pair probabilities") {
  auto p = pair_probabilities(sim_of(0.3, 0.3, 0.3)).values();
  for (double v : p) CHECK(v == doctest::Approx(1.0 / 3.0));

  p = pair_probabilities(sim_of(1, 0, 0), 1.0).values();
  const double e = std::exp(1.0);
  CHECK(p[0] == doctest::Approx(e / (e + 2)).epsilon(1e-12));
  CHECK(p[0] == doctest::Approx(0.57612).epsilon(1e-5));
  CHECK(p[1] == doctest::Approx(0.21194).epsilon(1e-5));
  CHECK(p[2] == doctest::Approx(0.21194).epsilon(1e-5));

  p = pair_probabilities(sim_of(1, 0, 0), 1e-6).values();
  for (double v : p) CHECK(std::abs(v - 1.0 / 3.0) < 1e-5);

  // Large logits must not overflow.
  p = pair_probabilities(sim_of(1e4, 2e4, -3e4), 1.0).values();
  CHECK(std::abs(p[0] + p[1] + p[2] - 1.0) < 1e-12);
  CHECK(p[1] == doctest::Approx(1.0));

  Rng rng(8);
  for (int i = 0; i < 200; ++i) {
    const auto q = pair_probabilities(sim_of(50 * rng.normal(), 50 * rng.normal(), 50 * rng.normal()),
                                      std::exp(4 * rng.normal()))
                       .values();
    CHECK(std::abs(q[0] + q[1] + q[2] - 1.0) < 1e-12);
  }
  CHECK(error_code_of([] { pair_probabilities(sim_of(1, 0, 0), 0.0); }) == ErrorCode::NonPositiveTau);
  CHECK(error_code_of([] { pair_probabilities(sim_of(1, 0, 0), -1.0); }) == ErrorCode::NonPositiveTau);
}

TEST_CASE("triplet entropy") {
  CHECK(triplet_entropy(TripletProbabilities({1 / 3.0, 1 / 3.0, 1 / 3.0})) ==
        doctest::Approx(std::log(3.0)).epsilon(1e-12));
  CHECK(triplet_entropy(TripletProbabilities({1 / 3.0, 1 / 3.0, 1 / 3.0})) ==
        doctest::Approx(1.09861).epsilon(1e-5));
  CHECK(triplet_entropy(TripletProbabilities({1, 0, 0})) == 0.0);
  CHECK(triplet_entropy(TripletProbabilities({0.5, 0.25, 0.25})) ==
        doctest::Approx(1.5 * std::log(2.0)).epsilon(1e-12));
  CHECK(triplet_entropy(TripletProbabilities({0.34, 0.33, 0.33})) < std::log(3.0));
}

TEST_CASE("zero-shot accuracy") {
  Rng rng(11);
  EmbeddingMatrix x(testing::gaussian(30, 5, rng));
  const TripletDataset d = gen_random_responses(30, 2000, rng);
  for (Measure m : {Measure::Cosine, Measure::Dot}) {
    const AccuracyResult r = zero_shot_accuracy(x, d, m);
    CHECK(r.accuracy == doctest::Approx(accuracy_oracle(x.values(), d, m == Measure::Cosine)));
    CHECK(r.correct.size() == d.size());
  }

  // Responses that follow the model's own argmax.
  const auto predicted = predict_dataset(x, d, Measure::Cosine);
  std::vector<Triplet> agree;
  for (std::size_t s = 0; s < d.size(); ++s) {
    const auto o = d[s].sorted();
    std::vector<ObjectIndex> pair;
    for (ObjectIndex i : o) {
      if (i != predicted[s]) pair.push_back(i);
    }
    agree.emplace_back(pair[0], pair[1], predicted[s]);
  }
  CHECK(zero_shot_accuracy(x, TripletDataset(agree, 30), Measure::Cosine).accuracy == 1.0);

  // Orthogonal transforms leave both measures unchanged.
  const Matrix q = random_orthogonal(5, rng);
  EmbeddingMatrix rotated(x.values() * q);
  for (Measure m : {Measure::Cosine, Measure::Dot}) {
    CHECK(zero_shot_accuracy(rotated, d, m).correct == zero_shot_accuracy(x, d, m).correct);
  }

  // Input pair order does not matter.
  std::vector<Triplet> flipped;
  for (const Triplet& t : d.records()) flipped.emplace_back(t.b, t.a, t.ooo);
  CHECK(zero_shot_accuracy(x, TripletDataset(flipped, 30)).accuracy ==
        zero_shot_accuracy(x, d).accuracy);
}

TEST_CASE("expected calibration error") {
  CHECK(expected_calibration_error(std::vector<double>(20, 0.95),
                                   [] {
                                     std::vector<bool> c(20, true);
                                     c[0] = false;
                                     return c;
                                   }()) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(expected_calibration_error({1.0, 1.0, 1.0, 1.0}, {true, false, true, false}) ==
        doctest::Approx(0.5));

  // Two occupied bins, (0.3, 0.4] and (0.9, 1.0]; 0.4 sits on a right edge.
  const std::vector<double> conf{0.35, 0.38, 0.40, 0.92, 0.95, 1.00};
  const std::vector<bool> correct{true, false, false, true, true, false};
  const double low = std::abs(1.0 / 3.0 - (0.35 + 0.38 + 0.40) / 3.0);
  const double high = std::abs(2.0 / 3.0 - (0.92 + 0.95 + 1.00) / 3.0);
  const double expected = 0.5 * low + 0.5 * high;
  CHECK(expected == doctest::Approx(1.0 / 6.0).epsilon(1e-9));
  CHECK(expected_calibration_error(conf, correct) == doctest::Approx(expected).epsilon(1e-12));

  // Zero confidence lands in the first bin rather than being dropped.
  CHECK(expected_calibration_error({0.0, 0.0}, {false, false}) == 0.0);

  CHECK(error_code_of([] { expected_calibration_error({0.5}, {true, false}); }) ==
        ErrorCode::LengthMismatch);
}

TEST_CASE("temperature calibration") {
  Rng rng(12);
  EmbeddingMatrix x(testing::gaussian(20, 4, rng));
  const TripletDataset d = gen_random_responses(20, 500, rng);
  const CalibrationResult single = calibrate_temperature(x, d, {1.0});
  CHECK(single.tau_star == 1.0);
  REQUIRE(single.ece_curve.size() == 1);

  const auto grid = default_tau_grid();
  REQUIRE(grid.size() == 17);
  CHECK(grid.front() == 1.0);
  CHECK(grid[6] == 0.05);
  CHECK(grid.back() == 1e-5);

  // Identical rows: every pair is equally similar, so confidence is 1/3 at every tau.
  EmbeddingMatrix same(Matrix::Ones(20, 4));
  const CalibrationResult flat = calibrate_temperature(same, d);
  for (const auto& [tau, ece] : flat.ece_curve) CHECK(ece == flat.ece_curve.front().second);
  CHECK(flat.tau_star == 1.0);

  const ModelConfidence mc = model_confidence(x, d, 0.5);
  for (std::size_t s = 0; s < d.size(); ++s) {
    CHECK(mc.confidence[s] >= 1.0 / 3.0 - 1e-12);
    CHECK(mc.entropy[s] <= std::log(3.0) + 1e-12);
  }
}

#include "alignkit/oddoneout.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace alignkit {

OooPrediction predict_ooo(const TripletSim& sim) {
  int best = 0;
  double best_value = sim.pair(kTripletPairs[0][0], kTripletPairs[0][1]);
  for (int k = 1; k < 3; ++k) {
    const double v = sim.pair(kTripletPairs[k][0], kTripletPairs[k][1]);
    if (v > best_value) {
      best = k;
      best_value = v;
    }
  }
  OooPrediction out;
  out.pair_positions = {kTripletPairs[best][0], kTripletPairs[best][1]};
  out.ooo_position = 3 - out.pair_positions.first - out.pair_positions.second;
  out.ooo = sim.indices[out.ooo_position];
  return out;
}

TripletProbabilities pair_probabilities(const TripletSim& sim, double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau)) {
    throw Error(ErrorCode::NonPositiveTau, "temperature must be a positive finite number");
  }
  std::array<double, 3> logits{};
  for (int k = 0; k < 3; ++k) logits[k] = tau * sim.pair(kTripletPairs[k][0], kTripletPairs[k][1]);
  const double shift = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (double& z : logits) {
    z = std::exp(z - shift);
    total += z;
  }
  for (double& z : logits) z /= total;
  return TripletProbabilities(logits);
}

AccuracyResult zero_shot_accuracy(const Matrix& rows, const TripletDataset& dataset,
                                  Measure measure) {
  AccuracyResult result;
  result.correct.resize(dataset.size());
  std::size_t hits = 0;
  for (std::size_t s = 0; s < dataset.size(); ++s) {
    const Triplet& t = dataset[s];
    const OooPrediction pred = predict_ooo(triplet_similarities(rows, t.sorted(), measure));
    const bool ok = pred.ooo == t.ooo;
    result.correct[s] = ok;
    hits += ok ? 1 : 0;
  }
  result.accuracy =
      dataset.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(dataset.size());
  return result;
}

AccuracyResult zero_shot_accuracy(const EmbeddingMatrix& embeddings, const TripletDataset& dataset,
                                  Measure measure) {
  validate_dataset(embeddings, dataset);
  return zero_shot_accuracy(embeddings.values(), dataset, measure);
}

std::vector<ObjectIndex> predict_dataset(const EmbeddingMatrix& embeddings,
                                         const TripletDataset& dataset, Measure measure) {
  validate_dataset(embeddings, dataset);
  std::vector<ObjectIndex> out;
  out.reserve(dataset.size());
  for (const Triplet& t : dataset.records()) {
    out.push_back(predict_ooo(triplet_similarities(embeddings.values(), t.sorted(), measure)).ooo);
  }
  return out;
}

double triplet_entropy(const TripletProbabilities& p) {
  double h = 0.0;
  for (double v : p.values()) {
    if (v > 0.0) h -= v * std::log(v);
  }
  return std::clamp(h, 0.0, std::log(3.0));
}

double expected_calibration_error(const std::vector<double>& confidences,
                                  const std::vector<bool>& correct, int bins) {
  if (confidences.size() != correct.size()) {
    throw Error(ErrorCode::LengthMismatch, "confidences and correctness differ in length");
  }
  if (confidences.empty()) throw Error(ErrorCode::LengthMismatch, "ECE needs at least one sample");
  if (bins < 1) throw Error(ErrorCode::InvalidArgument, "ECE needs at least one bin");

  std::vector<double> conf_sum(bins, 0.0);
  std::vector<double> hit_sum(bins, 0.0);
  std::vector<std::size_t> count(bins, 0);
  for (std::size_t s = 0; s < confidences.size(); ++s) {
    const double c = confidences[s];
    if (!(c >= 0.0 && c <= 1.0)) {
      throw Error(ErrorCode::InvalidArgument, "confidence outside [0, 1]", s);
    }
    // Bins are ((m-1)/bins, m/bins]; the first one also holds 0.
    int m = static_cast<int>(std::ceil(c * bins)) - 1;
    m = std::clamp(m, 0, bins - 1);
    if (m > 0 && c <= static_cast<double>(m) / bins) --m;
    conf_sum[m] += c;
    hit_sum[m] += correct[s] ? 1.0 : 0.0;
    ++count[m];
  }
  const auto n = static_cast<double>(confidences.size());
  double ece = 0.0;
  for (int m = 0; m < bins; ++m) {
    if (count[m] == 0) continue;
    const auto size = static_cast<double>(count[m]);
    ece += (size / n) * std::abs(hit_sum[m] / size - conf_sum[m] / size);
  }
  return ece;
}

ModelConfidence model_confidence(const EmbeddingMatrix& embeddings, const TripletDataset& dataset,
                                 double tau, Measure measure) {
  validate_dataset(embeddings, dataset);
  ModelConfidence out;
  out.confidence.reserve(dataset.size());
  out.correct.reserve(dataset.size());
  out.entropy.reserve(dataset.size());
  for (const Triplet& t : dataset.records()) {
    const TripletSim sim = triplet_similarities(embeddings.values(), t.sorted(), measure);
    const TripletProbabilities p = pair_probabilities(sim, tau);
    out.confidence.push_back(*std::max_element(p.values().begin(), p.values().end()));
    out.correct.push_back(predict_ooo(sim).ooo == t.ooo);
    out.entropy.push_back(triplet_entropy(p));
  }
  return out;
}

std::vector<double> default_tau_grid() {
  return {1.0,    7.5e-1, 5e-1,   2.5e-1, 1e-1, 7.5e-2, 5e-2, 2.5e-2, 1e-2,
          7.5e-3, 5e-3,   2.5e-3, 1e-3,   5e-4, 1e-4,   5e-5, 1e-5};
}

CalibrationResult calibrate_temperature(const EmbeddingMatrix& embeddings,
                                        const TripletDataset& dataset,
                                        const std::vector<double>& tau_grid, Measure measure,
                                        int bins) {
  if (tau_grid.empty()) throw Error(ErrorCode::InvalidArgument, "temperature grid is empty");
  validate_dataset(embeddings, dataset);

  // Similarities and argmax correctness do not depend on tau.
  std::vector<TripletSim> sims;
  sims.reserve(dataset.size());
  std::vector<bool> correct;
  correct.reserve(dataset.size());
  for (const Triplet& t : dataset.records()) {
    sims.push_back(triplet_similarities(embeddings.values(), t.sorted(), measure));
    correct.push_back(predict_ooo(sims.back()).ooo == t.ooo);
  }

  CalibrationResult result;
  double best = std::numeric_limits<double>::infinity();
  std::vector<double> confidence(sims.size());
  for (double tau : tau_grid) {
    for (std::size_t s = 0; s < sims.size(); ++s) {
      const auto p = pair_probabilities(sims[s], tau).values();
      confidence[s] = *std::max_element(p.begin(), p.end());
    }
    const double ece = expected_calibration_error(confidence, correct, bins);
    result.ece_curve.emplace_back(tau, ece);
    if (ece < best) {
      best = ece;
      result.tau_star = tau;
    }
  }
  return result;
}

}  // namespace alignkit

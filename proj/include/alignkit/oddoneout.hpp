#pragma once

#include "alignkit/core.hpp"
#include "alignkit/similarity.hpp"

#include <utility>
#include <vector>

namespace alignkit {

struct OooPrediction {
  int ooo_position = 2;                   // position within TripletSim::indices
  std::pair<int, int> pair_positions{0, 1};
  ObjectIndex ooo = 0;                    // object index of the odd-one-out
};

// Argmax over the three off-diagonal pairs; ties go to the first pair in
// kTripletPairs order.
OooPrediction predict_ooo(const TripletSim& sim);

// Softmax over tau-scaled pair similarities, in kTripletPairs order.
TripletProbabilities pair_probabilities(const TripletSim& sim, double tau = 1.0);

struct AccuracyResult {
  double accuracy = 0.0;
  std::vector<bool> correct;
};

AccuracyResult zero_shot_accuracy(const EmbeddingMatrix& embeddings, const TripletDataset& dataset,
                                  Measure measure = Measure::Cosine);

// Unchecked variant over raw rows (rows must cover every referenced object).
AccuracyResult zero_shot_accuracy(const Matrix& rows, const TripletDataset& dataset,
                                  Measure measure);

// Predicted odd-one-out object for every record.
std::vector<ObjectIndex> predict_dataset(const EmbeddingMatrix& embeddings,
                                         const TripletDataset& dataset, Measure measure);

// Natural-log entropy in [0, ln 3].
double triplet_entropy(const TripletProbabilities& p);

double expected_calibration_error(const std::vector<double>& confidences,
                                  const std::vector<bool>& correct, int bins = 10);

struct ModelConfidence {
  std::vector<double> confidence;  // max pair probability per record
  std::vector<bool> correct;       // argmax prediction matches the response
  std::vector<double> entropy;
};

ModelConfidence model_confidence(const EmbeddingMatrix& embeddings, const TripletDataset& dataset,
                                 double tau, Measure measure = Measure::Dot);

struct CalibrationResult {
  double tau_star = 1.0;
  std::vector<std::pair<double, double>> ece_curve;  // (tau, ECE) in grid order
};

// The 17-point grid from 1 down to 1e-5.
std::vector<double> default_tau_grid();

// Ties in ECE resolve to the earliest grid entry. Similarities default to the
// inner product of the representations.
CalibrationResult calibrate_temperature(const EmbeddingMatrix& embeddings,
                                        const TripletDataset& dataset,
                                        const std::vector<double>& tau_grid = default_tau_grid(),
                                        Measure measure = Measure::Dot, int bins = 10);

}  // namespace alignkit

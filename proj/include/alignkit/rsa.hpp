#pragma once

#include "alignkit/core.hpp"

#include <span>
#include <vector>

namespace alignkit {

// Fractional ranks (1-based); tied values share the mean of their positions.
std::vector<double> average_ranks(std::span<const double> values);

double pearson_correlation(std::span<const double> a, std::span<const double> b);

// Pearson correlation of average ranks. Throws ConstantInput when either
// side has no variation.
double spearman(std::span<const double> a, std::span<const double> b);

// Returns `rsm` with rows/columns permuted into `labels` order. Throws
// LabelMismatch naming labels missing on either side.
Rsm align_rsm(const Rsm& rsm, const std::vector<std::string>& labels);

// Spearman correlation over the strict upper triangles after aligning the
// human RSM to the model's label order.
double rsa_alignment(const Rsm& model_rsm, const Rsm& human_rsm);

// rsa_alignment(pearson_rsm(apply_probe(probe, x)), human_rsm)
double transformed_rsa(const EmbeddingMatrix& x, const LinearProbe& probe, const Rsm& human_rsm);

}  // namespace alignkit

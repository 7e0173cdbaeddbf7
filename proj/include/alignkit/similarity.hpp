#pragma once

#include "alignkit/core.hpp"

#include <array>
#include <string_view>

namespace alignkit {

enum class Measure { Cosine, Dot };

std::string_view to_string(Measure measure) noexcept;
Measure parse_measure(std::string_view name);

// Throws ZeroNormVector when either vector has zero norm.
double cosine_similarity(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& y);

TripletSim triplet_similarities(const EmbeddingMatrix& embeddings,
                                const std::array<ObjectIndex, 3>& triplet, Measure measure);

// Same, over raw feature rows; used by code paths that transform embeddings
// before scoring (probes, affine maps).
TripletSim triplet_similarities(const Matrix& rows, const std::array<ObjectIndex, 3>& triplet,
                                Measure measure);

/// Pearson correlation across features between every pair of rows; the
/// diagonal is exactly 1. Throws ZeroVarianceRow for constant rows and
/// InvalidArgument when fewer than two features are available.
Rsm pearson_rsm(const EmbeddingMatrix& embeddings);

/// Linear centered kernel alignment. Columns are mean-centered internally, so
/// inputs need not be pre-centered; feature counts may differ.
double linear_cka(const EmbeddingMatrix& x, const EmbeddingMatrix& y);
double linear_cka(const Matrix& x, const Matrix& y);

Rsm full_similarity_matrix(const EmbeddingMatrix& embeddings, Measure measure);

}  // namespace alignkit

#pragma once

#include "alignkit/core.hpp"

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace alignkit::io {

namespace fs = std::filesystem;

enum class Dtype { F32, F64 };

/// Embeddings from either format:
///  - EMBF: raw little-endian payload at `path` plus a JSON sidecar header at
///    `path` + ".json" (passing the ".json" path works too). Header keys:
///    dtype ("f32"|"f64"), labels, layer_tag, layout ("row-major"), n_cols,
///    n_rows. Unknown keys are ignored.
///  - CSV (".csv" extension): header row (first cell names the label column,
///    the rest name features), then one `label,v1,...,vp` row per object.
EmbeddingMatrix load_embeddings(const fs::path& path);

// Writes payload + sidecar; the sidecar is sorted-key JSON, 2-space indent.
void save_embf(const fs::path& path, const EmbeddingMatrix& x, Dtype dtype = Dtype::F64);
void save_embeddings_csv(const fs::path& path, const EmbeddingMatrix& x);

// Shortest decimal string that parses back to the same double.
std::string format_double(double value);

struct LoadedTriplets {
  TripletDataset dataset;
  // Records whose file order had obj_a > obj_b (swapped on load).
  std::vector<bool> swapped;
};

/// CSV with header `obj_a,obj_b,ooo`, 0-based indices. When `num_objects` is
/// not given it is taken as the largest index plus one. Errors name the
/// 1-based file line.
LoadedTriplets load_triplets(const fs::path& path,
                             std::optional<std::size_t> num_objects = std::nullopt);
void save_triplets(const fs::path& path, const TripletDataset& dataset);

// Per-record probabilities `p_a,p_b,p_c` (obj_a, obj_b, ooo being the
// odd-one-out, in the triplet file's column order). Rows for swapped records
// are reordered to match the canonical a < b storage.
std::vector<std::array<double, 3>> load_probabilities(const fs::path& path,
                                                      const LoadedTriplets& triplets);
void save_probabilities(const fs::path& path, const std::vector<std::array<double, 3>>& probs);

// Single-column CSV with header `ooo`.
std::vector<ObjectIndex> load_predictions(const fs::path& path);
void save_predictions(const fs::path& path, const std::vector<ObjectIndex>& predictions);

enum class RsmKind { Similarity, Dissimilarity };

/// Square CSV with labels in the header row and first column. The kind comes
/// from `override_kind` or the sidecar `path` + ".meta" (one line
/// `kind: similarity|dissimilarity`); dissimilarities are negated on load.
Rsm load_rsm(const fs::path& path, std::optional<RsmKind> override_kind = std::nullopt);
void save_rsm(const fs::path& path, const Rsm& rsm, RsmKind kind = RsmKind::Similarity);

// `index<TAB>label` per line.
std::map<std::size_t, std::string> load_concept_labels(const fs::path& path);

ConceptEmbedding load_concepts(const fs::path& path);

/// Probe file: a magic line "ALIGNKIT-PROBE 1", one line of sorted-key JSON
/// (p, lambda, seed, best_epoch, train_log), then p*p little-endian float64
/// weights in row-major order.
void save_probe(const fs::path& path, const LinearProbe& probe);
LinearProbe load_probe(const fs::path& path);

std::string read_text(const fs::path& path);
void write_text(const fs::path& path, const std::string& text);

}  // namespace alignkit::io

#include "alignkit/rsa.hpp"

#include "alignkit/probing.hpp"
#include "alignkit/similarity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_map>

namespace alignkit {

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return values[i] < values[j]; });
  std::vector<double> ranks(n);
  std::size_t start = 0;
  while (start < n) {
    std::size_t end = start + 1;
    while (end < n && values[order[end]] == values[order[start]]) ++end;
    const double rank = 0.5 * static_cast<double>(start + end - 1) + 1.0;
    for (std::size_t i = start; i < end; ++i) ranks[order[i]] = rank;
    start = end;
  }
  return ranks;
}

double pearson_correlation(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(ErrorCode::LengthMismatch, "inputs differ in length");
  if (a.size() < 2) throw Error(ErrorCode::LengthMismatch, "correlation needs at least 2 values");
  const auto n = static_cast<double>(a.size());
  const double mean_a = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mean_b = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double saa = 0.0, sbb = 0.0, sab = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - mean_a;
    const double db = b[i] - mean_b;
    saa += da * da;
    sbb += db * db;
    sab += da * db;
  }
  if (saa == 0.0 || sbb == 0.0) throw Error(ErrorCode::ConstantInput, "input is constant");
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

double spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(ErrorCode::LengthMismatch, "inputs differ in length");
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  return pearson_correlation(ra, rb);
}

Rsm align_rsm(const Rsm& rsm, const std::vector<std::string>& labels) {
  std::unordered_map<std::string, std::size_t> position;
  for (std::size_t i = 0; i < rsm.labels().size(); ++i) position.emplace(rsm.labels()[i], i);

  std::vector<std::string> missing;
  std::vector<Eigen::Index> order;
  order.reserve(labels.size());
  std::unordered_map<std::string, bool> wanted;
  for (const auto& label : labels) {
    wanted.emplace(label, true);
    auto it = position.find(label);
    if (it == position.end()) {
      missing.push_back(label);
    } else {
      order.push_back(static_cast<Eigen::Index>(it->second));
    }
  }
  std::vector<std::string> extra;
  for (const auto& label : rsm.labels()) {
    if (!wanted.count(label)) extra.push_back(label);
  }
  if (!missing.empty() || !extra.empty()) {
    std::ostringstream msg;
    msg << "label sets differ;";
    auto list = [&](const char* what, const std::vector<std::string>& names) {
      if (names.empty()) return;
      msg << ' ' << what << ':';
      for (std::size_t i = 0; i < names.size() && i < 20; ++i) msg << ' ' << names[i];
      if (names.size() > 20) msg << " ... (" << names.size() << " total)";
    };
    list("missing from human RSM", missing);
    list("missing from model", extra);
    throw Error(ErrorCode::LabelMismatch, msg.str());
  }
  const Matrix& v = rsm.values();
  Matrix out(v.rows(), v.cols());
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    for (Eigen::Index j = 0; j < out.cols(); ++j) out(i, j) = v(order[i], order[j]);
  }
  return Rsm(std::move(out), labels);
}

double rsa_alignment(const Rsm& model_rsm, const Rsm& human_rsm) {
  const Rsm aligned = align_rsm(human_rsm, model_rsm.labels());
  if (model_rsm.size() < 3) {
    throw Error(ErrorCode::ShapeMismatch, "RSA needs at least 3 objects");
  }
  const auto a = model_rsm.upper_triangle();
  const auto b = aligned.upper_triangle();
  return spearman(a, b);
}

double transformed_rsa(const EmbeddingMatrix& x, const LinearProbe& probe, const Rsm& human_rsm) {
  return rsa_alignment(pearson_rsm(apply_probe(probe, x)), human_rsm);
}

}  // namespace alignkit

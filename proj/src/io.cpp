#include "alignkit/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace alignkit::io {

using nlohmann::json;

namespace {

[[noreturn]] void parse_error(const fs::path& path, std::size_t line, const std::string& what) {
  throw Error(ErrorCode::ParseError, path.string() + ":" + std::to_string(line) + ": " + what,
              line);
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line, char sep = ',') {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t end = line.find(sep, start);
    cells.push_back(trim(line.substr(start, end == std::string_view::npos ? end : end - start)));
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return cells;
}

// Non-blank lines with their 1-based line numbers.
std::vector<std::pair<std::size_t, std::string>> read_lines(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::vector<std::pair<std::size_t, std::string>> lines;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (trim(line).empty()) continue;
    lines.emplace_back(number, line);
  }
  return lines;
}

double parse_double(std::string_view cell, const fs::path& path, std::size_t line) {
  double value = 0.0;
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc() || ptr != cell.data() + cell.size()) {
    parse_error(path, line, "'" + std::string(cell) + "' is not a number");
  }
  if (!std::isfinite(value)) parse_error(path, line, "non-finite value");
  return value;
}

std::uint64_t parse_index(std::string_view cell, const fs::path& path, std::size_t line) {
  std::uint64_t value = 0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc() || ptr != cell.data() + cell.size() || cell.empty()) {
    parse_error(path, line, "'" + std::string(cell) + "' is not a non-negative integer index");
  }
  return value;
}

template <class T>
void write_le(std::ostream& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <class T>
T read_le(const unsigned char* bytes) {
  unsigned char copy[sizeof(T)];
  std::memcpy(copy, bytes, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(copy, copy + sizeof(T));
  T value;
  std::memcpy(&value, copy, sizeof(T));
  return value;
}

std::string read_binary(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void ensure_parent(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
}

bool ends_with(const std::string& s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

EmbeddingMatrix load_embeddings_csv(const fs::path& path) {
  const auto lines = read_lines(path);
  if (lines.empty()) parse_error(path, 1, "empty embedding file");
  const auto header = split(lines.front().second);
  if (header.size() < 2) parse_error(path, lines.front().first, "need a label column and features");
  const auto p = static_cast<Eigen::Index>(header.size() - 1);
  Matrix values(static_cast<Eigen::Index>(lines.size() - 1), p);
  std::vector<std::string> labels;
  labels.reserve(lines.size() - 1);
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto& [number, text] = lines[r];
    const auto cells = split(text);
    if (cells.size() != header.size()) {
      parse_error(path, number, "expected " + std::to_string(header.size()) + " cells, got " +
                                    std::to_string(cells.size()));
    }
    labels.emplace_back(cells[0]);
    for (Eigen::Index j = 0; j < p; ++j) {
      values(static_cast<Eigen::Index>(r - 1), j) = parse_double(cells[j + 1], path, number);
    }
  }
  if (values.rows() == 0) parse_error(path, lines.front().first, "no embedding rows");
  return EmbeddingMatrix(std::move(values), std::move(labels));
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw Error(ErrorCode::IoError, "cannot format number");
  return std::string(buf, ptr);
}

std::string read_text(const fs::path& path) { return read_binary(path); }

void write_text(const fs::path& path, const std::string& text) {
  ensure_parent(path);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::IoError, "failed writing " + path.string());
}

EmbeddingMatrix load_embeddings(const fs::path& path) {
  const std::string name = path.string();
  if (ends_with(lower(name), ".csv")) return load_embeddings_csv(path);

  fs::path payload = path;
  fs::path header_path = path;
  if (ends_with(name, ".json")) {
    payload = fs::path(name.substr(0, name.size() - 5));
  } else {
    header_path = fs::path(name + ".json");
  }

  json header;
  try {
    header = json::parse(read_text(header_path));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, header_path.string() + ": " + e.what());
  }
  std::size_t rows = 0, cols = 0;
  std::string dtype, layout, layer_tag;
  std::vector<std::string> labels;
  try {
    rows = header.at("n_rows").get<std::size_t>();
    cols = header.at("n_cols").get<std::size_t>();
    dtype = header.at("dtype").get<std::string>();
    layout = header.value("layout", std::string("row-major"));
    layer_tag = header.value("layer_tag", std::string());
    if (header.contains("labels")) labels = header.at("labels").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, header_path.string() + ": " + e.what());
  }
  if (layout != "row-major") {
    throw Error(ErrorCode::ParseError, header_path.string() + ": unsupported layout " + layout);
  }
  if (dtype != "f32" && dtype != "f64") {
    throw Error(ErrorCode::ParseError, header_path.string() + ": unsupported dtype " + dtype);
  }
  const std::size_t width = dtype == "f32" ? 4 : 8;
  const std::string bytes = read_binary(payload);
  if (bytes.size() != rows * cols * width) {
    throw Error(ErrorCode::ParseError, payload.string() + ": payload has " +
                                           std::to_string(bytes.size()) + " bytes, header implies " +
                                           std::to_string(rows * cols * width));
  }
  Matrix values(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  const auto* data = reinterpret_cast<const unsigned char*>(bytes.data());
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      const std::size_t offset = (i * cols + j) * width;
      values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          width == 4 ? static_cast<double>(read_le<float>(data + offset))
                     : read_le<double>(data + offset);
    }
  }
  return EmbeddingMatrix(std::move(values), std::move(labels), std::move(layer_tag));
}

void save_embf(const fs::path& path, const EmbeddingMatrix& x, Dtype dtype) {
  ensure_parent(path);
  json header;
  header["n_rows"] = x.rows();
  header["n_cols"] = x.cols();
  header["dtype"] = dtype == Dtype::F32 ? "f32" : "f64";
  header["layout"] = "row-major";
  header["labels"] = x.labels();
  header["layer_tag"] = x.layer_tag();
  write_text(fs::path(path.string() + ".json"), header.dump(2) + "\n");

  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  const Matrix& v = x.values();
  for (Eigen::Index i = 0; i < v.rows(); ++i) {
    for (Eigen::Index j = 0; j < v.cols(); ++j) {
      if (dtype == Dtype::F32) {
        write_le(out, static_cast<float>(v(i, j)));
      } else {
        write_le(out, v(i, j));
      }
    }
  }
  if (!out) throw Error(ErrorCode::IoError, "failed writing " + path.string());
}

void save_embeddings_csv(const fs::path& path, const EmbeddingMatrix& x) {
  std::ostringstream out;
  out << "label";
  for (std::size_t j = 0; j < x.cols(); ++j) out << ",f" << j;
  out << '\n';
  const Matrix& v = x.values();
  for (Eigen::Index i = 0; i < v.rows(); ++i) {
    out << x.labels()[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < v.cols(); ++j) out << ',' << format_double(v(i, j));
    out << '\n';
  }
  write_text(path, out.str());
}

LoadedTriplets load_triplets(const fs::path& path, std::optional<std::size_t> num_objects) {
  const auto lines = read_lines(path);
  if (lines.empty()) parse_error(path, 1, "missing header `obj_a,obj_b,ooo`");
  const auto header = split(lines.front().second);
  if (header.size() != 3 || header[0] != "obj_a" || header[1] != "obj_b" || header[2] != "ooo") {
    parse_error(path, lines.front().first, "header must be `obj_a,obj_b,ooo`");
  }
  LoadedTriplets out;
  std::vector<Triplet> records;
  records.reserve(lines.size() - 1);
  out.swapped.reserve(lines.size() - 1);
  std::uint64_t largest = 0;
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto& [number, text] = lines[r];
    const auto cells = split(text);
    if (cells.size() != 3) {
      parse_error(path, number, "expected 3 cells, got " + std::to_string(cells.size()));
    }
    const std::uint64_t a = parse_index(cells[0], path, number);
    const std::uint64_t b = parse_index(cells[1], path, number);
    const std::uint64_t k = parse_index(cells[2], path, number);
    if (a == b || a == k || b == k) {
      throw Error(ErrorCode::DuplicateIndexInTriplet,
                  path.string() + ":" + std::to_string(number) + ": record repeats an object",
                  r - 1);
    }
    largest = std::max({largest, a, b, k});
    if (num_objects && std::max({a, b, k}) >= *num_objects) {
      throw Error(ErrorCode::IndexOutOfRange,
                  path.string() + ":" + std::to_string(number) + ": object index >= " +
                      std::to_string(*num_objects),
                  r - 1);
    }
    if (largest > std::numeric_limits<ObjectIndex>::max()) {
      parse_error(path, number, "object index too large");
    }
    records.emplace_back(static_cast<ObjectIndex>(a), static_cast<ObjectIndex>(b),
                         static_cast<ObjectIndex>(k));
    out.swapped.push_back(a > b);
  }
  const std::size_t m = num_objects ? *num_objects : (records.empty() ? 0 : largest + 1);
  out.dataset = TripletDataset(std::move(records), m);
  return out;
}

void save_triplets(const fs::path& path, const TripletDataset& dataset) {
  std::string text = "obj_a,obj_b,ooo\n";
  text.reserve(text.size() + dataset.size() * 16);
  for (const Triplet& t : dataset.records()) {
    text += std::to_string(t.a) + ',' + std::to_string(t.b) + ',' + std::to_string(t.ooo) + '\n';
  }
  write_text(path, text);
}

std::vector<std::array<double, 3>> load_probabilities(const fs::path& path,
                                                      const LoadedTriplets& triplets) {
  const auto lines = read_lines(path);
  if (lines.empty()) parse_error(path, 1, "missing header `p_a,p_b,p_c`");
  const auto header = split(lines.front().second);
  if (header.size() != 3 || header[0] != "p_a" || header[1] != "p_b" || header[2] != "p_c") {
    parse_error(path, lines.front().first, "header must be `p_a,p_b,p_c`");
  }
  if (lines.size() - 1 != triplets.dataset.size()) {
    throw Error(ErrorCode::LengthMismatch, path.string() + ": " +
                                               std::to_string(lines.size() - 1) +
                                               " probability rows for " +
                                               std::to_string(triplets.dataset.size()) +
                                               " triplets");
  }
  std::vector<std::array<double, 3>> probs;
  probs.reserve(lines.size() - 1);
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto& [number, text] = lines[r];
    const auto cells = split(text);
    if (cells.size() != 3) parse_error(path, number, "expected 3 probabilities");
    std::array<double, 3> p{parse_double(cells[0], path, number),
                            parse_double(cells[1], path, number),
                            parse_double(cells[2], path, number)};
    const double total = p[0] + p[1] + p[2];
    if (p[0] < 0 || p[1] < 0 || p[2] < 0 || std::abs(total - 1.0) > 1e-6) {
      parse_error(path, number, "probabilities must be nonnegative and sum to 1");
    }
    for (double& v : p) v /= total;
    if (triplets.swapped[r - 1]) std::swap(p[0], p[1]);
    probs.push_back(p);
  }
  return probs;
}

void save_probabilities(const fs::path& path, const std::vector<std::array<double, 3>>& probs) {
  std::string text = "p_a,p_b,p_c\n";
  for (const auto& p : probs) {
    text += format_double(p[0]) + ',' + format_double(p[1]) + ',' + format_double(p[2]) + '\n';
  }
  write_text(path, text);
}

std::vector<ObjectIndex> load_predictions(const fs::path& path) {
  const auto lines = read_lines(path);
  if (lines.empty() || trim(lines.front().second) != "ooo") {
    parse_error(path, lines.empty() ? 1 : lines.front().first, "header must be `ooo`");
  }
  std::vector<ObjectIndex> out;
  out.reserve(lines.size() - 1);
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto v = parse_index(trim(lines[r].second), path, lines[r].first);
    if (v > std::numeric_limits<ObjectIndex>::max()) parse_error(path, lines[r].first, "index too large");
    out.push_back(static_cast<ObjectIndex>(v));
  }
  return out;
}

void save_predictions(const fs::path& path, const std::vector<ObjectIndex>& predictions) {
  std::string text = "ooo\n";
  for (ObjectIndex o : predictions) text += std::to_string(o) + '\n';
  write_text(path, text);
}

Rsm load_rsm(const fs::path& path, std::optional<RsmKind> override_kind) {
  RsmKind kind = RsmKind::Similarity;
  if (override_kind) {
    kind = *override_kind;
  } else {
    const fs::path meta(path.string() + ".meta");
    if (!fs::exists(meta)) {
      throw Error(ErrorCode::ParseError,
                  meta.string() + " not found (declare `kind: similarity|dissimilarity`)");
    }
    const auto lines = read_lines(meta);
    bool found = false;
    for (const auto& [number, text] : lines) {
      const auto colon = text.find(':');
      if (colon == std::string::npos) parse_error(meta, number, "expected `key: value`");
      const auto key = trim(std::string_view(text).substr(0, colon));
      const auto value = trim(std::string_view(text).substr(colon + 1));
      if (key != "kind") continue;
      if (value == "similarity") {
        kind = RsmKind::Similarity;
      } else if (value == "dissimilarity") {
        kind = RsmKind::Dissimilarity;
      } else {
        parse_error(meta, number, "kind must be similarity or dissimilarity");
      }
      found = true;
    }
    if (!found) parse_error(meta, 1, "missing `kind:` line");
  }

  const auto lines = read_lines(path);
  if (lines.empty()) parse_error(path, 1, "empty RSM file");
  const auto header = split(lines.front().second);
  const std::size_t m = header.size() - 1;
  if (m < 1 || lines.size() - 1 != m) {
    parse_error(path, lines.front().first, "RSM must be square: header lists " +
                                               std::to_string(m) + " labels, found " +
                                               std::to_string(lines.size() - 1) + " rows");
  }
  std::vector<std::string> labels(header.begin() + 1, header.end());
  Matrix values(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto& [number, text] = lines[r];
    const auto cells = split(text);
    if (cells.size() != m + 1) parse_error(path, number, "wrong number of cells");
    if (cells[0] != labels[r - 1]) {
      parse_error(path, number, "row label '" + std::string(cells[0]) +
                                    "' does not match column label '" + labels[r - 1] + "'");
    }
    for (std::size_t j = 0; j < m; ++j) {
      double v = parse_double(cells[j + 1], path, number);
      values(static_cast<Eigen::Index>(r - 1), static_cast<Eigen::Index>(j)) =
          kind == RsmKind::Dissimilarity ? -v : v;
    }
  }
  return Rsm(std::move(values), std::move(labels));
}

void save_rsm(const fs::path& path, const Rsm& rsm, RsmKind kind) {
  std::ostringstream out;
  out << "label";
  for (const auto& l : rsm.labels()) out << ',' << l;
  out << '\n';
  const Matrix& v = rsm.values();
  for (Eigen::Index i = 0; i < v.rows(); ++i) {
    out << rsm.labels()[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < v.cols(); ++j) {
      out << ',' << format_double(kind == RsmKind::Dissimilarity ? -v(i, j) : v(i, j));
    }
    out << '\n';
  }
  write_text(path, out.str());
  write_text(fs::path(path.string() + ".meta"),
             std::string("kind: ") +
                 (kind == RsmKind::Dissimilarity ? "dissimilarity" : "similarity") + "\n");
}

std::map<std::size_t, std::string> load_concept_labels(const fs::path& path) {
  std::map<std::size_t, std::string> labels;
  for (const auto& [number, text] : read_lines(path)) {
    const auto tab = text.find('\t');
    if (tab == std::string::npos) parse_error(path, number, "expected `index<TAB>label`");
    const auto index = parse_index(trim(std::string_view(text).substr(0, tab)), path, number);
    labels[index] = std::string(trim(std::string_view(text).substr(tab + 1)));
  }
  return labels;
}

ConceptEmbedding load_concepts(const fs::path& path) {
  EmbeddingMatrix raw = load_embeddings(path);
  return ConceptEmbedding(raw.values(), raw.labels());
}

namespace {
constexpr std::string_view kProbeMagic = "ALIGNKIT-PROBE 1";
}

void save_probe(const fs::path& path, const LinearProbe& probe) {
  json header;
  header["p"] = probe.w.rows();
  header["lambda"] = probe.lambda;
  header["seed"] = probe.seed;
  header["best_epoch"] = probe.best_epoch;
  json log = json::array();
  for (const EpochLog& e : probe.train_log) {
    log.push_back({{"epoch", e.epoch},
                   {"train_loss", e.train_loss},
                   {"val_accuracy", e.val_accuracy},
                   {"weight_norm", e.weight_norm}});
  }
  header["train_log"] = std::move(log);

  std::ostringstream out(std::ios::binary);
  out << kProbeMagic << '\n' << header.dump() << '\n';
  for (Eigen::Index i = 0; i < probe.w.rows(); ++i) {
    for (Eigen::Index j = 0; j < probe.w.cols(); ++j) write_le(out, probe.w(i, j));
  }
  write_text(path, out.str());
}

LinearProbe load_probe(const fs::path& path) {
  const std::string bytes = read_binary(path);
  const std::size_t first = bytes.find('\n');
  if (first == std::string::npos || bytes.compare(0, first, kProbeMagic) != 0) {
    throw Error(ErrorCode::ParseError, path.string() + ": not an alignkit probe file");
  }
  const std::size_t second = bytes.find('\n', first + 1);
  if (second == std::string::npos) {
    throw Error(ErrorCode::ParseError, path.string() + ": truncated probe header");
  }
  LinearProbe probe;
  std::size_t p = 0;
  try {
    const json header = json::parse(bytes.substr(first + 1, second - first - 1));
    p = header.at("p").get<std::size_t>();
    probe.lambda = header.at("lambda").get<double>();
    probe.seed = header.at("seed").get<std::uint64_t>();
    probe.best_epoch = header.value("best_epoch", 0);
    for (const auto& e : header.value("train_log", json::array())) {
      probe.train_log.push_back({e.at("epoch").get<int>(), e.at("train_loss").get<double>(),
                                 e.at("val_accuracy").get<double>(),
                                 e.at("weight_norm").get<double>()});
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
  const std::size_t payload = bytes.size() - second - 1;
  if (payload != p * p * 8) {
    throw Error(ErrorCode::ParseError, path.string() + ": expected " + std::to_string(p * p * 8) +
                                           " weight bytes, found " + std::to_string(payload));
  }
  probe.w.resize(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
  const auto* data = reinterpret_cast<const unsigned char*>(bytes.data() + second + 1);
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      probe.w(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          read_le<double>(data + (i * p + j) * 8);
    }
  }
  if (!probe.w.allFinite()) throw Error(ErrorCode::ParseError, path.string() + ": non-finite weights");
  return probe;
}

}  // namespace alignkit::io

#include "commands.hpp"

#include "alignkit/concepts.hpp"
#include "alignkit/datagen.hpp"
#include "alignkit/io.hpp"
#include "alignkit/oddoneout.hpp"
#include "alignkit/probing.hpp"
#include "alignkit/regression.hpp"
#include "alignkit/rsa.hpp"
#include "alignkit/similarity.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <ostream>
#include <sstream>

namespace alignkit::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Common {
  std::uint64_t seed = 0;
  std::string out_dir;
  std::string format = "json";
};

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

std::string cell(double v) { return std::isfinite(v) ? io::format_double(v) : std::string(); }
std::string cell(std::size_t v) { return std::to_string(v); }
std::string cell(int v) { return std::to_string(v); }
std::string cell(const std::optional<double>& v) { return v ? cell(*v) : std::string(); }

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::string json_scalar_csv(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_float()) return cell(v.get<double>());
  if (v.is_null()) return {};
  return v.dump();
}

std::string render(const Common& common, const json& report, const Table& table) {
  if (common.format == "json") return report.dump(2) + "\n";
  std::ostringstream out;
  const auto write_row = [&](const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << '\n';
  };
  if (table.header.empty()) {
    write_row({"key", "value"});
    for (const auto& [key, value] : report.items()) {
      if (value.is_primitive()) write_row({key, json_scalar_csv(value)});
    }
  } else {
    write_row(table.header);
    for (const auto& row : table.rows) write_row(row);
  }
  return out.str();
}

void emit(const Common& common, const std::string& name, const json& report, const Table& table,
          std::ostream& out) {
  const std::string text = render(common, report, table);
  io::write_text(fs::path(common.out_dir) / (name + "." + common.format), text);
  out << text;
}

void add_common(CLI::App* sub, Common& common) {
  sub->add_option("--seed", common.seed, "Seed for every random draw")->capture_default_str();
  sub->add_option("--out-dir", common.out_dir, "Directory receiving reports and data files")
      ->required();
  sub->add_option("--format", common.format, "Report format")
      ->check(CLI::IsMember({"json", "csv"}))
      ->capture_default_str();
}

io::LoadedTriplets load_triplets_for(const EmbeddingMatrix& x, const std::string& path) {
  return io::load_triplets(path, x.rows());
}

json embedding_summary(const EmbeddingMatrix& x) {
  return {{"n_objects", x.rows()}, {"n_features", x.cols()}, {"layer_tag", x.layer_tag()}};
}

void save_matrix(const fs::path& base, const EmbeddingMatrix& x, const std::string& data_format) {
  if (data_format == "csv") {
    io::save_embeddings_csv(fs::path(base.string() + ".csv"), x);
  } else {
    io::save_embf(fs::path(base.string() + ".embf"), x);
  }
}

// ---------------------------------------------------------------------------

struct ZeroShotArgs {
  std::string embeddings, triplets, measure = "cosine";
  bool dump_correct = false;
};

void run_zero_shot(const Common& common, const ZeroShotArgs& args, std::ostream& out) {
  const EmbeddingMatrix x = io::load_embeddings(args.embeddings);
  const auto triplets = load_triplets_for(x, args.triplets);
  const Measure measure = parse_measure(args.measure);
  const AccuracyResult result = zero_shot_accuracy(x, triplets.dataset, measure);
  json report = embedding_summary(x);
  report["command"] = "zero-shot";
  report["accuracy"] = result.accuracy;
  report["n"] = triplets.dataset.size();
  report["measure"] = std::string(to_string(measure));
  if (args.dump_correct) {
    std::string text = "obj_a,obj_b,ooo,correct\n";
    for (std::size_t s = 0; s < triplets.dataset.size(); ++s) {
      const Triplet& t = triplets.dataset[s];
      text += std::to_string(t.a) + ',' + std::to_string(t.b) + ',' + std::to_string(t.ooo) + ',' +
              (result.correct[s] ? "1" : "0") + '\n';
    }
    io::write_text(fs::path(common.out_dir) / "zero_shot_correct.csv", text);
  }
  emit(common, "zero_shot", report, {}, out);
}

// ---------------------------------------------------------------------------

struct ProbeArgs {
  std::string embeddings, triplets;
  ProbeConfig config;
  std::vector<double> lambdas;
};

void run_probe(const Common& common, ProbeArgs args, std::ostream& out) {
  ProbeConfig config = args.config;
  config.seed = common.seed;
  if (!args.lambdas.empty()) config.lambda_grid = args.lambdas;
  config.validate();

  const EmbeddingMatrix x = io::load_embeddings(args.embeddings);
  const auto triplets = load_triplets_for(x, args.triplets);
  validate_dataset(x, triplets.dataset);

  const CrossValidationResult cv = cross_validate_probe(x, triplets.dataset, config);
  const LinearProbe probe = train_final_probe(x, triplets.dataset, cv.best_lambda, config);
  io::save_probe(fs::path(common.out_dir) / "probe.bin", probe);

  json report = embedding_summary(x);
  report["command"] = "probe";
  report["n"] = triplets.dataset.size();
  report["seed"] = common.seed;
  report["lambda_grid"] = config.lambda_grid;
  report["best_lambda"] = cv.best_lambda;
  report["mean_test_accuracy"] = cv.mean_test_accuracy;
  report["mean_val_accuracy"] = cv.mean_val_accuracy;
  report["zero_shot_accuracy"] = zero_shot_accuracy(x, triplets.dataset, config.eval_measure).accuracy;
  report["final_probe"] = {{"lambda", probe.lambda},
                           {"best_epoch", probe.best_epoch},
                           {"epochs_run", probe.train_log.size()}};
  json folds = json::array();
  Table table{{"fold", "lambda", "val_accuracy", "test_accuracy", "epochs_run", "best_epoch",
               "selected"},
              {}};
  for (const FoldReport& f : cv.folds) {
    json cells = json::array();
    for (const LambdaCell& c : f.cells) {
      cells.push_back({{"lambda", c.lambda},
                       {"val_accuracy", c.val_accuracy},
                       {"test_accuracy", c.test_accuracy},
                       {"epochs_run", c.epochs_run},
                       {"best_epoch", c.best_epoch}});
      table.rows.push_back({cell(f.fold), cell(c.lambda), cell(c.val_accuracy),
                            cell(c.test_accuracy), cell(c.epochs_run), cell(c.best_epoch),
                            c.lambda == f.selected_lambda ? "1" : "0"});
    }
    folds.push_back({{"fold", f.fold},
                     {"n_fit", f.n_fit},
                     {"n_val", f.n_val},
                     {"n_test", f.n_test},
                     {"n_discarded", f.n_discarded},
                     {"selected_lambda", f.selected_lambda},
                     {"test_accuracy", f.test_accuracy},
                     {"cells", std::move(cells)}});
  }
  report["folds"] = std::move(folds);
  emit(common, "probe_cv", report, table, out);
}

// ---------------------------------------------------------------------------

struct RsaArgs {
  std::string embeddings, human_rsm, probe, kind;
};

void run_rsa(const Common& common, const RsaArgs& args, std::ostream& out) {
  const EmbeddingMatrix x = io::load_embeddings(args.embeddings);
  std::optional<io::RsmKind> kind;
  if (args.kind == "similarity") kind = io::RsmKind::Similarity;
  if (args.kind == "dissimilarity") kind = io::RsmKind::Dissimilarity;
  const Rsm human = io::load_rsm(args.human_rsm, kind);
  json report = embedding_summary(x);
  report["command"] = "rsa";
  report["raw_rho"] = rsa_alignment(pearson_rsm(x), human);
  report["transformed_rho"] = nullptr;
  if (!args.probe.empty()) {
    const LinearProbe probe = io::load_probe(args.probe);
    report["transformed_rho"] = transformed_rsa(x, probe, human);
  }
  emit(common, "rsa", report, {}, out);
}

// ---------------------------------------------------------------------------

struct ConceptsArgs {
  std::string embeddings, triplets, concepts, predictions, probabilities, probe, labels;
  std::string measure = "cosine";
};

void run_concepts(const Common& common, const ConceptsArgs& args, std::ostream& out) {
  const EmbeddingMatrix x = io::load_embeddings(args.embeddings);
  const auto triplets = load_triplets_for(x, args.triplets);
  const ConceptEmbedding y = io::load_concepts(args.concepts);
  if (y.rows() != x.rows()) {
    throw Error(ErrorCode::ShapeMismatch, "concept loadings have " + std::to_string(y.rows()) +
                                              " rows, embeddings have " + std::to_string(x.rows()));
  }
  std::optional<std::vector<ObjectIndex>> predicted;
  if (!args.predictions.empty()) {
    predicted = io::load_predictions(args.predictions);
  } else if (!args.probabilities.empty()) {
    predicted = ooo_from_probabilities(triplets.dataset,
                                       io::load_probabilities(args.probabilities, triplets));
  }
  const TripletDataset dstar =
      predicted ? filter_vice_correct(triplets.dataset, *predicted) : triplets.dataset;
  std::optional<LinearProbe> probe;
  if (!args.probe.empty()) probe = io::load_probe(args.probe);
  std::map<std::size_t, std::string> names;
  if (!args.labels.empty()) names = io::load_concept_labels(args.labels);

  const auto partitions = partition_by_concept(dstar, y);
  const auto table_rows = per_concept_accuracy(x, partitions, parse_measure(args.measure),
                                               probe ? &*probe : nullptr);
  json report = embedding_summary(x);
  report["command"] = "concepts";
  report["n"] = triplets.dataset.size();
  report["n_filtered"] = dstar.size();
  report["measure"] = args.measure;
  json dims = json::array();
  Table table{{"dimension", "label", "n", "zero_shot", "probed"}, {}};
  for (const ConceptAccuracy& row : table_rows) {
    const auto it = names.find(row.dimension);
    const std::string label = it == names.end() ? std::string() : it->second;
    dims.push_back({{"dimension", row.dimension},
                    {"label", label},
                    {"n", row.n},
                    {"zero_shot", optional_json(row.zero_shot)},
                    {"probed", optional_json(row.probed)}});
    table.rows.push_back({cell(row.dimension), label, cell(row.n), cell(row.zero_shot),
                          cell(row.probed)});
  }
  report["dimensions"] = std::move(dims);
  emit(common, "concepts", report, table, out);
}

// ---------------------------------------------------------------------------

struct CalibrateArgs {
  std::string embeddings, triplets, measure = "dot";
  std::vector<double> taus;
  int bins = 10;
};

void run_calibrate(const Common& common, const CalibrateArgs& args, std::ostream& out) {
  const EmbeddingMatrix x = io::load_embeddings(args.embeddings);
  const auto triplets = load_triplets_for(x, args.triplets);
  const auto grid = args.taus.empty() ? default_tau_grid() : args.taus;
  const CalibrationResult result =
      calibrate_temperature(x, triplets.dataset, grid, parse_measure(args.measure), args.bins);
  json report = embedding_summary(x);
  report["command"] = "calibrate";
  report["n"] = triplets.dataset.size();
  report["measure"] = args.measure;
  report["bins"] = args.bins;
  report["tau_star"] = result.tau_star;
  json curve = json::array();
  Table table{{"tau", "ece"}, {}};
  for (const auto& [tau, ece] : result.ece_curve) {
    curve.push_back({{"tau", tau}, {"ece", ece}});
    table.rows.push_back({cell(tau), cell(ece)});
  }
  report["ece_curve"] = std::move(curve);
  emit(common, "calibrate", report, table, out);
}

// ---------------------------------------------------------------------------

struct RegressArgs {
  std::string embeddings, concepts, triplets;
  RegressionConfig config;
  std::vector<double> alphas;
};

void run_regress(const Common& common, RegressArgs args, std::ostream& out) {
  RegressionConfig config = args.config;
  config.seed = common.seed;
  if (!args.alphas.empty()) config.alpha_grid = args.alphas;
  config.validate();
  const EmbeddingMatrix x = io::load_embeddings(args.embeddings);
  const ConceptEmbedding y = io::load_concepts(args.concepts);
  const ConceptFit fit = nested_cv_concept_fit(x, y, config);

  json report = embedding_summary(x);
  report["command"] = "regress";
  report["outer_folds"] = config.outer_folds;
  report["alpha_grid"] = config.alpha_grid;
  report["mean_r2"] = fit.mean_r2();
  report["regression_ooo_accuracy"] = nullptr;
  if (!args.triplets.empty()) {
    const auto triplets = load_triplets_for(x, args.triplets);
    report["regression_ooo_accuracy"] = regression_ooo_accuracy(x, fit.affine, triplets.dataset);
  }
  json dims = json::array();
  Table table{{"dimension", "r2", "alpha"}, {}};
  for (std::size_t j = 0; j < fit.per_dimension_r2.size(); ++j) {
    dims.push_back({{"dimension", j},
                    {"r2", fit.per_dimension_r2[j]},
                    {"alpha", fit.per_dimension_alpha[j]},
                    {"fold_alphas", fit.fold_alphas[j]},
                    {"fold_r2", fit.fold_r2[j]}});
    table.rows.push_back({cell(j), cell(fit.per_dimension_r2[j]), cell(fit.per_dimension_alpha[j])});
  }
  report["dimensions"] = std::move(dims);

  std::ostringstream affine;
  affine << "dimension,bias";
  for (Eigen::Index c = 0; c < fit.affine.a.cols(); ++c) affine << ",w" << c;
  affine << '\n';
  for (Eigen::Index r = 0; r < fit.affine.a.rows(); ++r) {
    affine << r << ',' << io::format_double(fit.affine.b(r));
    for (Eigen::Index c = 0; c < fit.affine.a.cols(); ++c) {
      affine << ',' << io::format_double(fit.affine.a(r, c));
    }
    affine << '\n';
  }
  io::write_text(fs::path(common.out_dir) / "affine.csv", affine.str());
  emit(common, "regress", report, table, out);
}

// ---------------------------------------------------------------------------

struct CkaArgs {
  std::string x, y;
};

void run_cka(const Common& common, const CkaArgs& args, std::ostream& out) {
  const EmbeddingMatrix x = io::load_embeddings(args.x);
  const EmbeddingMatrix y = io::load_embeddings(args.y);
  json report{{"command", "cka"},
              {"n_objects", x.rows()},
              {"x_features", x.cols()},
              {"y_features", y.cols()},
              {"cka", linear_cka(x, y)}};
  emit(common, "cka", report, {}, out);
}

// ---------------------------------------------------------------------------

struct EntropyArgs {
  std::string embeddings, triplets, probabilities, measure = "dot";
  double tau = 1.0;
  int bins = 11;
};

void run_entropy(const Common& common, const EntropyArgs& args, std::ostream& out) {
  const EmbeddingMatrix x = io::load_embeddings(args.embeddings);
  const auto triplets = load_triplets_for(x, args.triplets);
  const auto& dataset = triplets.dataset;
  ModelConfidence model = model_confidence(x, dataset, args.tau, parse_measure(args.measure));
  std::string source = "model";
  if (!args.probabilities.empty()) {
    const auto probs = io::load_probabilities(args.probabilities, triplets);
    for (std::size_t s = 0; s < probs.size(); ++s) {
      model.entropy[s] = triplet_entropy(TripletProbabilities(probs[s]));
    }
    source = "probabilities";
  }
  const auto bins = entropy_binned_error(dataset, model.entropy, model.correct, args.bins);
  json report = embedding_summary(x);
  report["command"] = "entropy";
  report["n"] = dataset.size();
  report["entropy_source"] = source;
  report["tau"] = args.tau;
  report["measure"] = args.measure;
  json rows = json::array();
  Table table{{"lower", "upper", "n", "error_rate"}, {}};
  for (const EntropyBin& b : bins) {
    rows.push_back({{"lower", b.lower},
                    {"upper", b.upper},
                    {"n", b.n},
                    {"error_rate", optional_json(b.error_rate)}});
    table.rows.push_back({cell(b.lower), cell(b.upper), cell(b.n), cell(b.error_rate)});
  }
  report["bins"] = std::move(rows);
  emit(common, "entropy", report, table, out);
}

// ---------------------------------------------------------------------------

struct AgreementArgs {
  std::vector<std::string> embeddings;
  std::string triplets, measure = "cosine";
};

void run_agreement(const Common& common, const AgreementArgs& args, std::ostream& out) {
  if (args.embeddings.size() < 2) {
    throw Error(ErrorCode::InvalidArgument, "agreement needs at least two embedding files");
  }
  std::vector<std::vector<ObjectIndex>> predictions;
  std::vector<std::string> names;
  std::optional<std::size_t> m;
  for (const auto& path : args.embeddings) {
    const EmbeddingMatrix x = io::load_embeddings(path);
    if (m && *m != x.rows()) {
      throw Error(ErrorCode::ShapeMismatch, path + " has a different number of objects");
    }
    m = x.rows();
    const auto triplets = load_triplets_for(x, args.triplets);
    predictions.push_back(predict_dataset(x, triplets.dataset, parse_measure(args.measure)));
    names.push_back(fs::path(path).stem().string());
  }
  const Matrix agree = agreement_matrix(predictions);
  json matrix = json::array();
  Table table{{"model"}, {}};
  for (const auto& n : names) table.header.push_back(n);
  for (Eigen::Index u = 0; u < agree.rows(); ++u) {
    std::vector<double> row(agree.cols());
    std::vector<std::string> csv_row{names[u]};
    for (Eigen::Index v = 0; v < agree.cols(); ++v) {
      row[v] = agree(u, v);
      csv_row.push_back(cell(agree(u, v)));
    }
    matrix.push_back(row);
    table.rows.push_back(std::move(csv_row));
  }
  json report{{"command", "agreement"},
              {"models", names},
              {"measure", args.measure},
              {"n", predictions.front().size()},
              {"agreement", std::move(matrix)}};
  emit(common, "agreement", report, table, out);
}

// ---------------------------------------------------------------------------

struct GenArgs {
  std::string data_format = "embf";
  // class-triplets
  int classes = 20;
  int per_class = 10;
  // shared sizes
  std::size_t objects = 200;
  std::size_t n = 50000;
  std::size_t dims = 16;
  // concepts
  std::size_t min_active = 1, max_active = 3;
  // responses / misaligned
  std::string ground_truth;
  std::string mode = "argmax";
  double tau = 1.0;
  double min_margin = -1.0;
  std::string kind = "invertible";
  double noise = 0.0;
  double condition = 100.0;
};

json gen_report(const Common& common, const std::string& what) {
  return {{"command", "gen"}, {"generator", what}, {"seed", common.seed}};
}

void run_gen(const Common& common, const std::string& what, const GenArgs& args,
             std::ostream& out) {
  Rng rng(common.seed);
  const fs::path dir(common.out_dir);
  json report = gen_report(common, what);
  if (what == "class-triplets") {
    if (args.classes < 2 || args.per_class < 2) {
      throw Error(ErrorCode::InsufficientClassMembers, "need >= 2 classes of >= 2 objects each");
    }
    std::vector<int> labels;
    std::string text = "object,class\n";
    for (int c = 0; c < args.classes; ++c) {
      for (int i = 0; i < args.per_class; ++i) {
        text += std::to_string(labels.size()) + ',' + std::to_string(c) + '\n';
        labels.push_back(c);
      }
    }
    const TripletDataset d = gen_class_triplets(labels, args.n, rng);
    io::save_triplets(dir / "triplets.csv", d);
    io::write_text(dir / "classes.csv", text);
    report["n"] = d.size();
    report["n_objects"] = labels.size();
    report["classes"] = args.classes;
  } else if (what == "random-triplets") {
    const TripletDataset d = gen_random_responses(args.objects, args.n, rng);
    io::save_triplets(dir / "triplets.csv", d);
    report["n"] = d.size();
    report["n_objects"] = args.objects;
  } else if (what == "concepts") {
    const ConceptEmbedding y =
        gen_sparse_concepts(args.objects, args.dims, rng, args.min_active, args.max_active);
    save_matrix(dir / "concepts", EmbeddingMatrix(y.values()), args.data_format);
    report["n_objects"] = args.objects;
    report["dims"] = args.dims;
  } else if (what == "gaussian") {
    save_matrix(dir / "embeddings", gen_gaussian_embeddings(args.objects, args.dims, rng),
                args.data_format);
    report["n_objects"] = args.objects;
    report["dims"] = args.dims;
  } else if (what == "responses") {
    const EmbeddingMatrix g = io::load_embeddings(args.ground_truth);
    Rng triplet_rng = rng.derive({1});
    Rng response_rng = rng.derive({2});
    const auto triplets = sample_triplets(g.rows(), args.n, triplet_rng);
    ResponseOptions options;
    options.mode = args.mode == "sample" ? ResponseMode::Sample : ResponseMode::Argmax;
    options.tau = args.tau;
    options.min_margin = args.min_margin;
    const TripletDataset d = gen_bayes_responses(g.values(), triplets, options, response_rng);
    io::save_triplets(dir / "triplets.csv", d);
    report["n"] = d.size();
    report["n_sampled"] = triplets.size();
    report["mode"] = args.mode;
    report["tau"] = args.tau;
    report["min_margin"] = args.min_margin;
  } else if (what == "misaligned") {
    const EmbeddingMatrix g = io::load_embeddings(args.ground_truth);
    const DistortionKind kind = args.kind == "orthogonal" ? DistortionKind::RandomOrthogonal
                                                          : DistortionKind::RandomInvertible;
    const Misalignment mis = gen_misaligned_embeddings(g.values(), kind, args.noise, rng,
                                                       args.condition);
    save_matrix(dir / "embeddings",
                EmbeddingMatrix(mis.embeddings.values(), g.labels(), "misaligned"),
                args.data_format);
    save_matrix(dir / "transform", EmbeddingMatrix(mis.transform), args.data_format);
    report["kind"] = args.kind;
    report["noise_std"] = args.noise;
    report["condition_number"] = args.condition;
    report["n_objects"] = g.rows();
  }
  emit(common, "gen_" + what, report, {}, out);
}

std::string hint_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptySplit:
      return "a split side has no triplets; supply more triplets or objects, or lower --folds "
             "or --val-fraction";
    case ErrorCode::NonFiniteLoss:
      return "training diverged; lower --lr or rescale the embeddings";
    case ErrorCode::LabelMismatch:
      return "embedding and RSM labels must name the same objects";
    case ErrorCode::IndexOutOfRange:
      return "triplet indices are 0-based rows of the embedding file";
    default:
      return {};
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"alignkit: human-alignment diagnostics for embedding spaces", "alignkit"};
  app.require_subcommand(1);

  std::function<void()> action;

  Common zs_common;
  ZeroShotArgs zs;
  auto* zero_shot = app.add_subcommand("zero-shot", "Zero-shot odd-one-out accuracy");
  add_common(zero_shot, zs_common);
  zero_shot->add_option("--embeddings", zs.embeddings, "EMBF or CSV embeddings")->required();
  zero_shot->add_option("--triplets", zs.triplets, "Triplet CSV (obj_a,obj_b,ooo)")->required();
  zero_shot->add_option("--measure", zs.measure)
      ->check(CLI::IsMember({"cosine", "dot"}))
      ->capture_default_str();
  zero_shot->add_flag("--dump-correct", zs.dump_correct, "Write per-triplet correctness");
  zero_shot->callback([&] { action = [&] { run_zero_shot(zs_common, zs, out); }; });

  Common pr_common;
  ProbeArgs pr;
  auto* probe = app.add_subcommand("probe", "Cross-validated linear probe");
  add_common(probe, pr_common);
  probe->add_option("--embeddings", pr.embeddings)->required();
  probe->add_option("--triplets", pr.triplets)->required();
  probe->add_option("--lambda", pr.lambdas, "Regularization grid (comma separated)")
      ->delimiter(',');
  probe->add_option("--lr", pr.config.learning_rate)->capture_default_str();
  probe->add_option("--epochs", pr.config.max_epochs)->capture_default_str();
  probe->add_option("--batch-size", pr.config.batch_size)->capture_default_str();
  probe->add_option("--folds", pr.config.k_folds)->capture_default_str();
  probe->add_option("--patience", pr.config.early_stop_patience)->capture_default_str();
  probe->add_option("--delta", pr.config.early_stop_delta)->capture_default_str();
  probe->add_option("--val-fraction", pr.config.val_fraction)->capture_default_str();
  probe->add_option("--init-std", pr.config.init_std)->capture_default_str();
  probe->callback([&] { action = [&] { run_probe(pr_common, pr, out); }; });

  Common rsa_common;
  RsaArgs ra;
  auto* rsa = app.add_subcommand("rsa", "Spearman RSA against a human similarity matrix");
  add_common(rsa, rsa_common);
  rsa->add_option("--embeddings", ra.embeddings)->required();
  rsa->add_option("--human-rsm", ra.human_rsm)->required();
  rsa->add_option("--probe", ra.probe, "Probe file; adds the transformed correlation");
  rsa->add_option("--kind", ra.kind, "Override the RSM .meta kind")
      ->check(CLI::IsMember({"similarity", "dissimilarity"}));
  rsa->callback([&] { action = [&] { run_rsa(rsa_common, ra, out); }; });

  Common co_common;
  ConceptsArgs ca;
  auto* concepts = app.add_subcommand("concepts", "Per-concept odd-one-out accuracy");
  add_common(concepts, co_common);
  concepts->add_option("--embeddings", ca.embeddings)->required();
  concepts->add_option("--triplets", ca.triplets)->required();
  concepts->add_option("--concepts", ca.concepts, "Concept loadings (EMBF or CSV)")->required();
  auto* pred_opt =
      concepts->add_option("--predictions", ca.predictions, "Reference predictions (ooo CSV)");
  concepts->add_option("--probabilities", ca.probabilities, "Reference probabilities CSV")
      ->excludes(pred_opt);
  concepts->add_option("--probe", ca.probe);
  concepts->add_option("--labels", ca.labels, "index<TAB>label names for dimensions");
  concepts->add_option("--measure", ca.measure)
      ->check(CLI::IsMember({"cosine", "dot"}))
      ->capture_default_str();
  concepts->callback([&] { action = [&] { run_concepts(co_common, ca, out); }; });

  Common cal_common;
  CalibrateArgs cl;
  auto* calibrate = app.add_subcommand("calibrate", "Temperature search minimizing ECE");
  add_common(calibrate, cal_common);
  calibrate->add_option("--embeddings", cl.embeddings)->required();
  calibrate->add_option("--triplets", cl.triplets)->required();
  calibrate->add_option("--measure", cl.measure)
      ->check(CLI::IsMember({"cosine", "dot"}))
      ->capture_default_str();
  calibrate->add_option("--tau", cl.taus, "Temperature grid (comma separated)")->delimiter(',');
  calibrate->add_option("--bins", cl.bins)->capture_default_str();
  calibrate->callback([&] { action = [&] { run_calibrate(cal_common, cl, out); }; });

  Common rg_common;
  RegressArgs rg;
  auto* regress = app.add_subcommand("regress", "Ridge regression onto concept dimensions");
  add_common(regress, rg_common);
  regress->add_option("--embeddings", rg.embeddings)->required();
  regress->add_option("--concepts", rg.concepts)->required();
  regress->add_option("--triplets", rg.triplets, "Score the fitted map on these triplets");
  regress->add_option("--folds", rg.config.outer_folds)->capture_default_str();
  regress->add_option("--alpha", rg.alphas, "Ridge grid (comma separated)")->delimiter(',');
  regress->callback([&] { action = [&] { run_regress(rg_common, rg, out); }; });

  Common cka_common;
  CkaArgs ka;
  auto* cka = app.add_subcommand("cka", "Linear CKA between two embedding files");
  add_common(cka, cka_common);
  cka->add_option("--x", ka.x)->required();
  cka->add_option("--y", ka.y)->required();
  cka->callback([&] { action = [&] { run_cka(cka_common, ka, out); }; });

  Common en_common;
  EntropyArgs ea;
  auto* entropy = app.add_subcommand("entropy", "Model error rate by triplet entropy");
  add_common(entropy, en_common);
  entropy->add_option("--embeddings", ea.embeddings)->required();
  entropy->add_option("--triplets", ea.triplets)->required();
  entropy->add_option("--probabilities", ea.probabilities, "Take entropies from this file");
  entropy->add_option("--tau", ea.tau)->capture_default_str();
  entropy->add_option("--measure", ea.measure)
      ->check(CLI::IsMember({"cosine", "dot"}))
      ->capture_default_str();
  entropy->add_option("--bins", ea.bins)->capture_default_str();
  entropy->callback([&] { action = [&] { run_entropy(en_common, ea, out); }; });

  Common ag_common;
  AgreementArgs ga;
  auto* agreement = app.add_subcommand("agreement", "Pairwise odd-one-out agreement of models");
  add_common(agreement, ag_common);
  agreement->add_option("--embeddings", ga.embeddings, "Two or more embedding files")
      ->required()
      ->expected(2, -1);
  agreement->add_option("--triplets", ga.triplets)->required();
  agreement->add_option("--measure", ga.measure)
      ->check(CLI::IsMember({"cosine", "dot"}))
      ->capture_default_str();
  agreement->callback([&] { action = [&] { run_agreement(ag_common, ga, out); }; });

  auto* gen = app.add_subcommand("gen", "Synthetic data generators");
  gen->require_subcommand(1);
  Common gen_common;
  GenArgs gn;
  const auto add_gen = [&](const std::string& name, const std::string& help) {
    auto* sub = gen->add_subcommand(name, help);
    add_common(sub, gen_common);
    sub->callback([&, name] { action = [&, name] { run_gen(gen_common, name, gn, out); }; });
    return sub;
  };
  const auto data_format = [&](CLI::App* sub) {
    sub->add_option("--data-format", gn.data_format)
        ->check(CLI::IsMember({"embf", "csv"}))
        ->capture_default_str();
  };
  auto* g_class = add_gen("class-triplets", "Class-structured triplets");
  g_class->add_option("--classes", gn.classes)->capture_default_str();
  g_class->add_option("--per-class", gn.per_class)->capture_default_str();
  g_class->add_option("--n", gn.n)->capture_default_str();
  auto* g_random = add_gen("random-triplets", "Uniform triplets with random responses");
  g_random->add_option("--objects", gn.objects)->capture_default_str();
  g_random->add_option("--n", gn.n)->capture_default_str();
  auto* g_concepts = add_gen("concepts", "Sparse nonnegative concept loadings");
  g_concepts->add_option("--objects", gn.objects)->capture_default_str();
  g_concepts->add_option("--dims", gn.dims)->capture_default_str();
  g_concepts->add_option("--min-active", gn.min_active)->capture_default_str();
  g_concepts->add_option("--max-active", gn.max_active)->capture_default_str();
  data_format(g_concepts);
  auto* g_gauss = add_gen("gaussian", "Standard normal embeddings");
  g_gauss->add_option("--objects", gn.objects)->capture_default_str();
  g_gauss->add_option("--dims", gn.dims)->capture_default_str();
  data_format(g_gauss);
  auto* g_resp = add_gen("responses", "Simulated responses under ground-truth embeddings");
  g_resp->add_option("--ground-truth", gn.ground_truth)->required();
  g_resp->add_option("--n", gn.n)->capture_default_str();
  g_resp->add_option("--mode", gn.mode)
      ->check(CLI::IsMember({"argmax", "sample"}))
      ->capture_default_str();
  g_resp->add_option("--tau", gn.tau)->capture_default_str();
  g_resp->add_option("--min-margin", gn.min_margin, "Argmax only; negative keeps ties")
      ->capture_default_str();
  auto* g_mis = add_gen("misaligned", "Linearly distorted copy of ground-truth embeddings");
  g_mis->add_option("--ground-truth", gn.ground_truth)->required();
  g_mis->add_option("--kind", gn.kind)
      ->check(CLI::IsMember({"invertible", "orthogonal"}))
      ->capture_default_str();
  g_mis->add_option("--noise", gn.noise)->capture_default_str();
  g_mis->add_option("--condition", gn.condition)->capture_default_str();
  data_format(g_mis);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(std::move(reversed));
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (action) action();
    return 0;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    const std::string hint = hint_for(e.code());
    if (!hint.empty()) err << "hint: " << hint << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace alignkit::cli

#include "alignkit/concepts.hpp"
#include "alignkit/datagen.hpp"
#include "alignkit/io.hpp"
#include "alignkit/oddoneout.hpp"
#include "alignkit/probing.hpp"
#include "alignkit/regression.hpp"
#include "alignkit/rsa.hpp"
#include "alignkit/similarity.hpp"

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace alignkit;

namespace {

using IndexArray = py::array_t<std::int64_t, py::array::c_style | py::array::forcecast>;

// (n, 3) integer array of obj_a, obj_b, ooo rows.
TripletDataset dataset_from_array(const IndexArray& records, std::size_t num_objects) {
  if (records.ndim() != 2 || records.shape(1) != 3) {
    throw Error(ErrorCode::ShapeMismatch, "triplets must be an (n, 3) integer array");
  }
  const auto r = records.unchecked<2>();
  std::vector<Triplet> out;
  out.reserve(static_cast<std::size_t>(r.shape(0)));
  for (py::ssize_t i = 0; i < r.shape(0); ++i) {
    for (int c = 0; c < 3; ++c) {
      if (r(i, c) < 0 || static_cast<std::size_t>(r(i, c)) >= num_objects) {
        throw Error(ErrorCode::IndexOutOfRange,
                    "record " + std::to_string(i) + " references a missing object",
                    static_cast<std::size_t>(i));
      }
    }
    out.emplace_back(static_cast<ObjectIndex>(r(i, 0)), static_cast<ObjectIndex>(r(i, 1)),
                     static_cast<ObjectIndex>(r(i, 2)));
  }
  return TripletDataset(std::move(out), num_objects);
}

py::array_t<std::int64_t> dataset_to_array(const TripletDataset& d) {
  py::array_t<std::int64_t> out({static_cast<py::ssize_t>(d.size()), py::ssize_t{3}});
  auto w = out.mutable_unchecked<2>();
  for (std::size_t i = 0; i < d.size(); ++i) {
    w(i, 0) = d[i].a;
    w(i, 1) = d[i].b;
    w(i, 2) = d[i].ooo;
  }
  return out;
}

PyObject* g_error_type = nullptr;

}  // namespace

PYBIND11_MODULE(_alignkit, m) {
  m.doc() = "Human-alignment diagnostics for embedding spaces";

  // The module attribute keeps the exception type alive.
  g_error_type = py::exception<Error>(m, "AlignkitError", PyExc_RuntimeError).ptr();
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object err = py::reinterpret_borrow<py::object>(g_error_type)(e.what());
      err.attr("code") = std::string(to_string(e.code()));
      if (e.where()) {
        err.attr("where") = *e.where();
      } else {
        err.attr("where") = py::none();
      }
      PyErr_SetObject(g_error_type, err.ptr());
    }
  });

  py::enum_<Measure>(m, "Measure")
      .value("Cosine", Measure::Cosine)
      .value("Dot", Measure::Dot);

  py::class_<EmbeddingMatrix>(m, "EmbeddingMatrix")
      .def(py::init<Matrix, std::vector<std::string>, std::string>(), py::arg("values"),
           py::arg("labels") = std::vector<std::string>{}, py::arg("layer_tag") = "")
      .def_property_readonly("values", &EmbeddingMatrix::values)
      .def_property_readonly("labels", &EmbeddingMatrix::labels)
      .def_property_readonly("layer_tag", &EmbeddingMatrix::layer_tag)
      .def_property_readonly("shape",
                             [](const EmbeddingMatrix& x) { return py::make_tuple(x.rows(), x.cols()); });

  py::class_<TripletDataset>(m, "TripletDataset")
      .def(py::init(&dataset_from_array), py::arg("records"), py::arg("num_objects"))
      .def_property_readonly("num_objects", &TripletDataset::num_objects)
      .def("__len__", &TripletDataset::size)
      .def("to_array", &dataset_to_array);

  py::class_<EpochLog>(m, "EpochLog")
      .def_readonly("epoch", &EpochLog::epoch)
      .def_readonly("train_loss", &EpochLog::train_loss)
      .def_readonly("val_accuracy", &EpochLog::val_accuracy)
      .def_readonly("weight_norm", &EpochLog::weight_norm);

  py::class_<LinearProbe>(m, "LinearProbe")
      .def_readonly("w", &LinearProbe::w)
      .def_readonly("lambda_", &LinearProbe::lambda)
      .def_readonly("seed", &LinearProbe::seed)
      .def_readonly("best_epoch", &LinearProbe::best_epoch)
      .def_readonly("train_log", &LinearProbe::train_log);

  py::class_<ProbeConfig>(m, "ProbeConfig")
      .def(py::init<>())
      .def_readwrite("learning_rate", &ProbeConfig::learning_rate)
      .def_readwrite("max_epochs", &ProbeConfig::max_epochs)
      .def_readwrite("early_stop_delta", &ProbeConfig::early_stop_delta)
      .def_readwrite("early_stop_patience", &ProbeConfig::early_stop_patience)
      .def_readwrite("lambda_grid", &ProbeConfig::lambda_grid)
      .def_readwrite("k_folds", &ProbeConfig::k_folds)
      .def_readwrite("batch_size", &ProbeConfig::batch_size)
      .def_readwrite("init_std", &ProbeConfig::init_std)
      .def_readwrite("seed", &ProbeConfig::seed)
      .def_readwrite("val_fraction", &ProbeConfig::val_fraction);

  py::class_<CrossValidationResult>(m, "CrossValidationResult")
      .def_readonly("best_lambda", &CrossValidationResult::best_lambda)
      .def_readonly("mean_test_accuracy", &CrossValidationResult::mean_test_accuracy)
      .def_readonly("mean_val_accuracy", &CrossValidationResult::mean_val_accuracy);

  m.def(
      "zero_shot_accuracy",
      [](const EmbeddingMatrix& x, const TripletDataset& d, Measure measure) {
        return zero_shot_accuracy(x, d, measure).accuracy;
      },
      py::arg("embeddings"), py::arg("triplets"), py::arg("measure") = Measure::Cosine);
  m.def(
      "predict_dataset",
      [](const EmbeddingMatrix& x, const TripletDataset& d, Measure measure) {
        return predict_dataset(x, d, measure);
      },
      py::arg("embeddings"), py::arg("triplets"), py::arg("measure") = Measure::Cosine);
  m.def("expected_calibration_error", &expected_calibration_error, py::arg("confidences"),
        py::arg("correct"), py::arg("bins") = 10);
  m.def("default_tau_grid", &default_tau_grid);
  m.def(
      "calibrate_temperature",
      [](const EmbeddingMatrix& x, const TripletDataset& d, std::vector<double> grid,
         Measure measure, int bins) {
        if (grid.empty()) grid = default_tau_grid();
        const auto r = calibrate_temperature(x, d, grid, measure, bins);
        return py::make_tuple(r.tau_star, r.ece_curve);
      },
      py::arg("embeddings"), py::arg("triplets"), py::arg("tau_grid") = std::vector<double>{},
      py::arg("measure") = Measure::Dot, py::arg("bins") = 10);

  m.def("linear_cka", py::overload_cast<const Matrix&, const Matrix&>(&linear_cka));
  m.def("pearson_rsm", [](const EmbeddingMatrix& x) { return pearson_rsm(x).values(); });
  m.def("spearman", [](const std::vector<double>& a, const std::vector<double>& b) {
    return spearman(a, b);
  });
  m.def(
      "rsa_alignment",
      [](const Matrix& model, const Matrix& human, std::vector<std::string> labels) {
        return rsa_alignment(Rsm(model, labels), Rsm(human, labels));
      },
      py::arg("model_rsm"), py::arg("human_rsm"), py::arg("labels") = std::vector<std::string>{});

  m.def(
      "probe_loss",
      [](const Matrix& w, const Matrix& x, const TripletDataset& d, double lambda) {
        return probe_loss(w, x, d.records(), lambda);
      },
      py::arg("w"), py::arg("x"), py::arg("triplets"), py::arg("lambda_"));
  m.def(
      "probe_gradient",
      [](const Matrix& w, const Matrix& x, const TripletDataset& d, double lambda) {
        return probe_gradient(w, x, d.records(), lambda);
      },
      py::arg("w"), py::arg("x"), py::arg("triplets"), py::arg("lambda_"));
  m.def("cross_validate_probe", &cross_validate_probe, py::arg("embeddings"), py::arg("triplets"),
        py::arg("config") = ProbeConfig{});
  m.def("train_final_probe", &train_final_probe, py::arg("embeddings"), py::arg("triplets"),
        py::arg("lambda_"), py::arg("config") = ProbeConfig{});
  m.def(
      "apply_probe",
      [](const LinearProbe& probe, const EmbeddingMatrix& x) { return apply_probe(probe, x); });

  m.def(
      "ridge_fit",
      [](const Matrix& x, const Vector& y, double alpha) {
        const RidgeFit fit = ridge_fit(x, y, alpha);
        return py::make_tuple(fit.weights, fit.bias);
      },
      py::arg("x"), py::arg("y"), py::arg("alpha"));
  m.def("loocv_mse", &loocv_mse, py::arg("x"), py::arg("y"), py::arg("alpha_grid"));
  m.def("r2_score", &r2_score);
  m.def(
      "nested_cv_concept_fit",
      [](const EmbeddingMatrix& x, const Matrix& y, int folds, std::uint64_t seed) {
        RegressionConfig config;
        config.outer_folds = folds;
        config.seed = seed;
        const ConceptFit fit = nested_cv_concept_fit(x, ConceptEmbedding(y), config);
        return py::make_tuple(fit.per_dimension_r2, fit.per_dimension_alpha, fit.affine.a,
                              fit.affine.b);
      },
      py::arg("embeddings"), py::arg("concepts"), py::arg("outer_folds") = 5,
      py::arg("seed") = 0);

  m.def(
      "partition_by_concept",
      [](const TripletDataset& d, const Matrix& y) {
        return partition_by_concept(d, ConceptEmbedding(y));
      },
      py::arg("triplets"), py::arg("concepts"));

  m.def(
      "gen_gaussian_embeddings",
      [](std::size_t objects, std::size_t dims, std::uint64_t seed) {
        Rng rng(seed);
        return gen_gaussian_embeddings(objects, dims, rng);
      },
      py::arg("objects"), py::arg("dims"), py::arg("seed") = 0);
  m.def(
      "gen_random_responses",
      [](std::size_t objects, std::size_t n, std::uint64_t seed) {
        Rng rng(seed);
        return gen_random_responses(objects, n, rng);
      },
      py::arg("objects"), py::arg("n"), py::arg("seed") = 0);
  m.def(
      "gen_class_triplets",
      [](const std::vector<int>& labels, std::size_t n, std::uint64_t seed) {
        Rng rng(seed);
        return gen_class_triplets(labels, n, rng);
      },
      py::arg("labels"), py::arg("n"), py::arg("seed") = 0);
  m.def(
      "gen_sparse_concepts",
      [](std::size_t objects, std::size_t dims, std::uint64_t seed) {
        Rng rng(seed);
        return gen_sparse_concepts(objects, dims, rng).values();
      },
      py::arg("objects"), py::arg("dims") = 16, py::arg("seed") = 0);

  m.def("load_embeddings", &io::load_embeddings, py::arg("path"));
  m.def(
      "save_embf",
      [](const std::filesystem::path& path, const EmbeddingMatrix& x, bool single) {
        io::save_embf(path, x, single ? io::Dtype::F32 : io::Dtype::F64);
      },
      py::arg("path"), py::arg("embeddings"), py::arg("float32") = false);
  m.def(
      "load_triplets",
      [](const std::filesystem::path& path, std::optional<std::size_t> num_objects) {
        return io::load_triplets(path, num_objects).dataset;
      },
      py::arg("path"), py::arg("num_objects") = std::nullopt);
  m.def("save_triplets", &io::save_triplets, py::arg("path"), py::arg("triplets"));
  m.def("load_probe", &io::load_probe, py::arg("path"));
}

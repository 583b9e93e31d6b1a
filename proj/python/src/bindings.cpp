#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "disf/cli.hpp"
#include "disf/corpus_io.hpp"
#include "disf/diagnostics.hpp"
#include "disf/error.hpp"
#include "disf/feature_stats.hpp"
#include "disf/selector.hpp"

namespace py = pybind11;
using namespace disf;

PYBIND11_MODULE(_core, m) {
  m.doc() = "C++ core of the disf selector";

  auto base = py::register_exception<Error>(m, "Error");
  py::register_exception<ArgumentError>(m, "ArgumentError", base.ptr());
  py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
  auto format = py::register_exception<FormatError>(m, "FormatError", base.ptr());
  py::register_exception<TruncationError>(m, "TruncationError", format.ptr());
  py::register_exception<MismatchError>(m, "MismatchError", format.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());
  py::register_exception<RefusalError>(m, "RefusalError", base.ptr());
  py::register_exception<UndefinedScoreError>(m, "UndefinedScoreError", base.ptr());

  py::class_<EmbeddingCorpus>(m, "EmbeddingCorpus")
      .def(py::init([](std::vector<std::string> ids, RowMatrixXf features) {
             EmbeddingCorpus corpus{std::move(ids), std::move(features)};
             corpus.validate();
             return corpus;
           }),
           py::arg("ids"), py::arg("features"))
      .def_readonly("ids", &EmbeddingCorpus::ids)
      .def_readonly("features", &EmbeddingCorpus::features)
      .def("__len__", &EmbeddingCorpus::size)
      .def_property_readonly("dim", &EmbeddingCorpus::dim);

  py::class_<Document>(m, "Document")
      .def(py::init<std::string, std::string>(), py::arg("id"), py::arg("text"))
      .def_readwrite("id", &Document::id)
      .def_readwrite("text", &Document::text);

  py::class_<SelectionConfig>(m, "SelectionConfig")
      .def(py::init<>())
      .def_readwrite("budget_fraction", &SelectionConfig::budget_fraction)
      .def_readwrite("batch_scale", &SelectionConfig::batch_scale)
      .def_readwrite("seed", &SelectionConfig::seed)
      .def_readwrite("shuffle", &SelectionConfig::shuffle)
      .def_readwrite("strict_batching", &SelectionConfig::strict_batching)
      .def_readwrite("workers", &SelectionConfig::workers)
      .def_readwrite("centroid", &SelectionConfig::centroid)
      .def_property(
          "method", [](const SelectionConfig& c) { return std::string(to_string(c.method)); },
          [](SelectionConfig& c, const std::string& name) { c.method = parse_method(name); })
      .def_property(
          "normalization_scope",
          [](const SelectionConfig& c) { return std::string(to_string(c.normalization_scope)); },
          [](SelectionConfig& c, const std::string& name) { c.normalization_scope = parse_norm_scope(name); });

  m.def("read_embeddings", &read_embeddings, py::arg("path"));
  m.def("write_embeddings", &write_embeddings, py::arg("corpus"), py::arg("path"));

  m.def(
      "featurize_text",
      [](const std::vector<Document>& docs, std::size_t dimension, bool lowercase) {
        FeaturizerConfig config;
        config.dimension = dimension;
        config.lowercase = lowercase;
        return featurize_text(docs, config);
      },
      py::arg("documents"), py::arg("dimension") = 256, py::arg("lowercase") = true);

  m.def(
      "standardize_batch",
      [](const RowMatrixXd& features) {
        auto batch = standardize_batch(features);
        return std::make_tuple(std::move(batch.z), std::move(batch.zero_variance_dims));
      },
      py::arg("features"), "Returns (z, zero_variance_dims).");

  m.def("proxy_value", [](const RowMatrixXd& z) { return proxy_value(z); }, py::arg("z"));
  m.def("norm_identity_residual", [](const RowMatrixXd& z) { return norm_identity_residual(z); }, py::arg("z"));
  m.def(
      "dominance_score", [](const RowMatrixXd& features, std::size_t k) { return dominance_score(features, k); },
      py::arg("features"), py::arg("k"));

  m.def(
      "greedy_select_batch",
      [](const RowMatrixXd& z, std::size_t quota, std::uint64_t seed) {
        SplitMix64 rng(seed);
        auto result = greedy_select_batch(z, quota, rng);
        return std::make_tuple(std::move(result.indices), std::move(result.trace));
      },
      py::arg("z"), py::arg("quota"), py::arg("seed"), "Returns (indices, trace).");
  m.def(
      "greedy_select_batch_from",
      [](const RowMatrixXd& z, std::size_t quota, std::size_t first) {
        auto result = greedy_select_batch_from(z, quota, first);
        return std::make_tuple(std::move(result.indices), std::move(result.trace));
      },
      py::arg("z"), py::arg("quota"), py::arg("first"));
  m.def(
      "brute_force_best_subset",
      [](const RowMatrixXd& z, std::size_t k) {
        auto best = brute_force_best_subset(z, k);
        return std::make_tuple(std::move(best.indices), best.value);
      },
      py::arg("z"), py::arg("k"));

  m.def(
      "select_corpus",
      [](const EmbeddingCorpus& corpus, const SelectionConfig& config) {
        py::gil_scoped_release release;
        return select_corpus(corpus, config).selected_ids;
      },
      py::arg("corpus"), py::arg("config") = SelectionConfig{});

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        const int code = cli::run(args, out, err);
        return std::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs a disf subcommand; returns (exit_code, stdout, stderr).");
}

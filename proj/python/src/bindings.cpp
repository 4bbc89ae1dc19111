#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "reloss/correlation.hpp"
#include "reloss/error.hpp"
#include "reloss/experiments.hpp"
#include "reloss/gradcheck.hpp"
#include "reloss/lossnet.hpp"
#include "reloss/metrics.hpp"
#include "reloss/softrank.hpp"

namespace py = pybind11;
using namespace reloss;

namespace {

py::array_t<double> to_array(const Tensor<double>& t) {
    py::array_t<double> out({t.rows(), t.cols()});
    std::copy(t.storage().begin(), t.storage().end(), out.mutable_data());
    return out;
}

BatchSample make_batch(const std::vector<std::vector<float>>& probs, const std::vector<std::uint32_t>& labels) {
    if (probs.empty()) throw ShapeError("empty batch");
    BatchSample b;
    b.size = probs.size();
    b.width = probs.front().size();
    for (const auto& row : probs) {
        if (row.size() != b.width) throw ShapeError("ragged probability rows");
        b.predictions.insert(b.predictions.end(), row.begin(), row.end());
    }
    b.labels = labels;
    b.validate();
    return b;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Rank-correlation surrogate losses: soft ranks, correlations and learned loss networks";

    py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<UsageError>(m, "UsageError", PyExc_ValueError);

    m.def("hard_rank", [](const std::vector<double>& v) { return hard_rank(v); }, py::arg("values"),
          "Average-tie ranks starting at 1.");
    m.def("soft_rank", [](const std::vector<double>& v, double s) { return soft_rank<double>(v, s); },
          py::arg("values"), py::arg("steepness") = 2.0);
    m.def("relaxed_permutation",
          [](const std::vector<double>& v, double s) { return to_array(relaxed_permutation<double>(v, s)); },
          py::arg("values"), py::arg("steepness") = 2.0);

    m.def("spearman", [](const std::vector<double>& a, const std::vector<double>& b) { return spearman_hard(a, b).value; },
          py::arg("a"), py::arg("b"));
    m.def("spearman_soft",
          [](const std::vector<double>& a, const std::vector<double>& b, double s) { return spearman_soft(a, b, s).value; },
          py::arg("a"), py::arg("b"), py::arg("steepness") = 2.0);
    m.def("kendall_tau", [](const std::vector<double>& a, const std::vector<double>& b) { return kendall_tau(a, b).value; },
          py::arg("a"), py::arg("b"));

    m.def("accuracy",
          [](const std::vector<std::vector<float>>& p, const std::vector<std::uint32_t>& y) { return accuracy(make_batch(p, y)); },
          py::arg("probs"), py::arg("labels"));

    py::class_<LossNetWeights>(m, "LossNet")
        .def_static("classification",
                    [](std::size_t hidden, std::uint64_t seed) { return build_lossnet(LossNetSpec::classification(hidden), seed); },
                    py::arg("hidden") = 128, py::arg("seed") = 0)
        .def_static("load", [](const std::filesystem::path& p) { return load_checkpoint(p); }, py::arg("path"))
        .def("save", [](const LossNetWeights& w, const std::filesystem::path& p) { save_checkpoint(w, p); }, py::arg("path"))
        .def_property_readonly("widths", [](const LossNetWeights& w) { return w.spec().widths; })
        .def_property_readonly("parameter_count", &LossNetWeights::parameter_count)
        .def("__call__",
             [](const LossNetWeights& w, const std::vector<std::vector<float>>& p, const std::vector<std::uint32_t>& y) {
                 return forward_loss(w, make_batch(p, y));
             },
             py::arg("probs"), py::arg("labels"), "Loss value of a classification sub-batch.")
        .def("__eq__", [](const LossNetWeights& a, const LossNetWeights& b) { return a == b; });

    m.def("gradcheck",
          [](std::size_t points, std::uint64_t seed) {
              GradCheckOptions o;
              o.points = points;
              o.seed = seed;
              py::dict out;
              for (const auto& r : run_gradcheck_suite(o)) out[py::str(r.op)] = py::make_tuple(r.max_rel_error, r.tolerance);
              return out;
          },
          py::arg("points") = 10, py::arg("seed") = 0, "Maps op name to (max relative error, tolerance).");

    m.def("corr_eval",
          [](const std::map<std::string, std::string>& settings, std::uint64_t seed) {
              ExperimentConfig cfg;
              cfg.apply(settings);
              cfg.validate();
              const auto r = run_corr_eval(cfg, seed);
              return py::make_tuple(r.spearman, r.kendall);
          },
          py::arg("settings") = std::map<std::string, std::string>{}, py::arg("seed") = 0,
          "(Spearman, Kendall) of a loss against accuracy; settings use config-file keys.");
}

#include "imugan/cli.hpp"
#include "imugan/features.hpp"
#include "imugan/harness.hpp"
#include "imugan/io.hpp"

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace imugan;

namespace {

std::vector<Trip> to_trips(const std::vector<Matrix>& values, const std::vector<std::optional<DrivingStyle>>& labels) {
    require(values.size() == labels.size(), "trips and labels differ in length");
    std::vector<Trip> trips;
    for (std::size_t i = 0; i < values.size(); ++i) trips.push_back({"trip_" + std::to_string(i), values[i], labels[i]});
    return trips;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Recurrent conditional GAN for IMU driving trips";
    m.attr("__version__") = kVersion;

    py::register_exception<ContractViolation>(m, "ContractViolation", PyExc_ValueError);
    py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
    py::register_exception<IoError>(m, "IoError", PyExc_OSError);

    py::enum_<DrivingStyle>(m, "DrivingStyle")
        .value("normal", DrivingStyle::normal)
        .value("aggressive", DrivingStyle::aggressive);
    py::enum_<Activation>(m, "Activation")
        .value("sigmoid", Activation::sigmoid)
        .value("tanh", Activation::tanh)
        .value("rectifier", Activation::rectifier)
        .value("maxout", Activation::maxout);

    py::class_<Trip>(m, "Trip")
        .def(py::init<std::string, Matrix, std::optional<DrivingStyle>>(), py::arg("id"), py::arg("values"),
             py::arg("label") = std::nullopt)
        .def_readwrite("id", &Trip::id)
        .def_readwrite("values", &Trip::values)
        .def_readwrite("label", &Trip::label);
    py::class_<RawTrip>(m, "RawTrip")
        .def(py::init<std::string, Matrix, std::optional<DrivingStyle>>(), py::arg("id"), py::arg("samples"),
             py::arg("label") = std::nullopt)
        .def_readwrite("id", &RawTrip::id)
        .def_readwrite("samples", &RawTrip::samples)
        .def_readwrite("label", &RawTrip::label);
    py::class_<ScalerParams>(m, "ScalerParams")
        .def_readonly("min", &ScalerParams::min)
        .def_readonly("max", &ScalerParams::max)
        .def_readonly("degenerate", &ScalerParams::degenerate);

    m.def("derive_seed", py::overload_cast<std::uint64_t, std::uint64_t>(&derive_seed), py::arg("seed"), py::arg("tag"));

    m.def(
        "simulate",
        [](int n, int labeled, std::uint64_t seed) {
            SimulationSettings s;
            s.n = n;
            s.labeled = labeled;
            s.seed = seed;
            SimulatedDataset d = simulate_dataset(s);
            return py::make_tuple(std::move(d.trips), std::move(d.truth));
        },
        py::arg("n") = 238, py::arg("labeled") = 60, py::arg("seed") = 1,
        "Simulated 1000 Hz trips and their ground-truth styles.");

    m.def("downsample", &downsample, py::arg("raw"), py::arg("factor") = kRawRateHz, py::arg("min_seconds") = kTripSeconds);
    m.def("moving_average", &moving_average, py::arg("series"), py::arg("window") = 10);
    m.def("truncate", [](const Matrix& v, Index rows) { return imugan::truncate(v, rows); }, py::arg("values"),
          py::arg("rows") = kTripSeconds);
    m.def("condition_trip", &condition_trip, py::arg("raw"), py::arg("window") = 10);
    m.def(
        "fit_minmax", [](const std::vector<Matrix>& blocks) { return fit_minmax(std::span<const Matrix>(blocks)); },
        py::arg("blocks"));
    m.def("apply_minmax", &apply_minmax, py::arg("params"), py::arg("values"));
    m.def("invert_minmax", &invert_minmax, py::arg("params"), py::arg("scaled"));
    m.def(
        "preprocess",
        [](const std::vector<RawTrip>& raw, const std::vector<std::size_t>& fit) {
            ProcessedDataset d = preprocess_pipeline(raw, fit);
            return py::make_tuple(std::move(d.trips), std::move(d.scaler));
        },
        py::arg("raw"), py::arg("fit_indices"), "Conditioned, scaled trips and the fitted scaler.");

    m.def(
        "mean_std",
        [](const std::vector<double>& s) {
            const MeanStd r = mean_std(s);
            return py::make_tuple(r.mean, r.std);
        },
        py::arg("series"));
    m.def("mode", [](const std::vector<double>& s) { return mode(s); }, py::arg("series"));
    m.def("skewness", [](const std::vector<double>& s) { return skewness(s); }, py::arg("series"));
    m.def("kurtosis", [](const std::vector<double>& s) { return kurtosis(s); }, py::arg("series"));
    m.def("percentile", [](const std::vector<double>& s, double p) { return percentile(s, p); }, py::arg("series"),
          py::arg("p"));
    m.def("iqr", [](const std::vector<double>& s) { return iqr(s); }, py::arg("series"));
    m.def("extract_features", py::overload_cast<const Matrix&>(&extract_features), py::arg("trip"));
    m.def("feature_names", &feature_names);

    m.def(
        "auroc",
        [](const std::vector<double>& scores, const std::vector<int>& labels) {
            return auroc(std::span<const double>(scores), std::span<const int>(labels)).auc;
        },
        py::arg("scores"), py::arg("labels"));
    m.def(
        "roc_curve",
        [](const std::vector<double>& scores, const std::vector<int>& labels) {
            std::vector<std::tuple<double, double, double>> out;
            for (const RocPoint& p : auroc(std::span<const double>(scores), std::span<const int>(labels)).curve)
                out.emplace_back(p.threshold, p.fpr, p.tpr);
            return out;
        },
        py::arg("scores"), py::arg("labels"), "(threshold, fpr, tpr) triples.");

    py::class_<RcganConfig>(m, "RcganConfig")
        .def(py::init<>())
        .def_readwrite("learning_rate", &RcganConfig::learning_rate)
        .def_readwrite("d_learning_rate", &RcganConfig::d_learning_rate)
        .def_readwrite("epochs", &RcganConfig::epochs)
        .def_readwrite("g_rounds", &RcganConfig::g_rounds)
        .def_readwrite("d_rounds", &RcganConfig::d_rounds)
        .def_readwrite("hidden", &RcganConfig::hidden)
        .def_readwrite("latent", &RcganConfig::latent)
        .def_readwrite("smooth", &RcganConfig::smooth)
        .def_readwrite("seq_len", &RcganConfig::seq_len)
        .def_readwrite("minimax_generator_loss", &RcganConfig::minimax_generator_loss)
        .def_readwrite("seed", &RcganConfig::seed);
    py::class_<GeneratorNet>(m, "Generator")
        .def(
            "generate",
            [](const GeneratorNet& g, DrivingStyle style, std::uint64_t seed) {
                Rng rng(seed);
                return generate(g, sample_noise(rng, kTripSeconds, g.latent()),
                                style);
            },
            py::arg("style"), py::arg("seed"))
        .def(
            "synthesize",
            [](const GeneratorNet& g, double ratio, int base, std::uint64_t seed, const std::string& prefix) {
                Rng rng(seed);
                return synthesize(g, ratio, base, rng, prefix);
            },
            py::arg("ratio"), py::arg("base"), py::arg("seed"), py::arg("prefix") = "fake");
    m.def(
        "train_rcgan",
        [](const std::vector<Matrix>& values, const std::vector<std::optional<DrivingStyle>>& labels,
           const RcganConfig& config) {
            Rng rng(config.seed);
            RcganModel model;
            {
                py::gil_scoped_release release;
                model = train_rcgan(to_trips(values, labels), config, rng);
            }
            std::vector<std::tuple<int, double, double>> history;
            for (const LossRecord& r : model.history) history.emplace_back(r.epoch, r.d_loss, r.g_loss);
            return py::make_tuple(std::move(model.generator), std::move(history));
        },
        py::arg("values"), py::arg("labels"), py::arg("config"), "Trained generator and (epoch, d_loss, g_loss) history.");

    m.def(
        "run_cli",
        [](const std::vector<std::string>& args) {
            std::vector<const char*> argv{"imugan"};
            for (const auto& a : args) argv.push_back(a.c_str());
            std::ostringstream out, err;
            int code = 0;
            {
                py::gil_scoped_release release;
                code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
            }
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"), "Runs the command-line tool in-process; returns (exit code, stdout, stderr).");
}

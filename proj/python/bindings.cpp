#include "axmc/engine.hpp"
#include "axmc/error.hpp"
#include "axmc/mobo.hpp"
#include "axmc/pareto.hpp"
#include "axmc/rng.hpp"
#include "axmc/synthetic.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace axmc;
using nlohmann::json;

namespace {

std::vector<pareto::EvalRecord> as_records(const std::vector<std::vector<double>>& points) {
    std::vector<pareto::EvalRecord> rs(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) rs[i].measures = points[i];
    return rs;
}

// Session handle: JSON crosses the boundary as text, the Python layer converts.
class PySession {
public:
    explicit PySession(engine::SessionState st) : st_(std::move(st)) {}

    static PySession create(const std::string& config_json, const std::string& id) {
        return PySession(engine::init_session(engine::SessionConfig::from_json(json::parse(config_json)), id));
    }
    static PySession restore(const std::string& text) { return PySession(engine::restore(text)); }

    void run(std::optional<std::size_t> iterations, std::optional<double> seconds) {
        py::gil_scoped_release release;
        engine::run(st_, {iterations, seconds});
    }
    void set_weight_box(const std::vector<double>& lower, const std::vector<double>& upper) {
        engine::set_weight_box(st_, mobo::WeightBox{lower, upper});
    }
    std::string status() const { return engine::status_json(st_).dump(); }
    std::string front(const std::string& split, const std::string& format) const {
        py::gil_scoped_release release;
        const auto table = engine::report(st_, engine::split_from_string(split));
        if (format == "csv") return table.to_csv();
        if (format == "json") return table.to_json().dump();
        fail(ErrorCode::argument, "format must be 'json' or 'csv'", "format");
    }
    std::string path() const { return engine::path_to_json(st_).dump(); }
    std::string archive() const { return st_.archive.to_json().dump(); }
    std::string snapshot() const { return engine::snapshot(st_); }

private:
    engine::SessionState st_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Multi-criteria tuning of boosted-tree pipelines (native core)";

    static py::exception<Error> error_type(m, "Error");
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            const auto type = py::reinterpret_borrow<py::object>(error_type);
            py::object err = type(std::string(to_string(e.code())), e.what(), e.field());
            PyErr_SetObject(error_type.ptr(), err.ptr());
        }
    });

    m.def(
        "front_indices",
        [](const std::vector<std::vector<double>>& points) { return pareto::front_indices(as_records(points)); },
        py::arg("points"), "Indices of the non-dominated points (minimization), in input order.");
    m.def(
        "dominates",
        [](const std::vector<double>& a, const std::vector<double>& b) { return pareto::dominates(a, b); },
        py::arg("a"), py::arg("b"));
    m.def(
        "scalarize",
        [](const std::vector<double>& y, const std::vector<double>& w, const std::vector<double>& lo,
           const std::vector<double>& hi, double rho) {
            mobo::ScalarizerConfig cfg{rho, lo, hi};
            return mobo::scalarize(y, w, cfg);
        },
        py::arg("y"), py::arg("w"), py::arg("min"), py::arg("max"), py::arg("rho") = 0.05);
    m.def(
        "sample_weights",
        [](const std::vector<double>& lower, const std::vector<double>& upper, std::uint64_t seed, std::size_t n) {
            mobo::WeightBox box{lower, upper};
            box.validate();
            Rng rng(seed);
            std::vector<std::vector<double>> out;
            out.reserve(n);
            for (std::size_t i = 0; i < n; ++i) out.push_back(mobo::sample_weights(box, rng));
            return out;
        },
        py::arg("lower"), py::arg("upper"), py::arg("seed") = 0, py::arg("n") = 1);
    m.def("subevaluation_rounds", &engine::subevaluation_rounds, py::arg("nrounds"));
    m.def(
        "subevaluation_grid",
        [](int nrounds, double thr) {
            PipelineConfig c;
            c.nrounds = nrounds;
            c.booster.max_rounds = nrounds;
            c.thr = thr;
            return engine::subevaluation_grid(c);
        },
        py::arg("nrounds"), py::arg("thr"));
    m.def(
        "synthetic_income",
        [](std::size_t rows, std::uint64_t seed, double label_bias) {
            auto t = synthetic::income_like(rows, seed, label_bias);
            return py::make_tuple(t.csv, t.schema.to_json().dump());
        },
        py::arg("rows") = 5000, py::arg("seed") = 7, py::arg("label_bias") = 0.8);

    py::class_<PySession>(m, "_Session")
        .def_static("create", &PySession::create, py::arg("config_json"), py::arg("id") = "session")
        .def_static("restore", &PySession::restore, py::arg("text"))
        .def("run", &PySession::run, py::arg("iterations") = py::none(), py::arg("seconds") = py::none())
        .def("set_weight_box", &PySession::set_weight_box, py::arg("lower"), py::arg("upper"))
        .def("status", &PySession::status)
        .def("front", &PySession::front, py::arg("split") = "valid", py::arg("format") = "json")
        .def("path", &PySession::path)
        .def("archive", &PySession::archive)
        .def("snapshot", &PySession::snapshot);
}

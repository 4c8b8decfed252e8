#include "qpfkam/error.hpp"
#include "qpfkam/io.hpp"
#include "qpfkam/runner.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace qpfkam;

namespace {

py::tuple run(const std::string& config, const std::string& base_dir) {
    const ExperimentConfig cfg = parse_config(Json::parse(config), base_dir);
    RunOutcome out;
    {
        py::gil_scoped_release release;
        out = run_experiment(cfg);
        if (!cfg.output.empty()) write_artifacts(cfg, out);
    }
    py::dict tables;
    for (const auto& [name, t] : out.tables) tables[py::str(name)] = py::make_tuple(t.header, t.rows);
    return py::make_tuple(out.exit_status, out.result.dump(), tables);
}

std::string convergents(const std::string& frequency, std::size_t depth) {
    const Frequency fr = expand_continued_fraction(frequency_from_json(Json::parse(frequency)), depth);
    Json j;
    std::vector<std::string> a, p, q;
    for (const auto& x : fr.partial_quotients) a.push_back(x.str());
    for (const auto& x : fr.p) p.push_back(x.str());
    for (const auto& x : fr.q) q.push_back(x.str());
    j["alpha"] = fr.alpha();
    j["partial_quotients"] = a;
    j["p"] = p;
    j["q"] = q;
    j["rational_input"] = fr.rational_input;
    return j.dump();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "qpfkam native core";
    py::register_exception<Error>(m, "QpfkamError", PyExc_RuntimeError);
    m.def("run", &run, py::arg("config"), py::arg("base_dir") = ".",
          "Run one experiment from a JSON string; returns (status, result JSON, tables).");
    m.def("convergents", &convergents, py::arg("frequency"), py::arg("depth") = 40);
    m.def("run_names", &run_names);
}

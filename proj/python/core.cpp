#include "va/cli.hpp"
#include "va/consistency.hpp"
#include "va/core.hpp"
#include "va/error.hpp"
#include "va/interva.hpp"
#include "va/metrics.hpp"
#include "va/nbc.hpp"
#include "va/tariff.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;

namespace {

std::vector<va::SymptomValue> parse_record(const std::vector<std::string> &tokens) {
    std::vector<va::SymptomValue> out;
    out.reserve(tokens.size());
    for (const auto &t : tokens) {
        auto v = va::from_token(t);
        if (!v) {
            throw va::FormatError("unrecognized symptom token '" + t + "'");
        }
        out.push_back(*v);
    }
    return out;
}

va::CondProbMatrix numeric_probs(const va::Matrix &probs) {
    std::vector<std::string> s, c;
    for (Eigen::Index j = 0; j < probs.rows(); ++j) {
        s.push_back("s" + std::to_string(j + 1));
    }
    for (Eigen::Index k = 0; k < probs.cols(); ++k) {
        c.push_back("c" + std::to_string(k + 1));
    }
    return va::CondProbMatrix(s, c, probs, va::Provenance::Trained);
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Verbal autopsy cause-of-death coding engine";
    m.attr("__version__") = va::kToolVersion;

    py::register_exception<va::Error>(m, "VaError", PyExc_ValueError);

    m.def(
        "run",
        [](const std::vector<std::string> &args) {
            std::ostringstream out, err;
            int code;
            {
                py::gil_scoped_release release;
                code = va::run(args, out, err);
            }
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"), "Run the command-line tool; returns (exit code, stdout, stderr).");

    m.def(
        "interva_posterior",
        [](const std::vector<std::string> &record, const va::Matrix &probs, const std::vector<double> &prior) {
            return va::interva_posterior(parse_record(record), numeric_probs(probs), va::PriorCSMF(prior)).probs;
        },
        py::arg("record"), py::arg("probs"), py::arg("prior"),
        "Presence-only posterior for one record of tokens Y / '' / '.'; probs is symptoms x causes.");

    m.def(
        "nbc_posterior",
        [](const std::vector<std::string> &record, const va::Matrix &probs, const std::vector<double> &prior,
           bool skip_missing) {
            va::NbcModel model{numeric_probs(probs), va::PriorCSMF(prior), 1.0};
            return va::nbc_posterior(parse_record(record), model,
                                     skip_missing ? va::NbcMissing::Skip : va::NbcMissing::AsAbsent);
        },
        py::arg("record"), py::arg("probs"), py::arg("prior"), py::arg("skip_missing") = false);

    m.def("interva_postprocess",
          [](const std::vector<double> &dist, double top_floor, double floor, double ratio, std::size_t max_causes) {
              return va::interva_postprocess(dist, {top_floor, floor, ratio, max_causes});
          },
          py::arg("dist"), py::arg("top_floor") = 0.0, py::arg("floor") = 0.1, py::arg("ratio") = 0.5,
          py::arg("max_causes") = 3);

    m.def("tariff_matrix", &va::tariff_matrix, py::arg("counts"), "Tariffs from a causes x symptoms count matrix.");

    m.def(
        "csmf_accuracy",
        [](const std::vector<double> &est, const std::vector<double> &truth) { return va::csmf_accuracy(est, truth); },
        py::arg("est"), py::arg("truth"));

    m.def(
        "data_check",
        [](const std::vector<std::string> &symptoms, const std::vector<std::string> &record,
           const std::string &hierarchy_csv, const std::string &policy) {
            va::SymptomMatrix data({"r"}, symptoms, parse_record(record));
            auto h = va::SymptomHierarchy::from_csv(hierarchy_csv);
            auto out = va::data_check(data, h, {va::parse_check_variant(policy), "neonate"});
            std::vector<std::string> tokens;
            for (auto v : out.data.values()) {
                tokens.emplace_back(va::to_token(v));
            }
            return tokens;
        },
        py::arg("symptoms"), py::arg("record"), py::arg("hierarchy_csv"), py::arg("policy") = "interva4");

    m.def("sha256_hex", &va::sha256_hex, py::arg("data"));
    m.attr("data_dir") = VA_DATA_DIR;
}

#include "latentpath/dataset.hpp"
#include "latentpath/efa.hpp"
#include "latentpath/error.hpp"
#include "latentpath/fit_indices.hpp"
#include "latentpath/mediation.hpp"
#include "latentpath/model_spec.hpp"
#include "latentpath/psychometrics.hpp"
#include "latentpath/report.hpp"
#include "latentpath/sem.hpp"

#include <fmt/format.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
namespace lp = latentpath;

namespace {

std::span<const double> as_span(const std::vector<double>& v) { return {v.data(), v.size()}; }

lp::Dataset make_dataset(const std::vector<std::string>& names, const Eigen::MatrixXd& values) {
    if (static_cast<Eigen::Index>(names.size()) != values.cols()) throw lp::DataError("one name per column required");
    lp::Dataset d;
    d.names = names;
    d.values = values;
    d.raw.assign(static_cast<std::size_t>(values.rows()), std::vector<std::string>(names.size()));
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
        for (Eigen::Index j = 0; j < values.cols(); ++j) {
            const double v = values(i, j);
            d.raw[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = std::isnan(v) ? "" : fmt::format("{}", v);
        }
    }
    return d;
}

lp::EstimationOptions estimation(int max_iter, double gtol, const std::string& chisq_n, const std::string& ident) {
    lp::EstimationOptions o;
    o.max_iter = max_iter;
    o.gtol = gtol;
    o.multiplier = chisq_n == "n" ? lp::ChiSquareMultiplier::N : lp::ChiSquareMultiplier::NMinusOne;
    o.identification = ident == "std" ? lp::Identification::VarianceStandardized : lp::Identification::Marker;
    return o;
}

}  // namespace

PYBIND11_MODULE(_latentpath, m) {
    m.doc() = "Structural equation modeling toolkit";

    auto base = py::register_exception<lp::Error>(m, "Error");
    py::register_exception<lp::SyntaxError>(m, "SyntaxError", base.ptr());
    py::register_exception<lp::ModelError>(m, "ModelError", base.ptr());
    py::register_exception<lp::DataError>(m, "DataError", base.ptr());
    py::register_exception<lp::NumericalError>(m, "NumericalError", base.ptr());
    py::register_exception<lp::IdentificationError>(m, "IdentificationError", base.ptr());
    py::register_exception<lp::ConvergenceError>(m, "ConvergenceError", base.ptr());

    py::class_<lp::LatentDefinition>(m, "LatentDefinition")
        .def(py::init<std::string, std::vector<std::string>>(), py::arg("name"), py::arg("indicators"))
        .def_readwrite("name", &lp::LatentDefinition::name)
        .def_readwrite("indicators", &lp::LatentDefinition::indicators);

    py::class_<lp::ModelSpec>(m, "ModelSpec")
        .def_readonly("latents", &lp::ModelSpec::latents)
        .def("indicators", &lp::ModelSpec::indicators)
        .def("to_text", [](const lp::ModelSpec& s) { return lp::to_model_text(s); })
        .def("__eq__", [](const lp::ModelSpec& a, const lp::ModelSpec& b) { return a == b; });

    m.def("parse_model", [](const std::string& text) { return lp::parse_model(text); }, py::arg("text"));
    m.def("load_model", &lp::load_model, py::arg("path"));
    m.def("measurement_only", &lp::measurement_only);

    py::class_<lp::FreeParameter>(m, "FreeParameter")
        .def_readonly("name", &lp::FreeParameter::name)
        .def_readonly("label", &lp::FreeParameter::label)
        .def_property_readonly("kind", [](const lp::FreeParameter& p) { return lp::to_string(p.kind); });

    py::class_<lp::ParamMatrices>(m, "ParamMatrices")
        .def_readonly("eta", &lp::ParamMatrices::eta)
        .def_readonly("xi", &lp::ParamMatrices::xi)
        .def_readonly("parameters", &lp::ParamMatrices::parameters)
        .def_readonly("variable_order", &lp::ParamMatrices::variable_order)
        .def("free_count", &lp::ParamMatrices::free_count)
        .def("implied_covariance",
             [](const lp::ParamMatrices& pm, const std::vector<double>& theta) {
                 return lp::implied_covariance(pm, as_span(theta));
             })
        .def("ml_objective",
             [](const lp::ParamMatrices& pm, const Eigen::MatrixXd& s, const std::vector<double>& theta) {
                 lp::MlObjective obj(pm, s);
                 Eigen::VectorXd g;
                 auto f = obj.value_and_gradient(as_span(theta), g);
                 if (!f) throw lp::NumericalError("implied covariance is not positive definite");
                 return py::make_tuple(*f, g);
             });

    m.def(
        "build_matrices",
        [](const lp::ModelSpec& spec, const std::vector<std::string>& order, const std::string& ident) {
            return lp::build_matrices(spec, order.empty() ? spec.indicators() : order,
                                      ident == "std" ? lp::Identification::VarianceStandardized
                                                     : lp::Identification::Marker);
        },
        py::arg("spec"), py::arg("variable_order") = std::vector<std::string>{}, py::arg("identification") = "marker");

    m.def(
        "count_df",
        [](const lp::ParamMatrices& pm) {
            const auto d = lp::count_df(pm, pm.observed_count());
            return py::dict(py::arg("moments") = d.moments, py::arg("parameters") = d.parameters, py::arg("df") = d.df,
                            py::arg("under_identified") = d.under_identified);
        },
        py::arg("matrices"));

    py::class_<lp::SampleMoments>(m, "SampleMoments")
        .def_readonly("covariance", &lp::SampleMoments::covariance)
        .def_readonly("correlation", &lp::SampleMoments::correlation)
        .def_readonly("n", &lp::SampleMoments::n)
        .def_readonly("names", &lp::SampleMoments::names);

    m.def(
        "covariance",
        [](const std::vector<std::string>& names, const Eigen::MatrixXd& values, const std::string& divisor) {
            return lp::covariance(make_dataset(names, values), divisor == "n" ? lp::Divisor::N : lp::Divisor::NMinusOne);
        },
        py::arg("names"), py::arg("values"), py::arg("divisor") = "n-1");
    m.def("moments_from_covariance", &lp::moments_from_covariance, py::arg("s"), py::arg("n"), py::arg("names"));
    m.def(
        "load_table",
        [](const std::string& path) {
            const lp::Dataset d = lp::load_table(path);
            return py::make_tuple(d.names, d.values);
        },
        py::arg("path"));

    py::class_<lp::ParameterEstimate>(m, "ParameterEstimate")
        .def_readonly("name", &lp::ParameterEstimate::name)
        .def_readonly("label", &lp::ParameterEstimate::label)
        .def_readonly("estimate", &lp::ParameterEstimate::estimate)
        .def_readonly("se", &lp::ParameterEstimate::se)
        .def_readonly("z", &lp::ParameterEstimate::z)
        .def_readonly("p_value", &lp::ParameterEstimate::p_value)
        .def_readonly("standardized", &lp::ParameterEstimate::standardized);

    py::class_<lp::FitResult>(m, "FitResult")
        .def_readonly("model", &lp::FitResult::model)
        .def_readonly("theta", &lp::FitResult::theta)
        .def_readonly("estimates", &lp::FitResult::estimates)
        .def_readonly("f_min", &lp::FitResult::f_min)
        .def_readonly("chi_square", &lp::FitResult::chi_square)
        .def_readonly("df", &lp::FitResult::df)
        .def_readonly("n", &lp::FitResult::n)
        .def_readonly("converged", &lp::FitResult::converged)
        .def_readonly("iterations", &lp::FitResult::iterations)
        .def_readonly("implied", &lp::FitResult::implied)
        .def("find", [](const lp::FitResult& r, const std::string& name) -> py::object {
            const auto* e = r.find(name);
            return e ? py::cast(*e) : py::none();
        })
        .def("to_json", [](const lp::FitResult& r) { return lp::to_json(r).dump(); });

    m.def(
        "fit",
        [](const lp::ModelSpec& spec, const lp::SampleMoments& moments, int max_iter, double gtol,
           const std::string& chisq_n, const std::string& ident) {
            return lp::fit(spec, moments, estimation(max_iter, gtol, chisq_n, ident));
        },
        py::arg("spec"), py::arg("moments"), py::arg("max_iter") = 500, py::arg("gtol") = 1e-6,
        py::arg("chisq_n") = "n-1", py::arg("identification") = "marker");

    m.def(
        "fit_indices",
        [](const lp::FitResult& r, const Eigen::MatrixXd& s) { return lp::to_json(lp::indices(r, s)).dump(); },
        py::arg("result"), py::arg("s"));
    m.def("rmsea", &lp::rmsea, py::arg("chi_square"), py::arg("df"), py::arg("n"));
    m.def("f_ml", &lp::f_ml, py::arg("sigma"), py::arg("s"), py::arg("p"));
    m.def("log_likelihood", &lp::log_likelihood, py::arg("sigma"), py::arg("s"), py::arg("n"), py::arg("p"));

    m.def("cronbach_alpha", &lp::cronbach_alpha, py::arg("items"));
    m.def(
        "composite_reliability",
        [](const std::vector<double>& l) { return lp::composite_reliability(as_span(l)); }, py::arg("loadings"));
    m.def(
        "average_variance_extracted",
        [](const std::vector<double>& l) { return lp::average_variance_extracted(as_span(l)); }, py::arg("loadings"));
    m.def("kmo", &lp::kmo, py::arg("r"));
    m.def(
        "bartlett",
        [](const Eigen::MatrixXd& r, int n) {
            const auto b = lp::bartlett(r, n);
            return py::make_tuple(b.chi_square, b.df, b.p_value);
        },
        py::arg("r"), py::arg("n"));

    py::class_<lp::LoadingMatrix>(m, "LoadingMatrix")
        .def_readonly("items", &lp::LoadingMatrix::items)
        .def_readonly("loadings", &lp::LoadingMatrix::loadings)
        .def_readonly("eigenvalues", &lp::LoadingMatrix::eigenvalues)
        .def_readonly("communalities", &lp::LoadingMatrix::communalities)
        .def_readonly("rotation", &lp::LoadingMatrix::rotation);
    m.def(
        "efa",
        [](const Eigen::MatrixXd& r, std::optional<int> factors, bool rotate) {
            lp::LoadingMatrix l = lp::extract(r, factors ? lp::Retention::count(*factors) : lp::Retention::kaiser());
            return rotate ? lp::varimax(l) : l;
        },
        py::arg("r"), py::arg("factors") = py::none(), py::arg("rotate") = true);

    m.def(
        "decompose",
        [](const Eigen::MatrixXd& beta, const Eigen::MatrixXd& gamma) {
            const auto e = lp::decompose(beta, gamma);
            return py::dict(py::arg("total_xi") = e.total_xi, py::arg("direct_xi") = e.direct_xi,
                            py::arg("indirect_xi") = e.indirect_xi, py::arg("total_eta") = e.total_eta,
                            py::arg("direct_eta") = e.direct_eta, py::arg("indirect_eta") = e.indirect_eta);
        },
        py::arg("beta"), py::arg("gamma"));
    m.def("delta_variance", &lp::delta_variance, py::arg("gamma"), py::arg("b"), py::arg("var_gamma"),
          py::arg("var_b"));

    m.def(
        "simulate",
        [](const lp::ParamMatrices& pm, const std::vector<double>& theta, int n, std::uint64_t seed) {
            const lp::Dataset d = lp::simulate(pm, as_span(theta), n, seed);
            return py::make_tuple(d.names, d.values);
        },
        py::arg("matrices"), py::arg("theta"), py::arg("n"), py::arg("seed"));
    m.def(
        "assign_parameters",
        [](const lp::ParamMatrices& pm, const std::map<std::string, double>& values) {
            return lp::assign_parameters(pm, {values.begin(), values.end()});
        },
        py::arg("matrices"), py::arg("values"));
}

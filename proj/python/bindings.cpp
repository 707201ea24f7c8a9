#include <oprisk/capital.hpp>
#include <oprisk/error.hpp>
#include <oprisk/fisher.hpp>
#include <oprisk/mle.hpp>
#include <oprisk/rce.hpp>
#include <oprisk/simharness.hpp>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <vector>

namespace py = pybind11;
using namespace oprisk;

namespace {

py::list matrix(const SymMatrix2& m) {
    py::list out;
    out.append(py::make_tuple(m.xx, m.xy));
    out.append(py::make_tuple(m.xy, m.yy));
    return out;
}

CapitalSpec make_spec(double lambda, double alpha, int years) { return CapitalSpec(alpha, FrequencyModel(lambda, years)); }

const char* method_name(FisherMethod m) {
    switch (m) {
    case FisherMethod::ClosedForm: return "closed_form";
    case FisherMethod::Approximation: return "approximation";
    case FisherMethod::Quadrature: return "quadrature";
    }
    return "";
}

py::dict stats_dict(const CapitalDistStats& s) {
    py::dict d;
    d["true_capital"] = s.true_capital;
    d["mean"] = s.mean;
    d["bias"] = s.bias;
    d["bias_pct"] = s.bias_pct;
    d["rmse"] = s.rmse;
    d["stddev"] = s.stddev;
    d["cv"] = s.cv;
    d["iqr"] = s.iqr;
    d["ci95_width"] = s.ci95_width;
    d["skewness"] = s.skewness;
    d["excess_kurtosis"] = s.excess_kurtosis;
    d["n"] = s.n;
    d["n_failed"] = s.n_failed;
    return d;
}

} // namespace

PYBIND11_MODULE(_oprisk, m) {
    m.doc() = "Operational-risk severity models, single-loss capital and the reduced-bias capital estimator";

    auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<DomainError>(m, "DomainError", base.ptr());
    py::register_exception<DataError>(m, "DataError", base.ptr());
    py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
    py::register_exception<NumericError>(m, "NumericError", base.ptr());
    py::register_exception<EstimationError>(m, "EstimationError", base.ptr());

    py::class_<SeverityModel>(m, "SeverityModel")
        .def(py::init([](const std::string& family, double p1, double p2, std::optional<double> threshold) {
                 return SeverityModel(parse_family(family), p1, p2, threshold);
             }),
             py::arg("family"), py::arg("p1"), py::arg("p2"), py::arg("threshold") = py::none())
        .def_property_readonly("family", [](const SeverityModel& s) { return std::string(family_name(s.family())); })
        .def_property_readonly("p1", &SeverityModel::p1)
        .def_property_readonly("p2", &SeverityModel::p2)
        .def_property_readonly("threshold", &SeverityModel::threshold)
        .def_property_readonly("label", &SeverityModel::label)
        .def("mean", [](const SeverityModel& s) { return mean(s); })
        .def("__eq__", [](const SeverityModel& a, const SeverityModel& b) { return a == b; })
        .def("__repr__", [](const SeverityModel& s) {
            std::string r = "SeverityModel('" + std::string(family_name(s.family())) + "', " + py::repr(py::float_(s.p1())).cast<std::string>() +
                            ", " + py::repr(py::float_(s.p2())).cast<std::string>();
            if (s.threshold()) r += ", threshold=" + py::repr(py::float_(*s.threshold())).cast<std::string>();
            return r + ")";
        });

    // Scalars in, scalar out; arrays in, arrays out.
    m.def(
        "pdf", [](const SeverityModel& s, py::array_t<double> x) { return py::vectorize([&s](double v) { return pdf(s, v); })(x); },
        py::arg("model"), py::arg("x"));
    m.def(
        "cdf", [](const SeverityModel& s, py::array_t<double> x) { return py::vectorize([&s](double v) { return cdf(s, v); })(x); },
        py::arg("model"), py::arg("x"));
    m.def(
        "quantile",
        [](const SeverityModel& s, py::array_t<double> p) { return py::vectorize([&s](double v) { return quantile(s, v); })(p); },
        py::arg("model"), py::arg("p"));

    m.def(
        "sample",
        [](const SeverityModel& s, std::size_t count, std::uint64_t seed) {
            RandomStream rng = RandomStream::keyed(seed, 0, StreamPurpose::Sample);
            std::vector<double> v = sample(s, rng, count);
            return py::array_t<double>(static_cast<py::ssize_t>(v.size()), v.data());
        },
        py::arg("model"), py::arg("count"), py::arg("seed") = 1, "Inverse-cdf draws from a seeded stream.");

    m.def(
        "log_likelihood",
        [](const SeverityModel& s, const std::vector<double>& losses) { return log_likelihood(s, losses); },
        py::arg("model"), py::arg("losses"));

    py::class_<FitResult>(m, "FitResult")
        .def_readonly("model", &FitResult::model)
        .def_readonly("loglik", &FitResult::loglik)
        .def_readonly("n", &FitResult::n)
        .def_readonly("converged", &FitResult::converged)
        .def_readonly("iterations", &FitResult::iterations)
        .def_readonly("grad_norm", &FitResult::grad_norm);

    m.def(
        "fit_severity",
        [](const std::vector<double>& losses, const std::string& family, std::optional<double> threshold) {
            py::gil_scoped_release release;
            return fit_severity(losses, parse_family(family), threshold);
        },
        py::arg("losses"), py::arg("family"), py::arg("threshold") = py::none());

    m.def(
        "fisher_information",
        [](const SeverityModel& s) {
            const FisherMatrix fm = fisher_information(s);
            py::dict d;
            d["info"] = matrix(fm.info);
            d["inverse"] = matrix(fm.inverse);
            d["method"] = method_name(fm.method);
            return d;
        },
        py::arg("model"), "Per-observation Fisher information and its inverse.");

    m.def(
        "param_covariance",
        [](const SeverityModel& s, std::size_t n) {
            const ParamCovariance pc = param_covariance(fisher_information(s), n);
            py::dict d;
            d["cov"] = matrix(pc.cov);
            d["sd"] = py::make_tuple(pc.sd1, pc.sd2);
            d["rho"] = pc.rho;
            return d;
        },
        py::arg("model"), py::arg("n"));

    py::class_<CapitalBreakdown>(m, "CapitalBreakdown")
        .def_readonly("capital", &CapitalBreakdown::capital)
        .def_readonly("quantile_term", &CapitalBreakdown::quantile_term)
        .def_readonly("correction", &CapitalBreakdown::correction)
        .def_readonly("tail_index", &CapitalBreakdown::tail_index)
        .def_property_readonly("branch", [](const CapitalBreakdown& b) { return std::string(branch_name(b.branch)); });

    m.def(
        "capital",
        [](const SeverityModel& s, double lambda, double alpha, const std::string& method, int years) {
            const CapitalSpec spec = make_spec(lambda, alpha, years);
            if (method == "bk") return sla_bk_detail(s, spec);
            if (method == "degen") return sla_degen_detail(s, spec);
            if (method == "isla") return isla_detail(s, spec);
            throw ConfigError("unknown capital method '" + method + "' (bk, degen, isla)");
        },
        py::arg("model"), py::arg("lam"), py::arg("alpha") = kRegulatoryAlpha, py::arg("method") = "isla",
        py::arg("years") = 1);

    m.def(
        "isla", [](const SeverityModel& s, double lambda, double alpha) { return isla(s, make_spec(lambda, alpha, 1)); },
        py::arg("model"), py::arg("lam"), py::arg("alpha") = kRegulatoryAlpha);
    m.def(
        "sla_bk", [](const SeverityModel& s, double lambda, double alpha) { return sla_bk(s, make_spec(lambda, alpha, 1)); },
        py::arg("model"), py::arg("lam"), py::arg("alpha") = kRegulatoryAlpha);
    m.def(
        "sla_degen",
        [](const SeverityModel& s, double lambda, double alpha) { return sla_degen(s, make_spec(lambda, alpha, 1)); },
        py::arg("model"), py::arg("lam"), py::arg("alpha") = kRegulatoryAlpha);

    m.def(
        "mc_capital",
        [](const SeverityModel& s, double lambda, double alpha, std::size_t sims, std::uint64_t seed, int threads) {
            py::gil_scoped_release release;
            return mc_capital_oracle(s, make_spec(lambda, alpha, 1), sims,
                                     RandomStream::keyed(seed, 0, StreamPurpose::MonteCarlo), threads);
        },
        py::arg("model"), py::arg("lam"), py::arg("alpha") = kRegulatoryAlpha, py::arg("sims") = 1'000'000,
        py::arg("seed") = 1, py::arg("threads") = 0);

    py::class_<RceResult>(m, "RceResult")
        .def_readonly("capital", &RceResult::capital)
        .def_readonly("median_of_medians", &RceResult::median_of_medians)
        .def_readonly("weighted_mean", &RceResult::weighted_mean)
        .def_readonly("ratio", &RceResult::ratio)
        .def_readonly("c", &RceResult::c)
        .def_readonly("c_interpolated", &RceResult::c_interpolated)
        .def_readonly("c_clamped", &RceResult::c_clamped)
        .def_readonly("discarded_ellipses", &RceResult::discarded_ellipses)
        .def_readonly("step1_capital", &RceResult::step1_capital)
        .def_readonly("n_eff", &RceResult::n_eff);

    m.def(
        "rce",
        [](const SeverityModel& s, std::size_t n, double lambda, double alpha, int years, std::optional<double> c) {
            py::gil_scoped_release release;
            RceOptions opt;
            opt.c = c;
            return rce_estimate(s, n, make_spec(lambda, alpha, years), CTable::standard(), opt);
        },
        py::arg("model"), py::arg("n"), py::arg("lam"), py::arg("alpha") = kRegulatoryAlpha, py::arg("years") = 10,
        py::arg("c") = py::none(), "Reduced-bias capital estimate at a parameter point backed by n observations.");

    m.def(
        "simulate_study",
        [](const SeverityModel& truth, double lambda, int years, int replications, std::uint64_t seed,
           std::vector<double> alphas, bool run_rce, bool lambda_only, std::optional<std::string> contamination,
           double epsilon, int threads) {
            StudyConfig cfg;
            cfg.truth = truth;
            cfg.freq = FrequencyModel(lambda, years);
            cfg.replications = replications;
            cfg.master_seed = seed;
            cfg.alphas = std::move(alphas);
            cfg.run_rce = run_rce;
            cfg.lambda_only = lambda_only;
            cfg.threads = threads;
            if (contamination) {
                ContaminationSpec cs;
                cs.tail = parse_tail(*contamination);
                cs.epsilon = epsilon;
                cfg.contamination = cs;
            }
            cfg.validate();
            StudyResult r;
            {
                py::gil_scoped_release release;
                r = run_study(cfg);
            }
            py::list rows;
            for (const auto& e : r.stats) {
                py::dict d = stats_dict(e.stats);
                d["estimator"] = e.estimator;
                d["alpha"] = e.alpha;
                rows.append(d);
            }
            py::dict out;
            out["stats"] = rows;
            out["n_failed"] = r.n_failed;
            out["quality_warning"] = r.quality_warning;
            return out;
        },
        py::arg("truth"), py::arg("lam") = 25.0, py::arg("years") = 10, py::arg("replications") = 1000,
        py::arg("seed") = 20240101, py::arg("alphas") = std::vector<double>{kRegulatoryAlpha, kEconomicAlpha},
        py::arg("run_rce") = true, py::arg("lambda_only") = false, py::arg("contamination") = py::none(),
        py::arg("epsilon") = 0.05, py::arg("threads") = 0);
}

#include "mixcure/em.hpp"
#include "mixcure/errors.hpp"
#include "mixcure/inference.hpp"
#include "mixcure/io.hpp"
#include "mixcure/lasso.hpp"
#include "mixcure/simgen.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <vector>

namespace py = pybind11;
using namespace mixcure;

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

std::vector<std::string> names(const std::string& prefix, Eigen::Index k)
{
    std::vector<std::string> out;
    for (Eigen::Index j = 1; j <= k; ++j) out.push_back(prefix + std::to_string(j));
    return out;
}

Dataset make_dataset(const Vector& time, const std::vector<int>& status, const std::optional<RowMatrix>& x,
                     const std::optional<RowMatrix>& z, const std::optional<RowMatrix>& q)
{
    const Eigen::Index n = time.size();
    if (static_cast<Eigen::Index>(status.size()) != n) throw DimensionError("time and status differ in length");
    auto block = [n](const std::optional<RowMatrix>& m, const char* what) {
        if (!m) return RowMatrix(n, 0);
        if (m->rows() != n) throw DimensionError(std::string(what) + " must have one row per subject");
        return *m;
    };
    const RowMatrix X = block(x, "x"), Z = block(z, "z"), Q = block(q, "q");
    std::vector<SubjectRecord> subjects(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        auto& s = subjects[static_cast<std::size_t>(i)];
        const int st = status[static_cast<std::size_t>(i)];
        if (st < 0 || st > 2) throw DomainError("status must be 0, 1 or 2");
        s.time = time(i);
        s.status = static_cast<Status>(st);
        s.x = X.row(i).transpose();
        s.z = Z.row(i).transpose();
        s.q = Q.row(i).transpose();
    }
    return Dataset(std::move(subjects), names("x", X.cols()), names("z", Z.cols()), names("q", Q.cols()));
}

ModelSpec make_spec(const std::string& mechanism, const std::string& latency, const std::string& cureid,
                    std::optional<double> lambda, int max_iter)
{
    ModelSpec spec;
    spec.mechanism = parse_mechanism(mechanism);
    spec.latency_family = parse_survival_family(latency);
    if (!cureid.empty()) {
        spec.cureid_family = parse_cureid_family(cureid);
    } else {
        switch (spec.mechanism) {
        case Mechanism::DeterministicCutoff: spec.cureid_family = CureIdFamily::None; break;
        case Mechanism::StochasticTime: spec.cureid_family = CureIdFamily::WeibullPH; break;
        case Mechanism::DiagnosticTest: spec.cureid_family = CureIdFamily::BernoulliLogit; break;
        }
    }
    if (lambda) spec.penalty = PenaltyConfig::uniform(*lambda);
    spec.em_controls.max_iter = max_iter;
    spec.validate();
    return spec;
}

py::dict dataset_arrays(const Dataset& d)
{
    std::vector<int> status;
    for (const auto& s : d.subjects()) status.push_back(static_cast<int>(s.status));
    py::dict out;
    out["time"] = d.times();
    out["status"] = status;
    out["x"] = d.x_matrix();
    out["z"] = d.z_matrix();
    out["q"] = d.q_matrix();
    return out;
}

std::string fit(const Vector& time, const std::vector<int>& status, const std::optional<RowMatrix>& x,
                const std::optional<RowMatrix>& z, const std::optional<RowMatrix>& q, const std::string& mechanism,
                const std::string& latency, const std::string& cureid, const std::string& strategy,
                std::optional<double> lambda, int max_iter, int bootstrap, std::uint64_t seed, int jobs)
{
    const Dataset data = make_dataset(time, status, x, z, q);
    const ModelSpec spec = make_spec(mechanism, latency, cureid, lambda, max_iter);
    const Strategy s = parse_strategy(strategy);
    py::gil_scoped_release release;
    const FitResult result = fit_with_strategy(data, spec, s);
    nlohmann::json doc;
    doc["fit"] = to_json(result, data);
    if (bootstrap > 0) {
        const BootstrapResult boot = bootstrap_ci(data, spec, s, bootstrap, seed, result, jobs);
        doc["bootstrap"] = to_json(boot, coefficient_names(result.coef, result.spec));
    }
    return doc.dump();
}

ScenarioConfig scenario(int table, int n, bool sparse, const std::string& process, int calibration_draws)
{
    ScenarioConfig c = sparse ? ScenarioConfig::sparse(n) : ScenarioConfig::table(table, n);
    if (process == "diagnostic") {
        c.cure_id = CureIdProcess::Diagnostic;
    } else if (process == "cutoff") {
        c.cure_id = CureIdProcess::Cutoff;
    } else if (process != "stochastic") {
        throw SpecError("unknown cure-identification process '" + process + "'");
    }
    if (c.cure_id != CureIdProcess::Stochastic) c.theta_true = Vector(0);
    c.calibration_draws = calibration_draws;
    c.validate();
    return c;
}

py::dict simulate(int table, int n, std::uint64_t seed, bool sparse, const std::string& process,
                  int calibration_draws)
{
    ScenarioConfig c = scenario(table, n, sparse, process, calibration_draws);
    c.seed = seed;
    GeneratedDataset g;
    {
        py::gil_scoped_release release;
        g = generate(c);
    }
    py::dict out = dataset_arrays(g.dataset);
    out["rates"] = to_json(g.rates).dump();
    out["censoring_rate_param"] = g.censoring_rate_param;
    out["ordering_verified"] = g.ordering_verified;
    out["beta_true"] = c.beta_true;
    out["gamma_true"] = c.gamma_true;
    out["theta_true"] = c.theta_true;
    return out;
}

std::string study(int table, int n, const std::vector<std::string>& strategies, int replicates,
                  std::uint64_t seed, int bootstrap, int jobs, const std::string& mechanism,
                  const std::string& latency, const std::string& cureid, const std::string& process,
                  int calibration_draws)
{
    const ScenarioConfig c = scenario(table, n, false, process, calibration_draws);
    std::vector<Strategy> parsed;
    for (const auto& s : strategies) parsed.push_back(parse_strategy(s));
    StudyOptions opts;
    opts.spec = make_spec(mechanism, latency, cureid, std::nullopt, 500);
    opts.bootstrap = bootstrap;
    opts.jobs = jobs;
    py::gil_scoped_release release;
    return to_json(compare_strategies(c, parsed, replicates, seed, opts)).dump();
}

}  // namespace

PYBIND11_MODULE(_core, m)
{
    m.doc() = "Mixture cure models with known cure status";

    auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<InputError>(m, "InputError", error.ptr());
    py::register_exception<SpecError>(m, "SpecError", error.ptr());
    py::register_exception<DataError>(m, "DataError", error.ptr());
    py::register_exception<DimensionError>(m, "DimensionError", error.ptr());
    py::register_exception<DomainError>(m, "DomainError", error.ptr());
    py::register_exception<SeparationError>(m, "SeparationError", error.ptr());
    py::register_exception<NonConvergenceError>(m, "NonConvergenceError", error.ptr());

    m.def("fit", &fit, py::arg("time"), py::arg("status"), py::arg("x") = py::none(), py::arg("z") = py::none(),
          py::arg("q") = py::none(), py::arg("mechanism") = "stochastic", py::arg("latency") = "weibull",
          py::arg("cureid") = "", py::arg("strategy") = "full", py::arg("lam") = py::none(),
          py::arg("max_iter") = 500, py::arg("bootstrap") = 0, py::arg("seed") = 1, py::arg("jobs") = 1,
          "Fit the mixture cure model; returns a JSON document.");
    m.def("simulate", &simulate, py::arg("table") = 1, py::arg("n") = 500, py::arg("seed") = 1,
          py::arg("sparse") = false, py::arg("process") = "stochastic", py::arg("calibration_draws") = 50000);
    m.def("compare_strategies", &study, py::arg("table"), py::arg("n"), py::arg("strategies"),
          py::arg("replicates"), py::arg("seed") = 1, py::arg("bootstrap") = 0, py::arg("jobs") = 1,
          py::arg("mechanism") = "stochastic", py::arg("latency") = "weibull", py::arg("cureid") = "",
          py::arg("process") = "stochastic", py::arg("calibration_draws") = 50000);
    m.def("read_dataset", [](const std::string& path) { return dataset_arrays(read_dataset_file(path)); },
          py::arg("path"));
    m.def("quantile", &quantile, py::arg("values"), py::arg("prob"));
}

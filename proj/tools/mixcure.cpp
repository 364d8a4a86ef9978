// Command-line front end: fit, simulate, replicate-study, compare-strategies.

#include "mixcure/io.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using namespace mixcure;

namespace {

constexpr const char* kVersion = "0.1.0";

enum ExitCode { kOk = 0, kInputError = 1, kNonConvergence = 2, kInternalError = 3 };

struct Common {
    std::uint64_t seed = 1;
    std::string out = ".";
    int jobs = 1;
    std::string config;
};

void add_common(CLI::App* sub, Common& c)
{
    sub->add_option("--seed", c.seed, "Root random seed")->capture_default_str();
    sub->add_option("--out", c.out, "Output directory (created if missing)")->capture_default_str();
    sub->add_option("--jobs", c.jobs, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
    sub->add_option("--config", c.config,
                    "Config file: one 'key = value' per line, keys are this command's long option names; "
                    "command-line flags take precedence");
}

std::string strip(std::string s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    s = s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
    if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front()) {
        s = s.substr(1, s.size() - 2);
    }
    return s;
}

// Fills options not given on the command line from the config file.
void apply_config(CLI::App* sub, const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw InputError("cannot open config file '" + path + "'");
    std::string line;
    std::size_t lineno = 0;
    auto fail = [&](const std::string& msg) {
        return InputError(path + ": line " + std::to_string(lineno) + ": " + msg);
    };
    while (std::getline(in, line)) {
        ++lineno;
        const std::string body = strip(line);
        if (body.empty() || body[0] == '#') continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos) throw fail("expected 'key = value'");
        const std::string key = strip(body.substr(0, eq));
        const std::string value = strip(body.substr(eq + 1));
        CLI::Option* opt = key.empty() ? nullptr : sub->get_option_no_throw("--" + key);
        if (!opt || key == "config" || key == "help") {
            throw fail("unknown key '" + key + "' for command " + sub->get_name());
        }
        if (opt->count() > 0) continue;
        try {
            if (opt->get_expected_max() == 0) {
                if (value != "true" && value != "false") {
                    throw fail("'" + key + "' takes true or false");
                }
                if (value == "false") continue;
                opt->add_result("true");
            } else {
                std::stringstream parts(value);
                std::string part;
                while (std::getline(parts, part, ',')) opt->add_result(strip(part));
            }
            opt->run_callback();
        } catch (const CLI::Error& e) {
            throw fail("'" + key + "': " + e.what());
        }
    }
}

// Every resolved option except the ones that only affect where or how fast
// results are produced, so reruns compare byte for byte.
Provenance provenance_of(const CLI::App* sub)
{
    Provenance p{{"tool", std::string("mixcure ") + kVersion}, {"command", sub->get_name()}};
    for (const CLI::Option* opt : sub->get_options()) {
        const std::string name = opt->get_single_name();
        if (name.empty() || name == "help" || name == "config" || name == "out" || name == "jobs") continue;
        std::string value;
        if (opt->count() > 0) {
            for (const auto& r : opt->results()) value += (value.empty() ? "" : ",") + r;
        } else {
            value = opt->get_default_str();
            if (value.size() >= 2 && value.front() == '[' && value.back() == ']') {
                value = value.substr(1, value.size() - 2);
            }
        }
        if (opt->get_expected_max() == 0) value = opt->count() > 0 ? "true" : "false";
        p.emplace_back(name, value);
    }
    return p;
}

// Replaces a recorded option with the value actually used.
void resolve_entry(Provenance& p, const std::string& key, const std::string& value)
{
    for (auto& [k, v] : p) {
        if (k == key) v = value;
    }
}

std::ofstream open_output(const fs::path& dir, const std::string& file)
{
    std::ofstream f(dir / file);
    if (!f) throw InputError("cannot write " + (dir / file).string());
    return f;
}

fs::path prepare_out(const std::string& out)
{
    fs::path dir(out);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw InputError("cannot create output directory '" + out + "': " + ec.message());
    return dir;
}

// ---------------------------------------------------------------- model flags

struct ModelFlags {
    std::string mechanism = "stochastic";
    std::string latency = "weibull";
    std::string cureid;  // derived from the mechanism when empty
    int max_iter = 500;
};

void add_model(CLI::App* sub, ModelFlags& m)
{
    sub->add_option("--mechanism", m.mechanism, "Cure identification: cutoff|stochastic|diagnostic")
        ->capture_default_str()
        ->check(CLI::IsMember({"cutoff", "stochastic", "diagnostic"}));
    sub->add_option("--latency", m.latency, "Latency family: cox|weibull|exponential")
        ->capture_default_str()
        ->check(CLI::IsMember({"cox", "weibull", "exponential"}));
    sub->add_option("--cureid", m.cureid,
                    "Time-to-cure family for the stochastic mechanism: cox|weibull|exponential "
                    "(default weibull; logit for diagnostic, none for cutoff)")
        ->check(CLI::IsMember({"cox", "weibull", "exponential", "logit", "none"}));
    sub->add_option("--max-iter", m.max_iter, "EM iteration limit")->capture_default_str()->check(
        CLI::PositiveNumber);
}

ModelSpec model_spec(const ModelFlags& m)
{
    ModelSpec spec;
    spec.mechanism = parse_mechanism(m.mechanism);
    spec.latency_family = parse_survival_family(m.latency);
    if (!m.cureid.empty()) {
        spec.cureid_family = parse_cureid_family(m.cureid);
    } else {
        switch (spec.mechanism) {
        case Mechanism::DeterministicCutoff: spec.cureid_family = CureIdFamily::None; break;
        case Mechanism::StochasticTime: spec.cureid_family = CureIdFamily::WeibullPH; break;
        case Mechanism::DiagnosticTest: spec.cureid_family = CureIdFamily::BernoulliLogit; break;
        }
    }
    spec.em_controls.max_iter = m.max_iter;
    spec.validate();
    return spec;
}

// ------------------------------------------------------------- scenario flags

struct ScenarioFlags {
    std::vector<int> tables;
    std::string cure_rate = "high";
    std::string ordering = "lower";
    std::vector<int> n{500};
    std::string process = "stochastic";
    bool sparse = false;
    double target_censoring = 0.3;
    double known_cured = 0.5;
    std::string calibrate_on = "known-cured";
    double cutoff = 1.0;
    int calibration_draws = 50000;
};

void add_scenario(CLI::App* sub, ScenarioFlags& s, bool multi)
{
    auto* t = sub->add_option("--table", s.tables, "Preset scenario 1-4 (1/2: low/high cure, cure-lower ordering; "
                                                   "3/4: low/high cure, cure-higher ordering)")
                  ->check(CLI::Range(1, 4));
    auto* n = sub->add_option("--n", s.n, "Sample size")->capture_default_str()->check(CLI::PositiveNumber);
    if (!multi) {
        t->expected(0, 1);
        n->expected(1);
    }
    sub->add_option("--cure-rate", s.cure_rate, "low (~10%) or high (~30%); ignored with --table")
        ->capture_default_str()
        ->check(CLI::IsMember({"low", "high"}));
    sub->add_option("--ordering", s.ordering, "Time to cure identification lower or higher than time to event")
        ->capture_default_str()
        ->check(CLI::IsMember({"lower", "higher"}));
    sub->add_option("--process", s.process, "Cure identification process: stochastic|diagnostic|cutoff")
        ->capture_default_str()
        ->check(CLI::IsMember({"stochastic", "diagnostic", "cutoff"}));
    sub->add_flag("--sparse", s.sparse, "Zero the second and fourth incidence slopes");
    sub->add_option("--target-censoring", s.target_censoring, "Censoring proportion (calibrate-on censoring)")
        ->capture_default_str();
    sub->add_option("--known-cured", s.known_cured,
                    "Known-cured share among the cured (identification probability for diagnostic)")
        ->capture_default_str();
    sub->add_option("--calibrate-on", s.calibrate_on, "censoring|known-cured")
        ->capture_default_str()
        ->check(CLI::IsMember({"censoring", "known-cured"}));
    sub->add_option("--cutoff", s.cutoff, "Identification time for the cutoff process")->capture_default_str();
    sub->add_option("--calibration-draws", s.calibration_draws, "Monte Carlo draws for censoring calibration")
        ->capture_default_str();
}

std::vector<ScenarioConfig> scenarios(const ScenarioFlags& f)
{
    std::vector<int> tables = f.tables;
    if (tables.empty()) {
        const bool high = f.cure_rate == "high";
        const bool lower = f.ordering == "lower";
        tables.push_back(lower ? (high ? 2 : 1) : (high ? 4 : 3));
    }
    std::vector<ScenarioConfig> out;
    for (int t : tables) {
        for (int n : f.n) {
            ScenarioConfig c = ScenarioConfig::table(t, n);
            if (f.sparse) {
                c.beta_true(2) = 0.0;
                c.beta_true(4) = 0.0;
                c.label += "-sparse";
            }
            c.cure_id = f.process == "stochastic"   ? CureIdProcess::Stochastic
                        : f.process == "diagnostic" ? CureIdProcess::Diagnostic
                                                    : CureIdProcess::Cutoff;
            if (c.cure_id != CureIdProcess::Stochastic) c.theta_true = Vector(0);
            c.target_censoring = f.target_censoring;
            c.target_known_cured = f.known_cured;
            c.calibrate_on = f.calibrate_on == "censoring" ? CalibrationTarget::Censoring
                                                           : CalibrationTarget::KnownCured;
            c.cutoff = f.cutoff;
            c.calibration_draws = f.calibration_draws;
            c.validate();
            out.push_back(c);
        }
    }
    return out;
}

std::vector<Strategy> parse_strategies(const std::vector<std::string>& names)
{
    std::vector<Strategy> out;
    for (const auto& n : names) out.push_back(parse_strategy(n));
    return out;
}

// ------------------------------------------------------------------- commands

struct FitFlags {
    std::string input;
    ModelFlags model;
    std::string strategy = "full";
    std::optional<double> lambda;
    std::vector<double> lambda_grid;
    int bootstrap = 0;
};

int run_fit(const CLI::App* sub, const Common& common, const FitFlags& f)
{
    const Dataset data = read_dataset_file(f.input);
    ModelSpec spec = model_spec(f.model);
    const Strategy strategy = parse_strategy(f.strategy);
    const fs::path dir = prepare_out(common.out);
    Provenance prov = provenance_of(sub);
    resolve_entry(prov, "cureid", to_string(spec.cureid_family));

    nlohmann::json doc;
    doc["provenance"] = to_json(prov);
    if (!f.lambda_grid.empty()) {
        auto [d, s] = apply_strategy(data, spec, strategy);
        const BicPath path = bic_path(d, s, f.lambda_grid);
        doc["lambda_selection"] = to_json(path);
        spec.penalty = PenaltyConfig::uniform(path.points[path.selected].lambda);
    } else if (f.lambda) {
        spec.penalty = PenaltyConfig::uniform(*f.lambda);
    }

    FitResult fit;
    int code = kOk;
    std::string failure;
    try {
        fit = fit_with_strategy(data, spec, strategy);
        if (!fit.converged) {
            code = kNonConvergence;
            failure = "EM did not converge within " + std::to_string(spec.em_controls.max_iter) + " iterations";
        }
    } catch (const Error& e) {
        const FitResult* partial = partial_result(e);
        const bool numeric = dynamic_cast<const NonConvergenceError*>(&e) ||
                             dynamic_cast<const SeparationError*>(&e);
        if (!partial || !numeric) throw;
        fit = *partial;
        fit.strategy = strategy;
        code = kNonConvergence;
        failure = e.what();
    }

    std::optional<BootstrapResult> boot;
    if (f.bootstrap > 0 && code == kOk) {
        boot = bootstrap_ci(data, spec, strategy, f.bootstrap, common.seed, fit, common.jobs);
    }

    doc["fit"] = to_json(fit, data);
    if (!failure.empty()) doc["error"] = failure;
    if (boot) doc["bootstrap"] = to_json(*boot, coefficient_names(fit.coef, fit.spec));
    open_output(dir, "fit.json") << doc.dump(2) << '\n';
    {
        auto t = open_output(dir, "coefficients.csv");
        write_coefficient_table(t, fit, data, boot ? &*boot : nullptr, prov);
    }
    if (!fit.coef.baseline_T.empty() || fit.coef.baseline_C) {
        auto t = open_output(dir, "baseline.csv");
        write_baseline_table(t, fit, prov);
    }
    if (!failure.empty()) std::cerr << "mixcure: " << failure << " (partial results written)\n";
    return code;
}

int run_simulate(const CLI::App* sub, const Common& common, const ScenarioFlags& f)
{
    ScenarioConfig cfg = scenarios(f).front();
    cfg.seed = common.seed;
    const GeneratedDataset g = generate(cfg);
    const fs::path dir = prepare_out(common.out);
    const Provenance prov = provenance_of(sub);
    {
        auto o = open_output(dir, "data.csv");
        write_dataset(o, g.dataset, prov);
    }
    {
        auto o = open_output(dir, "truth.csv");
        write_truth(o, g.truth, prov);
    }
    nlohmann::json s;
    s["provenance"] = to_json(prov);
    s["scenario"] = cfg.label;
    s["n"] = cfg.n;
    s["realized"] = to_json(g.rates);
    s["censoring_rate_param"] = g.censoring_rate_param;
    s["counts"] = {{"censored", g.dataset.count(Status::Censored)},
                   {"event", g.dataset.count(Status::Event)},
                   {"known_cured", g.dataset.count(Status::KnownCured)}};
    s["truth"] = {{"beta", std::vector<double>(cfg.beta_true.data(), cfg.beta_true.data() + cfg.beta_true.size())},
                  {"gamma",
                   std::vector<double>(cfg.gamma_true.data(), cfg.gamma_true.data() + cfg.gamma_true.size())},
                  {"theta",
                   std::vector<double>(cfg.theta_true.data(), cfg.theta_true.data() + cfg.theta_true.size())},
                  {"latency_weibull", {{"shape", cfg.baseline_T.shape}, {"scale", cfg.baseline_T.scale}}}};
    if (g.cure_weibull) {
        s["truth"]["cureid_weibull"] = {{"shape", g.cure_weibull->shape}, {"scale", g.cure_weibull->scale}};
    }
    s["ordering"] = {{"requested", to_string(cfg.ordering)}, {"dominance_check_passed", g.ordering_verified}};
    open_output(dir, "summary.json") << s.dump(2) << '\n';
    return kOk;
}

struct StudyFlags {
    ScenarioFlags scenario;
    ModelFlags model;
    std::vector<std::string> strategies;
    int replicates = 100;
    int bootstrap = 0;
};

int run_study_command(const CLI::App* sub, const Common& common, const StudyFlags& f, bool compare)
{
    const auto configs = scenarios(f.scenario);
    const auto strategies = parse_strategies(f.strategies);
    if (compare && strategies.size() < 2) {
        throw SpecError("compare-strategies needs at least two strategies");
    }
    StudyOptions opts;
    opts.spec = model_spec(f.model);
    opts.bootstrap = f.bootstrap;
    opts.jobs = common.jobs;
    const fs::path dir = prepare_out(common.out);
    Provenance prov = provenance_of(sub);
    resolve_entry(prov, "cureid", to_string(opts.spec.cureid_family));

    std::vector<StudyReport> reports;
    for (const auto& c : configs) {
        reports.push_back(compare_strategies(c, strategies, f.replicates, common.seed, opts));
        for (const auto& r : reports.back().records) {
            if (r.outcome != FitOutcome::Ok) {
                std::cerr << "mixcure: " << c.label << " n=" << c.n << " replicate " << r.replicate << " "
                          << to_string(r.strategy) << ": " << to_string(r.outcome) << ": " << r.message << '\n';
            }
        }
    }
    nlohmann::json doc;
    doc["provenance"] = to_json(prov);
    doc["reports"] = nlohmann::json::array();
    for (const auto& r : reports) doc["reports"].push_back(to_json(r));
    open_output(dir, "study.json") << doc.dump(2) << '\n';
    {
        auto o = open_output(dir, "study.csv");
        write_study_table(o, reports, prov);
    }
    {
        auto o = open_output(dir, "records.csv");
        write_records_table(o, reports, prov);
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Mixture cure models with known cure status"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    Common common;

    FitFlags fit;
    auto* fit_cmd = app.add_subcommand("fit", "Fit a mixture cure model to a delimited data file.\n"
                                              "Columns: time, status (0=censored, 1=event, 2=known cured), "
                                              "x* latency covariates, z* incidence covariates, q* cure-identification "
                                              "covariates.");
    add_common(fit_cmd, common);
    fit_cmd->add_option("input,--input", fit.input, "Input data file")->required();
    add_model(fit_cmd, fit.model);
    fit_cmd->add_option("--strategy", fit.strategy, "full|crude|infinite|ignore")
        ->capture_default_str()
        ->check(CLI::IsMember({"full", "crude", "infinite", "ignore"}));
    auto* lam = fit_cmd->add_option("--lambda", fit.lambda, "LASSO weight for all regression slopes");
    fit_cmd->add_option("--lambda-grid", fit.lambda_grid, "Select the LASSO weight by BIC over these values")
        ->delimiter(',')
        ->excludes(lam);
    fit_cmd->add_option("--bootstrap", fit.bootstrap, "Percentile bootstrap resamples (0 = none)")
        ->capture_default_str()
        ->check(CLI::NonNegativeNumber);

    ScenarioFlags sim;
    auto* sim_cmd = app.add_subcommand("simulate", "Generate a synthetic dataset with its latent truth.");
    add_common(sim_cmd, common);
    add_scenario(sim_cmd, sim, false);

    StudyFlags study;
    study.strategies = {"full", "ignore"};
    study.bootstrap = 100;
    auto* study_cmd = app.add_subcommand("replicate-study", "Simulation study: estimates, MSE and coverage.");
    add_common(study_cmd, common);
    add_scenario(study_cmd, study.scenario, true);
    add_model(study_cmd, study.model);
    study_cmd->add_option("--replicates", study.replicates)->capture_default_str()->check(CLI::PositiveNumber);
    study_cmd->add_option("--bootstrap", study.bootstrap, "Resamples per replicate (0 disables CIs and CP)")
        ->capture_default_str();
    study_cmd->add_option("--strategies", study.strategies, "Comma-separated: full,crude,infinite,ignore")
        ->delimiter(',')
        ->capture_default_str();

    StudyFlags cmp;
    cmp.strategies = {"full", "crude", "infinite", "ignore"};
    cmp.bootstrap = 0;
    auto* cmp_cmd = app.add_subcommand("compare-strategies", "Paired comparison of strategies on shared datasets.");
    add_common(cmp_cmd, common);
    add_scenario(cmp_cmd, cmp.scenario, true);
    add_model(cmp_cmd, cmp.model);
    cmp_cmd->add_option("--replicates", cmp.replicates)->capture_default_str()->check(CLI::PositiveNumber);
    cmp_cmd->add_option("--bootstrap", cmp.bootstrap, "Resamples per replicate (0 disables CIs and CP)")
        ->capture_default_str();
    cmp_cmd->add_option("--strategies", cmp.strategies, "Comma-separated: full,crude,infinite,ignore")
        ->delimiter(',')
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kInputError;
    }

    try {
        for (auto* sub : {fit_cmd, sim_cmd, study_cmd, cmp_cmd}) {
            if (*sub && !common.config.empty()) apply_config(sub, common.config);
        }
        if (*fit_cmd) return run_fit(fit_cmd, common, fit);
        if (*sim_cmd) return run_simulate(sim_cmd, common, sim);
        if (*study_cmd) return run_study_command(study_cmd, common, study, false);
        if (*cmp_cmd) return run_study_command(cmp_cmd, common, cmp, true);
    } catch (const NonConvergenceError& e) {
        std::cerr << "mixcure: did not converge: " << e.what() << '\n';
        return kNonConvergence;
    } catch (const SeparationError& e) {
        std::cerr << "mixcure: did not converge: " << e.what() << '\n';
        return kNonConvergence;
    } catch (const Error& e) {
        std::cerr << "mixcure: " << e.what() << '\n';
        return kInputError;
    } catch (const std::exception& e) {
        std::cerr << "mixcure: internal error: " << e.what() << '\n';
        return kInternalError;
    }
    return kInternalError;
}

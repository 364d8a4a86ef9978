#include "mixcure/io.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace mixcure {

namespace {

using nlohmann::json;

std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    std::string out(s.substr(b, e - b + 1));
    if (out.size() >= 2 && out.front() == '"' && out.back() == '"') {
        out = out.substr(1, out.size() - 2);
    }
    return out;
}

std::vector<std::string> split(const std::string& line, char delim)
{
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(delim, start);
        fields.push_back(trim(std::string_view(line).substr(start, pos == std::string::npos ? pos : pos - start)));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return fields;
}

bool skippable(const std::string& line)
{
    const auto b = line.find_first_not_of(" \t\r");
    return b == std::string::npos || line[b] == '#';
}

double parse_double(const std::string& field, const std::string& column, std::size_t line)
{
    double v = 0.0;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    if (!field.empty() && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (field.empty() || ec != std::errc() || ptr != last) {
        throw InputError("column '" + column + "': cannot parse '" + field + "' as a number", line);
    }
    if (!std::isfinite(v)) {
        throw InputError("column '" + column + "': value must be finite", line);
    }
    return v;
}

json vec(const Vector& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

json baseline_json(const BaselineHazard& b)
{
    return json{{"event_times", b.event_times}, {"increments", b.increments}, {"cumulative", b.cumulative}};
}

json weibull_json(const WeibullParams& w) { return json{{"shape", w.shape}, {"scale", w.scale}}; }

void write_row(std::ostream& out, std::initializer_list<std::string> cells)
{
    bool first = true;
    for (const auto& c : cells) {
        out << (first ? "" : ",") << c;
        first = false;
    }
    out << '\n';
}

}  // namespace

std::string format_number(double v)
{
    if (std::isnan(v)) return "NA";
    if (std::isinf(v)) return v > 0 ? "Inf" : "-Inf";
    std::array<char, 32> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), ptr);
}

void write_provenance(std::ostream& out, const Provenance& provenance)
{
    for (const auto& [k, v] : provenance) {
        out << "# " << k << '=' << v << '\n';
    }
}

Dataset read_dataset(std::istream& in)
{
    std::string line;
    std::size_t lineno = 0;
    std::vector<std::string> header;
    char delim = ',';
    while (std::getline(in, line)) {
        ++lineno;
        if (skippable(line)) continue;
        if (line.find('\t') != std::string::npos) {
            delim = '\t';
        } else if (line.find(';') != std::string::npos && line.find(',') == std::string::npos) {
            delim = ';';
        }
        header = split(line, delim);
        break;
    }
    if (header.empty()) {
        throw InputError("input is empty: a header row is required");
    }
    const std::size_t header_line = lineno;

    int time_col = -1, status_col = -1;
    std::vector<int> x_cols, z_cols, q_cols;
    std::vector<std::string> x_names, z_names, q_names;
    for (std::size_t j = 0; j < header.size(); ++j) {
        const std::string& name = header[j];
        for (std::size_t k = 0; k < j; ++k) {
            if (header[k] == name) {
                throw InputError("duplicate column '" + name + "'", header_line);
            }
        }
        const int col = static_cast<int>(j);
        if (name == "time") {
            time_col = col;
        } else if (name == "status") {
            status_col = col;
        } else if (name.size() >= 2 && name[0] == 'x') {
            x_cols.push_back(col);
            x_names.push_back(name);
        } else if (name.size() >= 2 && name[0] == 'z') {
            z_cols.push_back(col);
            z_names.push_back(name);
        } else if (name.size() >= 2 && name[0] == 'q') {
            q_cols.push_back(col);
            q_names.push_back(name);
        } else {
            throw InputError("unknown column '" + name + "' (expected time, status, x*, z*, q*)", header_line);
        }
    }
    if (time_col < 0) {
        throw InputError("missing required column 'time'", header_line);
    }
    if (status_col < 0) {
        throw InputError("missing required column 'status'", header_line);
    }

    std::vector<SubjectRecord> subjects;
    auto gather = [&](const std::vector<std::string>& fields, const std::vector<int>& cols, std::size_t at) {
        Vector v(static_cast<Eigen::Index>(cols.size()));
        for (std::size_t k = 0; k < cols.size(); ++k) {
            const auto c = static_cast<std::size_t>(cols[k]);
            v(static_cast<Eigen::Index>(k)) = parse_double(fields[c], header[c], at);
        }
        return v;
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (skippable(line)) continue;
        const auto fields = split(line, delim);
        if (fields.size() != header.size()) {
            throw InputError("expected " + std::to_string(header.size()) + " fields, found " +
                                 std::to_string(fields.size()),
                             lineno);
        }
        SubjectRecord s;
        s.time = parse_double(fields[static_cast<std::size_t>(time_col)], "time", lineno);
        if (s.time < 0.0) {
            throw InputError("column 'time': must be nonnegative", lineno);
        }
        const std::string& st = fields[static_cast<std::size_t>(status_col)];
        if (st == "0") {
            s.status = Status::Censored;
        } else if (st == "1") {
            s.status = Status::Event;
        } else if (st == "2") {
            s.status = Status::KnownCured;
        } else {
            throw InputError("column 'status': expected 0 (censored), 1 (event) or 2 (known cured), found '" + st +
                                 "'",
                             lineno);
        }
        s.x = gather(fields, x_cols, lineno);
        s.z = gather(fields, z_cols, lineno);
        s.q = gather(fields, q_cols, lineno);
        subjects.push_back(std::move(s));
    }
    if (subjects.empty()) {
        throw InputError("no data rows after the header");
    }
    return Dataset(std::move(subjects), std::move(x_names), std::move(z_names), std::move(q_names));
}

Dataset read_dataset_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw InputError("cannot open input file '" + path + "'");
    }
    try {
        return read_dataset(in);
    } catch (const InputError& e) {
        throw InputError(path + ": " + e.what());
    }
}

void write_dataset(std::ostream& out, const Dataset& data, const Provenance& provenance)
{
    write_provenance(out, provenance);
    out << "time,status";
    for (const auto* names : {&data.x_names(), &data.z_names(), &data.q_names()}) {
        for (const auto& n : *names) out << ',' << n;
    }
    out << '\n';
    for (const auto& s : data.subjects()) {
        out << format_number(s.time) << ',' << static_cast<int>(s.status);
        for (const auto* v : {&s.x, &s.z, &s.q}) {
            for (Eigen::Index j = 0; j < v->size(); ++j) out << ',' << format_number((*v)(j));
        }
        out << '\n';
    }
}

void write_truth(std::ostream& out, const std::vector<TruthRecord>& truth, const Provenance& provenance)
{
    write_provenance(out, provenance);
    out << "row,susceptible,event_time,cure_time,censor_time,identified\n";
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const auto& t = truth[i];
        write_row(out, {std::to_string(i + 1), t.susceptible ? "1" : "0", format_number(t.event_time),
                        format_number(t.cure_time), format_number(t.censor_time), t.identified ? "1" : "0"});
    }
}

json to_json(const Provenance& provenance)
{
    json j = json::object();
    for (const auto& [k, v] : provenance) j[k] = v;
    return j;
}

json to_json(const FitResult& fit, const Dataset& data)
{
    json j;
    j["strategy"] = to_string(fit.strategy);
    j["mechanism"] = to_string(fit.spec.mechanism);
    j["latency_family"] = to_string(fit.spec.latency_family);
    j["cureid_family"] = to_string(fit.spec.cureid_family);
    j["converged"] = fit.converged;
    j["iterations"] = fit.iterations;
    j["loglik"] = fit.loglik_trace.empty() ? json(nullptr) : json(fit.loglik_trace.back());
    j["loglik_trace"] = fit.loglik_trace;
    j["penalized_objective"] = fit.penalized_objective;
    j["floored_contributions"] = fit.floored_contributions;
    j["n"] = data.size();
    j["counts"] = {{"censored", data.count(Status::Censored)},
                   {"event", data.count(Status::Event)},
                   {"known_cured", data.count(Status::KnownCured)}};
    const auto names = coefficient_names(fit.coef, fit.spec);
    const Vector flat = flatten(fit.coef);
    json coefs = json::object();
    for (std::size_t k = 0; k < names.size(); ++k) coefs[names[k]] = flat(static_cast<Eigen::Index>(k));
    j["coefficients"] = coefs;
    j["beta"] = vec(fit.coef.beta);
    j["gamma"] = vec(fit.coef.gamma);
    j["theta"] = vec(fit.coef.theta);
    j["covariates"] = {{"x", data.x_names()}, {"z", data.z_names()}, {"q", data.q_names()}};
    if (fit.coef.weibull_T) j["latency_weibull"] = weibull_json(*fit.coef.weibull_T);
    if (!fit.coef.baseline_T.empty()) j["latency_baseline"] = baseline_json(fit.coef.baseline_T);
    if (fit.coef.weibull_C) j["cureid_weibull"] = weibull_json(*fit.coef.weibull_C);
    if (fit.coef.baseline_C) j["cureid_baseline"] = baseline_json(*fit.coef.baseline_C);
    if (fit.spec.penalty) {
        j["penalty"] = {{"lambda_beta", fit.spec.penalty->lambda_beta},
                        {"lambda_gamma", fit.spec.penalty->lambda_gamma},
                        {"lambda_theta", fit.spec.penalty->lambda_theta}};
    }
    return j;
}

json to_json(const BootstrapResult& boot, const std::vector<std::string>& names)
{
    json j;
    j["resamples"] = boot.replicates.size() + static_cast<std::size_t>(boot.failed_replicates);
    j["failed_replicates"] = boot.failed_replicates;
    j["failures"] = boot.failures;
    json ci = json::object();
    for (std::size_t k = 0; k < names.size() && static_cast<Eigen::Index>(k) < boot.ci_lower.size(); ++k) {
        const auto i = static_cast<Eigen::Index>(k);
        ci[names[k]] = {boot.ci_lower(i), boot.ci_upper(i)};
    }
    j["percentile_95"] = ci;
    return j;
}

json to_json(const RealizedRates& r)
{
    return json{{"cure_rate", r.cure_rate},
                {"censoring_rate", r.censoring_rate},
                {"known_cured_rate", r.known_cured_rate},
                {"known_cured_among_cured", r.known_cured_among_cured}};
}

json to_json(const BicPath& path)
{
    json pts = json::array();
    for (const auto& p : path.points) {
        json e{{"lambda", p.lambda}, {"ok", p.ok}};
        if (p.ok) {
            e["loglik"] = p.loglik;
            e["df"] = p.df;
            e["bic"] = p.bic;
        } else {
            e["error"] = p.error;
        }
        pts.push_back(e);
    }
    return json{{"points", pts}, {"selected_lambda", path.points.at(path.selected).lambda}};
}

json to_json(const StudyReport& report)
{
    json j;
    j["scenario"] = report.scenario;
    j["n"] = report.n;
    j["cure_label"] = report.cure_label;
    j["seed"] = report.seed;
    j["replicates"] = report.replicates;
    j["bootstrap"] = report.bootstrap;
    j["censoring_rate_param"] = report.censoring_rate_param;
    j["mean_rates"] = {{"cure_rate", report.mean_cure_rate},
                       {"censoring_rate", report.mean_censoring_rate},
                       {"known_cured_rate", report.mean_known_cured_rate}};
    json strategies = json::array();
    for (const auto& s : report.strategies) {
        json coefs = json::array();
        for (const auto& c : s.coefficients) {
            coefs.push_back({{"name", c.name},
                             {"truth", c.truth},
                             {"mean_estimate", c.mean_estimate},
                             {"mean_ci_lower", c.mean_ci_lower},
                             {"mean_ci_upper", c.mean_ci_upper},
                             {"bias", c.bias},
                             {"variance", c.variance},
                             {"mse", c.mse},
                             {"cp", c.cp}});
        }
        strategies.push_back({{"strategy", to_string(s.strategy)},
                              {"ok", s.ok},
                              {"diverged", s.diverged},
                              {"failed", s.failed},
                              {"interval_failures", s.interval_failures},
                              {"coefficients", coefs}});
    }
    j["strategies"] = strategies;
    json failures = json::array();
    for (const auto& r : report.records) {
        if (r.outcome != FitOutcome::Ok || !r.message.empty()) {
            failures.push_back({{"replicate", r.replicate},
                                {"strategy", to_string(r.strategy)},
                                {"outcome", to_string(r.outcome)},
                                {"message", r.message}});
        }
    }
    j["issues"] = failures;
    return j;
}

void write_coefficient_table(std::ostream& out, const FitResult& fit, const Dataset& data,
                             const BootstrapResult* boot, const Provenance& provenance)
{
    write_provenance(out, provenance);
    const auto names = coefficient_names(fit.coef, fit.spec);
    const Vector flat = flatten(fit.coef);
    // Covariate labels follow the data columns; intercepts have none.
    std::vector<std::string> labels;
    labels.push_back("(intercept)");
    labels.insert(labels.end(), data.z_names().begin(), data.z_names().end());
    labels.insert(labels.end(), data.x_names().begin(), data.x_names().end());
    if (fit.spec.mechanism == Mechanism::DiagnosticTest) labels.push_back("(intercept)");
    labels.insert(labels.end(), data.q_names().begin(), data.q_names().end());

    out << (boot ? "coefficient,covariate,estimate,ci_lower,ci_upper\n" : "coefficient,covariate,estimate\n");
    for (std::size_t k = 0; k < names.size(); ++k) {
        const auto i = static_cast<Eigen::Index>(k);
        const std::string label = k < labels.size() ? labels[k] : "";
        out << names[k] << ',' << label << ',' << format_number(flat(i));
        if (boot) {
            out << ',' << format_number(boot->ci_lower(i)) << ',' << format_number(boot->ci_upper(i));
        }
        out << '\n';
    }
}

void write_baseline_table(std::ostream& out, const FitResult& fit, const Provenance& provenance)
{
    write_provenance(out, provenance);
    out << "component,time,increment,cumulative\n";
    auto emit = [&](const char* component, const BaselineHazard& b) {
        for (std::size_t k = 0; k < b.event_times.size(); ++k) {
            write_row(out, {component, format_number(b.event_times[k]), format_number(b.increments[k]),
                            format_number(b.cumulative[k])});
        }
    };
    emit("latency", fit.coef.baseline_T);
    if (fit.coef.baseline_C) emit("cureid", *fit.coef.baseline_C);
}

void write_study_table(std::ostream& out, const std::vector<StudyReport>& reports, const Provenance& provenance)
{
    write_provenance(out, provenance);
    out << "scenario,n,cure_label,strategy,coefficient,truth,mean_estimate,mean_ci_lower,mean_ci_upper,"
           "bias,variance,mse,cp,ok,diverged,failed\n";
    for (const auto& report : reports) {
        for (const auto& s : report.strategies) {
            for (const auto& c : s.coefficients) {
                write_row(out, {report.scenario, std::to_string(report.n), report.cure_label, to_string(s.strategy),
                                c.name, format_number(c.truth), format_number(c.mean_estimate),
                                format_number(c.mean_ci_lower), format_number(c.mean_ci_upper),
                                format_number(c.bias), format_number(c.variance), format_number(c.mse),
                                format_number(c.cp), std::to_string(s.ok), std::to_string(s.diverged),
                                std::to_string(s.failed)});
            }
        }
    }
}

void write_records_table(std::ostream& out, const std::vector<StudyReport>& reports, const Provenance& provenance)
{
    write_provenance(out, provenance);
    out << "scenario,n,replicate,strategy,outcome,coefficient,truth,estimate,ci_lower,ci_upper\n";
    for (const auto& report : reports) {
        for (const auto& r : report.records) {
            for (std::size_t k = 0; k < report.coefficient_names.size(); ++k) {
                const auto i = static_cast<Eigen::Index>(k);
                const bool has = r.estimate.size() > i;
                write_row(out, {report.scenario, std::to_string(report.n), std::to_string(r.replicate),
                                to_string(r.strategy), to_string(r.outcome), report.coefficient_names[k],
                                format_number(report.truth(i)), has ? format_number(r.estimate(i)) : "NA",
                                r.ci_lower ? format_number((*r.ci_lower)(i)) : "NA",
                                r.ci_upper ? format_number((*r.ci_upper)(i)) : "NA"});
            }
        }
    }
}

}  // namespace mixcure

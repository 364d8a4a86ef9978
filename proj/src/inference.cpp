#include "mixcure/inference.hpp"

#include "mixcure/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

namespace mixcure {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Runs task(i) for i in [0, count) on up to `jobs` threads. Results must be
// written by index; the first exception is rethrown after all workers stop.
template <class Task>
void parallel_for(int count, int jobs, const Task& task)
{
    jobs = std::max(1, std::min(jobs, count));
    if (jobs == 1) {
        for (int i = 0; i < count; ++i) {
            task(i);
        }
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (int i = next++; i < count; i = next++) {
            try {
                task(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) {
                    error = std::current_exception();
                }
                next = count;
            }
        }
    };
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) {
        pool.emplace_back(worker);
    }
    for (auto& t : pool) {
        t.join();
    }
    if (error) {
        std::rethrow_exception(error);
    }
}

Dataset resample(const Dataset& data, Rng& rng)
{
    std::uniform_int_distribution<std::size_t> pick(0, data.size() - 1);
    std::vector<SubjectRecord> subjects;
    subjects.reserve(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        subjects.push_back(data[pick(rng)]);
    }
    return data.with_subjects(std::move(subjects));
}

Vector study_estimate(const Coefficients& c)
{
    Vector v(c.beta.size() + c.gamma.size());
    v << c.beta, c.gamma;
    return v;
}

struct StrategyFit {
    FitOutcome outcome = FitOutcome::Failed;
    std::optional<FitResult> fit;
    std::string message;
};

StrategyFit try_fit(const Dataset& data, const ModelSpec& spec, Strategy strategy)
{
    StrategyFit out;
    try {
        out.fit = fit_with_strategy(data, spec, strategy);
        out.outcome = FitOutcome::Ok;
        if (!out.fit->converged) {
            out.message = "EM reached its iteration limit";
        }
    } catch (const Error& e) {
        out.message = e.what();
        const FitResult* partial = partial_result(e);
        if (partial && partial->coef.beta.size() > 0) {
            out.fit = *partial;
            out.fit->strategy = strategy;
            out.outcome = FitOutcome::Diverged;
        }
    }
    return out;
}

}  // namespace

Vector flatten(const Coefficients& coef)
{
    Vector v(coef.beta.size() + coef.gamma.size() + coef.theta.size());
    v << coef.beta, coef.gamma, coef.theta;
    return v;
}

std::vector<std::string> coefficient_names(const Coefficients& coef, const ModelSpec& spec)
{
    std::vector<std::string> names;
    for (Eigen::Index j = 0; j < coef.beta.size(); ++j) {
        names.push_back("beta" + std::to_string(j));
    }
    for (Eigen::Index j = 0; j < coef.gamma.size(); ++j) {
        names.push_back("gamma" + std::to_string(j + 1));
    }
    const int offset = spec.mechanism == Mechanism::DiagnosticTest ? 0 : 1;
    for (Eigen::Index j = 0; j < coef.theta.size(); ++j) {
        names.push_back("theta" + std::to_string(j + offset));
    }
    return names;
}

double quantile(std::vector<double> values, double prob)
{
    if (values.empty()) {
        throw DomainError("quantile of an empty sample");
    }
    std::sort(values.begin(), values.end());
    const double h = (static_cast<double>(values.size()) - 1.0) * prob;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

const char* to_string(FitOutcome o)
{
    switch (o) {
    case FitOutcome::Ok: return "ok";
    case FitOutcome::Diverged: return "diverged";
    case FitOutcome::Failed: return "failed";
    }
    return "?";
}

BootstrapResult bootstrap_ci(const Dataset& data, const ModelSpec& spec, Strategy strategy, int B,
                             std::uint64_t seed, int jobs)
{
    if (B < 2) {
        throw SpecError("bootstrap needs at least 2 resamples");
    }
    return bootstrap_ci(data, spec, strategy, B, seed, fit_with_strategy(data, spec, strategy), jobs);
}

BootstrapResult bootstrap_ci(const Dataset& data, const ModelSpec& spec, Strategy strategy, int B,
                             std::uint64_t seed, const FitResult& point, int jobs)
{
    if (B < 2) {
        throw SpecError("bootstrap needs at least 2 resamples");
    }
    std::vector<std::optional<Coefficients>> fits(static_cast<std::size_t>(B));
    std::vector<std::string> errors(static_cast<std::size_t>(B));
    parallel_for(B, jobs, [&](int b) {
        Rng rng = make_stream(seed, StreamTag::Bootstrap, static_cast<std::uint64_t>(b));
        const Dataset sample = resample(data, rng);
        try {
            fits[static_cast<std::size_t>(b)] = fit_with_strategy(sample, spec, strategy).coef;
        } catch (const Error& e) {
            errors[static_cast<std::size_t>(b)] = e.what();
        }
    });

    BootstrapResult out;
    out.point = point.coef;
    for (int b = 0; b < B; ++b) {
        auto& f = fits[static_cast<std::size_t>(b)];
        if (f) {
            out.replicates.push_back(std::move(*f));
        } else {
            ++out.failed_replicates;
            out.failures.push_back("resample " + std::to_string(b) + ": " + errors[static_cast<std::size_t>(b)]);
        }
    }
    if (2 * out.failed_replicates > B) {
        throw BootstrapDegenerateError(std::to_string(out.failed_replicates) + " of " + std::to_string(B) +
                                       " bootstrap resamples failed");
    }
    const Vector center = flatten(out.point);
    out.ci_lower.resize(center.size());
    out.ci_upper.resize(center.size());
    std::vector<double> column(out.replicates.size());
    for (Eigen::Index j = 0; j < center.size(); ++j) {
        for (std::size_t b = 0; b < out.replicates.size(); ++b) {
            column[b] = flatten(out.replicates[b])(j);
        }
        out.ci_lower(j) = quantile(column, 0.025);
        out.ci_upper(j) = quantile(column, 0.975);
    }
    return out;
}

CoefficientSummary summarize(const std::string& name, double truth, const std::vector<double>& estimates,
                             const std::vector<std::optional<std::pair<double, double>>>& intervals,
                             bool with_intervals)
{
    CoefficientSummary s;
    s.name = name;
    s.truth = truth;
    const auto m = static_cast<double>(estimates.size());
    if (estimates.empty()) {
        s.mean_estimate = s.bias = s.variance = s.mse = kNaN;
        s.mean_ci_lower = s.mean_ci_upper = s.cp = kNaN;
        return s;
    }
    double sum = 0.0;
    for (double e : estimates) {
        sum += e;
    }
    s.mean_estimate = sum / m;
    s.bias = s.mean_estimate - truth;
    double var = 0.0, mse = 0.0;
    for (double e : estimates) {
        var += (e - s.mean_estimate) * (e - s.mean_estimate);
        mse += (e - truth) * (e - truth);
    }
    s.variance = var / m;
    s.mse = mse / m;

    s.mean_ci_lower = s.mean_ci_upper = s.cp = kNaN;
    if (with_intervals) {
        double lo = 0.0, hi = 0.0;
        int have = 0, covered = 0;
        for (const auto& ci : intervals) {
            if (!ci) continue;
            ++have;
            lo += ci->first;
            hi += ci->second;
            covered += ci->first <= truth && truth <= ci->second ? 1 : 0;
        }
        if (have > 0) {
            s.mean_ci_lower = lo / have;
            s.mean_ci_upper = hi / have;
        }
        s.cp = 100.0 * covered / m;
    }
    return s;
}

std::uint64_t replicate_seed(std::uint64_t seed, int r)
{
    return derive_seed(seed, {static_cast<std::uint64_t>(StreamTag::Replicate), static_cast<std::uint64_t>(r)});
}

StudyReport run_study(const ScenarioConfig& scenario, int replicates, std::uint64_t seed,
                      const StudyOptions& options)
{
    return compare_strategies(scenario, {Strategy::FullInformation, Strategy::IgnoreCureStatus}, replicates, seed,
                              options);
}

StudyReport compare_strategies(const ScenarioConfig& scenario, const std::vector<Strategy>& strategies,
                               int replicates, std::uint64_t seed, const StudyOptions& options)
{
    if (replicates < 1) {
        throw SpecError("a study needs at least one replicate");
    }
    if (strategies.empty()) {
        throw SpecError("a study needs at least one strategy");
    }
    if (options.bootstrap == 1 || options.bootstrap < 0) {
        throw SpecError("bootstrap resamples must be 0 (off) or at least 2");
    }
    scenario.validate();
    options.spec.validate();

    ScenarioConfig calib = scenario;
    calib.seed = seed;
    const double rate = calibrate_censoring(calib, scenario.calibration_draws);

    const std::size_t S = strategies.size();
    std::vector<ReplicateRecord> records(static_cast<std::size_t>(replicates) * S);

    parallel_for(replicates, options.jobs, [&](int r) {
        ScenarioConfig cfg = scenario;
        cfg.seed = replicate_seed(seed, r);
        std::optional<GeneratedDataset> gen;
        std::string gen_error;
        try {
            gen = generate(cfg, rate);
        } catch (const Error& e) {
            gen_error = std::string("generation failed: ") + e.what();
        }
        for (std::size_t s = 0; s < S; ++s) {
            ReplicateRecord& rec = records[static_cast<std::size_t>(r) * S + s];
            rec.replicate = r;
            rec.strategy = strategies[s];
            if (!gen) {
                rec.outcome = FitOutcome::Failed;
                rec.message = gen_error;
                continue;
            }
            rec.generated = true;
            rec.rates = gen->rates;
            StrategyFit f = try_fit(gen->dataset, options.spec, strategies[s]);
            rec.outcome = f.outcome;
            rec.message = f.message;
            if (!f.fit) {
                continue;
            }
            rec.converged = f.fit->converged;
            rec.estimate = study_estimate(f.fit->coef);
            if (options.bootstrap >= 2 && f.outcome == FitOutcome::Ok) {
                try {
                    const BootstrapResult boot =
                        bootstrap_ci(gen->dataset, options.spec, strategies[s], options.bootstrap, cfg.seed, *f.fit);
                    const auto k = rec.estimate.size();
                    rec.ci_lower = Vector(boot.ci_lower.head(k));
                    rec.ci_upper = Vector(boot.ci_upper.head(k));
                    rec.bootstrap_failures = boot.failed_replicates;
                } catch (const BootstrapDegenerateError& e) {
                    rec.message = e.what();
                }
            }
        }
    });

    StudyReport report;
    report.scenario = scenario.label;
    report.n = scenario.n;
    report.censoring_rate_param = rate;
    report.seed = seed;
    report.replicates = replicates;
    report.bootstrap = options.bootstrap;
    report.truth = Vector(scenario.beta_true.size() + scenario.gamma_true.size());
    report.truth << scenario.beta_true, scenario.gamma_true;
    for (Eigen::Index j = 0; j < scenario.beta_true.size(); ++j) {
        report.coefficient_names.push_back("beta" + std::to_string(j));
    }
    for (Eigen::Index j = 0; j < scenario.gamma_true.size(); ++j) {
        report.coefficient_names.push_back("gamma" + std::to_string(j + 1));
    }

    int generated = 0;
    for (int r = 0; r < replicates; ++r) {
        const auto& rec = records[static_cast<std::size_t>(r) * S];
        if (!rec.generated) continue;
        ++generated;
        report.mean_cure_rate += rec.rates.cure_rate;
        report.mean_censoring_rate += rec.rates.censoring_rate;
        report.mean_known_cured_rate += rec.rates.known_cured_rate;
    }
    if (generated > 0) {
        report.mean_cure_rate /= generated;
        report.mean_censoring_rate /= generated;
        report.mean_known_cured_rate /= generated;
    }
    report.cure_label = report.mean_cure_rate < 0.2 ? "low" : "high";

    const bool with_intervals = options.bootstrap >= 2;
    for (std::size_t s = 0; s < S; ++s) {
        StrategySummary summary;
        summary.strategy = strategies[s];
        std::vector<const ReplicateRecord*> scored;
        for (int r = 0; r < replicates; ++r) {
            const auto& rec = records[static_cast<std::size_t>(r) * S + s];
            switch (rec.outcome) {
            case FitOutcome::Ok: ++summary.ok; break;
            case FitOutcome::Diverged: ++summary.diverged; break;
            case FitOutcome::Failed: ++summary.failed; break;
            }
            if (rec.outcome != FitOutcome::Failed) {
                scored.push_back(&rec);
                if (with_intervals && !rec.ci_lower) {
                    ++summary.interval_failures;
                }
            }
        }
        for (Eigen::Index j = 0; j < report.truth.size(); ++j) {
            std::vector<double> est;
            std::vector<std::optional<std::pair<double, double>>> cis;
            for (const auto* rec : scored) {
                est.push_back(rec->estimate(j));
                if (rec->ci_lower) {
                    cis.emplace_back(std::make_pair((*rec->ci_lower)(j), (*rec->ci_upper)(j)));
                } else {
                    cis.emplace_back(std::nullopt);
                }
            }
            summary.coefficients.push_back(summarize(report.coefficient_names[static_cast<std::size_t>(j)],
                                                     report.truth(j), est, cis, with_intervals));
        }
        report.strategies.push_back(std::move(summary));
    }
    report.records = std::move(records);
    return report;
}

}  // namespace mixcure

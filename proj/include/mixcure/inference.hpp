#pragma once

#include "mixcure/em.hpp"
#include "mixcure/simgen.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mixcure {

/// Regression coefficients as one vector: beta (intercept first), gamma, theta.
Vector flatten(const Coefficients& coef);
/// Names matching flatten(): beta0.., gamma1.., theta0.. or theta1...
std::vector<std::string> coefficient_names(const Coefficients& coef, const ModelSpec& spec);

/// R type-7 sample quantile; `values` need not be sorted.
double quantile(std::vector<double> values, double prob);

struct BootstrapResult {
    Coefficients point;
    std::vector<Coefficients> replicates;
    Vector ci_lower;  // percentile 2.5%, aligned with flatten()
    Vector ci_upper;  // percentile 97.5%
    int failed_replicates = 0;
    std::vector<std::string> failures;  // one message per failed resample
};

/// Case-resampling percentile bootstrap around the fit under `strategy`.
/// Resample b draws from the stream (seed, b); results do not depend on `jobs`.
BootstrapResult bootstrap_ci(const Dataset& data, const ModelSpec& spec, Strategy strategy, int B,
                             std::uint64_t seed, int jobs = 1);

/// Same, with the point fit supplied by the caller.
BootstrapResult bootstrap_ci(const Dataset& data, const ModelSpec& spec, Strategy strategy, int B,
                             std::uint64_t seed, const FitResult& point, int jobs = 1);

enum class FitOutcome { Ok, Diverged, Failed };
const char* to_string(FitOutcome o);

struct StudyOptions {
    ModelSpec spec;   // fit specification under FullInformation
    int bootstrap = 0;  // resamples per replicate; 0 skips intervals and CP
    int jobs = 1;
};

struct CoefficientSummary {
    std::string name;
    double truth = 0.0;
    double mean_estimate = 0.0;
    double mean_ci_lower = 0.0;  // NaN without intervals
    double mean_ci_upper = 0.0;
    double bias = 0.0;
    double variance = 0.0;  // population variance over scored replicates
    double mse = 0.0;
    double cp = 0.0;  // percent; NaN without intervals
};

struct StrategySummary {
    Strategy strategy = Strategy::FullInformation;
    int ok = 0;
    int diverged = 0;  // fit aborted; scored at its last completed EM iterate
    int failed = 0;    // no estimate at all
    int interval_failures = 0;
    std::vector<CoefficientSummary> coefficients;
};

// One fit of one replicate (long format for plotting).
struct ReplicateRecord {
    int replicate = 0;
    Strategy strategy = Strategy::FullInformation;
    bool generated = false;  // false when the dataset itself could not be drawn
    FitOutcome outcome = FitOutcome::Ok;
    bool converged = false;
    Vector estimate;  // beta then gamma; empty when failed
    std::optional<Vector> ci_lower, ci_upper;
    int bootstrap_failures = 0;
    std::string message;
    RealizedRates rates;
};

struct StudyReport {
    std::string scenario;
    int n = 0;
    std::string cure_label;  // "low" or "high" by realized cure rate
    double mean_cure_rate = 0.0;
    double mean_censoring_rate = 0.0;
    double mean_known_cured_rate = 0.0;
    double censoring_rate_param = 0.0;
    std::uint64_t seed = 0;
    int replicates = 0;
    int bootstrap = 0;
    std::vector<std::string> coefficient_names;
    Vector truth;
    std::vector<StrategySummary> strategies;
    std::vector<ReplicateRecord> records;  // ordered by replicate, then strategy
};

/// Simulation study under FullInformation and IgnoreCureStatus.
StudyReport run_study(const ScenarioConfig& scenario, int replicates, std::uint64_t seed,
                      const StudyOptions& options = {});

/// Paired study: every strategy is fitted to the same replicate datasets.
StudyReport compare_strategies(const ScenarioConfig& scenario, const std::vector<Strategy>& strategies,
                               int replicates, std::uint64_t seed, const StudyOptions& options = {});

/// Summary statistics from per-replicate estimates (exposed for testing).
CoefficientSummary summarize(const std::string& name, double truth, const std::vector<double>& estimates,
                             const std::vector<std::optional<std::pair<double, double>>>& intervals,
                             bool with_intervals);

/// Seed of replicate r's dataset and bootstrap streams.
std::uint64_t replicate_seed(std::uint64_t seed, int r);

}  // namespace mixcure

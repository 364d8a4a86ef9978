#pragma once

#include "mixcure/types.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mixcure {

// Stochastic ordering of the time to cure identification relative to the
// susceptible time to event.
enum class Ordering { CureLower, CureHigher };

enum class CureIdProcess { Stochastic, Diagnostic, Cutoff };

// Which realized proportion the censoring rate is calibrated against.
enum class CalibrationTarget { Censoring, KnownCured };

struct ScenarioConfig {
    std::string label = "custom";
    int n = 500;
    Vector beta_true;   // intercept + 4 incidence slopes
    Vector gamma_true;  // 4 latency slopes

    CureIdProcess cure_id = CureIdProcess::Stochastic;
    std::optional<WeibullParams> cure_weibull;  // derived from `ordering` when empty
    Vector theta_true;                          // stochastic: slopes on q
    double cutoff = 1.0;                        // cutoff: identification time

    Ordering ordering = Ordering::CureLower;
    double target_censoring = 0.3;
    double target_known_cured = 0.5;  // among true cured; p_obs for the diagnostic process
    CalibrationTarget calibrate_on = CalibrationTarget::KnownCured;
    WeibullParams baseline_T{1.5, 1.0};
    std::uint64_t seed = 1;
    int calibration_draws = 50000;

    void validate() const;

    /// Presets matching the four simulation tables (1: low cure / cure lower,
    /// 2: high / lower, 3: low / higher, 4: high / higher).
    static ScenarioConfig table(int number, int n);
    /// Table 2 truths with the second and fourth incidence slopes set to zero.
    static ScenarioConfig sparse(int n);
};

struct TruthRecord {
    bool susceptible = true;
    double event_time = 0.0;     // +inf for cured subjects
    double cure_time = 0.0;      // +inf for susceptible subjects
    double censor_time = 0.0;
    bool identified = false;     // diagnostic process: test result available
};

struct RealizedRates {
    double cure_rate = 0.0;
    double censoring_rate = 0.0;
    double known_cured_rate = 0.0;          // share of all subjects
    double known_cured_among_cured = 0.0;   // share of true cured
};

struct GeneratedDataset {
    Dataset dataset;
    std::vector<TruthRecord> truth;
    RealizedRates rates;
    double censoring_rate_param = 0.0;  // exponential censoring rate used
    std::optional<WeibullParams> cure_weibull;
    bool ordering_verified = false;
};

GeneratedDataset generate(const ScenarioConfig& config);
/// Same draws as generate(config) but with a fixed censoring rate.
GeneratedDataset generate(const ScenarioConfig& config, double censoring_rate);

/// Exponential censoring rate whose Monte Carlo realized proportion (of the
/// configured target) is within one percentage point of the target.
double calibrate_censoring(const ScenarioConfig& config, int mc_draws);

/// Realized censoring and known-cured proportions at a given rate on a fresh
/// Monte Carlo sample drawn from `seed`.
RealizedRates evaluate_censoring(const ScenarioConfig& config, double rate, int mc_draws, std::uint64_t seed);

/// Time-to-cure Weibull whose survival curve lies strictly below (CureLower)
/// or above (CureHigher) the baseline event-time curve on a 1000-quantile grid.
WeibullParams make_ordering_params(Ordering ordering, const WeibullParams& baseline_T);

/// Throws OrderingError unless `cure` is strictly ordered against `baseline_T`
/// on the quantile grid.
void verify_ordering(Ordering ordering, const WeibullParams& baseline_T, const WeibullParams& cure);

inline constexpr double kCureLowerScaleFactor = 0.4;
inline constexpr double kCureHigherScaleFactor = 2.5;
inline constexpr double kCureShape = 1.5;

const char* to_string(Ordering o);

}  // namespace mixcure

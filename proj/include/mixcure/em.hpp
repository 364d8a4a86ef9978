#pragma once

#include "mixcure/errors.hpp"
#include "mixcure/model.hpp"
#include "mixcure/types.hpp"

#include <string>
#include <utility>
#include <vector>

namespace mixcure {

// How known-cured information enters the fit.
enum class Strategy {
    FullInformation,       // model the time to cure identification
    CrudeCureProbability,  // constant identification probability, time ignored
    InfiniteTime,          // known cured become censored beyond the last time
    IgnoreCureStatus,      // known cured become censored at their own time
};

const char* to_string(Strategy s);
Strategy parse_strategy(const std::string& s);

struct FitResult {
    Coefficients coef;
    WeightVector weights;
    std::vector<double> loglik_trace;  // observed log-likelihood, one entry per M-step
    int iterations = 0;                // completed E/M cycles after the initial M-step
    bool converged = false;
    Strategy strategy = Strategy::FullInformation;
    ModelSpec spec;
    std::size_t floored_contributions = 0;
    double penalized_objective = 0.0;  // last EM objective including penalties
};

/// Mixin carried by fit errors raised inside the EM loop: exposes the last
/// completed iterate.
class PartialFit {
public:
    explicit PartialFit(FitResult partial)
        : partial_(std::move(partial))
    {}
    virtual ~PartialFit() = default;
    const FitResult& partial() const { return partial_; }

private:
    FitResult partial_;
};

template <class Base>
class FitError : public Base, public PartialFit {
public:
    FitError(const std::string& what, FitResult partial)
        : Base(what)
        , PartialFit(std::move(partial))
    {}
};

/// Returns the partial fit attached to an exception raised by em_fit, if any.
const FitResult* partial_result(const std::exception& e);

WeightVector initialize_weights(const Dataset& data);

/// E-step weights: 1 for events, 0 for known cured, posterior susceptibility
/// for censored subjects.
WeightVector estep(const Dataset& data, const Coefficients& coef, const ModelSpec& spec,
                   LikelihoodDiagnostics* diagnostics = nullptr);

/// Censored-subject weight from its ingredients (denominator floored).
double censored_weight(double p_y, double s_t, double s_c);

FitResult em_fit(const Dataset& data, const ModelSpec& spec);

std::pair<Dataset, ModelSpec> apply_strategy(const Dataset& data, const ModelSpec& spec, Strategy strategy);

/// apply_strategy followed by em_fit; the result records the strategy.
FitResult fit_with_strategy(const Dataset& data, const ModelSpec& spec, Strategy strategy);

inline constexpr double kInfiniteTimeMultiplier = 1.01;

}  // namespace mixcure

#pragma once

#include "mixcure/errors.hpp"
#include "mixcure/optim.hpp"
#include "mixcure/types.hpp"

#include <optional>
#include <vector>

namespace mixcure {

// Subjects whose case weight falls below this contribute nothing.
inline constexpr double kMinCaseWeight = 1e-10;
// Any |coefficient| beyond this during a logistic fit is treated as separation.
inline constexpr double kSeparationBound = 50.0;

struct LogisticFit {
    Vector coef;  // intercept first
    SolverReport report;
};

struct SemiParametricFit {
    Vector coef;
    BaselineHazard baseline;
    SolverReport report;
};

struct ParametricFit {
    Vector coef;
    WeibullParams baseline;
    SolverReport report;
};

struct CureIdFit {
    Vector theta;
    std::optional<BaselineHazard> baseline;
    std::optional<WeibullParams> weibull;
    SolverReport report;
};

/// Thrown when an iterative fit stops before meeting its tolerance; carries
/// the best iterate found.
template <class Fit>
class NonConverged : public NonConvergenceError {
public:
    NonConverged(const std::string& what, Fit best)
        : NonConvergenceError(what)
        , best_(std::move(best))
    {}
    const Fit& best() const { return best_; }

private:
    Fit best_;
};

/// Maximizes sum_i c_i [r_i log p_i + (1 - r_i) log(1 - p_i)] - n sum_j lambda_j |b_j|
/// over a logit model with intercept. `n` is the row count of `design`.
LogisticFit fit_weighted_logistic(const Matrix& design, const Vector& response,
                                  const Vector& case_weights, const std::vector<double>& lambdas,
                                  const Vector* start = nullptr);

/// Weighted Cox partial likelihood with Breslow ties; subject m carries risk
/// mass weight_m * exp(coef' x_m) and events count with their weight.
SemiParametricFit fit_weighted_cox(const Vector& times, const std::vector<char>& events,
                                   const Vector& weights, const Matrix& design,
                                   const std::vector<double>& lambdas,
                                   const Vector* start = nullptr);

/// Breslow-type cumulative baseline hazard at a fixed coefficient vector.
BaselineHazard breslow_baseline(const Vector& times, const std::vector<char>& events,
                                const Vector& weights, const Matrix& design, const Vector& coef);

/// Weighted Weibull (or exponential, shape fixed at 1) proportional hazards fit.
ParametricFit fit_weighted_weibull(const Vector& times, const std::vector<char>& events,
                                   const Vector& weights, const Matrix& design,
                                   SurvivalFamily family, const std::vector<double>& lambdas,
                                   const ParametricFit* start = nullptr);

// Component estimators over a dataset and EM weights.

LogisticFit fit_incidence(const Dataset& data, const WeightVector& w,
                          const std::optional<PenaltyConfig>& penalty = std::nullopt,
                          const Vector* start = nullptr);

SemiParametricFit fit_latency_semiparametric(const Dataset& data, const WeightVector& w,
                                             const std::optional<PenaltyConfig>& penalty = std::nullopt,
                                             const Vector* start = nullptr);

/// Breslow baseline of the latency part at fixed gamma.
BaselineHazard latency_baseline(const Dataset& data, const WeightVector& w, const Vector& gamma);

/// Throws NonConverged<ParametricFit> when the solver exhausts its iterations.
ParametricFit fit_latency_parametric(const Dataset& data, const WeightVector& w, SurvivalFamily family,
                                     const std::optional<PenaltyConfig>& penalty = std::nullopt,
                                     const ParametricFit* start = nullptr);

CureIdFit fit_cureid(const Dataset& data, const WeightVector& w, const ModelSpec& spec,
                     const std::optional<PenaltyConfig>& penalty = std::nullopt,
                     const CureIdFit* start = nullptr);

std::vector<char> status_indicator(const Dataset& data, Status status);

}  // namespace mixcure

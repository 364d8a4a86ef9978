#pragma once

#include "mixcure/types.hpp"

#include <cstddef>

namespace mixcure {

// Per-subject likelihood contributions are clamped at exp(kLogFloor).
inline constexpr double kLogFloor = -700.0;

/// Numerically stable log(1 / (1 + exp(-eta))).
double log_sigmoid(double eta);
double sigmoid(double eta);

/// Logit incidence probability p_Y(z; beta); beta carries the intercept first.
double incidence_prob(const Vector& z, const Vector& beta);
double incidence_linear_predictor(const Vector& z, const Vector& beta);

/// Susceptible survival S_T(t | x). The semi-parametric family stays at its
/// last value beyond the last event time of the fitted baseline.
double survival_T(double t, const Vector& x, const Coefficients& coef, SurvivalFamily family);

/// Hazard h_T(t | x). For the semi-parametric family this is the jump of the
/// cumulative hazard at t (zero off the event grid).
double hazard_T(double t, const Vector& x, const Coefficients& coef, SurvivalFamily family);

/// Probability that a cured subject is still unidentified at t.
///   cutoff      -> 1
///   stochastic  -> survival of the time to cure identification
///   diagnostic  -> 1 - p_obs(q; theta), constant in t
double survival_C(double t, const Vector& q, const Coefficients& coef, const ModelSpec& spec);

/// Density-like factor for a known-cured subject at t, so that the subject
/// contributes (1 - p_Y) * hazard_C * survival_C. Diagnostic: p_obs / (1 - p_obs);
/// cutoff: 1.
double hazard_C(double t, const Vector& q, const Coefficients& coef, const ModelSpec& spec);

/// Probability of identification for the diagnostic mechanism.
double identification_prob(const Vector& q, const Vector& theta);

struct LikelihoodDiagnostics {
    std::size_t floored = 0;  // contributions clamped at exp(kLogFloor)
};

/// Checks coefficient dimensions against the dataset for the given spec.
void check_dimensions(const Dataset& data, const Coefficients& coef, const ModelSpec& spec);

double observed_loglik(const Dataset& data, const Coefficients& coef, const ModelSpec& spec,
                       LikelihoodDiagnostics* diagnostics = nullptr);

struct CompleteLoglik {
    double incidence = 0.0;  // EL'_c1
    double latency = 0.0;    // EL'_c2
    double cureid = 0.0;     // EL'_c3

    double total() const { return incidence + latency + cureid; }
};

CompleteLoglik expected_complete_loglik(const Dataset& data, const Coefficients& coef,
                                        const WeightVector& w, const ModelSpec& spec);

}  // namespace mixcure

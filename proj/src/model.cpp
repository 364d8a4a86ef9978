#include "mixcure/model.hpp"

#include "mixcure/errors.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace mixcure {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void require_time(double t)
{
    if (!(t >= 0.0) || !std::isfinite(t)) {
        throw DomainError("time must be finite and nonnegative, got " + std::to_string(t));
    }
}

double dot_or_zero(const Vector& a, const Vector& b)
{
    if (a.size() != b.size()) {
        throw DimensionError("covariate vector has dimension " + std::to_string(a.size()) +
                             " but coefficient vector has " + std::to_string(b.size()));
    }
    return a.size() == 0 ? 0.0 : a.dot(b);
}

const WeibullParams& weibull_or_throw(const std::optional<WeibullParams>& p, const char* what)
{
    if (!p) {
        throw SpecError(std::string("missing Weibull parameters for ") + what);
    }
    return *p;
}

double log_or_floor(double v) { return v > 0.0 ? std::log(v) : kNegInf; }

double log_survival_T(double t, const Vector& x, const Coefficients& coef, SurvivalFamily family)
{
    const double lp = dot_or_zero(x, coef.gamma);
    switch (family) {
    case SurvivalFamily::SemiParametricPH:
        return -coef.baseline_T.cumulative_at(t) * std::exp(lp);
    case SurvivalFamily::WeibullPH:
    case SurvivalFamily::ExponentialPH:
        return -weibull_or_throw(coef.weibull_T, "latency").cumhaz(t) * std::exp(lp);
    }
    return 0.0;
}

double log_hazard_T(double t, const Vector& x, const Coefficients& coef, SurvivalFamily family)
{
    const double lp = dot_or_zero(x, coef.gamma);
    switch (family) {
    case SurvivalFamily::SemiParametricPH:
        return log_or_floor(coef.baseline_T.jump_at(t)) + lp;
    case SurvivalFamily::WeibullPH:
    case SurvivalFamily::ExponentialPH:
        return log_or_floor(weibull_or_throw(coef.weibull_T, "latency").hazard(t)) + lp;
    }
    return 0.0;
}

double log_survival_C(double t, const Vector& q, const Coefficients& coef, const ModelSpec& spec)
{
    switch (spec.mechanism) {
    case Mechanism::DeterministicCutoff:
        return 0.0;
    case Mechanism::DiagnosticTest:
        return log_sigmoid(-incidence_linear_predictor(q, coef.theta));
    case Mechanism::StochasticTime:
        break;
    }
    const double lp = dot_or_zero(q, coef.theta);
    switch (spec.cureid_family) {
    case CureIdFamily::SemiParametricPH:
        if (!coef.baseline_C) {
            throw SpecError("missing cure-identification baseline hazard");
        }
        return -coef.baseline_C->cumulative_at(t) * std::exp(lp);
    case CureIdFamily::WeibullPH:
    case CureIdFamily::ExponentialPH:
        return -weibull_or_throw(coef.weibull_C, "cure identification").cumhaz(t) * std::exp(lp);
    default:
        throw SpecError("stochastic mechanism needs a survival family for cure identification");
    }
}

double log_hazard_C(double t, const Vector& q, const Coefficients& coef, const ModelSpec& spec)
{
    switch (spec.mechanism) {
    case Mechanism::DeterministicCutoff:
        return 0.0;
    case Mechanism::DiagnosticTest:
        // log(p_obs / (1 - p_obs)) is the linear predictor itself.
        return incidence_linear_predictor(q, coef.theta);
    case Mechanism::StochasticTime:
        break;
    }
    const double lp = dot_or_zero(q, coef.theta);
    switch (spec.cureid_family) {
    case CureIdFamily::SemiParametricPH:
        if (!coef.baseline_C) {
            throw SpecError("missing cure-identification baseline hazard");
        }
        return log_or_floor(coef.baseline_C->jump_at(t)) + lp;
    case CureIdFamily::WeibullPH:
    case CureIdFamily::ExponentialPH:
        return log_or_floor(weibull_or_throw(coef.weibull_C, "cure identification").hazard(t)) + lp;
    default:
        throw SpecError("stochastic mechanism needs a survival family for cure identification");
    }
}

double clamp_log(double v, LikelihoodDiagnostics* diag)
{
    if (!(v >= kLogFloor)) {
        if (diag) {
            ++diag->floored;
        }
        return kLogFloor;
    }
    return v;
}

}  // namespace

double log_sigmoid(double eta)
{
    if (eta >= 0.0) {
        return -std::log1p(std::exp(-eta));
    }
    return eta - std::log1p(std::exp(eta));
}

double sigmoid(double eta)
{
    if (eta >= 0.0) {
        return 1.0 / (1.0 + std::exp(-eta));
    }
    const double e = std::exp(eta);
    return e / (1.0 + e);
}

double incidence_linear_predictor(const Vector& z, const Vector& beta)
{
    if (beta.size() != z.size() + 1) {
        throw DimensionError("expected " + std::to_string(z.size() + 1) +
                             " coefficients (intercept + covariates), got " +
                             std::to_string(beta.size()));
    }
    double eta = beta(0);
    if (z.size() > 0) {
        eta += z.dot(beta.tail(z.size()));
    }
    return eta;
}

double incidence_prob(const Vector& z, const Vector& beta)
{
    return sigmoid(incidence_linear_predictor(z, beta));
}

double identification_prob(const Vector& q, const Vector& theta)
{
    return sigmoid(incidence_linear_predictor(q, theta));
}

double survival_T(double t, const Vector& x, const Coefficients& coef, SurvivalFamily family)
{
    require_time(t);
    return std::exp(log_survival_T(t, x, coef, family));
}

double hazard_T(double t, const Vector& x, const Coefficients& coef, SurvivalFamily family)
{
    require_time(t);
    return std::exp(log_hazard_T(t, x, coef, family));
}

double survival_C(double t, const Vector& q, const Coefficients& coef, const ModelSpec& spec)
{
    require_time(t);
    return std::exp(log_survival_C(t, q, coef, spec));
}

double hazard_C(double t, const Vector& q, const Coefficients& coef, const ModelSpec& spec)
{
    require_time(t);
    return std::exp(log_hazard_C(t, q, coef, spec));
}

void check_dimensions(const Dataset& data, const Coefficients& coef, const ModelSpec& spec)
{
    if (coef.beta.size() != data.dim_z() + 1) {
        throw DimensionError("beta has " + std::to_string(coef.beta.size()) +
                             " entries, expected " + std::to_string(data.dim_z() + 1));
    }
    if (coef.gamma.size() != data.dim_x()) {
        throw DimensionError("gamma has " + std::to_string(coef.gamma.size()) +
                             " entries, expected " + std::to_string(data.dim_x()));
    }
    Eigen::Index expected_theta = 0;
    switch (spec.mechanism) {
    case Mechanism::DeterministicCutoff: expected_theta = coef.theta.size(); break;
    case Mechanism::StochasticTime: expected_theta = data.dim_q(); break;
    case Mechanism::DiagnosticTest: expected_theta = data.dim_q() + 1; break;
    }
    if (coef.theta.size() != expected_theta) {
        throw DimensionError("theta has " + std::to_string(coef.theta.size()) +
                             " entries, expected " + std::to_string(expected_theta));
    }
}

double observed_loglik(const Dataset& data, const Coefficients& coef, const ModelSpec& spec,
                       LikelihoodDiagnostics* diagnostics)
{
    check_dimensions(data, coef, spec);
    double total = 0.0;
    for (const auto& s : data.subjects()) {
        const double eta = incidence_linear_predictor(s.z, coef.beta);
        switch (s.status) {
        case Status::Event:
            total += clamp_log(log_sigmoid(eta) + log_hazard_T(s.time, s.x, coef, spec.latency_family) +
                                   log_survival_T(s.time, s.x, coef, spec.latency_family),
                               diagnostics);
            break;
        case Status::KnownCured:
            total += clamp_log(log_sigmoid(-eta) + log_hazard_C(s.time, s.q, coef, spec) +
                                   log_survival_C(s.time, s.q, coef, spec),
                               diagnostics);
            break;
        case Status::Censored: {
            const double p = sigmoid(eta);
            const double mix = p * std::exp(log_survival_T(s.time, s.x, coef, spec.latency_family)) +
                               (1.0 - p) * std::exp(log_survival_C(s.time, s.q, coef, spec));
            total += clamp_log(mix > 0.0 ? std::log(mix) : kNegInf, diagnostics);
            break;
        }
        }
    }
    return total;
}

CompleteLoglik expected_complete_loglik(const Dataset& data, const Coefficients& coef,
                                        const WeightVector& w, const ModelSpec& spec)
{
    if (w.size() != data.size()) {
        throw DimensionError("weight vector length does not match the number of subjects");
    }
    for (Eigen::Index i = 0; i < w.w.size(); ++i) {
        if (!(w.w(i) >= 0.0 && w.w(i) <= 1.0)) {
            throw DomainError("weight " + std::to_string(i) + " lies outside [0, 1]");
        }
    }
    check_dimensions(data, coef, spec);

    CompleteLoglik out;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto& s = data[i];
        const double wi = w[i];
        const double eta = incidence_linear_predictor(s.z, coef.beta);
        // 0 * log(0) is taken as 0 throughout.
        if (wi > 0.0) {
            out.incidence += wi * log_sigmoid(eta);
        }
        if (wi < 1.0) {
            out.incidence += (1.0 - wi) * log_sigmoid(-eta);
        }

        if (wi > 0.0) {
            double term = std::max(log_survival_T(s.time, s.x, coef, spec.latency_family), kLogFloor);
            if (s.status == Status::Event) {
                term += std::max(log_hazard_T(s.time, s.x, coef, spec.latency_family), kLogFloor);
            }
            out.latency += wi * term;
        }

        const double vi = 1.0 - wi;
        if (vi <= 0.0) {
            continue;
        }
        switch (spec.mechanism) {
        case Mechanism::DeterministicCutoff:
            break;
        case Mechanism::DiagnosticTest: {
            const double lp = incidence_linear_predictor(s.q, coef.theta);
            if (s.status == Status::KnownCured) {
                out.cureid += log_sigmoid(lp);
            } else if (s.status == Status::Censored) {
                out.cureid += vi * log_sigmoid(-lp);
            }
            break;
        }
        case Mechanism::StochasticTime: {
            double term = std::max(log_survival_C(s.time, s.q, coef, spec), kLogFloor);
            if (s.status == Status::KnownCured) {
                term += std::max(log_hazard_C(s.time, s.q, coef, spec), kLogFloor);
            }
            out.cureid += vi * term;
            break;
        }
        }
    }
    return out;
}

}  // namespace mixcure

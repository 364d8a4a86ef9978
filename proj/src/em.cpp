#include "mixcure/em.hpp"

#include "mixcure/estimators.hpp"

#include <algorithm>
#include <cmath>

namespace mixcure {

namespace {

const double kDenominatorFloor = std::exp(kLogFloor);

Vector parameter_vector(const Coefficients& c)
{
    std::vector<double> v;
    auto push = [&](const Vector& x) { v.insert(v.end(), x.data(), x.data() + x.size()); };
    push(c.beta);
    push(c.gamma);
    push(c.theta);
    for (const auto* w : {&c.weibull_T, &c.weibull_C}) {
        if (*w) {
            v.push_back(std::log((*w)->shape));
            v.push_back(std::log((*w)->scale));
        }
    }
    return Eigen::Map<Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

double penalty_term(const Dataset& data, const Coefficients& c, const ModelSpec& spec)
{
    if (!spec.penalty) {
        return 0.0;
    }
    const double n = static_cast<double>(data.size());
    const auto& p = *spec.penalty;
    double total = 0.0;
    auto add = [&](const std::vector<double>& lambdas, const Vector& coef) {
        if (coef.size() == 0) return;
        total += expand_penalty(lambdas, coef.size(), n).dot(coef.cwiseAbs());
    };
    add(p.lambda_beta, c.beta.size() > 0 ? Vector(c.beta.tail(c.beta.size() - 1)) : Vector());
    add(p.lambda_gamma, c.gamma);
    if (spec.mechanism == Mechanism::DiagnosticTest) {
        add(p.lambda_theta, c.theta.size() > 0 ? Vector(c.theta.tail(c.theta.size() - 1)) : Vector());
    } else {
        add(p.lambda_theta, c.theta);
    }
    return total;
}

Coefficients mstep(const Dataset& data, const ModelSpec& spec, const WeightVector& w, const Coefficients* prev)
{
    Coefficients next;
    next.beta = fit_incidence(data, w, spec.penalty, prev ? &prev->beta : nullptr).coef;

    if (spec.latency_family == SurvivalFamily::SemiParametricPH) {
        SemiParametricFit fit = fit_latency_semiparametric(data, w, spec.penalty, prev ? &prev->gamma : nullptr);
        next.gamma = std::move(fit.coef);
        next.baseline_T = std::move(fit.baseline);
    } else {
        std::optional<ParametricFit> warm;
        if (prev && prev->weibull_T) {
            warm = ParametricFit{prev->gamma, *prev->weibull_T, {}};
        }
        ParametricFit fit;
        try {
            fit = fit_latency_parametric(data, w, spec.latency_family, spec.penalty, warm ? &*warm : nullptr);
        } catch (const NonConverged<ParametricFit>& e) {
            fit = e.best();
        }
        next.gamma = std::move(fit.coef);
        next.weibull_T = fit.baseline;
    }

    if (spec.mechanism == Mechanism::DeterministicCutoff) {
        next.theta = Vector(0);
        return next;
    }
    std::optional<CureIdFit> warm;
    if (prev) {
        warm = CureIdFit{prev->theta, prev->baseline_C, prev->weibull_C, {}};
    }
    CureIdFit fit;
    try {
        fit = fit_cureid(data, w, spec, spec.penalty, warm ? &*warm : nullptr);
    } catch (const NonConverged<CureIdFit>& e) {
        fit = e.best();
    }
    next.theta = std::move(fit.theta);
    next.baseline_C = std::move(fit.baseline);
    next.weibull_C = fit.weibull;
    return next;
}

template <class E>
[[noreturn]] void rethrow_with(const E& e, FitResult partial)
{
    throw FitError<E>(e.what(), std::move(partial));
}

}  // namespace

const char* to_string(Strategy s)
{
    switch (s) {
    case Strategy::FullInformation: return "full";
    case Strategy::CrudeCureProbability: return "crude";
    case Strategy::InfiniteTime: return "infinite";
    case Strategy::IgnoreCureStatus: return "ignore";
    }
    return "?";
}

Strategy parse_strategy(const std::string& s)
{
    if (s == "full") return Strategy::FullInformation;
    if (s == "crude") return Strategy::CrudeCureProbability;
    if (s == "infinite") return Strategy::InfiniteTime;
    if (s == "ignore") return Strategy::IgnoreCureStatus;
    throw SpecError("unknown strategy '" + s + "' (expected full|crude|infinite|ignore)");
}

const FitResult* partial_result(const std::exception& e)
{
    const auto* p = dynamic_cast<const PartialFit*>(&e);
    return p ? &p->partial() : nullptr;
}

WeightVector initialize_weights(const Dataset& data)
{
    WeightVector w;
    w.w = Vector::Zero(static_cast<Eigen::Index>(data.size()));
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (data[i].status == Status::Event) {
            w.w(static_cast<Eigen::Index>(i)) = 1.0;
        }
    }
    return w;
}

double censored_weight(double p_y, double s_t, double s_c)
{
    const double num = p_y * s_t;
    const double den = std::max((1.0 - p_y) * s_c + num, kDenominatorFloor);
    return std::clamp(num / den, 0.0, 1.0);
}

WeightVector estep(const Dataset& data, const Coefficients& coef, const ModelSpec& spec,
                   LikelihoodDiagnostics* diagnostics)
{
    check_dimensions(data, coef, spec);
    WeightVector w;
    w.w.resize(static_cast<Eigen::Index>(data.size()));
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto& s = data[i];
        double wi = 0.0;
        switch (s.status) {
        case Status::Event: wi = 1.0; break;
        case Status::KnownCured: wi = 0.0; break;
        case Status::Censored: {
            const double p = incidence_prob(s.z, coef.beta);
            const double st = survival_T(s.time, s.x, coef, spec.latency_family);
            const double sc = survival_C(s.time, s.q, coef, spec);
            if (diagnostics && (1.0 - p) * sc + p * st < kDenominatorFloor) {
                ++diagnostics->floored;
            }
            wi = censored_weight(p, st, sc);
            break;
        }
        }
        w.w(static_cast<Eigen::Index>(i)) = wi;
    }
    return w;
}

FitResult em_fit(const Dataset& data, const ModelSpec& spec)
{
    spec.validate();
    if (data.count(Status::Event) == 0) {
        throw DataError("the EM fit requires at least one event");
    }
    if (spec.mechanism == Mechanism::StochasticTime && data.count(Status::KnownCured) == 0) {
        throw InsufficientCuredError(
            "stochastic cure identification requires at least one known-cured subject");
    }

    FitResult result;
    result.spec = spec;
    result.weights = initialize_weights(data);
    const auto& ctl = spec.em_controls;

    auto record = [&](const Coefficients& coef) {
        LikelihoodDiagnostics diag;
        const double ll = observed_loglik(data, coef, spec, &diag);
        result.floored_contributions = diag.floored;
        result.loglik_trace.push_back(ll);
        result.penalized_objective = ll - penalty_term(data, coef, spec);
    };

    bool have_coef = false;
    try {
        result.coef = mstep(data, spec, result.weights, nullptr);
        have_coef = true;
        record(result.coef);

        Vector params = parameter_vector(result.coef);
        for (int it = 1; it <= ctl.max_iter; ++it) {
            WeightVector w = estep(data, result.coef, spec);
            Coefficients next = mstep(data, spec, w, &result.coef);
            result.weights = std::move(w);
            result.coef = std::move(next);
            result.iterations = it;
            record(result.coef);

            const Vector next_params = parameter_vector(result.coef);
            const double dparam = params.size() == next_params.size()
                                      ? (next_params - params).cwiseAbs().maxCoeff()
                                      : HUGE_VAL;
            const auto n = result.loglik_trace.size();
            const double dll = std::abs(result.loglik_trace[n - 1] - result.loglik_trace[n - 2]);
            params = next_params;
            if (dparam < ctl.param_tol || dll < ctl.loglik_tol) {
                result.converged = true;
                break;
            }
        }
    } catch (const SeparationError& e) {
        rethrow_with(e, have_coef ? result : FitResult{});
    } catch (const RankError& e) {
        rethrow_with(e, have_coef ? result : FitResult{});
    } catch (const DegenerateRiskSetError& e) {
        rethrow_with(e, have_coef ? result : FitResult{});
    } catch (const InsufficientCuredError& e) {
        rethrow_with(e, have_coef ? result : FitResult{});
    } catch (const NonConvergenceError& e) {
        rethrow_with(e, have_coef ? result : FitResult{});
    } catch (const DataError& e) {
        rethrow_with(e, have_coef ? result : FitResult{});
    }
    return result;
}

std::pair<Dataset, ModelSpec> apply_strategy(const Dataset& data, const ModelSpec& spec, Strategy strategy)
{
    ModelSpec out_spec = spec;
    switch (strategy) {
    case Strategy::FullInformation:
        return {data, spec};
    case Strategy::CrudeCureProbability:
        out_spec.mechanism = Mechanism::DiagnosticTest;
        out_spec.cureid_family = CureIdFamily::BernoulliLogit;
        return {data.without_q(), out_spec};
    case Strategy::InfiniteTime:
    case Strategy::IgnoreCureStatus: {
        out_spec.mechanism = Mechanism::DeterministicCutoff;
        out_spec.cureid_family = CureIdFamily::None;
        const double far = kInfiniteTimeMultiplier * data.max_time();
        auto subjects = data.subjects();
        for (auto& s : subjects) {
            if (s.status == Status::KnownCured) {
                s.status = Status::Censored;
                if (strategy == Strategy::InfiniteTime) {
                    s.time = far;
                }
            }
        }
        return {data.with_subjects(std::move(subjects)), out_spec};
    }
    }
    return {data, spec};
}

FitResult fit_with_strategy(const Dataset& data, const ModelSpec& spec, Strategy strategy)
{
    auto [d, s] = apply_strategy(data, spec, strategy);
    FitResult r = em_fit(d, s);
    r.strategy = strategy;
    return r;
}

}  // namespace mixcure

#include "mixcure/estimators.hpp"

#include "mixcure/model.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace mixcure {

namespace {

std::vector<Eigen::Index> active_rows(const Vector& weights)
{
    std::vector<Eigen::Index> rows;
    for (Eigen::Index i = 0; i < weights.size(); ++i) {
        if (weights(i) >= kMinCaseWeight) {
            rows.push_back(i);
        }
    }
    return rows;
}

Matrix take_rows(const Matrix& m, const std::vector<Eigen::Index>& rows)
{
    Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        out.row(static_cast<Eigen::Index>(r)) = m.row(rows[r]);
    }
    return out;
}

Vector take(const Vector& v, const std::vector<Eigen::Index>& rows)
{
    Vector out(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        out(static_cast<Eigen::Index>(r)) = v(rows[r]);
    }
    return out;
}

void require_full_rank(const Matrix& x, const char* what)
{
    if (x.cols() == 0) {
        return;
    }
    Eigen::ColPivHouseholderQR<Matrix> qr(x);
    qr.setThreshold(1e-10);
    if (qr.rank() < x.cols()) {
        throw RankError(std::string(what) + " design matrix is rank deficient");
    }
}

Vector scaled_penalty(const std::vector<double>& lambdas, const Standardizer& st, double n)
{
    Vector pen = expand_penalty(lambdas, st.scale.size(), n);
    return pen.cwiseQuotient(st.scale);
}

// Sorted view over the subjects that take part in a weighted Cox fit.
struct CoxProblem {
    Vector time;
    Vector weight;
    std::vector<char> event;
    Matrix x;                        // standardized covariates
    std::vector<Eigen::Index> order;  // ascending time
};

CoxProblem make_cox_problem(const Vector& times, const std::vector<char>& events, const Vector& weights,
                            const Matrix& design, const Standardizer& st)
{
    const auto rows = active_rows(weights);
    CoxProblem cp;
    cp.time = take(times, rows);
    cp.weight = take(weights, rows);
    cp.x = st.apply(take_rows(design, rows));
    cp.event.resize(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        cp.event[r] = events[static_cast<std::size_t>(rows[r])];
    }
    cp.order.resize(rows.size());
    std::iota(cp.order.begin(), cp.order.end(), Eigen::Index{0});
    std::stable_sort(cp.order.begin(), cp.order.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return cp.time(a) < cp.time(b); });
    return cp;
}

// Walks tie groups from the largest time down, accumulating risk-set sums.
// `visit(time, d, s0, s1, s2, event_lp_sum, event_x_sum)` runs for every group
// with positive weighted events.
template <class Visit>
void sweep_risk_sets(const CoxProblem& cp, const Vector& coef, bool need_second, Visit&& visit)
{
    const Eigen::Index p = cp.x.cols();
    double s0 = 0.0;
    Vector s1 = Vector::Zero(p);
    Matrix s2 = Matrix::Zero(p, p);
    const auto n = static_cast<Eigen::Index>(cp.order.size());
    Eigen::Index hi = n - 1;
    while (hi >= 0) {
        const double t = cp.time(cp.order[static_cast<std::size_t>(hi)]);
        Eigen::Index lo = hi;
        while (lo > 0 && cp.time(cp.order[static_cast<std::size_t>(lo - 1)]) == t) {
            --lo;
        }
        double d = 0.0;
        double lp_sum = 0.0;
        Vector x_sum = Vector::Zero(p);
        for (Eigen::Index k = lo; k <= hi; ++k) {
            const Eigen::Index i = cp.order[static_cast<std::size_t>(k)];
            const double lp = p > 0 ? cp.x.row(i).dot(coef) : 0.0;
            const double mass = cp.weight(i) * std::exp(lp);
            s0 += mass;
            if (p > 0) {
                s1 += mass * cp.x.row(i).transpose();
                if (need_second) {
                    s2.noalias() += mass * cp.x.row(i).transpose() * cp.x.row(i);
                }
            }
            if (cp.event[static_cast<std::size_t>(i)]) {
                d += cp.weight(i);
                lp_sum += cp.weight(i) * lp;
                if (p > 0) {
                    x_sum += cp.weight(i) * cp.x.row(i).transpose();
                }
            }
        }
        if (d > 0.0) {
            if (!(s0 > 0.0)) {
                throw DegenerateRiskSetError("all risk-set weights are zero at event time " +
                                             std::to_string(t));
            }
            visit(t, d, s0, s1, s2, lp_sum, x_sum);
        }
        hi = lo - 1;
    }
}

double cox_objective(const CoxProblem& cp, const Vector& coef, Vector* grad, Matrix* hess)
{
    const Eigen::Index p = cp.x.cols();
    double value = 0.0;
    if (grad) grad->setZero(p);
    if (hess) hess->setZero(p, p);
    sweep_risk_sets(cp, coef, hess != nullptr,
                    [&](double, double d, double s0, const Vector& s1, const Matrix& s2, double lp_sum,
                        const Vector& x_sum) {
                        value += lp_sum - d * std::log(s0);
                        if (grad) {
                            *grad += x_sum - d * s1 / s0;
                        }
                        if (hess) {
                            const Vector mean = s1 / s0;
                            *hess -= d * (s2 / s0 - mean * mean.transpose());
                        }
                    });
    return value;
}

BaselineHazard cox_baseline(const CoxProblem& cp, const Vector& coef)
{
    BaselineHazard h;
    sweep_risk_sets(cp, coef, false,
                    [&](double t, double d, double s0, const Vector&, const Matrix&, double, const Vector&) {
                        h.event_times.push_back(t);
                        h.increments.push_back(d / s0);
                    });
    std::reverse(h.event_times.begin(), h.event_times.end());
    std::reverse(h.increments.begin(), h.increments.end());
    h.cumulative.resize(h.increments.size());
    std::partial_sum(h.increments.begin(), h.increments.end(), h.cumulative.begin());
    return h;
}

void check_survival_inputs(const Vector& times, const std::vector<char>& events, const Vector& weights,
                           const Matrix& design)
{
    const auto n = times.size();
    if (static_cast<Eigen::Index>(events.size()) != n || weights.size() != n || design.rows() != n) {
        throw DimensionError("times, events, weights and design must have the same length");
    }
    if ((weights.array() < 0.0).any()) {
        throw DomainError("case weights must be nonnegative");
    }
    bool any_event = false;
    for (Eigen::Index i = 0; i < n; ++i) {
        any_event = any_event || (events[static_cast<std::size_t>(i)] && weights(i) >= kMinCaseWeight);
    }
    if (!any_event) {
        throw DataError("survival fit requires at least one event with positive weight");
    }
}

std::vector<double> lambdas_or_empty(const std::optional<PenaltyConfig>& p,
                                     std::vector<double> PenaltyConfig::*field)
{
    return p ? (*p).*field : std::vector<double>{};
}

Vector complement(const WeightVector& w) { return (1.0 - w.w.array()).matrix(); }

void check_weights(const Dataset& data, const WeightVector& w)
{
    if (w.size() != data.size()) {
        throw DimensionError("weight vector length does not match the number of subjects");
    }
    if (((w.w.array() < 0.0) || (w.w.array() > 1.0)).any()) {
        throw DomainError("weights must lie in [0, 1]");
    }
}

}  // namespace

std::vector<char> status_indicator(const Dataset& data, Status status)
{
    std::vector<char> out(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        out[i] = data[i].status == status ? 1 : 0;
    }
    return out;
}

LogisticFit fit_weighted_logistic(const Matrix& design, const Vector& response, const Vector& case_weights,
                                  const std::vector<double>& lambdas, const Vector* start)
{
    const Eigen::Index n = design.rows();
    const Eigen::Index p = design.cols();
    if (response.size() != n || case_weights.size() != n) {
        throw DimensionError("response and case weights must match the design rows");
    }
    if (((response.array() < 0.0) || (response.array() > 1.0)).any()) {
        throw DomainError("logistic responses must lie in [0, 1]");
    }
    if ((case_weights.array() < 0.0).any()) {
        throw DomainError("case weights must be nonnegative");
    }
    const auto rows = active_rows(case_weights);
    if (rows.empty()) {
        throw DataError("logistic fit has no subjects with positive weight");
    }

    Vector masked = case_weights;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (masked(i) < kMinCaseWeight) masked(i) = 0.0;
    }
    const Standardizer st = Standardizer::fit(design, masked);
    Matrix x(static_cast<Eigen::Index>(rows.size()), p + 1);
    x.col(0).setOnes();
    if (p > 0) {
        x.rightCols(p) = st.apply(take_rows(design, rows));
    }
    require_full_rank(x, "logistic");
    const Vector r = take(response, rows);
    const Vector c = take(case_weights, rows);

    Vector pen = Vector::Zero(p + 1);
    if (p > 0) {
        pen.tail(p) = scaled_penalty(lambdas, st, static_cast<double>(n));
    }

    Vector init = Vector::Zero(p + 1);
    if (start) {
        if (start->size() != p + 1) {
            throw DimensionError("logistic start vector has the wrong length");
        }
        if (p > 0) {
            init.tail(p) = st.slopes_to_standardized(start->tail(p));
            init(0) = (*start)(0) + start->tail(p).dot(st.center);
        } else {
            init(0) = (*start)(0);
        }
    } else {
        const double mean = std::clamp(c.dot(r) / c.sum(), 1e-3, 1.0 - 1e-3);
        init(0) = std::log(mean / (1.0 - mean));
    }

    auto to_original = [&](const Vector& b) {
        Vector out(p + 1);
        const Vector slopes = b.tail(p);
        out(0) = b(0) + st.intercept_shift(slopes);
        if (p > 0) out.tail(p) = st.slopes_to_original(slopes);
        return out;
    };

    Objective objective = [&](const Vector& b, Vector* grad, Matrix* hess) {
        const Vector eta = x * b;
        double value = 0.0;
        Vector resid(eta.size());
        Vector curv(eta.size());
        for (Eigen::Index i = 0; i < eta.size(); ++i) {
            const double e = eta(i);
            if (r(i) > 0.0) value += c(i) * r(i) * log_sigmoid(e);
            if (r(i) < 1.0) value += c(i) * (1.0 - r(i)) * log_sigmoid(-e);
            // both tails evaluated directly so that r - p does not cancel to zero
            const double prob = sigmoid(e), comp = sigmoid(-e);
            resid(i) = c(i) * (r(i) * comp - (1.0 - r(i)) * prob);
            curv(i) = c(i) * prob * comp;
        }
        if (grad) *grad = x.transpose() * resid;
        if (hess) *hess = -(x.transpose() * curv.asDiagonal() * x);
        return value;
    };

    NewtonOptions opts;
    opts.on_iterate = [&](const Vector& b) {
        const Vector orig = to_original(b);
        if (orig.cwiseAbs().maxCoeff() > kSeparationBound) {
            throw SeparationError("logistic coefficients diverge (|coef| > " +
                                  std::to_string(kSeparationBound) + "): quasi-separation");
        }
    };
    NewtonResult res = maximize(objective, init, pen, opts);
    return LogisticFit{to_original(res.params), res.report};
}

BaselineHazard breslow_baseline(const Vector& times, const std::vector<char>& events, const Vector& weights,
                                const Matrix& design, const Vector& coef)
{
    check_survival_inputs(times, events, weights, design);
    if (coef.size() != design.cols()) {
        throw DimensionError("coefficient length does not match the design columns");
    }
    Standardizer identity;
    identity.center = Vector::Zero(design.cols());
    identity.scale = Vector::Ones(design.cols());
    const CoxProblem cp = make_cox_problem(times, events, weights, design, identity);
    return cox_baseline(cp, coef);
}

SemiParametricFit fit_weighted_cox(const Vector& times, const std::vector<char>& events, const Vector& weights,
                                   const Matrix& design, const std::vector<double>& lambdas, const Vector* start)
{
    check_survival_inputs(times, events, weights, design);
    const Eigen::Index p = design.cols();
    Vector masked = weights;
    for (Eigen::Index i = 0; i < masked.size(); ++i) {
        if (masked(i) < kMinCaseWeight) masked(i) = 0.0;
    }
    const Standardizer st = Standardizer::fit(design, masked);
    const CoxProblem cp = make_cox_problem(times, events, weights, design, st);
    require_full_rank(cp.x, "Cox");

    SemiParametricFit out;
    if (p == 0) {
        out.coef = Vector(0);
        out.baseline = cox_baseline(cp, out.coef);
        out.report.converged = true;
        return out;
    }

    Vector init = Vector::Zero(p);
    if (start) {
        if (start->size() != p) {
            throw DimensionError("Cox start vector has the wrong length");
        }
        init = st.slopes_to_standardized(*start);
    }
    const Vector pen = scaled_penalty(lambdas, st, static_cast<double>(times.size()));
    Objective objective = [&](const Vector& b, Vector* grad, Matrix* hess) {
        return cox_objective(cp, b, grad, hess);
    };
    NewtonResult res = maximize(objective, init, pen);
    out.coef = st.slopes_to_original(res.params);
    // Centering cancels in the partial likelihood but not in the baseline.
    Standardizer identity;
    identity.center = Vector::Zero(p);
    identity.scale = Vector::Ones(p);
    out.baseline = cox_baseline(make_cox_problem(times, events, weights, design, identity), out.coef);
    out.report = res.report;
    return out;
}

ParametricFit fit_weighted_weibull(const Vector& times, const std::vector<char>& events, const Vector& weights,
                                   const Matrix& design, SurvivalFamily family, const std::vector<double>& lambdas,
                                   const ParametricFit* start)
{
    if (family == SurvivalFamily::SemiParametricPH) {
        throw SpecError("fit_weighted_weibull needs a parametric family");
    }
    check_survival_inputs(times, events, weights, design);
    const bool weibull = family == SurvivalFamily::WeibullPH;
    const Eigen::Index p = design.cols();
    const Eigen::Index offset = weibull ? 2 : 1;  // [log shape,] log-rate, slopes

    Vector masked = weights;
    for (Eigen::Index i = 0; i < masked.size(); ++i) {
        if (masked(i) < kMinCaseWeight) masked(i) = 0.0;
    }
    const auto rows = active_rows(weights);
    const Standardizer st = Standardizer::fit(design, masked);
    const Matrix x = st.apply(take_rows(design, rows));
    require_full_rank(x, "parametric survival");
    const Vector v = take(weights, rows);
    Vector log_t(static_cast<Eigen::Index>(rows.size()));
    Vector ev(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto i = rows[r];
        log_t(static_cast<Eigen::Index>(r)) = std::log(std::max(times(i), 1e-300));
        ev(static_cast<Eigen::Index>(r)) = events[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
    }

    Vector init = Vector::Zero(offset + p);
    if (start) {
        if (start->coef.size() != p) {
            throw DimensionError("parametric start vector has the wrong length");
        }
        const double k = weibull ? start->baseline.shape : 1.0;
        if (weibull) init(0) = std::log(k);
        const double rho = -k * std::log(start->baseline.scale);
        init(offset - 1) = rho + start->coef.dot(st.center);
        if (p > 0) init.tail(p) = st.slopes_to_standardized(start->coef);
    } else {
        const double events_w = v.dot(ev);
        const double exposure = v.dot(log_t.array().exp().matrix());
        init(offset - 1) = std::log(events_w / std::max(exposure, 1e-300));
    }

    Objective objective = [&](const Vector& b, Vector* grad, Matrix* hess) {
        const double a = weibull ? b(0) : 0.0;
        const double k = std::exp(a);
        const double rho = b(offset - 1);
        const Eigen::Index m = offset + p;
        double value = 0.0;
        if (grad) grad->setZero(m);
        if (hess) hess->setZero(m, m);
        Vector u(m);  // derivative of the linear part: (k L, 1, x)
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            const double eta = rho + (p > 0 ? x.row(i).dot(b.tail(p)) : 0.0);
            const double kl = k * log_t(i);
            const double h = std::exp(kl + eta);
            value += v(i) * (ev(i) * (a + (k - 1.0) * log_t(i) + eta) - h);
            if (!grad && !hess) continue;
            if (weibull) u(0) = kl;
            u(offset - 1) = 1.0;
            if (p > 0) u.tail(p) = x.row(i).transpose();
            if (grad) {
                *grad += v(i) * (ev(i) - h) * u;
                if (weibull) (*grad)(0) += v(i) * ev(i);
            }
            if (hess) {
                hess->noalias() -= v(i) * h * u * u.transpose();
                if (weibull) (*hess)(0, 0) += v(i) * (ev(i) - h) * kl;
            }
        }
        return value;
    };

    Vector pen = Vector::Zero(offset + p);
    if (p > 0) {
        pen.tail(p) = scaled_penalty(lambdas, st, static_cast<double>(times.size()));
    }
    NewtonResult res = maximize(objective, init, pen);

    ParametricFit out;
    const double k = weibull ? std::exp(res.params(0)) : 1.0;
    const Vector slopes = res.params.tail(p);
    const double rho = res.params(offset - 1) + st.intercept_shift(slopes);
    out.coef = st.slopes_to_original(slopes);
    out.baseline = WeibullParams{k, std::exp(-rho / k)};
    out.report = res.report;
    return out;
}

LogisticFit fit_incidence(const Dataset& data, const WeightVector& w, const std::optional<PenaltyConfig>& penalty,
                          const Vector* start)
{
    check_weights(data, w);
    const Vector ones = Vector::Ones(static_cast<Eigen::Index>(data.size()));
    return fit_weighted_logistic(data.z_matrix(), w.w, ones, lambdas_or_empty(penalty, &PenaltyConfig::lambda_beta),
                                 start);
}

SemiParametricFit fit_latency_semiparametric(const Dataset& data, const WeightVector& w,
                                             const std::optional<PenaltyConfig>& penalty, const Vector* start)
{
    check_weights(data, w);
    if (data.count(Status::Event) == 0) {
        throw DataError("latency estimation requires at least one event");
    }
    return fit_weighted_cox(data.times(), status_indicator(data, Status::Event), w.w, data.x_matrix(),
                            lambdas_or_empty(penalty, &PenaltyConfig::lambda_gamma), start);
}

BaselineHazard latency_baseline(const Dataset& data, const WeightVector& w, const Vector& gamma)
{
    check_weights(data, w);
    return breslow_baseline(data.times(), status_indicator(data, Status::Event), w.w, data.x_matrix(), gamma);
}

ParametricFit fit_latency_parametric(const Dataset& data, const WeightVector& w, SurvivalFamily family,
                                     const std::optional<PenaltyConfig>& penalty, const ParametricFit* start)
{
    check_weights(data, w);
    if (data.count(Status::Event) == 0) {
        throw DataError("latency estimation requires at least one event");
    }
    ParametricFit fit = fit_weighted_weibull(data.times(), status_indicator(data, Status::Event), w.w,
                                             data.x_matrix(), family,
                                             lambdas_or_empty(penalty, &PenaltyConfig::lambda_gamma), start);
    if (!fit.report.converged) {
        throw NonConverged<ParametricFit>("parametric latency fit did not converge", fit);
    }
    return fit;
}

CureIdFit fit_cureid(const Dataset& data, const WeightVector& w, const ModelSpec& spec,
                     const std::optional<PenaltyConfig>& penalty, const CureIdFit* start)
{
    check_weights(data, w);
    if (spec.mechanism == Mechanism::DeterministicCutoff) {
        throw SpecError("the deterministic cutoff mechanism has no cure-identification model");
    }
    const Vector v = complement(w);
    if (!(v.sum() > 0.0)) {
        throw DataError("cure-identification fit needs some subject with weight below one");
    }
    const auto lambdas = lambdas_or_empty(penalty, &PenaltyConfig::lambda_theta);

    CureIdFit out;
    if (spec.mechanism == Mechanism::DiagnosticTest) {
        Vector response(static_cast<Eigen::Index>(data.size()));
        for (std::size_t i = 0; i < data.size(); ++i) {
            response(static_cast<Eigen::Index>(i)) = data[i].status == Status::KnownCured ? 1.0 : 0.0;
        }
        const Vector* theta0 = start ? &start->theta : nullptr;
        LogisticFit fit = fit_weighted_logistic(data.q_matrix(), response, v, lambdas, theta0);
        out.theta = std::move(fit.coef);
        out.report = fit.report;
        return out;
    }

    if (data.count(Status::KnownCured) == 0) {
        throw InsufficientCuredError(
            "no known-cured subjects: the time to cure identification cannot be estimated; "
            "use the crude-probability or infinite-time strategy instead");
    }
    const auto events = status_indicator(data, Status::KnownCured);
    switch (spec.cureid_family) {
    case CureIdFamily::SemiParametricPH: {
        const Vector* theta0 = start ? &start->theta : nullptr;
        SemiParametricFit fit = fit_weighted_cox(data.times(), events, v, data.q_matrix(), lambdas, theta0);
        out.theta = std::move(fit.coef);
        out.baseline = std::move(fit.baseline);
        out.report = fit.report;
        return out;
    }
    case CureIdFamily::WeibullPH:
    case CureIdFamily::ExponentialPH: {
        const auto family = spec.cureid_family == CureIdFamily::WeibullPH ? SurvivalFamily::WeibullPH
                                                                          : SurvivalFamily::ExponentialPH;
        std::optional<ParametricFit> warm;
        if (start && start->weibull) {
            warm = ParametricFit{start->theta, *start->weibull, {}};
        }
        ParametricFit fit = fit_weighted_weibull(data.times(), events, v, data.q_matrix(), family, lambdas,
                                                 warm ? &*warm : nullptr);
        out.theta = std::move(fit.coef);
        out.weibull = fit.baseline;
        out.report = fit.report;
        if (!fit.report.converged) {
            throw NonConverged<CureIdFit>("cure-identification fit did not converge", out);
        }
        return out;
    }
    default:
        throw SpecError("stochastic mechanism needs a survival family for cure identification");
    }
}

}  // namespace mixcure

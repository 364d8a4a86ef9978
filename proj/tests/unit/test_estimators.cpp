#include "../support.hpp"

#include "mixcure/errors.hpp"
#include "mixcure/estimators.hpp"
#include "mixcure/model.hpp"

#include <doctest.h>

#include <random>

using namespace mixcure;
using testing::bare;
using testing::vec;
using testing::weights;

namespace {

std::vector<char> flags(std::initializer_list<int> v) { return std::vector<char>(v.begin(), v.end()); }

Dataset with_one_covariate(const std::vector<double>& times, const std::vector<Status>& status,
                           const std::vector<double>& x, const std::vector<double>& z)
{
    std::vector<SubjectRecord> s;
    for (std::size_t i = 0; i < times.size(); ++i) {
        s.push_back(SubjectRecord{times[i], status[i], vec({x[i]}), vec({z[i]}), Vector(0)});
    }
    return Dataset::from_subjects(std::move(s));
}

// Weighted Bernoulli log-likelihood written out directly.
double incidence_objective(const Dataset& d, const Vector& w, double b0, double b1)
{
    double out = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        const double p = testing::sigmoid(b0 + b1 * d[i].z(0));
        out += w(static_cast<Eigen::Index>(i)) * std::log(p) + (1.0 - w(static_cast<Eigen::Index>(i))) * std::log(1.0 - p);
    }
    return out;
}

// Weighted Weibull PH log-likelihood with S(t) = exp(-(t/scale)^shape e^{g x}).
double weibull_objective(const Dataset& d, const Vector& w, double log_shape, double log_scale, double g)
{
    const double k = std::exp(log_shape), s = std::exp(log_scale);
    double out = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        const double t = d[i].time, eta = g * d[i].x(0);
        const double wi = w(static_cast<Eigen::Index>(i));
        if (d[i].status == Status::Event) {
            out += wi * (std::log(k / s) + (k - 1.0) * std::log(t / s) + eta);
        }
        out -= wi * std::pow(t / s, k) * std::exp(eta);
    }
    return out;
}

}  // namespace

TEST_SUITE("estimators")
{
    TEST_CASE("intercept-only incidence")
    {
        const Dataset d = bare({1, 2, 3, 4}, {Status::Event, Status::Event, Status::Censored, Status::Censored});
        CHECK(fit_incidence(d, weights({1, 1, 0, 0})).coef(0) == doctest::Approx(0.0).epsilon(1e-10));
        CHECK(fit_incidence(d, weights({0.75, 0.75, 0.75, 0.75})).coef(0) == doctest::Approx(std::log(3.0)));
    }

    TEST_CASE("incidence matches a grid search of the weighted log-likelihood")
    {
        std::mt19937_64 rng(2024);
        std::normal_distribution<double> nd;
        std::uniform_real_distribution<double> ud;
        std::vector<double> t, x, z;
        std::vector<Status> st;
        Vector w(20);
        for (int i = 0; i < 20; ++i) {
            t.push_back(1.0 + i);
            st.push_back(Status::Censored);
            x.push_back(0.0);
            z.push_back(nd(rng));
            w(i) = ud(rng) < testing::sigmoid(0.3 + 0.8 * z.back()) ? 0.5 + 0.5 * ud(rng) : 0.5 * ud(rng);
        }
        const Dataset d = with_one_covariate(t, st, x, z);
        const LogisticFit fit = fit_incidence(d, WeightVector{w});

        double best = -HUGE_VAL, bb0 = 0, bb1 = 0;
        for (int i = 0; i <= 1000; ++i) {
            for (int j = 0; j <= 1000; ++j) {
                const double b0 = -5.0 + 0.01 * i, b1 = -5.0 + 0.01 * j;
                const double v = incidence_objective(d, w, b0, b1);
                if (v > best) {
                    best = v;
                    bb0 = b0;
                    bb1 = b1;
                }
            }
        }
        CHECK(std::abs(fit.coef(0) - bb0) <= 0.02);
        CHECK(std::abs(fit.coef(1) - bb1) <= 0.02);
    }

    TEST_CASE("incidence score equations vanish at the fit")
    {
        const Dataset d = testing::small_diagnostic(200, 5);
        std::mt19937_64 rng(9);
        std::uniform_real_distribution<double> ud;
        Vector w(static_cast<Eigen::Index>(d.size()));
        for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = ud(rng);
        const LogisticFit fit = fit_incidence(d, WeightVector{w});
        CHECK(fit.report.converged);
        Vector score = Vector::Zero(2);
        for (std::size_t i = 0; i < d.size(); ++i) {
            const double r = w(static_cast<Eigen::Index>(i)) - incidence_prob(d[i].z, fit.coef);
            score(0) += r;
            score(1) += r * d[i].z(0);
        }
        CHECK(score.cwiseAbs().maxCoeff() < 1e-6);
    }

    TEST_CASE("separated incidence raises")
    {
        const Dataset d = with_one_covariate({1, 2, 3, 4}, {Status::Event, Status::Event, Status::Censored, Status::Censored},
                                             {0, 0, 0, 0}, {1, 2, 3, 4});
        CHECK_THROWS_AS(fit_incidence(d, weights({1, 1, 0, 0})), SeparationError);
    }

    TEST_CASE("collinear incidence design raises")
    {
        std::vector<SubjectRecord> s;
        for (int i = 0; i < 6; ++i) {
            const double v = i % 3;
            s.push_back(SubjectRecord{1.0 + i, Status::Censored, Vector(0), vec({v, 2.0 * v}), Vector(0)});
        }
        CHECK_THROWS_AS(fit_incidence(Dataset::from_subjects(s), weights({0.2, 0.4, 0.6, 0.3, 0.5, 0.7})), RankError);
    }

    TEST_CASE("Breslow hand cases")
    {
        const Vector t = vec({1, 2, 3});
        const auto ev = flags({1, 0, 1});
        const Matrix none(3, 0);
        const BaselineHazard a = breslow_baseline(t, ev, vec({1, 1, 1}), none, Vector(0));
        REQUIRE(a.increments.size() == 2);
        CHECK(a.increments[0] == doctest::Approx(1.0 / 3.0));
        CHECK(a.increments[1] == doctest::Approx(1.0));
        CHECK(a.cumulative_at(3.0) == doctest::Approx(4.0 / 3.0));

        const BaselineHazard b = breslow_baseline(t, ev, vec({1, 0, 1}), none, Vector(0));
        CHECK(b.increments[0] == doctest::Approx(0.5));
        CHECK(b.cumulative_at(3.0) == doctest::Approx(1.5));
    }

    TEST_CASE("Cox without covariates gives the weighted Nelson-Aalen estimator")
    {
        const Dataset d = bare({1, 2, 2, 3, 5, 6}, {Status::Event, Status::Event, Status::Event, Status::Censored,
                                                    Status::Event, Status::Censored});
        const Vector w = vec({1, 1, 1, 0.4, 1, 0.3});
        const SemiParametricFit fit = fit_latency_semiparametric(d, WeightVector{w});
        CHECK(fit.coef.size() == 0);
        // hand risk sets: {6 subjects}, {5}, {2.7 at t=5}
        const double at_risk_1 = w.sum(), at_risk_2 = w.sum() - 1.0, at_risk_5 = 1.0 + 0.3;
        REQUIRE(fit.baseline.event_times.size() == 3);
        CHECK(fit.baseline.increments[0] == doctest::Approx(1.0 / at_risk_1));
        CHECK(fit.baseline.increments[1] == doctest::Approx(2.0 / at_risk_2));
        CHECK(fit.baseline.increments[2] == doctest::Approx(1.0 / at_risk_5));
    }

    TEST_CASE("Breslow increments are positive and the cumulative hazard nondecreasing")
    {
        const Dataset d = testing::small_stochastic(150, 3);
        Vector w(static_cast<Eigen::Index>(d.size()));
        for (std::size_t i = 0; i < d.size(); ++i) {
            w(static_cast<Eigen::Index>(i)) = d[i].status == Status::Event ? 1.0 : (d[i].status == Status::KnownCured ? 0.0 : 0.6);
        }
        const SemiParametricFit fit = fit_latency_semiparametric(d, WeightVector{w});
        CHECK(fit.report.converged);
        for (std::size_t k = 0; k < fit.baseline.increments.size(); ++k) {
            CHECK(fit.baseline.increments[k] > 0.0);
            if (k > 0) CHECK(fit.baseline.cumulative[k] >= fit.baseline.cumulative[k - 1]);
        }
    }

    TEST_CASE("degenerate risk sets and missing events")
    {
        const Dataset d = bare({1, 2, 3}, {Status::Censored, Status::Censored, Status::Censored});
        CHECK_THROWS_AS(fit_latency_semiparametric(d, weights({1, 1, 1})), DataError);
        // the only subject at risk at t=2 has its risk mass underflow to zero
        Matrix x(2, 1);
        x << 0.0, 1.0;
        CHECK_THROWS_AS(breslow_baseline(vec({1, 2}), flags({1, 1}), vec({1, 1}), x, vec({-1000.0})),
                        DegenerateRiskSetError);
    }

    TEST_CASE("exponential latency closed forms")
    {
        const Dataset all_events = bare({1, 2, 3}, {Status::Event, Status::Event, Status::Event});
        const ParametricFit a = fit_latency_parametric(all_events, weights({1, 1, 1}), SurvivalFamily::ExponentialPH);
        CHECK(1.0 / a.baseline.scale == doctest::Approx(0.5));
        CHECK(a.baseline.shape == 1.0);

        const Dataset mixed = bare({1, 2, 3}, {Status::Event, Status::Event, Status::Censored});
        const ParametricFit b = fit_latency_parametric(mixed, weights({1, 1, 0}), SurvivalFamily::ExponentialPH);
        CHECK(1.0 / b.baseline.scale == doctest::Approx(2.0 / 3.0));
    }

    TEST_CASE("Weibull latency matches a grid search")
    {
        std::mt19937_64 rng(31);
        std::normal_distribution<double> nd;
        std::exponential_distribution<double> ed;
        std::vector<double> t, x, z;
        std::vector<Status> st;
        for (int i = 0; i < 30; ++i) {
            x.push_back(nd(rng));
            z.push_back(0.0);
            const double ev = 1.3 * std::pow(ed(rng) / std::exp(0.6 * x.back()), 1.0 / 1.7);
            const double c = ed(rng) * 3.0;
            t.push_back(std::min(ev, c));
            st.push_back(ev <= c ? Status::Event : Status::Censored);
        }
        const Dataset d = with_one_covariate(t, st, x, z);
        Vector w(30);
        for (int i = 0; i < 30; ++i) w(i) = st[static_cast<std::size_t>(i)] == Status::Event ? 1.0 : 0.7;
        const ParametricFit fit = fit_latency_parametric(d, WeightVector{w}, SurvivalFamily::WeibullPH);

        const auto f = [&](const Vector& p) { return weibull_objective(d, w, p(0), p(1), p(2)); };
        const Vector best = testing::zoom_maximize(f, vec({0.0, 0.0, 0.0}), 3.0, 21, 0.005);
        CHECK(std::abs(std::log(fit.baseline.shape) - best(0)) <= 0.05);
        CHECK(std::abs(std::log(fit.baseline.scale) - best(1)) <= 0.05);
        CHECK(std::abs(fit.coef(0) - best(2)) <= 0.05);
    }

    TEST_CASE("diagnostic cure identification")
    {
        const Dataset d = bare({1, 2, 3, 4}, {Status::KnownCured, Status::KnownCured, Status::Censored, Status::Censored});
        ModelSpec spec;
        spec.mechanism = Mechanism::DiagnosticTest;
        spec.cureid_family = CureIdFamily::BernoulliLogit;
        CHECK_THROWS_AS(fit_cureid(d, weights({0, 0, 1, 1}), spec), SeparationError);
        CHECK(fit_cureid(d, weights({0, 0, 0.5, 0.5}), spec).theta(0) == doctest::Approx(std::log(2.0)));
    }

    TEST_CASE("diagnostic cure identification is the logistic fit on mapped inputs")
    {
        const Dataset d = testing::small_diagnostic(120, 17);
        std::mt19937_64 rng(4);
        std::uniform_real_distribution<double> ud;
        Vector w(static_cast<Eigen::Index>(d.size()));
        Vector response(w.size());
        for (std::size_t i = 0; i < d.size(); ++i) {
            const auto k = static_cast<Eigen::Index>(i);
            w(k) = d[i].status == Status::Event ? 1.0 : (d[i].status == Status::KnownCured ? 0.0 : ud(rng));
            response(k) = d[i].status == Status::KnownCured ? 1.0 : 0.0;
        }
        ModelSpec spec;
        spec.mechanism = Mechanism::DiagnosticTest;
        spec.cureid_family = CureIdFamily::BernoulliLogit;
        const CureIdFit via_cureid = fit_cureid(d, WeightVector{w}, spec);
        const LogisticFit direct = fit_weighted_logistic(d.q_matrix(), response, (1.0 - w.array()).matrix(), {});
        CHECK((via_cureid.theta - direct.coef).cwiseAbs().maxCoeff() == 0.0);
    }

    TEST_CASE("stochastic cure identification")
    {
        const Dataset d = bare({1, 2}, {Status::KnownCured, Status::Censored});
        ModelSpec spec;
        spec.mechanism = Mechanism::StochasticTime;
        spec.cureid_family = CureIdFamily::ExponentialPH;
        const CureIdFit fit = fit_cureid(d, weights({0, 0.5}), spec);
        REQUIRE(fit.weibull);
        CHECK(1.0 / fit.weibull->scale == doctest::Approx(0.5));

        const Dataset none = bare({1, 2}, {Status::Event, Status::Censored});
        CHECK_THROWS_AS(fit_cureid(none, weights({1, 0.5}), spec), InsufficientCuredError);
    }

    TEST_CASE("LASSO incidence satisfies the optimality conditions")
    {
        const Dataset d = testing::small_diagnostic(300, 77);
        std::mt19937_64 rng(8);
        std::uniform_real_distribution<double> ud;
        Vector w(static_cast<Eigen::Index>(d.size()));
        for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = ud(rng);
        for (double lambda : {0.0, 0.005, 0.02, 0.2}) {
            PenaltyConfig pen;
            pen.lambda_beta = {lambda};
            const LogisticFit fit = fit_incidence(d, WeightVector{w}, pen);
            const double n = static_cast<double>(d.size());
            double g0 = 0.0, g1 = 0.0;
            for (std::size_t i = 0; i < d.size(); ++i) {
                const double r = w(static_cast<Eigen::Index>(i)) - incidence_prob(d[i].z, fit.coef);
                g0 += r;
                g1 += r * d[i].z(0);
            }
            CHECK(std::abs(g0) <= 1e-4);
            if (fit.coef(1) == 0.0) {
                CHECK(std::abs(g1) <= n * lambda + 1e-4);
            } else {
                CHECK(std::abs(g1 - n * lambda * (fit.coef(1) > 0 ? 1.0 : -1.0)) <= 1e-4);
            }
        }
    }

    TEST_CASE("penalized optimum value is nonincreasing in lambda")
    {
        const Dataset d = testing::small_diagnostic(300, 123);
        Vector w(static_cast<Eigen::Index>(d.size()));
        for (std::size_t i = 0; i < d.size(); ++i) {
            w(static_cast<Eigen::Index>(i)) = d[i].status == Status::Event ? 1.0 : (d[i].status == Status::KnownCured ? 0.0 : 0.5);
        }
        const double n = static_cast<double>(d.size());
        double prev_inc = HUGE_VAL, prev_lat = HUGE_VAL;
        for (double lambda : {0.0, 0.001, 0.01, 0.05, 0.1, 0.5}) {
            PenaltyConfig pen;
            pen.lambda_beta = {lambda};
            pen.lambda_gamma = {lambda};
            const LogisticFit inc = fit_incidence(d, WeightVector{w}, pen);
            const double inc_value = incidence_objective(d, w, inc.coef(0), inc.coef(1)) - n * lambda * std::abs(inc.coef(1));
            CHECK(inc_value <= prev_inc + 1e-9);
            prev_inc = inc_value;

            const ParametricFit lat = fit_latency_parametric(d, WeightVector{w}, SurvivalFamily::ExponentialPH, pen);
            const double lat_value = weibull_objective(d, w, 0.0, std::log(lat.baseline.scale), lat.coef(0)) -
                                     n * lambda * std::abs(lat.coef(0));
            CHECK(lat_value <= prev_lat + 1e-9);
            prev_lat = lat_value;
        }
    }

    TEST_CASE("weights are validated")
    {
        const Dataset d = bare({1, 2}, {Status::Event, Status::Censored});
        CHECK_THROWS_AS(fit_incidence(d, weights({1, 1.5})), DomainError);
        CHECK_THROWS_AS(fit_incidence(d, weights({1})), DimensionError);
    }
}

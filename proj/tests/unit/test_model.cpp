#include "../support.hpp"

#include "mixcure/em.hpp"
#include "mixcure/errors.hpp"
#include "mixcure/model.hpp"

#include <doctest.h>

#include <random>

using namespace mixcure;
using testing::bare;
using testing::vec;

namespace {

Coefficients weibull_coef(double shape, double scale, Vector gamma = Vector(0))
{
    Coefficients c;
    c.beta = vec({0.0});
    c.gamma = std::move(gamma);
    c.weibull_T = WeibullParams{shape, scale};
    return c;
}

ModelSpec spec_of(Mechanism m, CureIdFamily f, SurvivalFamily lat = SurvivalFamily::WeibullPH)
{
    ModelSpec s;
    s.mechanism = m;
    s.cureid_family = f;
    s.latency_family = lat;
    return s;
}

}  // namespace

TEST_SUITE("model")
{
    TEST_CASE("incidence probability")
    {
        CHECK(incidence_prob(vec({0.0}), vec({0.0, 5.0})) == doctest::Approx(0.5));
        CHECK(incidence_prob(vec({1.0, 0.0}), vec({0.0, 0.0, 3.0})) == doctest::Approx(0.5));
        CHECK(incidence_prob(vec({1.0}), vec({2.0, 1.0})) == doctest::Approx(1.0 / (1.0 + std::exp(-3.0))).epsilon(1e-12));
        CHECK_THROWS_AS(incidence_prob(vec({1.0, 2.0}), vec({0.0, 1.0})), DimensionError);
    }

    TEST_CASE("log_sigmoid is stable in both tails")
    {
        CHECK(log_sigmoid(-800.0) == doctest::Approx(-800.0));
        CHECK(log_sigmoid(800.0) == doctest::Approx(0.0));
        CHECK(std::isfinite(log_sigmoid(-1e6)));
    }

    TEST_CASE("latency survival")
    {
        const Coefficients c = weibull_coef(1.0, 1.0, vec({0.0}));
        CHECK(survival_T(0.0, vec({3.0}), c, SurvivalFamily::WeibullPH) == 1.0);
        CHECK(survival_T(2.0, vec({3.0}), c, SurvivalFamily::WeibullPH) == doctest::Approx(std::exp(-2.0)));
        CHECK_THROWS_AS(survival_T(-1.0, vec({0.0}), c, SurvivalFamily::WeibullPH), DomainError);

        Coefficients sp;
        sp.beta = vec({0.0});
        sp.gamma = vec({1.0});
        sp.baseline_T = BaselineHazard{{1.0}, {0.5}, {0.5}};
        CHECK(survival_T(1.0, vec({std::log(2.0)}), sp, SurvivalFamily::SemiParametricPH) ==
              doctest::Approx(std::exp(-1.0)));
        CHECK(survival_T(0.5, vec({std::log(2.0)}), sp, SurvivalFamily::SemiParametricPH) == 1.0);
        // beyond the last event time the susceptible curve keeps its last value
        CHECK(survival_T(1.5, vec({0.0}), sp, SurvivalFamily::SemiParametricPH) == doctest::Approx(std::exp(-0.5)));
        CHECK(survival_T(1e6, vec({std::log(2.0)}), sp, SurvivalFamily::SemiParametricPH) ==
              doctest::Approx(std::exp(-1.0)));
    }

    TEST_CASE("cure identification survival per mechanism")
    {
        Coefficients c = weibull_coef(1.0, 1.0);
        const auto cutoff = spec_of(Mechanism::DeterministicCutoff, CureIdFamily::None);
        CHECK(survival_C(0.0, Vector(0), c, cutoff) == 1.0);
        CHECK(survival_C(123.0, vec({4.0}), c, cutoff) == 1.0);

        c.theta = vec({0.0});
        const auto diag = spec_of(Mechanism::DiagnosticTest, CureIdFamily::BernoulliLogit);
        CHECK(survival_C(0.0, Vector(0), c, diag) == doctest::Approx(0.5));
        CHECK(survival_C(7.0, Vector(0), c, diag) == doctest::Approx(0.5));

        c.theta = Vector(0);
        c.weibull_C = WeibullParams{2.0, 1.0};
        const auto stoch = spec_of(Mechanism::StochasticTime, CureIdFamily::WeibullPH);
        CHECK(survival_C(1.0, Vector(0), c, stoch) == doctest::Approx(std::exp(-1.0)));
        CHECK_THROWS_AS(survival_C(-0.1, Vector(0), c, stoch), DomainError);
    }

    TEST_CASE("survivals are monotone and start at one")
    {
        std::mt19937_64 rng(11);
        std::uniform_real_distribution<double> u(0.2, 3.0);
        const auto stoch = spec_of(Mechanism::StochasticTime, CureIdFamily::WeibullPH);
        for (int rep = 0; rep < 200; ++rep) {
            Coefficients c = weibull_coef(u(rng), u(rng), vec({u(rng) - 1.5}));
            c.theta = vec({u(rng) - 1.5});
            c.weibull_C = WeibullParams{u(rng), u(rng)};
            const Vector x = vec({u(rng)}), q = vec({u(rng)});
            CHECK(survival_T(0.0, x, c, SurvivalFamily::WeibullPH) == 1.0);
            CHECK(survival_C(0.0, q, c, stoch) == 1.0);
            double prev_t = 1.0, prev_c = 1.0;
            for (double t = 0.05; t < 5.0; t += 0.05) {
                const double st = survival_T(t, x, c, SurvivalFamily::WeibullPH);
                const double sc = survival_C(t, q, c, stoch);
                CHECK(st <= prev_t);
                CHECK(sc <= prev_c);
                prev_t = st;
                prev_c = sc;
            }
        }
    }

    TEST_CASE("observed log-likelihood hand cases")
    {
        const auto stoch = spec_of(Mechanism::StochasticTime, CureIdFamily::WeibullPH);
        Coefficients c = weibull_coef(1.0, 1.0);
        c.weibull_C = WeibullParams{1.0, 1.0};

        const Dataset censored_at_zero = bare({0.0}, {Status::Censored});
        CHECK(observed_loglik(censored_at_zero, c, stoch) == doctest::Approx(0.0));

        const Dataset known = bare({1.0}, {Status::KnownCured});
        CHECK(observed_loglik(known, c, stoch) == doctest::Approx(std::log(0.5) - 1.0));
        CHECK(observed_loglik(known, c, stoch) == doctest::Approx(-1.69315).epsilon(1e-5));
    }

    TEST_CASE("cutoff log-likelihood reduces to the classic mixture cure form")
    {
        const Dataset d = bare({0.5, 1.0, 2.0, 3.0}, {Status::Event, Status::Censored, Status::Event, Status::Censored});
        Coefficients c = weibull_coef(1.3, 2.0);
        c.beta = vec({0.4});
        const auto cutoff = spec_of(Mechanism::DeterministicCutoff, CureIdFamily::None);
        const double p = testing::sigmoid(0.4);
        double expected = 0.0;
        const WeibullParams w{1.3, 2.0};
        for (const auto& s : d.subjects()) {
            if (s.status == Status::Event) {
                expected += std::log(p) + std::log(w.hazard(s.time)) - w.cumhaz(s.time);
            } else {
                expected += std::log(p * w.survival(s.time) + 1.0 - p);
            }
        }
        CHECK(observed_loglik(d, c, cutoff) == doctest::Approx(expected).epsilon(1e-12));
    }

    TEST_CASE("underflowing contributions are floored and flagged")
    {
        const auto stoch = spec_of(Mechanism::StochasticTime, CureIdFamily::WeibullPH);
        Coefficients c = weibull_coef(1.0, 1.0);
        c.weibull_C = WeibullParams{1.0, 1e-6};
        const Dataset d = bare({5.0}, {Status::KnownCured});
        LikelihoodDiagnostics diag;
        const double ll = observed_loglik(d, c, stoch, &diag);
        CHECK(ll == doctest::Approx(kLogFloor));
        CHECK(diag.floored == 1);
    }

    TEST_CASE("expected complete log-likelihood")
    {
        const auto stoch = spec_of(Mechanism::StochasticTime, CureIdFamily::WeibullPH);
        Coefficients c = weibull_coef(1.0, 1.0);
        c.weibull_C = WeibullParams{1.0, 1.0};

        const Dataset two = bare({1.0, 2.0}, {Status::Event, Status::Censored});
        const auto parts = expected_complete_loglik(two, c, testing::weights({1.0, 0.5}), stoch);
        CHECK(parts.incidence == doctest::Approx(2.0 * std::log(0.5)));
        CHECK(parts.total() == doctest::Approx(parts.incidence + parts.latency + parts.cureid));

        const Dataset cens = bare({1.0, 2.0}, {Status::Censored, Status::Censored});
        CHECK(expected_complete_loglik(cens, c, testing::weights({1.0, 1.0}), stoch).cureid == 0.0);
        CHECK(expected_complete_loglik(cens, c, testing::weights({0.0, 0.0}), stoch).latency == 0.0);
        CHECK_THROWS_AS(expected_complete_loglik(cens, c, testing::weights({1.2, 0.0}), stoch), DomainError);
        CHECK_THROWS_AS(expected_complete_loglik(cens, c, testing::weights({0.5}), stoch), DimensionError);
    }

    TEST_CASE("dimension checks")
    {
        std::vector<SubjectRecord> s{{1.0, Status::Event, vec({1.0}), vec({1.0, 2.0}), vec({0.3})}};
        const Dataset d = Dataset::from_subjects(s);
        Coefficients c = weibull_coef(1.0, 1.0, vec({0.1}));
        c.beta = vec({0.0, 1.0, 2.0});
        c.theta = vec({0.1, 0.2});
        CHECK_NOTHROW(check_dimensions(d, c, spec_of(Mechanism::DiagnosticTest, CureIdFamily::BernoulliLogit)));
        CHECK_THROWS_AS(check_dimensions(d, c, spec_of(Mechanism::StochasticTime, CureIdFamily::WeibullPH)),
                        DimensionError);
        c.beta = vec({0.0, 1.0});
        CHECK_THROWS_AS(check_dimensions(d, c, spec_of(Mechanism::DiagnosticTest, CureIdFamily::BernoulliLogit)),
                        DimensionError);
    }

    TEST_CASE("dataset validation")
    {
        CHECK_THROWS_AS(bare({-1.0}, {Status::Event}), DataError);
        std::vector<SubjectRecord> ragged{{1.0, Status::Event, vec({1.0}), Vector(0), Vector(0)},
                                          {1.0, Status::Event, vec({1.0, 2.0}), Vector(0), Vector(0)}};
        CHECK_THROWS_AS(Dataset::from_subjects(ragged), DimensionError);
        const Dataset d = bare({1.0, 4.0, 2.0}, {Status::Event, Status::KnownCured, Status::Censored});
        CHECK(d.max_time() == 4.0);
        CHECK(d.count(Status::KnownCured) == 1);
    }

    TEST_CASE("model spec pairing")
    {
        CHECK_THROWS_AS(spec_of(Mechanism::DeterministicCutoff, CureIdFamily::WeibullPH).validate(), SpecError);
        CHECK_THROWS_AS(spec_of(Mechanism::DiagnosticTest, CureIdFamily::WeibullPH).validate(), SpecError);
        CHECK_THROWS_AS(spec_of(Mechanism::StochasticTime, CureIdFamily::BernoulliLogit).validate(), SpecError);
        CHECK_NOTHROW(spec_of(Mechanism::StochasticTime, CureIdFamily::SemiParametricPH).validate());
    }

    TEST_CASE("baseline hazard step function")
    {
        const BaselineHazard h{{1.0, 2.0}, {0.25, 0.5}, {0.25, 0.75}};
        CHECK(h.cumulative_at(0.99) == 0.0);
        CHECK(h.cumulative_at(1.0) == 0.25);
        CHECK(h.cumulative_at(1.5) == 0.25);
        CHECK(h.cumulative_at(9.0) == 0.75);
        CHECK(h.jump_at(2.0) == 0.5);
        CHECK(h.jump_at(1.5) == 0.0);
    }
}

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

ModelSpec diagnostic_spec(SurvivalFamily latency)
{
    ModelSpec s;
    s.mechanism = Mechanism::DiagnosticTest;
    s.cureid_family = CureIdFamily::BernoulliLogit;
    s.latency_family = latency;
    return s;
}

ModelSpec cutoff_spec(SurvivalFamily latency)
{
    ModelSpec s;
    s.mechanism = Mechanism::DeterministicCutoff;
    s.cureid_family = CureIdFamily::None;
    s.latency_family = latency;
    return s;
}

Dataset relabel_known_cured(const Dataset& d)
{
    auto s = d.subjects();
    for (auto& r : s) {
        if (r.status == Status::KnownCured) r.status = Status::Censored;
    }
    return d.with_subjects(std::move(s));
}

}  // namespace

TEST_SUITE("em")
{
    TEST_CASE("weight initialization")
    {
        const auto w = initialize_weights(bare({1, 2, 3}, {Status::Event, Status::Censored, Status::KnownCured}));
        CHECK(w.w == vec({1, 0, 0}));
        CHECK(initialize_weights(bare({1, 2}, {Status::Event, Status::Event})).w == vec({1, 1}));
        CHECK(initialize_weights(bare({1, 2}, {Status::Censored, Status::Censored})).w == vec({0, 0}));
    }

    TEST_CASE("censored weight hand cases")
    {
        CHECK(censored_weight(0.6, 0.5, 0.8) == doctest::Approx(0.30 / 0.62));
        CHECK(censored_weight(0.6, 0.5, 0.8) == doctest::Approx(0.48387).epsilon(1e-5));
        CHECK(censored_weight(0.6, 0.5, 1.0) == doctest::Approx(0.42857).epsilon(1e-5));
        CHECK(censored_weight(1.0, 0.3, 0.2) == 1.0);
        CHECK(censored_weight(1.0, 0.3, 1.0) == 1.0);
    }

    TEST_CASE("estep bounds and fixed entries")
    {
        const Dataset d = testing::small_diagnostic(200, 3);
        Coefficients c;
        c.beta = vec({0.5, 1.0});
        c.gamma = vec({0.3});
        c.theta = vec({0.1, -0.4});
        c.weibull_T = WeibullParams{1.2, 1.5};
        const WeightVector w = estep(d, c, diagnostic_spec(SurvivalFamily::WeibullPH));
        for (std::size_t i = 0; i < d.size(); ++i) {
            CHECK(w[i] >= 0.0);
            CHECK(w[i] <= 1.0);
            if (d[i].status == Status::Event) CHECK(w[i] == 1.0);
            if (d[i].status == Status::KnownCured) CHECK(w[i] == 0.0);
        }
    }

    TEST_CASE("full-information weights dominate ignore weights at equal parameters")
    {
        const Dataset d = testing::small_diagnostic(200, 4);
        Coefficients c;
        c.beta = vec({0.2, 0.7});
        c.gamma = vec({0.5});
        c.theta = vec({0.3, 0.3});
        c.weibull_T = WeibullParams{1.0, 2.0};
        const auto full = estep(d, c, diagnostic_spec(SurvivalFamily::WeibullPH));
        const auto [ignored, ignore_spec] = apply_strategy(d, diagnostic_spec(SurvivalFamily::WeibullPH),
                                                           Strategy::IgnoreCureStatus);
        const auto ign = estep(ignored, c, ignore_spec);
        for (std::size_t i = 0; i < d.size(); ++i) {
            if (d[i].status == Status::Censored) CHECK(full[i] >= ign[i]);
        }
    }

    TEST_CASE("apply_strategy transforms")
    {
        const Dataset d = bare({1, 2}, {Status::Event, Status::KnownCured});
        const ModelSpec spec = diagnostic_spec(SurvivalFamily::WeibullPH);

        const auto [ign, ign_spec] = apply_strategy(d, spec, Strategy::IgnoreCureStatus);
        CHECK(ign[1].status == Status::Censored);
        CHECK(ign[1].time == 2.0);
        CHECK(ign[0].status == Status::Event);
        CHECK(ign_spec.mechanism == Mechanism::DeterministicCutoff);

        const Dataset ten = bare({1, 2, 10}, {Status::Event, Status::KnownCured, Status::Censored});
        const auto [inf, inf_spec] = apply_strategy(ten, spec, Strategy::InfiniteTime);
        CHECK(inf[1].status == Status::Censored);
        CHECK(inf[1].time == doctest::Approx(10.1));
        CHECK(inf[2].time == 10.0);

        const auto [crude, crude_spec] = apply_strategy(testing::small_diagnostic(10, 1), spec,
                                                        Strategy::CrudeCureProbability);
        CHECK(crude.dim_q() == 0);
        CHECK(crude_spec.mechanism == Mechanism::DiagnosticTest);

        const auto [same, same_spec] = apply_strategy(ten, spec, Strategy::FullInformation);
        for (std::size_t i = 0; i < ten.size(); ++i) {
            CHECK(same[i].time == ten[i].time);
            CHECK(same[i].status == ten[i].status);
        }
        CHECK(same_spec.mechanism == spec.mechanism);
    }

    TEST_CASE("strategy names round-trip")
    {
        for (auto s : {Strategy::FullInformation, Strategy::CrudeCureProbability, Strategy::InfiniteTime,
                       Strategy::IgnoreCureStatus}) {
            CHECK(parse_strategy(to_string(s)) == s);
        }
        CHECK_THROWS_AS(parse_strategy("bogus"), SpecError);
    }

    TEST_CASE("cutoff fit equals the ignore fit without known cured")
    {
        for (unsigned seed : {1u, 2u, 3u}) {
            const Dataset d = relabel_known_cured(testing::small_diagnostic(150, seed));
            for (auto fam : {SurvivalFamily::SemiParametricPH, SurvivalFamily::WeibullPH}) {
                const FitResult a = fit_with_strategy(d, cutoff_spec(fam), Strategy::FullInformation);
                const FitResult b = fit_with_strategy(d, diagnostic_spec(fam), Strategy::IgnoreCureStatus);
                CHECK((a.coef.beta - b.coef.beta).cwiseAbs().maxCoeff() <= 1e-8);
                CHECK((a.coef.gamma - b.coef.gamma).cwiseAbs().maxCoeff() <= 1e-8);
                CHECK(a.iterations == b.iterations);
            }
        }
    }

    TEST_CASE("parametric EM ascends and records its trace")
    {
        for (unsigned seed = 10; seed < 15; ++seed) {
            const Dataset d = testing::small_diagnostic(200, seed);
            const FitResult r = em_fit(d, diagnostic_spec(SurvivalFamily::WeibullPH));
            CHECK(r.converged);
            CHECK(r.loglik_trace.size() == static_cast<std::size_t>(r.iterations) + 1);
            for (std::size_t k = 1; k < r.loglik_trace.size(); ++k) {
                CHECK(r.loglik_trace[k] >= r.loglik_trace[k - 1] - 1e-8);
            }
        }
    }

    TEST_CASE("stochastic fit recovers the data-generating direction")
    {
        ModelSpec spec;
        spec.mechanism = Mechanism::StochasticTime;
        spec.cureid_family = CureIdFamily::WeibullPH;
        spec.latency_family = SurvivalFamily::SemiParametricPH;
        const FitResult r = em_fit(testing::small_stochastic(1500, 6), spec);
        CHECK(r.converged);
        CHECK(r.coef.beta(0) == doctest::Approx(1.0).epsilon(0.5));
        CHECK(r.coef.gamma(0) == doctest::Approx(0.7).epsilon(0.3));
        REQUIRE(r.coef.weibull_C);
    }

    TEST_CASE("fits are deterministic")
    {
        const Dataset d = testing::small_diagnostic(150, 21);
        const FitResult a = em_fit(d, diagnostic_spec(SurvivalFamily::SemiParametricPH));
        const FitResult b = em_fit(d, diagnostic_spec(SurvivalFamily::SemiParametricPH));
        CHECK(a.coef.beta == b.coef.beta);
        CHECK(a.coef.gamma == b.coef.gamma);
        CHECK(a.coef.theta == b.coef.theta);
        CHECK(a.loglik_trace == b.loglik_trace);
    }

    TEST_CASE("precondition failures")
    {
        ModelSpec spec;
        spec.mechanism = Mechanism::StochasticTime;
        spec.cureid_family = CureIdFamily::WeibullPH;
        const Dataset no_cured = bare({1, 2, 3}, {Status::Event, Status::Censored, Status::Event});
        CHECK_THROWS_AS(em_fit(no_cured, spec), InsufficientCuredError);
        const Dataset no_events = bare({1, 2}, {Status::Censored, Status::KnownCured});
        CHECK_THROWS_AS(em_fit(no_events, spec), DataError);
    }

    TEST_CASE("errors inside the loop carry the last iterate")
    {
        // the incidence covariate separates events from the rest perfectly
        std::vector<SubjectRecord> s;
        for (int i = 0; i < 20; ++i) {
            const bool event = i < 10;
            s.push_back(SubjectRecord{1.0 + i, event ? Status::Event : Status::Censored, vec({0.1 * i}),
                                      vec({event ? 1.0 : -1.0}), Vector(0)});
        }
        try {
            em_fit(Dataset::from_subjects(s), cutoff_spec(SurvivalFamily::WeibullPH));
            FAIL("expected a separation error");
        } catch (const SeparationError& e) {
            const FitResult* partial = partial_result(e);
            REQUIRE(partial != nullptr);
        }
    }
}

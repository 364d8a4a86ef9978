#include "mixcure/simgen.hpp"

#include "mixcure/errors.hpp"
#include "mixcure/model.hpp"
#include "mixcure/rng.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace mixcure {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kRateLo = 1e-8;
constexpr double kRateHi = 1e8;
constexpr double kCalibrationTolerance = 0.01;

// Everything about a subject that does not depend on the censoring rate.
struct Latent {
    Vector z, x, q;
    bool susceptible = true;
    double event_time = kInf;
    double cure_time = kInf;
    bool identified = false;
    double censor_draw = 0.0;  // Exp(1); censoring time is censor_draw / rate
};

struct Outcome {
    double time;
    Status status;
};

Latent draw_latent(const ScenarioConfig& cfg, const std::optional<WeibullParams>& cure, Rng& rng)
{
    std::bernoulli_distribution coin(0.5);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::exponential_distribution<double> expo(1.0);

    const double b1 = coin(rng) ? 1.0 : 0.0;
    const double b2 = coin(rng) ? 1.0 : 0.0;
    const double b3 = coin(rng) ? 1.0 : 0.0;
    const double c1 = normal(rng);
    const double c2 = normal(rng);
    const double c3 = normal(rng);
    const double u_y = unif(rng);
    const double e_event = expo(rng);
    const double e_cure = expo(rng);
    const double u_id = unif(rng);

    Latent l;
    // First binary and first continuous covariate are shared by both parts.
    l.z = (Vector(4) << c1, b1, c2, b2).finished();
    l.x = (Vector(4) << c1, b1, c3, b3).finished();
    const Vector shared = (Vector(2) << c1, b1).finished();
    l.q = shared.head(cfg.cure_id == CureIdProcess::Stochastic ? cfg.theta_true.size() : 0);

    l.susceptible = u_y < incidence_prob(l.z, cfg.beta_true);
    if (l.susceptible) {
        const double rate = std::exp(l.x.dot(cfg.gamma_true));
        l.event_time = cfg.baseline_T.scale * std::pow(e_event / rate, 1.0 / cfg.baseline_T.shape);
    } else {
        switch (cfg.cure_id) {
        case CureIdProcess::Stochastic: {
            const double rate = l.q.size() > 0 ? std::exp(l.q.dot(cfg.theta_true)) : 1.0;
            l.cure_time = cure->scale * std::pow(e_cure / rate, 1.0 / cure->shape);
            break;
        }
        case CureIdProcess::Cutoff:
            l.cure_time = cfg.cutoff;
            break;
        case CureIdProcess::Diagnostic:
            l.identified = u_id < cfg.target_known_cured;
            break;
        }
    }
    l.censor_draw = expo(rng);
    return l;
}

Outcome observe(const ScenarioConfig& cfg, const Latent& l, double rate)
{
    const double c = rate > 0.0 ? l.censor_draw / rate : kInf;
    if (l.susceptible) {
        if (cfg.cure_id == CureIdProcess::Cutoff) {
            if (l.event_time <= c && l.event_time < cfg.cutoff) {
                return {l.event_time, Status::Event};
            }
            return {std::min(c, cfg.cutoff), Status::Censored};
        }
        if (l.event_time <= c) {
            return {l.event_time, Status::Event};
        }
        return {c, Status::Censored};
    }
    switch (cfg.cure_id) {
    case CureIdProcess::Stochastic:
    case CureIdProcess::Cutoff:
        if (l.cure_time <= c) {
            return {l.cure_time, Status::KnownCured};
        }
        return {c, Status::Censored};
    case CureIdProcess::Diagnostic:
        return {c, l.identified ? Status::KnownCured : Status::Censored};
    }
    return {c, Status::Censored};
}

std::optional<WeibullParams> resolve_cure_params(const ScenarioConfig& cfg, bool* verified)
{
    *verified = false;
    if (cfg.cure_id != CureIdProcess::Stochastic) {
        return std::nullopt;
    }
    if (cfg.cure_weibull) {
        verify_ordering(cfg.ordering, cfg.baseline_T, *cfg.cure_weibull);
        *verified = true;
        return cfg.cure_weibull;
    }
    auto p = make_ordering_params(cfg.ordering, cfg.baseline_T);
    *verified = true;
    return p;
}

std::vector<Latent> draw_sample(const ScenarioConfig& cfg, const std::optional<WeibullParams>& cure, int count,
                                Rng& rng)
{
    std::vector<Latent> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        out.push_back(draw_latent(cfg, cure, rng));
    }
    return out;
}

RealizedRates rates_of(const ScenarioConfig& cfg, const std::vector<Latent>& sample, double rate)
{
    std::size_t cured = 0, censored = 0, known = 0;
    for (const auto& l : sample) {
        const Outcome o = observe(cfg, l, rate);
        cured += l.susceptible ? 0 : 1;
        censored += o.status == Status::Censored ? 1 : 0;
        known += o.status == Status::KnownCured ? 1 : 0;
    }
    const double n = static_cast<double>(sample.size());
    RealizedRates r;
    r.cure_rate = static_cast<double>(cured) / n;
    r.censoring_rate = static_cast<double>(censored) / n;
    r.known_cured_rate = static_cast<double>(known) / n;
    r.known_cured_among_cured = cured ? static_cast<double>(known) / static_cast<double>(cured) : 0.0;
    return r;
}

bool targets_known_cured(const ScenarioConfig& cfg)
{
    // The diagnostic process fixes the identified share through p_obs.
    return cfg.calibrate_on == CalibrationTarget::KnownCured && cfg.cure_id != CureIdProcess::Diagnostic;
}

}  // namespace

void ScenarioConfig::validate() const
{
    if (n < 1) {
        throw SpecError("scenario needs n >= 1");
    }
    if (beta_true.size() != 5 || gamma_true.size() != 4) {
        throw DimensionError("scenario needs 5 incidence (with intercept) and 4 latency coefficients");
    }
    if (cure_id == CureIdProcess::Stochastic && theta_true.size() > 2) {
        throw DimensionError("at most two cure-identification covariates are generated");
    }
    if (!(target_censoring >= 0.0 && target_censoring < 1.0) ||
        !(target_known_cured > 0.0 && target_known_cured < 1.0)) {
        throw SpecError("target proportions must lie in (0, 1)");
    }
    if (!(baseline_T.shape > 0.0 && baseline_T.scale > 0.0)) {
        throw SpecError("Weibull parameters must be positive");
    }
    if (cure_weibull && !(cure_weibull->shape > 0.0 && cure_weibull->scale > 0.0)) {
        throw SpecError("Weibull parameters must be positive");
    }
    if (cure_id == CureIdProcess::Cutoff && !(cutoff > 0.0)) {
        throw SpecError("cutoff must be positive");
    }
}

ScenarioConfig ScenarioConfig::table(int number, int n)
{
    if (number < 1 || number > 4) {
        throw SpecError("scenario table must be 1..4");
    }
    ScenarioConfig c;
    const bool high_cure = number == 2 || number == 4;
    c.label = "table" + std::to_string(number);
    c.n = n;
    c.beta_true = high_cure ? (Vector(5) << 2, 4, 2, 4, 0.5).finished()
                            : (Vector(5) << 2, 1, 2, 1, 0.5).finished();
    c.gamma_true = (Vector(4) << 0.9, 1, 4, 2).finished();
    c.theta_true = (Vector(2) << 0.5, 0.5).finished();
    c.ordering = number <= 2 ? Ordering::CureLower : Ordering::CureHigher;
    c.target_known_cured = 0.5;
    c.calibrate_on = CalibrationTarget::KnownCured;
    return c;
}

ScenarioConfig ScenarioConfig::sparse(int n)
{
    ScenarioConfig c = table(2, n);
    c.label = "sparse";
    c.beta_true(2) = 0.0;
    c.beta_true(4) = 0.0;
    return c;
}

const char* to_string(Ordering o) { return o == Ordering::CureLower ? "lower" : "higher"; }

void verify_ordering(Ordering ordering, const WeibullParams& baseline_T, const WeibullParams& cure)
{
    for (int k = 0; k < 1000; ++k) {
        const double prob = (k + 0.5) / 1000.0;
        const double t = baseline_T.scale * std::pow(-std::log1p(-prob), 1.0 / baseline_T.shape);
        const double s_event = baseline_T.survival(t);
        const double s_cure = cure.survival(t);
        const bool ok = ordering == Ordering::CureLower ? s_cure < s_event : s_cure > s_event;
        if (!ok) {
            throw OrderingError(std::string("time-to-cure curve is not stochastically ") + to_string(ordering) +
                                " than the event-time curve at t=" + std::to_string(t));
        }
    }
}

WeibullParams make_ordering_params(Ordering ordering, const WeibullParams& baseline_T)
{
    const double factor = ordering == Ordering::CureLower ? kCureLowerScaleFactor : kCureHigherScaleFactor;
    WeibullParams cure{kCureShape, factor * baseline_T.median()};
    verify_ordering(ordering, baseline_T, cure);
    return cure;
}

double calibrate_censoring(const ScenarioConfig& config, int mc_draws)
{
    config.validate();
    if (mc_draws < 1000) {
        throw SpecError("censoring calibration needs at least 1000 Monte Carlo draws");
    }
    bool verified = false;
    const auto cure = resolve_cure_params(config, &verified);
    Rng rng = make_stream(config.seed, StreamTag::Calibration);
    const auto sample = draw_sample(config, cure, mc_draws, rng);

    const bool known = targets_known_cured(config);
    const double target = known ? config.target_known_cured : config.target_censoring;
    auto realized = [&](double rate) {
        const auto r = rates_of(config, sample, rate);
        if (known && r.cure_rate == 0.0) {
            throw CalibrationError("no cured subjects: the known-cured share cannot be calibrated");
        }
        return known ? r.known_cured_among_cured : r.censoring_rate;
    };
    // Oriented so that excess(rate) increases with the rate.
    auto excess = [&](double rate) {
        const double d = realized(rate) - target;
        return known ? -d : d;
    };

    double lo = std::log(kRateLo), hi = std::log(kRateHi);
    double rate;
    if (excess(kRateLo) >= 0.0) {
        rate = kRateLo;
    } else if (excess(kRateHi) <= 0.0) {
        rate = kRateHi;
    } else {
        for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (excess(std::exp(mid)) < 0.0) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        rate = std::exp(hi);
        if (std::abs(realized(std::exp(lo)) - target) < std::abs(realized(rate) - target)) {
            rate = std::exp(lo);
        }
    }
    const double achieved = realized(rate);
    if (std::abs(achieved - target) > kCalibrationTolerance) {
        throw CalibrationError("calibration target " + std::to_string(target) +
                               " unreachable: best realized proportion " + std::to_string(achieved));
    }
    return rate;
}

RealizedRates evaluate_censoring(const ScenarioConfig& config, double rate, int mc_draws, std::uint64_t seed)
{
    config.validate();
    bool verified = false;
    const auto cure = resolve_cure_params(config, &verified);
    Rng rng = make_stream(seed, StreamTag::Evaluation);
    return rates_of(config, draw_sample(config, cure, mc_draws, rng), rate);
}

GeneratedDataset generate(const ScenarioConfig& config)
{
    return generate(config, calibrate_censoring(config, config.calibration_draws));
}

GeneratedDataset generate(const ScenarioConfig& config, double censoring_rate)
{
    config.validate();
    if (!(censoring_rate >= 0.0) || !std::isfinite(censoring_rate)) {
        throw DomainError("censoring rate must be finite and nonnegative");
    }
    GeneratedDataset out;
    out.cure_weibull = resolve_cure_params(config, &out.ordering_verified);
    out.censoring_rate_param = censoring_rate;

    Rng rng = make_stream(config.seed, StreamTag::Data);
    const auto latent = draw_sample(config, out.cure_weibull, config.n, rng);

    std::vector<SubjectRecord> subjects;
    subjects.reserve(latent.size());
    for (const auto& l : latent) {
        const Outcome o = observe(config, l, out.censoring_rate_param);
        if (!std::isfinite(o.time)) {
            throw CalibrationError("generated an infinite follow-up time; censoring rate is zero");
        }
        subjects.push_back(SubjectRecord{o.time, o.status, l.x, l.z, l.q});
        TruthRecord t;
        t.susceptible = l.susceptible;
        t.event_time = l.event_time;
        t.cure_time = l.cure_time;
        t.censor_time = l.censor_draw / out.censoring_rate_param;
        t.identified = l.identified;
        out.truth.push_back(t);
    }
    out.rates = rates_of(config, latent, out.censoring_rate_param);
    out.dataset = Dataset::from_subjects(std::move(subjects));
    return out;
}

}  // namespace mixcure

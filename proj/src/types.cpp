#include "mixcure/types.hpp"

#include "mixcure/errors.hpp"

#include <algorithm>
#include <cmath>

namespace mixcure {

namespace {

std::vector<std::string> default_names(const char* prefix, Eigen::Index k)
{
    std::vector<std::string> names;
    for (Eigen::Index j = 0; j < k; ++j) {
        names.push_back(prefix + std::to_string(j + 1));
    }
    return names;
}

Matrix stack(const std::vector<SubjectRecord>& subjects, Eigen::Index cols,
             const Vector SubjectRecord::*field)
{
    Matrix m(static_cast<Eigen::Index>(subjects.size()), cols);
    for (std::size_t i = 0; i < subjects.size(); ++i) {
        if (cols > 0) {
            m.row(static_cast<Eigen::Index>(i)) = (subjects[i].*field).transpose();
        }
    }
    return m;
}

}  // namespace

Dataset::Dataset(std::vector<SubjectRecord> subjects, std::vector<std::string> x_names,
                 std::vector<std::string> z_names, std::vector<std::string> q_names)
    : subjects_(std::move(subjects))
    , x_names_(std::move(x_names))
    , z_names_(std::move(z_names))
    , q_names_(std::move(q_names))
{
    validate();
}

Dataset Dataset::from_subjects(std::vector<SubjectRecord> subjects)
{
    Eigen::Index px = 0, pz = 0, pq = 0;
    if (!subjects.empty()) {
        px = subjects.front().x.size();
        pz = subjects.front().z.size();
        pq = subjects.front().q.size();
    }
    return Dataset(std::move(subjects), default_names("x", px), default_names("z", pz),
                   default_names("q", pq));
}

void Dataset::validate() const
{
    for (std::size_t i = 0; i < subjects_.size(); ++i) {
        const auto& s = subjects_[i];
        if (!std::isfinite(s.time) || s.time < 0.0) {
            throw DataError("subject " + std::to_string(i) + ": time must be finite and >= 0");
        }
        if (s.x.size() != dim_x() || s.z.size() != dim_z() || s.q.size() != dim_q()) {
            throw DimensionError("subject " + std::to_string(i) +
                                 ": covariate dimensions do not match the column names");
        }
    }
}

std::size_t Dataset::count(Status st) const
{
    return static_cast<std::size_t>(std::count_if(
        subjects_.begin(), subjects_.end(), [st](const SubjectRecord& s) { return s.status == st; }));
}

double Dataset::max_time() const
{
    double m = 0.0;
    for (const auto& s : subjects_) {
        m = std::max(m, s.time);
    }
    return m;
}

Matrix Dataset::x_matrix() const { return stack(subjects_, dim_x(), &SubjectRecord::x); }
Matrix Dataset::z_matrix() const { return stack(subjects_, dim_z(), &SubjectRecord::z); }
Matrix Dataset::q_matrix() const { return stack(subjects_, dim_q(), &SubjectRecord::q); }

Vector Dataset::times() const
{
    Vector t(static_cast<Eigen::Index>(subjects_.size()));
    for (std::size_t i = 0; i < subjects_.size(); ++i) {
        t(static_cast<Eigen::Index>(i)) = subjects_[i].time;
    }
    return t;
}

Dataset Dataset::with_subjects(std::vector<SubjectRecord> subjects) const
{
    return Dataset(std::move(subjects), x_names_, z_names_, q_names_);
}

Dataset Dataset::without_q() const
{
    auto subjects = subjects_;
    for (auto& s : subjects) {
        s.q.resize(0);
    }
    return Dataset(std::move(subjects), x_names_, z_names_, {});
}

PenaltyConfig PenaltyConfig::uniform(double lambda)
{
    PenaltyConfig p;
    p.lambda_beta = {lambda};
    p.lambda_gamma = {lambda};
    p.lambda_theta = {lambda};
    return p;
}

bool PenaltyConfig::active() const
{
    auto any = [](const std::vector<double>& v) {
        return std::any_of(v.begin(), v.end(), [](double l) { return l > 0.0; });
    };
    return any(lambda_beta) || any(lambda_gamma) || any(lambda_theta);
}

void ModelSpec::validate() const
{
    switch (mechanism) {
    case Mechanism::DeterministicCutoff:
        if (cureid_family != CureIdFamily::None) {
            throw SpecError("deterministic cutoff requires cure-identification family 'none'");
        }
        break;
    case Mechanism::DiagnosticTest:
        if (cureid_family != CureIdFamily::BernoulliLogit) {
            throw SpecError("diagnostic test requires cure-identification family 'logit'");
        }
        break;
    case Mechanism::StochasticTime:
        if (cureid_family == CureIdFamily::None || cureid_family == CureIdFamily::BernoulliLogit) {
            throw SpecError("stochastic time requires a survival family for cure identification");
        }
        break;
    }
    if (em_controls.max_iter < 1 || !(em_controls.param_tol > 0.0) ||
        !(em_controls.loglik_tol > 0.0)) {
        throw SpecError("EM controls must be positive");
    }
    if (penalty) {
        for (const auto* v : {&penalty->lambda_beta, &penalty->lambda_gamma, &penalty->lambda_theta}) {
            for (double l : *v) {
                if (!(l >= 0.0)) {
                    throw SpecError("penalty weights must be nonnegative");
                }
            }
        }
    }
}

double WeibullParams::cumhaz(double t) const
{
    if (t <= 0.0) {
        return 0.0;
    }
    return std::pow(t / scale, shape);
}

double WeibullParams::hazard(double t) const
{
    if (t <= 0.0) {
        return shape == 1.0 ? 1.0 / scale : (shape < 1.0 ? HUGE_VAL : 0.0);
    }
    return shape / scale * std::pow(t / scale, shape - 1.0);
}

double WeibullParams::median() const { return scale * std::pow(std::log(2.0), 1.0 / shape); }

double BaselineHazard::cumulative_at(double t) const
{
    auto it = std::upper_bound(event_times.begin(), event_times.end(), t);
    if (it == event_times.begin()) {
        return 0.0;
    }
    return cumulative[static_cast<std::size_t>(it - event_times.begin()) - 1];
}

double BaselineHazard::jump_at(double t) const
{
    auto it = std::lower_bound(event_times.begin(), event_times.end(), t);
    if (it == event_times.end() || *it != t) {
        return 0.0;
    }
    return increments[static_cast<std::size_t>(it - event_times.begin())];
}

const char* to_string(Status s)
{
    switch (s) {
    case Status::Censored: return "censored";
    case Status::Event: return "event";
    case Status::KnownCured: return "known_cured";
    }
    return "?";
}

const char* to_string(Mechanism m)
{
    switch (m) {
    case Mechanism::DeterministicCutoff: return "cutoff";
    case Mechanism::StochasticTime: return "stochastic";
    case Mechanism::DiagnosticTest: return "diagnostic";
    }
    return "?";
}

const char* to_string(SurvivalFamily f)
{
    switch (f) {
    case SurvivalFamily::SemiParametricPH: return "cox";
    case SurvivalFamily::WeibullPH: return "weibull";
    case SurvivalFamily::ExponentialPH: return "exponential";
    }
    return "?";
}

const char* to_string(CureIdFamily f)
{
    switch (f) {
    case CureIdFamily::SemiParametricPH: return "cox";
    case CureIdFamily::WeibullPH: return "weibull";
    case CureIdFamily::ExponentialPH: return "exponential";
    case CureIdFamily::BernoulliLogit: return "logit";
    case CureIdFamily::None: return "none";
    }
    return "?";
}

Mechanism parse_mechanism(const std::string& s)
{
    if (s == "cutoff") return Mechanism::DeterministicCutoff;
    if (s == "stochastic") return Mechanism::StochasticTime;
    if (s == "diagnostic") return Mechanism::DiagnosticTest;
    throw SpecError("unknown mechanism '" + s + "' (expected cutoff|stochastic|diagnostic)");
}

SurvivalFamily parse_survival_family(const std::string& s)
{
    if (s == "cox") return SurvivalFamily::SemiParametricPH;
    if (s == "weibull") return SurvivalFamily::WeibullPH;
    if (s == "exponential") return SurvivalFamily::ExponentialPH;
    throw SpecError("unknown survival family '" + s + "' (expected cox|weibull|exponential)");
}

CureIdFamily parse_cureid_family(const std::string& s)
{
    if (s == "cox") return CureIdFamily::SemiParametricPH;
    if (s == "weibull") return CureIdFamily::WeibullPH;
    if (s == "exponential") return CureIdFamily::ExponentialPH;
    if (s == "logit") return CureIdFamily::BernoulliLogit;
    if (s == "none") return CureIdFamily::None;
    throw SpecError("unknown cure-identification family '" + s + "'");
}

}  // namespace mixcure

#pragma once

#include <Eigen/Core>

#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace mixcure {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Observable state of a subject. Event is (delta=1, y=1), KnownCured is
// (delta=1, y=0), Censored is (delta=0, y unknown).
enum class Status { Censored = 0, Event = 1, KnownCured = 2 };

struct SubjectRecord {
    double time = 0.0;
    Status status = Status::Censored;
    Vector x;  // latency covariates
    Vector z;  // incidence covariates, no intercept
    Vector q;  // cure-identification covariates, no intercept
};

class Dataset {
public:
    Dataset() = default;
    Dataset(std::vector<SubjectRecord> subjects, std::vector<std::string> x_names,
            std::vector<std::string> z_names, std::vector<std::string> q_names);

    /// Builds a dataset with default column names (x1.., z1.., q1..).
    static Dataset from_subjects(std::vector<SubjectRecord> subjects);

    const std::vector<SubjectRecord>& subjects() const { return subjects_; }
    const SubjectRecord& operator[](std::size_t i) const { return subjects_[i]; }
    std::size_t size() const { return subjects_.size(); }

    Eigen::Index dim_x() const { return static_cast<Eigen::Index>(x_names_.size()); }
    Eigen::Index dim_z() const { return static_cast<Eigen::Index>(z_names_.size()); }
    Eigen::Index dim_q() const { return static_cast<Eigen::Index>(q_names_.size()); }

    const std::vector<std::string>& x_names() const { return x_names_; }
    const std::vector<std::string>& z_names() const { return z_names_; }
    const std::vector<std::string>& q_names() const { return q_names_; }

    std::size_t count(Status s) const;
    double max_time() const;

    Matrix x_matrix() const;
    Matrix z_matrix() const;
    Matrix q_matrix() const;
    Vector times() const;

    /// Same columns, new rows. Used by resampling and strategy transforms.
    Dataset with_subjects(std::vector<SubjectRecord> subjects) const;
    /// Drops the q block.
    Dataset without_q() const;

private:
    void validate() const;

    std::vector<SubjectRecord> subjects_;
    std::vector<std::string> x_names_, z_names_, q_names_;
};

enum class Mechanism { DeterministicCutoff, StochasticTime, DiagnosticTest };
enum class SurvivalFamily { SemiParametricPH, WeibullPH, ExponentialPH };
enum class CureIdFamily { SemiParametricPH, WeibullPH, ExponentialPH, BernoulliLogit, None };

struct PenaltyConfig {
    // Each vector is either empty (no penalty), length 1 (broadcast) or one
    // entry per non-intercept coefficient.
    std::vector<double> lambda_beta;
    std::vector<double> lambda_gamma;
    std::vector<double> lambda_theta;

    enum class Selection { FixedLambda, BicGrid };
    Selection selection = Selection::FixedLambda;
    std::vector<double> grid;

    static PenaltyConfig uniform(double lambda);
    bool active() const;
};

struct EmControls {
    int max_iter = 500;
    double param_tol = 1e-6;
    double loglik_tol = 1e-8;
};

struct ModelSpec {
    Mechanism mechanism = Mechanism::StochasticTime;
    SurvivalFamily latency_family = SurvivalFamily::WeibullPH;
    CureIdFamily cureid_family = CureIdFamily::WeibullPH;
    std::optional<PenaltyConfig> penalty;
    EmControls em_controls;

    /// Throws SpecError when mechanism and cure-identification family disagree.
    void validate() const;
};

struct WeibullParams {
    double shape = 1.0;
    double scale = 1.0;

    double cumhaz(double t) const;
    double hazard(double t) const;
    double survival(double t) const { return std::exp(-cumhaz(t)); }
    double median() const;
};

// Breslow-type step function for a cumulative baseline hazard.
struct BaselineHazard {
    std::vector<double> event_times;  // strictly increasing
    std::vector<double> increments;
    std::vector<double> cumulative;

    bool empty() const { return event_times.empty(); }
    double last_time() const { return event_times.empty() ? 0.0 : event_times.back(); }
    /// H0(t); zero before the first event time, right-continuous.
    double cumulative_at(double t) const;
    /// Jump of H0 at exactly t, zero if t is not an event time.
    double jump_at(double t) const;
};

struct Coefficients {
    Vector beta;   // incidence, intercept first
    Vector gamma;  // latency
    Vector theta;  // cure identification; intercept first under BernoulliLogit
    BaselineHazard baseline_T;
    std::optional<BaselineHazard> baseline_C;
    std::optional<WeibullParams> weibull_T;
    std::optional<WeibullParams> weibull_C;
};

struct WeightVector {
    Vector w;

    std::size_t size() const { return static_cast<std::size_t>(w.size()); }
    double operator[](std::size_t i) const { return w(static_cast<Eigen::Index>(i)); }
};

const char* to_string(Status s);
const char* to_string(Mechanism m);
const char* to_string(SurvivalFamily f);
const char* to_string(CureIdFamily f);

Mechanism parse_mechanism(const std::string& s);
SurvivalFamily parse_survival_family(const std::string& s);
CureIdFamily parse_cureid_family(const std::string& s);

}  // namespace mixcure

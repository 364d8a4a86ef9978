#pragma once

#include "mixcure/types.hpp"

#include <cmath>
#include <functional>
#include <initializer_list>
#include <random>
#include <vector>

namespace testing {

using mixcure::Dataset;
using mixcure::Matrix;
using mixcure::Status;
using mixcure::SubjectRecord;
using mixcure::Vector;

inline Vector vec(std::initializer_list<double> v)
{
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double d : v) out(i++) = d;
    return out;
}

// Dataset without covariates.
inline Dataset bare(std::initializer_list<double> times, std::initializer_list<Status> status)
{
    std::vector<SubjectRecord> s;
    auto t = times.begin();
    for (Status st : status) {
        s.push_back(SubjectRecord{*t++, st, Vector(0), Vector(0), Vector(0)});
    }
    return Dataset::from_subjects(std::move(s));
}

inline mixcure::WeightVector weights(std::initializer_list<double> w)
{
    return mixcure::WeightVector{vec(w)};
}

inline double sigmoid(double eta) { return 1.0 / (1.0 + std::exp(-eta)); }

// Small mixture-cure dataset with one covariate per part, drawn with its own
// generator so tests do not depend on the library's simulation code.
// Diagnostic identification: a cured subject is identified with probability
// sigmoid(theta0 + theta1 q) at its censoring time.
struct SmallTruth {
    double b0 = 1.0, b1 = 1.0, g1 = 0.5, rate = 1.0, t0 = 0.0, t1 = 0.5, censor_rate = 0.3;
};

inline Dataset small_diagnostic(int n, unsigned seed, const SmallTruth& tr = {})
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    std::uniform_real_distribution<double> ud;
    std::exponential_distribution<double> ed;
    std::vector<SubjectRecord> subjects;
    for (int i = 0; i < n; ++i) {
        const double z = nd(rng), x = nd(rng), q = nd(rng);
        const bool y = ud(rng) < sigmoid(tr.b0 + tr.b1 * z);
        const double t_event = ed(rng) / (tr.rate * std::exp(tr.g1 * x));
        const bool identified = ud(rng) < sigmoid(tr.t0 + tr.t1 * q);
        const double c = ed(rng) / tr.censor_rate;
        SubjectRecord s;
        s.x = vec({x});
        s.z = vec({z});
        s.q = vec({q});
        if (y) {
            s.time = std::min(t_event, c);
            s.status = t_event <= c ? Status::Event : Status::Censored;
        } else {
            s.time = c;
            s.status = identified ? Status::KnownCured : Status::Censored;
        }
        subjects.push_back(std::move(s));
    }
    return Dataset::from_subjects(std::move(subjects));
}

// Stochastic identification with Weibull time to cure; one covariate per part.
inline Dataset small_stochastic(int n, unsigned seed, double censor_rate = 0.4)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    std::uniform_real_distribution<double> ud;
    std::exponential_distribution<double> ed;
    std::vector<SubjectRecord> subjects;
    for (int i = 0; i < n; ++i) {
        const double z = nd(rng), x = nd(rng), q = nd(rng);
        const bool y = ud(rng) < sigmoid(1.0 + z);
        const double t_event = std::pow(ed(rng) / std::exp(0.7 * x), 1.0 / 1.5);
        const double t_cure = 0.6 * std::pow(ed(rng) / std::exp(0.4 * q), 1.0 / 1.2);
        const double c = ed(rng) / censor_rate;
        SubjectRecord s;
        s.x = vec({x});
        s.z = vec({z});
        s.q = vec({q});
        const double latent = y ? t_event : t_cure;
        s.time = std::min(latent, c);
        s.status = latent <= c ? (y ? Status::Event : Status::KnownCured) : Status::Censored;
        subjects.push_back(std::move(s));
    }
    return Dataset::from_subjects(std::move(subjects));
}

// Multi-resolution grid search: evaluates `f` on a (points^dim) lattice
// around `center`, recentres on the best point and halves the box until the
// spacing drops below `resolution`. Returns the best point found.
inline Vector zoom_maximize(const std::function<double(const Vector&)>& f, Vector center, double half_width,
                            int points, double resolution, double* best_value = nullptr)
{
    const auto dim = center.size();
    double best = f(center);
    Vector best_x = center;
    while (2.0 * half_width / (points - 1) > resolution) {
        std::vector<int> idx(static_cast<std::size_t>(dim), 0);
        Vector x(dim);
        while (true) {
            for (Eigen::Index d = 0; d < dim; ++d) {
                x(d) = center(d) - half_width + 2.0 * half_width * idx[static_cast<std::size_t>(d)] / (points - 1);
            }
            const double v = f(x);
            if (v > best) {
                best = v;
                best_x = x;
            }
            Eigen::Index d = 0;
            while (d < dim && ++idx[static_cast<std::size_t>(d)] == points) {
                idx[static_cast<std::size_t>(d)] = 0;
                ++d;
            }
            if (d == dim) break;
        }
        center = best_x;
        half_width *= 0.5;
    }
    if (best_value) *best_value = best;
    return best_x;
}

}  // namespace testing

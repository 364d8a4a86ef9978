#pragma once

#include "mixcure/types.hpp"

#include <functional>

namespace mixcure {

struct SolverReport {
    int iterations = 0;
    bool converged = false;
    double final_objective = 0.0;
    double gradient_norm = 0.0;  // of the smooth part; KKT residual when penalized
};

// Smooth objective to maximize. Fills gradient and Hessian when the pointers
// are non-null and returns the value (may be -inf outside the domain).
using Objective = std::function<double(const Vector& params, Vector* grad, Matrix* hess)>;

struct NewtonOptions {
    int max_iter = 100;
    double param_tol = 1e-8;
    int max_halvings = 20;
    // Called after every accepted iterate; may throw to abort (separation).
    std::function<void(const Vector&)> on_iterate;
};

struct NewtonResult {
    Vector params;
    SolverReport report;
};

/// Maximizes objective(p) - sum_j penalty(j) * |p_j|.
///
/// With an all-zero (or empty) penalty this is damped Newton-Raphson with
/// step halving; otherwise a proximal Newton method whose quadratic
/// subproblem is solved by cyclic coordinate descent. Iterates never
/// decrease the penalized objective.
NewtonResult maximize(const Objective& objective, Vector start, const Vector& penalty,
                      const NewtonOptions& options = {});

/// Per-coordinate weights n * lambda_j with broadcast of a length-1 vector.
Vector expand_penalty(const std::vector<double>& lambdas, Eigen::Index count, double n);

// Column standardization used by the penalized and unpenalized fits. The
// transformed problem is an exact reparametrization of the original one.
struct Standardizer {
    Vector center;
    Vector scale;

    static Standardizer fit(const Matrix& x, const Vector& weights);
    Matrix apply(const Matrix& x) const;
    /// Maps standardized slopes back to the original scale and returns the
    /// shift to add to the intercept (or log-scale offset).
    Vector slopes_to_original(const Vector& b) const;
    Vector slopes_to_standardized(const Vector& beta) const;
    double intercept_shift(const Vector& b) const;
};

}  // namespace mixcure

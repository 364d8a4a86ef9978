#pragma once

#include "mixcure/em.hpp"

#include <optional>
#include <string>
#include <vector>

namespace mixcure {

struct BicPoint {
    double lambda = 0.0;
    bool ok = false;
    double loglik = 0.0;
    int df = 0;
    double bic = 0.0;
    std::string error;  // why the fit failed, when !ok
    std::optional<FitResult> fit;
};

struct BicPath {
    std::vector<BicPoint> points;
    std::size_t selected = 0;

    const BicPoint& best() const { return points.at(selected); }
    const FitResult& selected_fit() const { return *best().fit; }
};

/// Default BIC grid: ten log-spaced values from 1e-3 to 1e-1.
std::vector<double> default_lambda_grid();

/// Number of nonzero penalized coefficients (intercepts excluded).
int penalized_df(const Coefficients& coef, const ModelSpec& spec);

/// EM fit at every lambda in `grid` (applied uniformly to all penalized
/// coefficients); selects the minimizer of -2 loglik + df log n.
/// Throws NonConvergenceError if no grid point yields a converged fit.
BicPath bic_path(const Dataset& data, const ModelSpec& spec, const std::vector<double>& grid);

PenaltyConfig select_lambda_bic(const Dataset& data, const ModelSpec& spec, const std::vector<double>& grid);

/// Largest violation of the LASSO optimality conditions of the incidence
/// M-step at `beta` given the E-step weights.
double incidence_kkt_violation(const Dataset& data, const WeightVector& w, const Vector& beta,
                               const std::vector<double>& lambdas);

}  // namespace mixcure

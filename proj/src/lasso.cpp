#include "mixcure/lasso.hpp"

#include "mixcure/optim.hpp"

#include <cmath>
#include <limits>

namespace mixcure {

namespace {

int nonzero(const Vector& v, Eigen::Index skip)
{
    int count = 0;
    for (Eigen::Index j = skip; j < v.size(); ++j) {
        count += v(j) != 0.0 ? 1 : 0;
    }
    return count;
}

}  // namespace

int penalized_df(const Coefficients& coef, const ModelSpec& spec)
{
    const Eigen::Index theta_skip = spec.mechanism == Mechanism::DiagnosticTest ? 1 : 0;
    return nonzero(coef.beta, 1) + nonzero(coef.gamma, 0) + nonzero(coef.theta, theta_skip);
}

BicPath bic_path(const Dataset& data, const ModelSpec& spec, const std::vector<double>& grid)
{
    if (grid.empty()) {
        throw SpecError("the lambda grid is empty");
    }
    BicPath path;
    const double log_n = std::log(static_cast<double>(data.size()));
    double best = std::numeric_limits<double>::infinity();
    bool any = false;
    for (double lambda : grid) {
        if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
            throw DomainError("lambda grid values must be finite and nonnegative");
        }
        BicPoint point;
        point.lambda = lambda;
        ModelSpec s = spec;
        s.penalty = PenaltyConfig::uniform(lambda);
        try {
            FitResult fit = em_fit(data, s);
            point.ok = fit.converged;
            point.loglik = fit.loglik_trace.back();
            point.df = penalized_df(fit.coef, s);
            point.bic = -2.0 * point.loglik + point.df * log_n;
            if (!fit.converged) {
                point.error = "EM did not converge";
            } else if (point.bic < best) {
                best = point.bic;
                path.selected = path.points.size();
                any = true;
            }
            point.fit = std::move(fit);
        } catch (const Error& e) {
            point.error = e.what();
        }
        path.points.push_back(point);
    }
    if (!any) {
        throw NonConvergenceError("no lambda in the grid produced a converged fit");
    }
    return path;
}

std::vector<double> default_lambda_grid()
{
    std::vector<double> grid;
    for (int k = 0; k < 10; ++k) {
        grid.push_back(1e-3 * std::pow(100.0, k / 9.0));
    }
    return grid;
}

PenaltyConfig select_lambda_bic(const Dataset& data, const ModelSpec& spec, const std::vector<double>& grid)
{
    const BicPath path = bic_path(data, spec, grid);
    PenaltyConfig out = PenaltyConfig::uniform(path.points[path.selected].lambda);
    out.selection = PenaltyConfig::Selection::BicGrid;
    out.grid = grid;
    return out;
}

double incidence_kkt_violation(const Dataset& data, const WeightVector& w, const Vector& beta,
                               const std::vector<double>& lambdas)
{
    const Matrix z = data.z_matrix();
    const auto n = z.rows();
    Matrix design(n, z.cols() + 1);
    design.col(0).setOnes();
    design.rightCols(z.cols()) = z;
    Vector resid(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        resid(i) = w.w(i) - 1.0 / (1.0 + std::exp(-design.row(i).dot(beta)));
    }
    const Vector grad = design.transpose() * resid;
    const Vector pen = expand_penalty(lambdas, z.cols(), static_cast<double>(n));
    double worst = std::abs(grad(0));
    for (Eigen::Index j = 1; j < beta.size(); ++j) {
        const double bound = pen(j - 1);
        const double v = beta(j) == 0.0 ? std::max(0.0, std::abs(grad(j)) - bound)
                                        : std::abs(grad(j) - bound * (beta(j) > 0 ? 1.0 : -1.0));
        worst = std::max(worst, v);
    }
    return worst;
}

}  // namespace mixcure

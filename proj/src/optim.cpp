#include "mixcure/optim.hpp"

#include "mixcure/errors.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <string>

namespace mixcure {

namespace {

double soft_threshold(double v, double t)
{
    if (v > t) return v - t;
    if (v < -t) return v + t;
    return 0.0;
}

double penalty_value(const Vector& penalty, const Vector& p)
{
    if (penalty.size() == 0) {
        return 0.0;
    }
    return (penalty.array() * p.array().abs()).sum();
}

// Positive definite version of -H via an increasing ridge.
Eigen::LLT<Matrix> factor_negated(const Matrix& hess, Matrix& a)
{
    a = -hess;
    Eigen::LLT<Matrix> llt(a);
    if (llt.info() == Eigen::Success) {
        return llt;
    }
    const double base = std::max(1e-8, 1e-6 * a.diagonal().cwiseAbs().maxCoeff());
    for (double ridge = base; ridge < 1e12; ridge *= 10.0) {
        Matrix shifted = a;
        shifted.diagonal().array() += ridge;
        llt.compute(shifted);
        if (llt.info() == Eigen::Success) {
            a = shifted;
            return llt;
        }
    }
    throw NonConvergenceError("Hessian could not be regularized");
}

// argmin_u 0.5 (u-p)'A(u-p) - g'(u-p) + sum pen_j |u_j|
Vector lasso_subproblem(const Matrix& a, const Vector& g, const Vector& p, const Vector& pen)
{
    Vector u = p;
    Vector delta = Vector::Zero(p.size());  // u - p
    for (int sweep = 0; sweep < 10000; ++sweep) {
        double max_change = 0.0;
        for (Eigen::Index j = 0; j < p.size(); ++j) {
            const double ajj = a(j, j);
            const double cross = a.row(j).dot(delta) - ajj * delta(j);
            const double r = g(j) - cross + ajj * p(j);
            const double uj = soft_threshold(r, pen(j)) / ajj;
            max_change = std::max(max_change, std::abs(uj - u(j)));
            u(j) = uj;
            delta(j) = uj - p(j);
        }
        if (max_change < 1e-14 * (1.0 + u.cwiseAbs().maxCoeff())) {
            break;
        }
    }
    return u;
}

double kkt_residual(const Vector& g, const Vector& p, const Vector& pen)
{
    double worst = 0.0;
    for (Eigen::Index j = 0; j < p.size(); ++j) {
        const double pj = pen.size() ? pen(j) : 0.0;
        double r;
        if (pj == 0.0) {
            r = std::abs(g(j));
        } else if (p(j) == 0.0) {
            r = std::max(0.0, std::abs(g(j)) - pj);
        } else {
            r = std::abs(g(j) - pj * (p(j) > 0 ? 1.0 : -1.0));
        }
        worst = std::max(worst, r);
    }
    return worst;
}

}  // namespace

NewtonResult maximize(const Objective& objective, Vector start, const Vector& penalty,
                      const NewtonOptions& options)
{
    const bool penalized = penalty.size() > 0 && penalty.maxCoeff() > 0.0;
    if (penalty.size() != 0 && penalty.size() != start.size()) {
        throw DimensionError("penalty length does not match the parameter vector");
    }

    NewtonResult out;
    Vector p = std::move(start);
    Vector g;
    Matrix h;
    double f = objective(p, &g, &h);
    if (!std::isfinite(f)) {
        throw NonConvergenceError("objective is not finite at the starting point");
    }
    double pen_obj = f - penalty_value(penalty, p);

    int it = 0;
    bool converged = p.size() == 0;
    for (; it < options.max_iter && !converged; ++it) {
        Matrix a;
        auto llt = factor_negated(h, a);
        Vector d;
        if (penalized) {
            d = lasso_subproblem(a, g, p, penalty) - p;
        } else {
            d = llt.solve(g);
        }
        if (!d.allFinite()) {
            throw NonConvergenceError("Newton direction is not finite");
        }

        double step = 1.0;
        bool accepted = false;
        Vector candidate;
        double cand_obj = 0.0;
        for (int k = 0; k <= options.max_halvings; ++k, step *= 0.5) {
            candidate = p + step * d;
            const double fc = objective(candidate, nullptr, nullptr);
            cand_obj = fc - penalty_value(penalty, candidate);
            if (std::isfinite(cand_obj) && cand_obj >= pen_obj) {
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            // No ascent along the direction: we sit at the optimum up to
            // floating-point noise, or the model is ill-posed.
            const double scale = 1.0 + std::abs(pen_obj);
            converged = d.cwiseAbs().maxCoeff() < 1e-6 || kkt_residual(g, p, penalty) < 1e-7 * scale;
            break;
        }
        const double moved = (step * d).cwiseAbs().maxCoeff();
        p = std::move(candidate);
        f = objective(p, &g, &h);
        pen_obj = cand_obj;
        if (options.on_iterate) {
            options.on_iterate(p);
        }
        if (moved < options.param_tol) {
            converged = true;
        }
    }

    out.params = std::move(p);
    out.report.iterations = it;
    out.report.converged = converged;
    out.report.final_objective = pen_obj;
    out.report.gradient_norm = kkt_residual(g, out.params, penalty);
    return out;
}

Vector expand_penalty(const std::vector<double>& lambdas, Eigen::Index count, double n)
{
    Vector out = Vector::Zero(count);
    if (lambdas.empty()) {
        return out;
    }
    if (lambdas.size() == 1) {
        out.setConstant(n * lambdas.front());
        return out;
    }
    if (static_cast<Eigen::Index>(lambdas.size()) != count) {
        throw DimensionError("penalty vector has " + std::to_string(lambdas.size()) +
                             " entries, expected 1 or " + std::to_string(count));
    }
    for (Eigen::Index j = 0; j < count; ++j) {
        out(j) = n * lambdas[static_cast<std::size_t>(j)];
    }
    return out;
}

Standardizer Standardizer::fit(const Matrix& x, const Vector& weights)
{
    Standardizer s;
    const Eigen::Index p = x.cols();
    s.center = Vector::Zero(p);
    s.scale = Vector::Ones(p);
    double total = 0.0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        if (weights(i) > 0.0) {
            s.center += x.row(i).transpose();
            total += 1.0;
        }
    }
    if (total == 0.0) {
        return s;
    }
    s.center /= total;
    Vector ss = Vector::Zero(p);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        if (weights(i) > 0.0) {
            ss += (x.row(i).transpose() - s.center).cwiseAbs2();
        }
    }
    for (Eigen::Index j = 0; j < p; ++j) {
        const double sd = std::sqrt(ss(j) / total);
        if (!(sd > 1e-12)) {
            throw RankError("covariate column " + std::to_string(j + 1) +
                            " is constant among contributing subjects");
        }
        s.scale(j) = sd;
    }
    return s;
}

Matrix Standardizer::apply(const Matrix& x) const
{
    if (x.cols() == 0) {
        return x;
    }
    return (x.rowwise() - center.transpose()).array().rowwise() / scale.transpose().array();
}

Vector Standardizer::slopes_to_original(const Vector& b) const { return b.cwiseQuotient(scale); }

Vector Standardizer::slopes_to_standardized(const Vector& beta) const
{
    return beta.cwiseProduct(scale);
}

double Standardizer::intercept_shift(const Vector& b) const
{
    if (b.size() == 0) {
        return 0.0;
    }
    return -(b.cwiseQuotient(scale)).dot(center);
}

}  // namespace mixcure

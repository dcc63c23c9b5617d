#include "core/corrected_lasso.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include <Eigen/Eigenvalues>

#include "core/error.hpp"

namespace mknock {

Vector project_l1_ball(const Vector& v, double radius) {
    MKNOCK_REQUIRE(radius >= 0, ConfigError, "l1 projection: radius must be >= 0");
    if (v.lpNorm<1>() <= radius) return v;
    if (radius == 0) return Vector::Zero(v.size());
    std::vector<double> u(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) u[i] = std::abs(v(i));
    std::sort(u.begin(), u.end(), std::greater<>());
    double cum = 0.0, theta = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) {
        cum += u[k];
        const double t = (cum - radius) / static_cast<double>(k + 1);
        if (u[k] - t > 0) theta = t;
    }
    Vector out(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        const double a = std::max(std::abs(v(i)) - theta, 0.0);
        out(i) = v(i) < 0 ? -a : a;
    }
    return out;
}

double corrected_objective(const Matrix& q, const Vector& c, const Vector& beta) {
    return beta.dot(q * beta) - 2.0 * c.dot(beta);
}

Vector corrected_gradient(const Matrix& q, const Vector& c, const Vector& beta) {
    return 2.0 * (q * beta - c);
}

CorrectedFit corrected_lasso_fit(const Matrix& q, const Vector& c, double radius, const Vector& start,
                                 CorrectedOptions opt) {
    MKNOCK_REQUIRE(q.rows() == q.cols() && q.rows() == c.size() && start.size() == c.size(), ConfigError,
                   "corrected lasso: dimension mismatch");
    CorrectedFit fit;
    fit.beta = project_l1_ball(start, radius);
    if (c.size() == 0) {
        fit.converged = true;
        return fit;
    }
    const double lip = 2.0 * Eigen::SelfAdjointEigenSolver<Matrix>(q, Eigen::EigenvaluesOnly)
                                 .eigenvalues()
                                 .cwiseAbs()
                                 .maxCoeff();
    double step = lip > 0 ? 1.0 / lip : 1.0;
    fit.objective = corrected_objective(q, c, fit.beta);
    for (fit.iterations = 0; fit.iterations < opt.max_iter; ++fit.iterations) {
        const Vector grad = corrected_gradient(q, c, fit.beta);
        Vector next;
        double f_next = 0.0;
        for (int bt = 0;; ++bt) {
            next = project_l1_ball(fit.beta - step * grad, radius);
            f_next = corrected_objective(q, c, next);
            const Vector diff = next - fit.beta;
            if (!std::isfinite(f_next)) {
                fit.rejected = true;
                return fit;
            }
            if (f_next <= fit.objective + grad.dot(diff) + diff.squaredNorm() / (2.0 * step) + 1e-15) break;
            step *= 0.5;
            if (bt > 60) {
                fit.rejected = true;
                return fit;
            }
        }
        const double change = (next - fit.beta).cwiseAbs().maxCoeff();
        fit.beta = std::move(next);
        fit.objective = f_next;
        if (change < opt.tol) {
            fit.converged = true;
            ++fit.iterations;
            break;
        }
    }
    return fit;
}

}  // namespace mknock

#pragma once

#include "core/linalg.hpp"

namespace mknock {

/// Euclidean projection onto {b : ||b||_1 <= radius} (sort-based, exact).
Vector project_l1_ball(const Vector& v, double radius);

/// Corrected quadratic loss in Gram form: b^T Q b - 2 c^T b, with
/// Q = G - Sigma_aug (the constant term of the squared loss is dropped).
double corrected_objective(const Matrix& q, const Vector& c, const Vector& beta);
Vector corrected_gradient(const Matrix& q, const Vector& c, const Vector& beta);

struct CorrectedOptions {
    int max_iter = 2000;
    double tol = 1e-8;  // max coefficient change between iterates
};

struct CorrectedFit {
    Vector beta;
    double objective = 0.0;
    int iterations = 0;
    bool converged = false;
    bool rejected = false;  // non-finite objective or line-search breakdown
};

/// Projected gradient descent with backtracking on the l1 ball of the given
/// radius, started from `start` (projected first).
CorrectedFit corrected_lasso_fit(const Matrix& q, const Vector& c, double radius, const Vector& start,
                                 CorrectedOptions opt = {});

}  // namespace mknock

#pragma once

#include "core/design.hpp"
#include "core/lasso.hpp"
#include "core/linalg.hpp"

namespace mknock {

/// Weighted quadratic surrogate of the GLM loss around a preliminary fit:
/// (1/n) sum_i v_i (z_i - b0 - x_i beta)^2 with IRLS weights v and working
/// response z (v = 1, z = y for the Gaussian family). Stored in Gram form
/// after weighted centering, so the intercept profiles out.
struct WorkingProblem {
    Matrix gram;      // Xc^T V Xc / n
    Vector c;         // Xc^T V zc / n
    Vector x_center;  // weighted column means
    double z_center = 0.0;
    double mean_weight = 1.0;

    double intercept(const Vector& beta) const { return z_center - x_center.dot(beta); }
};

/// `prelim` is required for the binomial family and ignored for the Gaussian one.
WorkingProblem linearize(const Matrix& x, const Vector& y, Family family, const LassoFit* prelim);

}  // namespace mknock

#pragma once

#include <Eigen/Dense>

#include "core/rng.hpp"

namespace mknock {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using IntMatrix = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic>;

// Eigenvalue tolerance for positive-semidefiniteness checks.
inline constexpr double kPsdTol = 1e-8;

inline double sigmoid(double x) {
    if (x >= 0) {
        const double e = std::exp(-x);
        return 1.0 / (1.0 + e);
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

inline double logit(double p) { return std::log(p / (1.0 - p)); }

double min_eigenvalue(const Matrix& sym);

bool is_symmetric(const Matrix& m, double tol = 1e-10);

bool cholesky_ok(const Matrix& sym);

/// Returns L with L * L^T == c for a symmetric PSD matrix. Uses Cholesky when
/// possible and a clipped eigen-decomposition otherwise. Throws MatrixError if
/// the smallest eigenvalue is below -kPsdTol relative to the largest diagonal.
Matrix psd_factor(const Matrix& c);

/// Standard deviations (sqrt of the diagonal) and correlation form of a covariance.
Vector std_devs(const Matrix& cov);
Matrix cov_to_corr(const Matrix& cov);

/// Draws n rows of N(0, L L^T).
Matrix sample_gaussian_rows(Eigen::Index n, const Matrix& factor, Stream& rng);

/// Column means and unbiased sample covariance.
Vector column_means(const Matrix& x);
Matrix sample_covariance(const Matrix& x);

}  // namespace mknock

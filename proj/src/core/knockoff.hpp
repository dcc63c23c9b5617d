#pragma once

#include <span>
#include <string>
#include <vector>

#include "core/linalg.hpp"
#include "core/rng.hpp"

namespace mknock {

struct GaussianModel {
    Vector mu;
    Matrix sigma;
    Matrix chol;  // lower Cholesky factor of sigma
    double shrink = 0.0;
    std::vector<std::string> warnings;
};

/// Negative shrink selects the default policy: 0.01 when n > 4p, otherwise the
/// analytic Ledoit-Wolf weight toward the diagonal.
inline constexpr double kDefaultShrink = -1.0;

/// mu = column means; sigma = (1 - shrink) * S + shrink * diag(S). The shrink
/// weight is raised automatically until sigma admits a Cholesky factor.
GaussianModel fit_gaussian(const Matrix& w, double shrink = kDefaultShrink);

/// Averages per-copy means and covariances before shrinkage.
GaussianModel fit_gaussian_pooled(std::span<const Matrix> copies, double shrink = kDefaultShrink);

double ledoit_wolf_diagonal_weight(const Matrix& w);

enum class SSolver { Equi, Block };

/// s_j = min(2 * lambda_min(corr), 1) * sigma_jj.
Vector solve_s_equi(const Matrix& sigma);

struct BlockSolution {
    Vector s;
    double gamma = 1.0;
};

/// Equicorrelated s per contiguous block, stacked, then scaled by the largest
/// gamma in (0, 1] keeping 2 Sigma - diag(s) PSD (30 bisection steps).
BlockSolution solve_s_block(const Matrix& sigma, int block_size = 10);

Vector solve_s(const Matrix& sigma, SSolver solver, int block_size = 10);

/// Smallest eigenvalue of 2 diag(s) - diag(s) Sigma^{-1} diag(s).
double schur_min_eigenvalue(const Matrix& sigma, const Vector& s);

struct KnockoffPlan {
    GaussianModel model;
    Vector s;
    Matrix cond_mean_map;  // Sigma^{-1} diag(s)
    Matrix cond_cov_factor;  // L with L L^T = 2 diag(s) - diag(s) Sigma^{-1} diag(s)
};

KnockoffPlan make_plan(GaussianModel model, const Vector& s);
KnockoffPlan make_plan(GaussianModel model, SSolver solver = SSolver::Equi, int block_size = 10);

/// Row i of the result is drawn from N(W_i - (W_i - mu) Sigma^{-1} diag(s), cond cov)
/// using the sub-stream rng.derive(i).
Matrix sample_knockoffs(const Matrix& w, const KnockoffPlan& plan, const Stream& rng);

}  // namespace mknock

#pragma once

#include <cstdint>
#include <vector>

#include "core/linalg.hpp"
#include "core/rng.hpp"

namespace mknock {

enum class Family { Gaussian, Binomial };

/// Binomial when every outcome is 0 or 1, Gaussian otherwise.
Family detect_family(const Vector& y);

/// [W W~] presented to the solvers with columns in a seeded random order.
/// Solver column c holds augmented column perm[c] (originals are 0..p-1,
/// knockoffs p..2p-1).
struct AugmentedDesign {
    Matrix columns;
    Vector y;
    Family family = Family::Binomial;
    std::vector<int> perm;
    std::uint64_t interleave_key = 0;

    Eigen::Index n() const { return columns.rows(); }
    Eigen::Index p() const { return columns.cols() / 2; }
};

AugmentedDesign make_design(const Matrix& w, const Matrix& w_knockoff, const Vector& y, Family family,
                            const Stream& rng);

/// Identity ordering (used by tests and oracles).
AugmentedDesign make_design_unpermuted(const Matrix& w, const Matrix& w_knockoff, const Vector& y,
                                       Family family);

/// Maps a per-solver-column vector back to the augmented [original, knockoff] order.
Vector unpermute(const AugmentedDesign& d, const Vector& solver_values);

/// Column-centered, unit (population) variance copy; zero-variance columns stay zero.
struct Standardized {
    Matrix x;
    Vector center;
    Vector scale;
};

Standardized standardize(const Matrix& x);

/// Balanced random fold labels in [0, k).
std::vector<int> assign_folds(Eigen::Index n, int k, Stream& rng);

/// Rows of x (or entries of v) listed in idx.
Matrix take_rows(const Matrix& x, const std::vector<int>& idx);
Vector take_rows(const Vector& v, const std::vector<int>& idx);

/// 100-point log-spaced grid from lambda_max down to ratio * lambda_max.
std::vector<double> log_grid(double top, double ratio, int points);

double binomial_deviance(const Vector& y, const Vector& eta);
double gaussian_deviance(const Vector& y, const Vector& eta);
double deviance(Family f, const Vector& y, const Vector& eta);

}  // namespace mknock

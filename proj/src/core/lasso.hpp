#pragma once

#include <vector>

#include "core/design.hpp"
#include "core/error.hpp"
#include "core/linalg.hpp"
#include "core/rng.hpp"

namespace mknock {

struct LassoOptions {
    double tol = 1e-7;        // max weighted squared coefficient change, x_j'Wx_j/n * dbeta_j^2
    int max_passes = 10000;   // coordinate-descent passes per lambda
    int max_irls = 100;       // binomial outer iterations per lambda
};

struct LassoFit {
    double intercept = 0.0;
    Vector beta;
    double deviance = 0.0;
    int passes = 0;
};

class LassoNonConvergence : public SolverError {
public:
    LassoNonConvergence(const std::string& msg, LassoFit last) : SolverError(msg), last_(std::move(last)) {}
    const LassoFit& last_iterate() const { return last_; }

private:
    LassoFit last_;
};

/// Cyclic coordinate descent for
///   Gaussian: (1/2n) ||y - b0 - X beta||^2 + lambda ||beta||_1
///   Binomial: -(1/n) loglik(b0 + X beta) + lambda ||beta||_1  (IRLS outer loop)
/// Each fit() warm-starts from the previous solution. `x` must outlive the solver.
class CoordinateDescent {
public:
    CoordinateDescent(const Matrix& x, const Vector& y, Family family, LassoOptions opt = {});

    LassoFit fit(double lambda);
    void reset();
    double null_deviance() const { return null_dev_; }

private:
    // Weighted least-squares inner loop on the current residual.
    int solve_wls(double lambda, const Vector* weights, int pass_budget);
    LassoFit snapshot(int passes) const;

    const Matrix& x_;
    Vector y_;
    Family family_;
    LassoOptions opt_;
    double n_;
    Vector beta_;
    double b0_ = 0.0;
    Vector r_;   // working residual
    Matrix xw_;  // weights * columns (binomial)
    Vector xv_;  // weighted column second moments
    Vector eta_;
    double null_dev_ = 0.0;
};

/// max_j |x_j^T (y - ybar)| / n.
double lambda_max(const Matrix& x, const Vector& y);

/// Single fit on the internally standardized design (solver column order,
/// coefficients on the standardized scale).
LassoFit lasso_fit(const AugmentedDesign& design, double lambda, LassoOptions opt = {});

struct LassoPath {
    std::vector<double> lambdas;
    std::vector<LassoFit> fits;  // may stop short of lambdas.size() on saturation
};

/// Warm-started path; stops early once the deviance ratio exceeds 0.999.
LassoPath lasso_path(const Matrix& x, const Vector& y, Family family, const std::vector<double>& grid,
                     LassoOptions opt = {});

struct LassoCv {
    std::vector<double> grid;
    Vector cv_deviance;  // mean held-out deviance per grid point
    int best = 0;
    LassoPath full;
    std::vector<int> folds;
    std::vector<LassoFit> fold_best;  // per-fold fit at grid[best]

    const LassoFit& best_fit() const;
    double best_lambda() const { return grid[best]; }
};

struct CvOptions {
    int folds = 10;
    int n_lambda = 100;
    double lambda_min_ratio = 1e-3;
};

/// K-fold cross-validated lasso on an already standardized matrix.
LassoCv lasso_cv(const Matrix& x, const Vector& y, Family family, const CvOptions& cv, Stream& rng,
                 LassoOptions opt = {});

/// Linear predictor b0 + X beta.
Vector linear_predictor(const Matrix& x, const LassoFit& fit);

/// Per solver column: largest grid lambda at which the coefficient is nonzero
/// (|beta| > 1e-9), 0 if it never enters.
Vector entry_lambdas(const LassoPath& path, Eigen::Index d);

}  // namespace mknock

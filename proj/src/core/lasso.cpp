#include "core/lasso.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mknock {

namespace {

inline double soft_threshold(double z, double g) {
    if (z > g) return z - g;
    if (z < -g) return z + g;
    return 0.0;
}

constexpr double kMinWeight = 1e-5;

}  // namespace

CoordinateDescent::CoordinateDescent(const Matrix& x, const Vector& y, Family family, LassoOptions opt)
    : x_(x), y_(y), family_(family), opt_(opt), n_(static_cast<double>(x.rows())) {
    MKNOCK_REQUIRE(x.rows() == y.size(), ConfigError, "lasso: outcome length mismatch");
    MKNOCK_REQUIRE(x.rows() >= 2, DataError, "lasso: need at least two rows");
    reset();
    const double ybar = y_.mean();
    Vector eta0 = Vector::Constant(y_.size(), family_ == Family::Binomial
                                                  ? std::log(std::clamp(ybar, 1e-9, 1 - 1e-9) /
                                                             (1 - std::clamp(ybar, 1e-9, 1 - 1e-9)))
                                                  : ybar);
    null_dev_ = deviance(family_, y_, eta0);
}

void CoordinateDescent::reset() {
    beta_ = Vector::Zero(x_.cols());
    const double ybar = y_.mean();
    if (family_ == Family::Binomial) {
        const double pbar = std::clamp(ybar, 1e-9, 1 - 1e-9);
        b0_ = std::log(pbar / (1 - pbar));
    } else {
        b0_ = ybar;
    }
    eta_ = Vector::Constant(y_.size(), b0_);
    r_ = y_ - eta_;
    xv_ = x_.colwise().squaredNorm().transpose() / n_;
}

int CoordinateDescent::solve_wls(double lambda, const Vector* weights, int pass_budget) {
    const Eigen::Index d = x_.cols();
    const bool weighted = weights != nullptr;
    const double sum_w = weighted ? weights->sum() : n_;
    if (weighted) {
        xw_ = x_.array().colwise() * weights->array();
        xv_ = (xw_.cwiseProduct(x_)).colwise().sum().transpose() / n_;
    }
    const Matrix& xg = weighted ? xw_ : x_;

    auto update = [&](Eigen::Index j) {
        if (xv_(j) <= 0) return 0.0;
        const double g = xg.col(j).dot(r_) / n_;
        const double old = beta_(j);
        const double nw = soft_threshold(g + xv_(j) * old, lambda) / xv_(j);
        const double delta = nw - old;
        if (delta != 0.0) {
            beta_(j) = nw;
            r_.noalias() -= delta * x_.col(j);
        }
        return xv_(j) * delta * delta;
    };
    auto update_intercept = [&]() {
        const double d0 = (weighted ? weights->dot(r_) : r_.sum()) / sum_w;
        if (d0 != 0.0) {
            b0_ += d0;
            r_.array() -= d0;
        }
        return (sum_w / n_) * d0 * d0;
    };

    int passes = 0;
    std::vector<Eigen::Index> active;
    for (;;) {
        double change = 0.0;
        for (Eigen::Index j = 0; j < d; ++j) change = std::max(change, update(j));
        change = std::max(change, update_intercept());
        ++passes;
        if (change < opt_.tol) return passes;
        if (passes >= pass_budget) return -passes;

        active.clear();
        for (Eigen::Index j = 0; j < d; ++j)
            if (beta_(j) != 0.0) active.push_back(j);
        for (;;) {
            double ac = 0.0;
            for (Eigen::Index j : active) ac = std::max(ac, update(j));
            ac = std::max(ac, update_intercept());
            ++passes;
            if (ac < opt_.tol) break;
            if (passes >= pass_budget) return -passes;
        }
    }
}

LassoFit CoordinateDescent::snapshot(int passes) const {
    LassoFit f;
    f.intercept = b0_;
    f.beta = beta_;
    f.passes = passes;
    return f;
}

LassoFit CoordinateDescent::fit(double lambda) {
    MKNOCK_REQUIRE(lambda >= 0, ConfigError, "lasso: lambda must be nonnegative");
    if (family_ == Family::Gaussian) {
        r_ = y_ - (x_ * beta_).array().matrix() - Vector::Constant(y_.size(), b0_);
        const int passes = solve_wls(lambda, nullptr, opt_.max_passes);
        if (passes < 0) throw LassoNonConvergence("lasso coordinate descent did not converge", snapshot(-passes));
        LassoFit f = snapshot(passes);
        f.deviance = r_.squaredNorm();
        return f;
    }

    int total = 0;
    Vector w(y_.size());

    for (int outer = 0; outer < opt_.max_irls; ++outer) {
        Vector z(y_.size());
        for (Eigen::Index i = 0; i < y_.size(); ++i) {
            const double mu = sigmoid(eta_(i));
            w(i) = std::max(mu * (1.0 - mu), kMinWeight);
            z(i) = eta_(i) + (y_(i) - mu) / w(i);
        }
        r_ = z - eta_;
        const Vector beta_old = beta_;
        const double b0_old = b0_;
        const double w_mean = w.mean();
        const int passes = solve_wls(lambda, &w, opt_.max_passes - total);
        if (passes < 0) {
            throw LassoNonConvergence("binomial lasso did not converge within the pass budget",
                                      snapshot(total - passes));
        }
        total += passes;
        eta_ = z - r_;
        const double change = std::max((xv_.array() * (beta_ - beta_old).array().square()).maxCoeff(),
                                       w_mean * (b0_ - b0_old) * (b0_ - b0_old));
        if (change < opt_.tol) {
            LassoFit f = snapshot(total);
            f.deviance = binomial_deviance(y_, eta_);
            return f;
        }
    }
    throw LassoNonConvergence("binomial lasso IRLS did not converge", snapshot(total));
}

double lambda_max(const Matrix& x, const Vector& y) {
    const Vector yc = y.array() - y.mean();
    return (x.transpose() * yc).cwiseAbs().maxCoeff() / static_cast<double>(x.rows());
}

LassoFit lasso_fit(const AugmentedDesign& design, double lambda, LassoOptions opt) {
    const Standardized s = standardize(design.columns);
    CoordinateDescent cd(s.x, design.y, design.family, opt);
    return cd.fit(lambda);
}

LassoPath lasso_path(const Matrix& x, const Vector& y, Family family, const std::vector<double>& grid,
                     LassoOptions opt) {
    LassoPath path;
    path.lambdas = grid;
    CoordinateDescent cd(x, y, family, opt);
    const double null_dev = cd.null_deviance();
    for (double lam : grid) {
        path.fits.push_back(cd.fit(lam));
        if (null_dev > 0 && 1.0 - path.fits.back().deviance / null_dev > 0.999) break;
    }
    return path;
}

const LassoFit& LassoCv::best_fit() const {
    const auto idx = std::min<std::size_t>(static_cast<std::size_t>(best), full.fits.size() - 1);
    return full.fits[idx];
}

Vector linear_predictor(const Matrix& x, const LassoFit& fit) {
    return (x * fit.beta).array() + fit.intercept;
}

LassoCv lasso_cv(const Matrix& x, const Vector& y, Family family, const CvOptions& cv, Stream& rng,
                 LassoOptions opt) {
    LassoCv out;
    const double top = lambda_max(x, y);
    out.grid = log_grid(top > 0 ? top : 1.0, cv.lambda_min_ratio, cv.n_lambda);
    out.full = lasso_path(x, y, family, out.grid, opt);
    out.folds = assign_folds(x.rows(), cv.folds, rng);

    const auto g = static_cast<Eigen::Index>(out.grid.size());
    Vector total = Vector::Zero(g);
    std::vector<LassoPath> fold_paths(cv.folds);
    for (int f = 0; f < cv.folds; ++f) {
        std::vector<int> train, test;
        for (std::size_t i = 0; i < out.folds.size(); ++i) (out.folds[i] == f ? test : train).push_back(static_cast<int>(i));
        const Matrix xtr = take_rows(x, train), xte = take_rows(x, test);
        const Vector ytr = take_rows(y, train), yte = take_rows(y, test);
        fold_paths[f] = lasso_path(xtr, ytr, family, out.grid, opt);
        const auto& fits = fold_paths[f].fits;
        for (Eigen::Index k = 0; k < g; ++k) {
            const auto& fit = fits[std::min<std::size_t>(static_cast<std::size_t>(k), fits.size() - 1)];
            total(k) += deviance(family, yte, linear_predictor(xte, fit));
        }
    }
    out.cv_deviance = total / static_cast<double>(x.rows());
    out.cv_deviance.minCoeff(&out.best);
    for (auto& fp : fold_paths)
        out.fold_best.push_back(fp.fits[std::min<std::size_t>(static_cast<std::size_t>(out.best), fp.fits.size() - 1)]);
    return out;
}

Vector entry_lambdas(const LassoPath& path, Eigen::Index d) {
    Vector z = Vector::Zero(d);
    for (std::size_t k = path.fits.size(); k-- > 0;) {
        const auto& b = path.fits[k].beta;
        for (Eigen::Index j = 0; j < d; ++j)
            if (std::abs(b(j)) > 1e-9) z(j) = path.lambdas[k];
    }
    return z;
}

}  // namespace mknock

#include "core/knockoff.hpp"

#include <algorithm>
#include <random>

#include <spdlog/spdlog.h>

#include "core/error.hpp"

namespace mknock {

double ledoit_wolf_diagonal_weight(const Matrix& w) {
    const Eigen::Index n = w.rows(), p = w.cols();
    if (n < 3 || p < 2) return 1.0;
    const Matrix xc = w.rowwise() - w.colwise().mean();
    const double nn = static_cast<double>(n);
    const Matrix s = (xc.transpose() * xc) / (nn - 1.0);
    double num = 0.0, den = 0.0;
    for (Eigen::Index a = 0; a < p; ++a) {
        for (Eigen::Index b = a + 1; b < p; ++b) {
            const Eigen::ArrayXd prod = xc.col(a).array() * xc.col(b).array();
            const double mean = prod.mean();
            const double var_sab = nn / std::pow(nn - 1.0, 3) * (prod - mean).square().sum();
            num += var_sab;
            den += s(a, b) * s(a, b);
        }
    }
    if (den <= 0) return 1.0;
    return std::clamp(num / den, 0.0, 1.0);
}

namespace {

GaussianModel finish_model(Vector mu, Matrix cov, Eigen::Index n, double shrink, double lw_weight) {
    const Eigen::Index p = cov.rows();
    GaussianModel m;
    m.mu = std::move(mu);

    Vector diag = cov.diagonal();
    const double positive_mean = [&] {
        double s = 0; int c = 0;
        for (Eigen::Index j = 0; j < p; ++j) if (diag(j) > 0) { s += diag(j); ++c; }
        return c ? s / c : 1.0;
    }();
    for (Eigen::Index j = 0; j < p; ++j) {
        if (diag(j) <= 1e-12 * positive_mean) {
            m.warnings.push_back("column " + std::to_string(j) + " is constant; covariance is rank deficient");
            spdlog::warn("{}", m.warnings.back());
            cov.row(j).setZero();
            cov.col(j).setZero();
            cov(j, j) = 1e-6 * positive_mean;
            diag(j) = cov(j, j);
        }
    }

    double weight = shrink >= 0 ? shrink : (n > 4 * p ? 0.01 : lw_weight);
    weight = std::clamp(weight, 0.0, 1.0);
    for (;;) {
        Matrix sigma = (1.0 - weight) * cov;
        sigma.diagonal() = diag;
        Eigen::LLT<Matrix> llt(sigma);
        if (llt.info() == Eigen::Success) {
            m.sigma = std::move(sigma);
            m.chol = llt.matrixL();
            m.shrink = weight;
            return m;
        }
        if (weight >= 1.0) throw MatrixError("covariance is not positive definite even after full shrinkage");
        const double next = std::min(1.0, std::max(2.0 * weight, 0.01));
        m.warnings.push_back("covariance not positive definite; shrinkage raised to " + std::to_string(next));
        spdlog::warn("{}", m.warnings.back());
        weight = next;
    }
}

}  // namespace

GaussianModel fit_gaussian(const Matrix& w, double shrink) {
    MKNOCK_REQUIRE(w.rows() >= 2, DataError, "fit_gaussian needs at least two rows");
    MKNOCK_REQUIRE(shrink <= 1.0, ConfigError, "shrink must lie in [0, 1]");
    const bool need_lw = shrink < 0 && !(w.rows() > 4 * w.cols());
    return finish_model(column_means(w), sample_covariance(w), w.rows(), shrink,
                        need_lw ? ledoit_wolf_diagonal_weight(w) : 0.0);
}

GaussianModel fit_gaussian_pooled(std::span<const Matrix> copies, double shrink) {
    MKNOCK_REQUIRE(!copies.empty(), ConfigError, "fit_gaussian_pooled needs at least one copy");
    const Matrix& first = copies.front();
    Vector mu = Vector::Zero(first.cols());
    Matrix cov = Matrix::Zero(first.cols(), first.cols());
    double lw = 0.0;
    const bool need_lw = shrink < 0 && !(first.rows() > 4 * first.cols());
    for (const auto& c : copies) {
        mu += column_means(c);
        cov += sample_covariance(c);
        if (need_lw) lw += ledoit_wolf_diagonal_weight(c);
    }
    const double k = static_cast<double>(copies.size());
    return finish_model(mu / k, cov / k, first.rows(), shrink, lw / k);
}

Vector solve_s_equi(const Matrix& sigma) {
    const Matrix corr = cov_to_corr(sigma);
    const double lmin = min_eigenvalue(corr);
    if (lmin <= 0) throw MatrixError("solve_s_equi: covariance is not positive definite");
    const double s = std::min(2.0 * lmin, 1.0);
    return s * sigma.diagonal();
}

BlockSolution solve_s_block(const Matrix& sigma, int block_size) {
    MKNOCK_REQUIRE(block_size >= 1, ConfigError, "block size must be positive");
    const Eigen::Index p = sigma.rows();
    const Matrix corr = cov_to_corr(sigma);
    if (min_eigenvalue(corr) <= 0) throw MatrixError("solve_s_block: covariance is not positive definite");

    Vector s_corr(p);
    for (Eigen::Index start = 0; start < p; start += block_size) {
        const Eigen::Index len = std::min<Eigen::Index>(block_size, p - start);
        const double lmin = min_eigenvalue(corr.block(start, start, len, len));
        s_corr.segment(start, len).setConstant(std::min(2.0 * lmin, 1.0));
    }

    auto feasible = [&](double gamma) {
        Matrix m = 2.0 * corr;
        m.diagonal() -= gamma * s_corr;
        return min_eigenvalue(m) >= 0.0;
    };
    BlockSolution out;
    if (!feasible(1.0)) {
        double lo = 0.0, hi = 1.0;
        for (int it = 0; it < 30; ++it) {
            const double mid = 0.5 * (lo + hi);
            (feasible(mid) ? lo : hi) = mid;
        }
        out.gamma = lo;
    }
    out.s = (out.gamma * s_corr).cwiseProduct(sigma.diagonal());
    return out;
}

Vector solve_s(const Matrix& sigma, SSolver solver, int block_size) {
    return solver == SSolver::Equi ? solve_s_equi(sigma) : solve_s_block(sigma, block_size).s;
}

double schur_min_eigenvalue(const Matrix& sigma, const Vector& s) {
    const Matrix sinv_d = sigma.llt().solve(Matrix(s.asDiagonal()));
    Matrix c = -(s.asDiagonal() * sinv_d);
    c.diagonal() += 2.0 * s;
    return min_eigenvalue(0.5 * (c + c.transpose()));
}

KnockoffPlan make_plan(GaussianModel model, const Vector& s) {
    const Eigen::Index p = model.sigma.rows();
    MKNOCK_REQUIRE(s.size() == p, ConfigError, "s has the wrong length");
    MKNOCK_REQUIRE(s.minCoeff() >= 0, ConfigError, "s must be nonnegative");
    KnockoffPlan plan;
    plan.s = s;
    Eigen::LLT<Matrix> llt(model.sigma);
    if (llt.info() != Eigen::Success) throw MatrixError("knockoff plan: covariance is not positive definite");
    plan.cond_mean_map = llt.solve(Matrix(s.asDiagonal()));
    Matrix c = -(s.asDiagonal() * plan.cond_mean_map);
    c.diagonal() += 2.0 * s;
    c = 0.5 * (c + c.transpose());
    plan.cond_cov_factor = psd_factor(c);
    plan.model = std::move(model);
    return plan;
}

KnockoffPlan make_plan(GaussianModel model, SSolver solver, int block_size) {
    const Vector s = solve_s(model.sigma, solver, block_size);
    return make_plan(std::move(model), s);
}

Matrix sample_knockoffs(const Matrix& w, const KnockoffPlan& plan, const Stream& rng) {
    const Eigen::Index n = w.rows(), p = w.cols();
    MKNOCK_REQUIRE(p == plan.s.size(), ConfigError, "knockoff plan dimension differs from the data");
    const Matrix centered = w.rowwise() - plan.model.mu.transpose();
    Matrix out = w - centered * plan.cond_mean_map;
    std::normal_distribution<double> norm(0.0, 1.0);
    Vector z(p);
    for (Eigen::Index i = 0; i < n; ++i) {
        Stream row_rng = rng.derive(static_cast<std::uint64_t>(i));
        for (Eigen::Index j = 0; j < p; ++j) z(j) = norm(row_rng);
        out.row(i) += (plan.cond_cov_factor * z).transpose();
        norm.reset();
    }
    return out;
}

}  // namespace mknock

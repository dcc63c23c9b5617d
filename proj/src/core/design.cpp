#include "core/design.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "core/error.hpp"

namespace mknock {

Family detect_family(const Vector& y) {
    for (Eigen::Index i = 0; i < y.size(); ++i)
        if (y(i) != 0.0 && y(i) != 1.0) return Family::Gaussian;
    return Family::Binomial;
}

namespace {

AugmentedDesign build(const Matrix& w, const Matrix& wk, const Vector& y, Family family,
                      std::vector<int> perm, std::uint64_t key) {
    MKNOCK_REQUIRE(w.rows() == wk.rows() && w.cols() == wk.cols(), ConfigError,
                   "design: knockoff matrix differs in shape");
    MKNOCK_REQUIRE(y.size() == w.rows(), ConfigError, "design: outcome length mismatch");
    const Eigen::Index p = w.cols();
    AugmentedDesign d;
    d.columns.resize(w.rows(), 2 * p);
    for (Eigen::Index c = 0; c < 2 * p; ++c) {
        const int a = perm[c];
        d.columns.col(c) = a < p ? w.col(a) : wk.col(a - p);
    }
    d.y = y;
    d.family = family;
    d.perm = std::move(perm);
    d.interleave_key = key;
    return d;
}

}  // namespace

AugmentedDesign make_design(const Matrix& w, const Matrix& w_knockoff, const Vector& y, Family family,
                            const Stream& rng) {
    std::vector<int> perm(2 * w.cols());
    std::iota(perm.begin(), perm.end(), 0);
    Stream s = rng;
    std::shuffle(perm.begin(), perm.end(), s);
    return build(w, w_knockoff, y, family, std::move(perm), rng.key());
}

AugmentedDesign make_design_unpermuted(const Matrix& w, const Matrix& w_knockoff, const Vector& y,
                                       Family family) {
    std::vector<int> perm(2 * w.cols());
    std::iota(perm.begin(), perm.end(), 0);
    return build(w, w_knockoff, y, family, std::move(perm), 0);
}

Vector unpermute(const AugmentedDesign& d, const Vector& solver_values) {
    Vector out(solver_values.size());
    for (std::size_t c = 0; c < d.perm.size(); ++c) out(d.perm[c]) = solver_values(static_cast<Eigen::Index>(c));
    return out;
}

Standardized standardize(const Matrix& x) {
    Standardized s;
    const double n = static_cast<double>(x.rows());
    s.center = x.colwise().mean().transpose();
    s.x = x.rowwise() - s.center.transpose();
    s.scale.resize(x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        const double sd = std::sqrt(s.x.col(j).squaredNorm() / n);
        if (sd > 1e-12) {
            s.scale(j) = sd;
            s.x.col(j) /= sd;
        } else {
            s.scale(j) = 1.0;
            s.x.col(j).setZero();
        }
    }
    return s;
}

std::vector<int> assign_folds(Eigen::Index n, int k, Stream& rng) {
    MKNOCK_REQUIRE(k >= 2 && k <= n, ConfigError, "cross-validation needs 2 <= folds <= n");
    std::vector<int> folds(n);
    for (Eigen::Index i = 0; i < n; ++i) folds[i] = static_cast<int>(i % k);
    std::shuffle(folds.begin(), folds.end(), rng);
    return folds;
}

Matrix take_rows(const Matrix& x, const std::vector<int>& idx) {
    Matrix out(static_cast<Eigen::Index>(idx.size()), x.cols());
    for (std::size_t r = 0; r < idx.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = x.row(idx[r]);
    return out;
}

Vector take_rows(const Vector& v, const std::vector<int>& idx) {
    Vector out(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t r = 0; r < idx.size(); ++r) out(static_cast<Eigen::Index>(r)) = v(idx[r]);
    return out;
}

std::vector<double> log_grid(double top, double ratio, int points) {
    std::vector<double> g(points);
    if (points == 1) {
        g[0] = top;
        return g;
    }
    const double step = std::log(ratio) / (points - 1);
    for (int k = 0; k < points; ++k) g[k] = top * std::exp(step * k);
    return g;
}

double binomial_deviance(const Vector& y, const Vector& eta) {
    double d = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        // -2 log-likelihood, computed stably: log(1 + e^eta) - y * eta.
        const double e = eta(i);
        const double softplus = e > 0 ? e + std::log1p(std::exp(-e)) : std::log1p(std::exp(e));
        d += 2.0 * (softplus - y(i) * e);
    }
    return d;
}

double gaussian_deviance(const Vector& y, const Vector& eta) { return (y - eta).squaredNorm(); }

double deviance(Family f, const Vector& y, const Vector& eta) {
    return f == Family::Binomial ? binomial_deviance(y, eta) : gaussian_deviance(y, eta);
}

}  // namespace mknock

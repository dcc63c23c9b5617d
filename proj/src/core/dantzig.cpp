#include "core/dantzig.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/LU>

#include "core/error.hpp"

namespace mknock {

namespace {

constexpr double kPivotTol = 1e-9;
constexpr long kRefactorEvery = 200;

}  // namespace

// Columns: u (d), v (d), slacks (2d). Rows i < d:  G_i beta - delta |beta|_1 + s_i = c_i + bound,
// rows d + i: -G_i beta - delta |beta|_1 + s_{d+i} = -c_i + bound, with |beta|_1 = sum(u + v).
DantzigLp::DantzigLp(Matrix gram, Vector c, double delta)
    : gram_(std::move(gram)), c_(std::move(c)), delta_(delta) {
    d_ = gram_.rows();
    MKNOCK_REQUIRE(gram_.cols() == d_ && c_.size() == d_, ConfigError, "dantzig: dimension mismatch");
    MKNOCK_REQUIRE(delta_ >= 0 && std::isfinite(delta_), ConfigError, "dantzig: delta must be finite and >= 0");
    m_ = 2 * d_;
    cols_ = 4 * d_;
    t_ = constraints();
    bc_.resize(m_);
    bc_ << c_, -c_;
    b1_ = Vector::Ones(m_);
    rc_ = Vector::Zero(cols_);
    rc_.head(2 * d_).setOnes();
    basis_.resize(m_);
    for (Eigen::Index r = 0; r < m_; ++r) basis_[r] = 2 * d_ + r;
    beta_ = Vector::Zero(d_);
}

void DantzigLp::pivot(Eigen::Index row, Eigen::Index col) {
    const double piv = t_(row, col);
    t_.row(row) /= piv;
    bc_(row) /= piv;
    b1_(row) /= piv;
    Vector f = t_.col(col);
    f(row) = 0.0;
    t_.noalias() -= f * t_.row(row);
    bc_.noalias() -= f * bc_(row);
    b1_.noalias() -= f * b1_(row);
    rc_.noalias() -= rc_(col) * t_.row(row).transpose();
    t_.col(col).setZero();
    t_(row, col) = 1.0;
    rc_(col) = 0.0;
    basis_[row] = col;
    ++total_pivots_;
    ++since_refactor_;
}

Matrix DantzigLp::constraints() const {
    Matrix a(m_, cols_);
    a.block(0, 0, d_, d_) = gram_;
    a.block(d_, 0, d_, d_) = -gram_;
    a.block(0, d_, m_, d_) = -a.block(0, 0, m_, d_);
    a.leftCols(2 * d_).array() -= delta_;
    a.block(0, 2 * d_, m_, m_).setIdentity();
    return a;
}

void DantzigLp::refactor() {
    const Matrix a = constraints();
    Matrix b(m_, m_);
    Vector cost_b(m_);
    for (Eigen::Index r = 0; r < m_; ++r) {
        b.col(r) = a.col(basis_[r]);
        cost_b(r) = basis_[r] < 2 * d_ ? 1.0 : 0.0;
    }
    Eigen::FullPivLU<Matrix> lu(b);
    if (!lu.isInvertible()) throw SolverError("dantzig: basis became singular");
    t_ = lu.solve(a);
    Vector b0(m_);
    b0 << c_, -c_;
    bc_ = lu.solve(b0);
    b1_ = lu.solve(Vector::Ones(m_));
    rc_ = -(t_.transpose() * cost_b);
    rc_.head(2 * d_).array() += 1.0;
    for (Eigen::Index r = 0; r < m_; ++r) {
        t_.col(basis_[r]).setZero();
        t_(r, basis_[r]) = 1.0;
        rc_(basis_[r]) = 0.0;
    }
    since_refactor_ = 0;
}

double DantzigLp::violation(double bound) const {
    return (c_ - gram_ * beta_).cwiseAbs().maxCoeff() - bound - delta_ * beta_.lpNorm<1>();
}

const Vector& DantzigLp::solve(double bound) {
    MKNOCK_REQUIRE(bound >= 0 && std::isfinite(bound), ConfigError, "dantzig: bound must be finite and >= 0");
    const double scale = 1.0 + (d_ > 0 ? c_.cwiseAbs().maxCoeff() : 0.0);
    const double feas_tol = 1e-10 * scale;
    const long cap = 50 * m_ + 1000;
    int repairs = 0;
    for (long it = 0;; ++it) {
        if (it > cap) throw SolverError("dantzig: iteration limit reached");
        if (since_refactor_ >= kRefactorEvery) refactor();
        const Vector x = bc_ + bound * b1_;
        const bool bland = it > 5 * m_;
        Eigen::Index row = -1;
        double worst = -feas_tol;
        for (Eigen::Index r = 0; r < m_; ++r) {
            if (x(r) >= -feas_tol) continue;
            if (bland) {
                if (row < 0 || basis_[r] < basis_[row]) row = r;
            } else if (x(r) < worst) {
                worst = x(r);
                row = r;
            }
        }
        if (row < 0) {
            beta_.setZero();
            for (Eigen::Index r = 0; r < m_; ++r) {
                const Eigen::Index b = basis_[r];
                if (b < d_) beta_(b) += std::max(0.0, x(r));
                else if (b < 2 * d_) beta_(b - d_) -= std::max(0.0, x(r));
            }
            if (violation(bound) <= 1e-7 * scale) return beta_;
            if (++repairs > 2) throw SolverError("dantzig: solution failed verification");
            refactor();
            continue;
        }
        Eigen::Index col = -1;
        double best = std::numeric_limits<double>::infinity();
        double best_mag = 0.0;
        for (Eigen::Index j = 0; j < cols_; ++j) {
            const double a = t_(row, j);
            if (a >= -kPivotTol) continue;
            const double ratio = std::max(0.0, rc_(j)) / -a;
            if (ratio < best - 1e-12 || (!bland && ratio <= best + 1e-12 && -a > best_mag)) {
                best = std::min(best, ratio);
                best_mag = -a;
                col = j;
            }
        }
        if (col < 0) {
            if (since_refactor_ > 0) {
                refactor();
                continue;
            }
            throw SolverError("dantzig: constraints infeasible");
        }
        pivot(row, col);
    }
}

GmusSolve solve_gmus(DantzigLp& lp, double lambda, double delta) {
    MKNOCK_REQUIRE(delta >= 0, ConfigError, "matrix-uncertainty selector: delta must be >= 0");
    MKNOCK_REQUIRE(lp.delta() == 0.0, ConfigError, "matrix-uncertainty selector: the root search needs a plain Dantzig program");
    GmusSolve out;
    auto g = [&](double t) {
        ++out.evaluations;
        return lp.solve(lambda + delta * t).lpNorm<1>();
    };
    const double g0 = g(0.0);
    out.lower.push_back(0.0);
    if (delta == 0.0 || g0 <= 1e-12) {
        out.beta = lp.beta();
        out.t = g0;
        return out;
    }
    double lo = 0.0, h_lo = g0;
    double hi = g0, h_hi = g(hi) - hi;
    int side = 0;
    while (h_hi < 0 && hi - lo > 1e-6 && out.evaluations < 50) {
        const double t = hi - h_hi * (hi - lo) / (h_hi - h_lo);
        const double h = g(t) - t;
        if (h > 0) {
            MKNOCK_REQUIRE(t >= lo, SolverError, "matrix-uncertainty selector: lower bracket decreased");
            lo = t;
            h_lo = h;
            out.lower.push_back(lo);
            if (side == -1) h_hi *= 0.5;
            side = -1;
        } else {
            hi = t;
            h_hi = h;
            if (side == 1) h_lo *= 0.5;
            side = 1;
            if (h == 0) break;
        }
    }
    out.converged = h_hi == 0 || hi - lo <= 1e-6;
    out.t = hi;
    out.beta = lp.solve(lambda + delta * hi);
    ++out.evaluations;
    return out;
}

}  // namespace mknock

#pragma once

#include <vector>

#include "core/linalg.hpp"
#include "core/working.hpp"

namespace mknock {

/**
 * Dantzig-selector linear program in Gram form,
 *
 *     min ||beta||_1   s.t.   ||c - G beta||_inf <= bound + delta ||beta||_1,
 *
 * which is the matrix-uncertainty selector for delta > 0 and the plain Dantzig
 * selector for delta == 0.
 *
 * written with beta = u - v (u, v >= 0) and slack rows, and solved by a dense
 * tableau dual simplex. The slack basis is dual feasible for every bound and a
 * change of bound only moves the right-hand side, so each solve() warm-starts
 * from the previous optimal basis. This makes a descending sequence of bounds
 * (a lambda path, or the inner root search of the matrix-uncertainty selector)
 * cost a handful of pivots per step.
 */
class DantzigLp {
public:
    DantzigLp(Matrix gram, Vector c, double delta = 0.0);

    const Vector& solve(double bound);

    const Vector& beta() const { return beta_; }
    double l1_norm() const { return beta_.lpNorm<1>(); }
    long total_pivots() const { return total_pivots_; }
    Eigen::Index dim() const { return gram_.rows(); }
    double delta() const { return delta_; }

private:
    void pivot(Eigen::Index row, Eigen::Index col);
    void refactor();
    Matrix constraints() const;
    double violation(double bound) const;

    Matrix gram_;
    Vector c_;
    double delta_ = 0.0;
    Eigen::Index d_, m_, cols_;
    Matrix t_;     // tableau, m x cols
    Vector bc_;    // basic values = bc_ + bound * b1_
    Vector b1_;
    Vector rc_;    // reduced costs
    std::vector<Eigen::Index> basis_;
    Vector beta_;
    long total_pivots_ = 0;
    long since_refactor_ = 0;
};

/// Trace of the matrix-uncertainty root search.
struct GmusSolve {
    Vector beta;
    double t = 0.0;             // converged ||beta||_1 bound
    int evaluations = 0;        // LP solves
    std::vector<double> lower;  // lower bracket sequence (nondecreasing)
    bool converged = true;
};

/**
 * Matrix-uncertainty selector
 *
 *     min ||beta||_1  s.t.  ||c - G beta||_inf <= lambda + delta ||beta||_1.
 *
 * With g(t) the Dantzig optimum at bound lambda + delta t, g is convex and
 * nonincreasing, and the solution is the Dantzig solution at the unique fixed
 * point t* = g(t*). The fixed point is bracketed in [0, g(0)] and located by
 * Illinois false position; the lower end of the bracket is nondecreasing.
 * Stops when the bracket is narrower than 1e-6 or after 50 evaluations.
 * delta == 0 reduces to a single Dantzig solve. `lp` must have delta 0. This
 * reaches the same optimum as DantzigLp(G, c, delta).solve(lambda), which is
 * much cheaper along a lambda path; the search is kept as a reference.
 */
GmusSolve solve_gmus(DantzigLp& lp, double lambda, double delta);

}  // namespace mknock

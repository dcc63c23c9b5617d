#include "core/working.hpp"

#include <algorithm>

#include "core/error.hpp"

namespace mknock {

WorkingProblem linearize(const Matrix& x, const Vector& y, Family family, const LassoFit* prelim) {
    const Eigen::Index n = x.rows();
    MKNOCK_REQUIRE(y.size() == n, ConfigError, "working problem: outcome length mismatch");
    Vector v = Vector::Ones(n);
    Vector z = y;
    if (family == Family::Binomial) {
        MKNOCK_REQUIRE(prelim != nullptr, ConfigError, "working problem: binomial needs a preliminary fit");
        const Vector eta = linear_predictor(x, *prelim);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double mu = sigmoid(eta(i));
            v(i) = std::max(mu * (1.0 - mu), 1e-5);
            z(i) = eta(i) + (y(i) - mu) / v(i);
        }
    }
    WorkingProblem wp;
    const double sw = v.sum();
    wp.x_center = x.transpose() * v / sw;
    wp.z_center = v.dot(z) / sw;
    const Matrix xs = (x.rowwise() - wp.x_center.transpose()).array().colwise() * v.array().sqrt();
    const Vector zs = (z.array() - wp.z_center) * v.array().sqrt();
    const double nn = static_cast<double>(n);
    wp.gram = xs.transpose() * xs / nn;
    wp.c = xs.transpose() * zs / nn;
    wp.mean_weight = sw / nn;
    return wp;
}

}  // namespace mknock

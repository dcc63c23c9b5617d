#include "core/linalg.hpp"

#include <random>

#include "core/error.hpp"

namespace mknock {

double min_eigenvalue(const Matrix& sym) {
    if (sym.rows() == 0) return 0.0;
    Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

bool is_symmetric(const Matrix& m, double tol) {
    if (m.rows() != m.cols()) return false;
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    return (m - m.transpose()).cwiseAbs().maxCoeff() <= tol * scale;
}

bool cholesky_ok(const Matrix& sym) {
    Eigen::LLT<Matrix> llt(sym);
    return llt.info() == Eigen::Success;
}

Matrix psd_factor(const Matrix& c) {
    const Eigen::Index p = c.rows();
    if (p == 0) return Matrix(0, 0);
    Eigen::LLT<Matrix> llt(c);
    if (llt.info() == Eigen::Success) return llt.matrixL();

    Eigen::SelfAdjointEigenSolver<Matrix> es(c);
    const Vector& ev = es.eigenvalues();
    const double scale = std::max(1.0, c.diagonal().cwiseAbs().maxCoeff());
    if (ev.minCoeff() < -kPsdTol * scale) {
        throw MatrixError("matrix is not positive semidefinite (min eigenvalue " +
                          std::to_string(ev.minCoeff()) + ")");
    }
    const Vector root = ev.cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * root.asDiagonal();
}

Vector std_devs(const Matrix& cov) { return cov.diagonal().cwiseMax(0.0).cwiseSqrt(); }

Matrix cov_to_corr(const Matrix& cov) {
    const Vector sd = std_devs(cov);
    Vector inv(sd.size());
    for (Eigen::Index j = 0; j < sd.size(); ++j) inv(j) = sd(j) > 0 ? 1.0 / sd(j) : 0.0;
    Matrix corr = inv.asDiagonal() * cov * inv.asDiagonal();
    for (Eigen::Index j = 0; j < sd.size(); ++j) corr(j, j) = 1.0;
    return corr;
}

Matrix sample_gaussian_rows(Eigen::Index n, const Matrix& factor, Stream& rng) {
    const Eigen::Index p = factor.rows();
    std::normal_distribution<double> norm(0.0, 1.0);
    Matrix z(n, factor.cols());
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < z.cols(); ++j) z(i, j) = norm(rng);
    if (p == 0) return Matrix(n, 0);
    return z * factor.transpose();
}

Vector column_means(const Matrix& x) {
    if (x.rows() == 0) return Vector::Zero(x.cols());
    return x.colwise().mean().transpose();
}

Matrix sample_covariance(const Matrix& x) {
    const Eigen::Index n = x.rows();
    if (n < 2) throw DataError("sample covariance needs at least two rows");
    const Matrix centered = x.rowwise() - x.colwise().mean();
    return (centered.transpose() * centered) / static_cast<double>(n - 1);
}

}  // namespace mknock

#include "core/errorcov.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <spdlog/spdlog.h>

#include "core/error.hpp"

namespace mknock {

RepairResult psd_repair(const Matrix& m, double floor) {
    MKNOCK_REQUIRE(m.rows() == m.cols(), ConfigError, "psd_repair: matrix must be square");
    MKNOCK_REQUIRE(is_symmetric(m, 1e-8 * (1.0 + m.cwiseAbs().maxCoeff())), ConfigError,
                   "psd_repair: matrix must be symmetric");
    MKNOCK_REQUIRE(floor > 0 && floor < 1, ConfigError, "psd_repair: floor must lie in (0, 1)");
    RepairResult out;
    out.matrix = 0.5 * (m + m.transpose());
    const Eigen::Index p = m.rows();
    if (p == 0) return out;

    const double top = std::max(0.0, out.matrix.diagonal().maxCoeff());
    std::vector<Eigen::Index> keep;
    for (Eigen::Index j = 0; j < p; ++j) {
        if (out.matrix(j, j) > 1e-14 * std::max(top, 1e-300)) {
            keep.push_back(j);
        } else {
            out.warnings.push_back("coordinate " + std::to_string(j) + " has zero variance; error variance set to 0");
            out.matrix.row(j).setZero();
            out.matrix.col(j).setZero();
        }
    }
    const auto k = static_cast<Eigen::Index>(keep.size());
    if (k == 0) return out;

    Vector sd(k);
    Matrix corr(k, k);
    for (Eigen::Index a = 0; a < k; ++a) sd(a) = std::sqrt(out.matrix(keep[a], keep[a]));
    for (Eigen::Index a = 0; a < k; ++a)
        for (Eigen::Index b = 0; b < k; ++b) corr(a, b) = out.matrix(keep[a], keep[b]) / (sd(a) * sd(b));
    const double lmin = min_eigenvalue(corr);
    if (lmin >= floor) return out;

    // Shift chosen so the renormalized correlation has smallest eigenvalue == floor.
    out.shift = (floor - lmin) / (1.0 - floor);
    corr.diagonal().array() += out.shift;
    corr /= 1.0 + out.shift;
    corr.diagonal().setOnes();
    for (Eigen::Index a = 0; a < k; ++a)
        for (Eigen::Index b = 0; b < k; ++b) out.matrix(keep[a], keep[b]) = corr(a, b) * sd(a) * sd(b);
    out.repaired = true;
    return out;
}

namespace {

ErrorCovEstimate finish(const Matrix& raw, Eigen::Index dof, bool diagonal_only, double floor) {
    ErrorCovEstimate est;
    const Eigen::Index p = raw.cols();
    if (dof < p) {
        est.rank_deficient = true;
        est.warnings.push_back("QC covariance has rank at most " + std::to_string(dof) + " < " +
                               std::to_string(p) + " features; consider the diagonal fallback");
    }
    Matrix m = raw;
    if (diagonal_only) {
        m = Matrix(raw.diagonal().asDiagonal());
        est.diagonal = true;
    }
    RepairResult r = psd_repair(m, floor);
    est.sigma = std::move(r.matrix);
    est.repaired = r.repaired;
    for (auto& w : r.warnings) est.warnings.push_back(std::move(w));
    for (const auto& w : est.warnings) spdlog::warn("{}", w);
    return est;
}

}  // namespace

ErrorCovEstimate qc_cov(const QcSamples& qc, bool diagonal_only, double floor) {
    MKNOCK_REQUIRE(qc.values.rows() >= 2, DataError, "QC covariance needs at least two QC rows");
    return finish(sample_covariance(qc.values), qc.values.rows() - 1, diagonal_only, floor);
}

ErrorCovEstimate qc_paired_cov(const QcSamples& qc, bool diagonal_only, double floor) {
    const Eigen::Index q = qc.values.rows();
    MKNOCK_REQUIRE(static_cast<Eigen::Index>(qc.batch.size()) == q, DataError,
                   "paired QC covariance needs a batch label for every row");
    MKNOCK_REQUIRE(qc.pair.empty() || static_cast<Eigen::Index>(qc.pair.size()) == q, DataError,
                   "pair identifiers must cover every QC row");
    std::map<std::string, std::vector<Eigen::Index>> groups;
    for (Eigen::Index i = 0; i < q; ++i) groups[qc.batch[i]].push_back(i);
    MKNOCK_REQUIRE(groups.size() >= 2, DataError, "paired QC covariance needs at least two batches");
    Matrix diffs(static_cast<Eigen::Index>(groups.size()), qc.values.cols());
    Eigen::Index r = 0;
    for (auto& [name, rows] : groups) {
        MKNOCK_REQUIRE(rows.size() == 2, DataError,
                       "batch '" + name + "' has " + std::to_string(rows.size()) + " QC rows; expected a pair");
        if (!qc.pair.empty() && qc.pair[rows[1]] < qc.pair[rows[0]]) std::swap(rows[0], rows[1]);
        diffs.row(r++) = qc.values.row(rows[0]) - qc.values.row(rows[1]);
    }
    return finish(0.5 * sample_covariance(diffs), diffs.rows() - 1, diagonal_only, floor);
}

}  // namespace mknock

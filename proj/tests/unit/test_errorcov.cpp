#include <doctest.h>

#include <cmath>

#include "core/datagen.hpp"
#include "core/error.hpp"
#include "core/errorcov.hpp"

using namespace mknock;

TEST_CASE("repair leaves positive definite and diagonal input alone") {
    const Matrix pd = ar_cov({2.0, 0.4, 5});
    const RepairResult a = psd_repair(pd);
    CHECK_FALSE(a.repaired);
    CHECK((a.matrix - pd).norm() == 0.0);

    Matrix diag = Matrix::Zero(3, 3);
    diag.diagonal() << 1, 4, 9;
    CHECK(psd_repair(diag).matrix == diag);
}

TEST_CASE("repair lifts the smallest eigenvalue to the floor and keeps variances") {
    Matrix ones = Matrix::Ones(3, 3);
    const RepairResult r = psd_repair(ones, 1e-4);
    CHECK(r.repaired);
    CHECK(min_eigenvalue(r.matrix) >= 1e-4 - 1e-10);
    for (int j = 0; j < 3; ++j) CHECK(r.matrix(j, j) == doctest::Approx(1.0));

    // Covariance scale: correlation repaired, variances restored.
    Matrix cov(2, 2);
    cov << 4, 6.5, 6.5, 9;  // correlation above one
    const RepairResult c = psd_repair(cov, 1e-3);
    CHECK(c.matrix(0, 0) == doctest::Approx(4));
    CHECK(c.matrix(1, 1) == doctest::Approx(9));
    const Matrix corr = cov_to_corr(c.matrix);
    CHECK(min_eigenvalue(corr) == doctest::Approx(1e-3).epsilon(1e-6));
}

TEST_CASE("repair zeroes zero-variance coordinates") {
    Matrix m = Matrix::Zero(3, 3);
    m(0, 0) = 1;
    m(2, 2) = 2;
    const RepairResult r = psd_repair(m);
    CHECK(r.matrix(1, 1) == 0.0);
    CHECK_FALSE(r.warnings.empty());
}

TEST_CASE("QC covariance") {
    QcSamples same;
    same.values = Matrix::Ones(2, 3);
    CHECK(qc_cov(same).sigma.isZero());

    const int q = 2000, p = 6;
    const Matrix truth = ar_cov({0.6, 0.3, p});
    Stream s(1);
    QcSamples qc;
    qc.values = sample_gaussian_rows(q, psd_factor(truth), s).rowwise() + Eigen::RowVectorXd::LinSpaced(p, 1, 6);
    const ErrorCovEstimate e = qc_cov(qc);
    CHECK((e.sigma - truth).cwiseAbs().maxCoeff() < 0.1);
    CHECK((e.sigma - sample_covariance(qc.values)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK_FALSE(e.rank_deficient);

    const ErrorCovEstimate d = qc_cov(qc, true);
    CHECK(d.diagonal);
    CHECK(d.sigma.isDiagonal());

    QcSamples few;
    few.values = sample_gaussian_rows(5, psd_factor(ar_cov({0.6, 0.3, 60})), s);
    const ErrorCovEstimate f = qc_cov(few);
    CHECK(f.rank_deficient);
    CHECK(f.repaired);
    CHECK_FALSE(f.warnings.empty());
    CHECK(min_eigenvalue(cov_to_corr(f.sigma)) >= 1e-4 - 1e-8);

    QcSamples single;
    single.values = Matrix::Ones(1, 3);
    CHECK_THROWS_AS(qc_cov(single), DataError);
}

TEST_CASE("paired QC covariance") {
    const int batches = 2000, p = 4;
    const Matrix truth = ar_cov({0.6, 0.3, p});
    Stream s(2);
    const Matrix e = sample_gaussian_rows(2 * batches, psd_factor(truth), s);
    QcSamples qc;
    qc.values.resize(2 * batches, p);
    for (int b = 0; b < batches; ++b) {
        const Eigen::RowVectorXd level = Eigen::RowVectorXd::Constant(p, 10.0 * s.uniform());
        // Rows listed second-replicate first to exercise ordering by pair id.
        qc.values.row(2 * b) = level + e.row(2 * b + 1);
        qc.values.row(2 * b + 1) = level + e.row(2 * b);
        qc.batch.push_back("b" + std::to_string(b));
        qc.batch.push_back("b" + std::to_string(b));
        qc.pair.push_back("2");
        qc.pair.push_back("1");
    }
    const ErrorCovEstimate est = qc_paired_cov(qc);
    CHECK((est.sigma - truth).cwiseAbs().maxCoeff() < 0.1);

    // Oracle: half the covariance of (first - second) per batch.
    Matrix diff(batches, p);
    for (int b = 0; b < batches; ++b) diff.row(b) = e.row(2 * b) - e.row(2 * b + 1);
    CHECK((est.sigma - 0.5 * sample_covariance(diff)).cwiseAbs().maxCoeff() < 1e-10);

    // A constant shift between replicates cancels out.
    QcSamples shift;
    shift.values.resize(6, 2);
    shift.values << 1, 2, 3, 4, 5, 1, 7, 3, 2, 2, 4, 4;
    shift.batch = {"a", "a", "b", "b", "c", "c"};
    const ErrorCovEstimate z = qc_paired_cov(shift);
    CHECK(z.sigma.isZero(1e-12));

    QcSamples one;
    one.values = Matrix::Ones(2, 2);
    one.batch = {"a", "a"};
    CHECK_THROWS_AS(qc_paired_cov(one), DataError);
    QcSamples odd;
    odd.values = Matrix::Ones(3, 2);
    odd.batch = {"a", "a", "a"};
    CHECK_THROWS_AS(qc_paired_cov(odd), DataError);
}

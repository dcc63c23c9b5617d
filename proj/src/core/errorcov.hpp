#pragma once

#include <string>
#include <vector>

#include "core/linalg.hpp"

namespace mknock {

/// Quality-control replicate measurements (rows) of the study features.
struct QcSamples {
    Matrix values;
    std::vector<std::string> batch;  // optional, one label per row
    std::vector<std::string> pair;   // optional within-batch pair identifiers
    std::vector<std::string> feature_names;
};

struct RepairResult {
    Matrix matrix;
    bool repaired = false;
    double shift = 0.0;  // amount added to the correlation diagonal
    std::vector<std::string> warnings;
};

/// Eigenvalue-floor repair on the correlation scale. Variances are preserved;
/// zero-variance coordinates get a zero row and column.
RepairResult psd_repair(const Matrix& m, double floor = 1e-4);

struct ErrorCovEstimate {
    Matrix sigma;
    bool rank_deficient = false;  // fewer QC degrees of freedom than features
    bool diagonal = false;        // off-diagonal entries were dropped
    bool repaired = false;
    std::vector<std::string> warnings;
};

/// Unbiased sample covariance of the QC rows, then psd_repair. With
/// `diagonal_only` only the variances are kept.
ErrorCovEstimate qc_cov(const QcSamples& qc, bool diagonal_only = false, double floor = 1e-4);

/// Half the sample covariance of within-batch differences (exactly two rows per
/// batch, ordered by pair identifier when present), then psd_repair.
ErrorCovEstimate qc_paired_cov(const QcSamples& qc, bool diagonal_only = false, double floor = 1e-4);

}  // namespace mknock

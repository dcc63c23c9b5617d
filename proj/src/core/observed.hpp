#pragma once

#include <optional>
#include <string>
#include <vector>

#include "core/linalg.hpp"

namespace mknock {

/// Outcome, incomplete feature matrix and its mask (1 = observed), plus an
/// optional measurement-error covariance. Values under a 0 mask are ignored.
struct ObservedData {
    Vector y;
    Matrix w;
    IntMatrix r;
    std::optional<Matrix> sigma_eps;
    std::vector<std::string> feature_names;

    Eigen::Index n() const { return w.rows(); }
    Eigen::Index p() const { return w.cols(); }
    bool complete() const { return r.size() == 0 || r.minCoeff() == 1; }
};

}  // namespace mknock

#pragma once

#include "core/linalg.hpp"
#include "core/rng.hpp"
#include "core/tree.hpp"

namespace mknock {

struct ForestParams {
    int trees = 500;
    int mtry = 0;  // 0: floor(sqrt(number of columns))
    int min_leaf = 5;
    SplitCriterion criterion = SplitCriterion::Variance;
    int threads = 1;
};

/// Mean decrease in impurity of a bagged forest of unpruned CART trees,
/// averaged over trees and divided by the number of rows. Tree t draws its
/// bootstrap sample and feature subsets from rng.derive(t).
Vector forest_importance(const Matrix& x, const Vector& y, const ForestParams& params, const Stream& rng);

}  // namespace mknock

#pragma once

#include <span>
#include <vector>

#include "core/linalg.hpp"
#include "core/rng.hpp"

namespace mknock {

enum class SplitCriterion { Variance, Gini };

struct TreeParams {
    int max_depth = -1;  // -1: unlimited
    int min_leaf = 5;
    int mtry = 0;        // features tried per node; 0: all
    SplitCriterion criterion = SplitCriterion::Variance;
};

/// Binary CART tree grown on rows of a column-major predictor matrix.
class Tree {
public:
    /// Grows the tree on `rows` (indices into x; repeats allowed for bootstrap
    /// samples). When `importance` is non-null the impurity decrease of every
    /// split is added to importance[feature].
    void fit(const Matrix& x, std::span<const double> y, std::span<const int> rows,
             const TreeParams& params, Stream& rng, Vector* importance = nullptr);

    /// Leaf reached by a row of predictors.
    int leaf_of(const Eigen::Ref<const Eigen::RowVectorXd>& row) const;

    double leaf_mean(int leaf) const { return nodes_[leaf].value; }
    /// Training outcomes that landed in the leaf.
    const std::vector<double>& leaf_values(int leaf) const { return nodes_[leaf].values; }

    std::size_t node_count() const { return nodes_.size(); }
    int depth() const { return depth_; }

private:
    struct Node {
        int feature = -1;  // -1 for a leaf
        double threshold = 0.0;
        int left = -1;
        int right = -1;
        double value = 0.0;
        std::vector<double> values;
    };

    int build(const Matrix& x, std::span<const double> y, std::vector<int>& idx, int depth,
              const TreeParams& params, Stream& rng, Vector* importance);

    std::vector<Node> nodes_;
    int depth_ = 0;
    bool keep_values_ = true;
};

}  // namespace mknock

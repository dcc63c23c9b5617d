#include "core/tree.hpp"

#include <algorithm>
#include <numeric>

#include "core/error.hpp"

namespace mknock {

namespace {

// Impurity in "sum" form: n * impurity(node).
struct Stats {
    double n = 0, sum = 0, sumsq = 0;
    void add(double v) { n += 1; sum += v; sumsq += v * v; }
    void remove(double v) { n -= 1; sum -= v; sumsq -= v * v; }
    double impurity(SplitCriterion c) const {
        if (n <= 0) return 0.0;
        if (c == SplitCriterion::Variance) return std::max(0.0, sumsq - sum * sum / n);
        // Binary 0/1 outcome: n * (1 - p1^2 - p0^2) = 2 * n1 * n0 / n.
        const double n1 = sum, n0 = n - sum;
        return 2.0 * n1 * n0 / n;
    }
};

}  // namespace

void Tree::fit(const Matrix& x, std::span<const double> y, std::span<const int> rows,
               const TreeParams& params, Stream& rng, Vector* importance) {
    MKNOCK_REQUIRE(static_cast<Eigen::Index>(y.size()) == x.rows(), ConfigError,
                   "tree: outcome length mismatch");
    MKNOCK_REQUIRE(params.min_leaf >= 1, ConfigError, "tree: min_leaf must be positive");
    nodes_.clear();
    depth_ = 0;
    keep_values_ = importance == nullptr;
    std::vector<int> idx(rows.begin(), rows.end());
    if (idx.empty()) {
        nodes_.push_back(Node{});
        return;
    }
    build(x, y, idx, 0, params, rng, importance);
}

int Tree::build(const Matrix& x, std::span<const double> y, std::vector<int>& idx, int depth,
                const TreeParams& params, Stream& rng, Vector* importance) {
    depth_ = std::max(depth_, depth);
    const int id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();

    Stats all;
    for (int i : idx) all.add(y[i]);
    nodes_[id].value = all.sum / all.n;
    const double node_imp = all.impurity(params.criterion);

    const auto m = static_cast<int>(idx.size());
    const bool can_split = m >= 2 * params.min_leaf && node_imp > 1e-12 &&
                           (params.max_depth < 0 || depth < params.max_depth);
    auto make_leaf = [&]() {
        if (keep_values_) {
            nodes_[id].values.reserve(idx.size());
            for (int i : idx) nodes_[id].values.push_back(y[i]);
        }
        return id;
    };
    if (!can_split) return make_leaf();

    const int d = static_cast<int>(x.cols());
    std::vector<int> features(d);
    std::iota(features.begin(), features.end(), 0);
    int tries = d;
    if (params.mtry > 0 && params.mtry < d) {
        // Partial Fisher-Yates for mtry distinct features.
        for (int k = 0; k < params.mtry; ++k) {
            const int r = k + static_cast<int>(rng() % static_cast<std::uint64_t>(d - k));
            std::swap(features[k], features[r]);
        }
        tries = params.mtry;
    }

    double best_gain = 0.0;
    int best_feature = -1;
    double best_threshold = 0.0;
    std::vector<std::pair<double, double>> vals(m);
    for (int t = 0; t < tries; ++t) {
        const int f = features[t];
        for (int k = 0; k < m; ++k) vals[k] = {x(idx[k], f), y[idx[k]]};
        std::sort(vals.begin(), vals.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        if (vals.front().first == vals.back().first) continue;
        Stats left, right = all;
        for (int k = 0; k < m - 1; ++k) {
            left.add(vals[k].second);
            right.remove(vals[k].second);
            const int nl = k + 1;
            if (nl < params.min_leaf) continue;
            if (m - nl < params.min_leaf) break;
            if (vals[k].first == vals[k + 1].first) continue;
            const double gain =
                node_imp - left.impurity(params.criterion) - right.impurity(params.criterion);
            if (gain > best_gain + 1e-12) {
                best_gain = gain;
                best_feature = f;
                best_threshold = 0.5 * (vals[k].first + vals[k + 1].first);
            }
        }
    }
    if (best_feature < 0) return make_leaf();

    if (importance) (*importance)(best_feature) += best_gain;
    std::vector<int> li, ri;
    li.reserve(m);
    ri.reserve(m);
    for (int i : idx) (x(i, best_feature) <= best_threshold ? li : ri).push_back(i);
    idx.clear();
    idx.shrink_to_fit();

    nodes_[id].feature = best_feature;
    nodes_[id].threshold = best_threshold;
    const int l = build(x, y, li, depth + 1, params, rng, importance);
    nodes_[id].left = l;
    const int r = build(x, y, ri, depth + 1, params, rng, importance);
    nodes_[id].right = r;
    return id;
}

int Tree::leaf_of(const Eigen::Ref<const Eigen::RowVectorXd>& row) const {
    int node = 0;
    while (nodes_[node].feature >= 0)
        node = row(nodes_[node].feature) <= nodes_[node].threshold ? nodes_[node].left : nodes_[node].right;
    return node;
}

}  // namespace mknock

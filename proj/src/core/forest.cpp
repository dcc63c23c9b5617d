#include "core/forest.hpp"

#include <cmath>
#include <vector>

#include "core/error.hpp"
#include "core/parallel.hpp"

namespace mknock {

Vector forest_importance(const Matrix& x, const Vector& y, const ForestParams& params, const Stream& rng) {
    MKNOCK_REQUIRE(params.trees >= 1, ConfigError, "forest: need at least one tree");
    MKNOCK_REQUIRE(x.rows() == y.size(), ConfigError, "forest: outcome length mismatch");
    const Eigen::Index n = x.rows(), d = x.cols();
    TreeParams tp;
    tp.min_leaf = params.min_leaf;
    tp.criterion = params.criterion;
    tp.mtry = params.mtry > 0 ? params.mtry : std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(d)))));

    std::vector<Vector> per_tree(params.trees);
    const std::span<const double> ys(y.data(), static_cast<std::size_t>(n));
    parallel_for(per_tree.size(), params.threads, [&](std::size_t t) {
        Stream s = rng.derive(static_cast<std::uint64_t>(t));
        std::vector<int> rows(n);
        for (auto& r : rows) r = static_cast<int>(s() % static_cast<std::uint64_t>(n));
        Vector imp = Vector::Zero(d);
        Tree tree;
        tree.fit(x, ys, rows, tp, s, &imp);
        per_tree[t] = std::move(imp);
    });
    Vector total = Vector::Zero(d);
    for (const auto& v : per_tree) total += v;
    return total / (static_cast<double>(params.trees) * static_cast<double>(n));
}

}  // namespace mknock

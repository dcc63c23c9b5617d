#include "core/impute.hpp"

#include <algorithm>
#include <limits>
#include <cmath>
#include <numeric>
#include <random>

#include <spdlog/spdlog.h>

#include "core/error.hpp"

namespace mknock {

ImputeMethod parse_impute_method(const std::string& name) {
    if (name == "halfmin" || name == "half-min") return ImputeMethod::HalfMin;
    if (name == "mean") return ImputeMethod::Mean;
    if (name == "default" || name == "norm") return ImputeMethod::ChainedDefault;
    if (name == "cart") return ImputeMethod::ChainedCart;
    if (name == "pmm") return ImputeMethod::ChainedPMM;
    throw ConfigError("unknown imputation method '" + name + "' (halfmin, mean, default, cart, pmm)");
}

std::string to_string(ImputeMethod m) {
    switch (m) {
        case ImputeMethod::HalfMin: return "halfmin";
        case ImputeMethod::Mean: return "mean";
        case ImputeMethod::ChainedDefault: return "default";
        case ImputeMethod::ChainedCart: return "cart";
        case ImputeMethod::ChainedPMM: return "pmm";
    }
    return "?";
}

void ImputeConfig::validate() const {
    MKNOCK_REQUIRE(K >= 1, ConfigError, "imputation K must be at least 1");
    MKNOCK_REQUIRE(sweeps >= 1, ConfigError, "imputation sweeps must be at least 1");
}

namespace {

constexpr int kMinObservedForModel = 10;

void check_shapes(const ObservedData& data) {
    MKNOCK_REQUIRE(data.r.rows() == data.w.rows() && data.r.cols() == data.w.cols(), DataError,
                   "mask and feature matrix differ in shape");
    MKNOCK_REQUIRE(data.y.size() == 0 || data.y.size() == data.w.rows(), DataError,
                   "outcome length differs from the number of rows");
    for (Eigen::Index j = 0; j < data.p(); ++j)
        for (Eigen::Index i = 0; i < data.n(); ++i)
            if (data.r(i, j) && !std::isfinite(data.w(i, j)))
                throw DataError("non-finite observed value at row " + std::to_string(i) + ", column " +
                                std::to_string(j));
}

std::vector<double> observed_values(const ObservedData& data, Eigen::Index j) {
    std::vector<double> v;
    for (Eigen::Index i = 0; i < data.n(); ++i)
        if (data.r(i, j)) v.push_back(data.w(i, j));
    return v;
}

std::string column_label(const ObservedData& data, Eigen::Index j) {
    if (static_cast<std::size_t>(j) < data.feature_names.size()) return data.feature_names[j];
    return "column " + std::to_string(j);
}

}  // namespace

CompletedSet impute_simple(const ObservedData& data, ImputeMethod method) {
    MKNOCK_REQUIRE(method == ImputeMethod::HalfMin || method == ImputeMethod::Mean, ConfigError,
                   "impute_simple supports halfmin and mean only");
    check_shapes(data);
    Matrix out = data.w;
    for (Eigen::Index j = 0; j < data.p(); ++j) {
        const auto obs = observed_values(data, j);
        if (static_cast<Eigen::Index>(obs.size()) == data.n()) continue;
        if (obs.empty()) throw DataError("cannot impute fully-missing " + column_label(data, j));
        double fill;
        if (method == ImputeMethod::HalfMin) {
            fill = 0.5 * *std::min_element(obs.begin(), obs.end());
        } else {
            fill = std::accumulate(obs.begin(), obs.end(), 0.0) / static_cast<double>(obs.size());
        }
        for (Eigen::Index i = 0; i < data.n(); ++i)
            if (!data.r(i, j)) out(i, j) = fill;
    }
    CompletedSet cs;
    cs.copies.push_back(std::move(out));
    cs.mask = data.r;
    return cs;
}

ColumnModel ColumnModel::fit(ImputeMethod engine, const Matrix& predictors, const Vector& target,
                             Stream& rng, bool noise_free) {
    MKNOCK_REQUIRE(predictors.rows() == target.size(), ConfigError, "column model: row mismatch");
    ColumnModel m;
    m.engine_ = engine;
    m.noise_free_ = noise_free;
    const Eigen::Index n = predictors.rows();
    const Eigen::Index q = predictors.cols();

    if (engine == ImputeMethod::ChainedCart) {
        m.tree_ = std::make_shared<Tree>();
        std::vector<int> rows(n);
        std::iota(rows.begin(), rows.end(), 0);
        TreeParams tp;
        tp.max_depth = kCartMaxDepth;
        tp.min_leaf = kCartMinLeaf;
        tp.criterion = SplitCriterion::Variance;
        std::vector<double> y(target.data(), target.data() + n);
        m.tree_->fit(predictors, y, rows, tp, rng);
        return m;
    }

    // Least squares with intercept via the normal equations on centered data.
    const Vector xbar = predictors.colwise().mean().transpose();
    const double ybar = target.mean();
    const Matrix xc = predictors.rowwise() - xbar.transpose();
    const Vector yc = target.array() - ybar;
    Matrix gram = xc.transpose() * xc;
    const double ridge = 1e-10 * std::max(1.0, gram.diagonal().maxCoeff());
    gram.diagonal().array() += ridge;
    const Vector slope = gram.ldlt().solve(xc.transpose() * yc);
    m.coef_.resize(q + 1);
    m.coef_(0) = ybar - xbar.dot(slope);
    m.coef_.tail(q) = slope;

    const Vector fitted = (xc * slope).array() + ybar;
    const double rss = (target - fitted).squaredNorm();
    const auto dof = static_cast<double>(std::max<Eigen::Index>(1, n - q - 1));
    m.sigma_ = std::sqrt(rss / dof);
    const double scale = std::max(1.0, std::sqrt(yc.squaredNorm() / std::max<double>(1.0, n)));
    if (m.sigma_ <= 1e-12 * scale) {
        m.degenerate_ = true;
        m.sigma_ = 0.0;
        if (engine == ImputeMethod::ChainedDefault)
            spdlog::warn("imputation model has zero residual variance; using deterministic prediction");
    }

    if (engine == ImputeMethod::ChainedPMM) {
        m.donors_.resize(n);
        for (Eigen::Index i = 0; i < n; ++i) m.donors_[i] = {fitted(i), target(i)};
        std::sort(m.donors_.begin(), m.donors_.end());
    }
    return m;
}

double ColumnModel::mean_prediction(const Eigen::Ref<const Eigen::RowVectorXd>& row) const {
    return coef_(0) + row.dot(coef_.tail(coef_.size() - 1));
}

double ColumnModel::draw(const Eigen::Ref<const Eigen::RowVectorXd>& row, Stream& rng) const {
    switch (engine_) {
        case ImputeMethod::ChainedCart: {
            const auto& vals = tree_->leaf_values(tree_->leaf_of(row));
            return vals[rng() % vals.size()];
        }
        case ImputeMethod::ChainedPMM: {
            const double pred = mean_prediction(row);
            const auto n = static_cast<std::ptrdiff_t>(donors_.size());
            const int k = static_cast<int>(std::min<std::ptrdiff_t>(kPmmDonors, n));
            // Two-pointer expansion around the insertion point picks the k nearest.
            auto it = std::lower_bound(donors_.begin(), donors_.end(), std::make_pair(pred, -std::numeric_limits<double>::infinity()));
            std::ptrdiff_t hi = it - donors_.begin(), lo = hi - 1;
            std::vector<std::ptrdiff_t> chosen;
            while (static_cast<int>(chosen.size()) < k) {
                const bool take_lo =
                    hi >= n || (lo >= 0 && pred - donors_[lo].first <= donors_[hi].first - pred);
                chosen.push_back(take_lo ? lo-- : hi++);
            }
            return donors_[chosen[rng() % chosen.size()]].second;
        }
        default: {
            const double mu = mean_prediction(row);
            if (noise_free_ || degenerate_) return mu;
            std::normal_distribution<double> noise(0.0, sigma_);
            return mu + noise(rng);
        }
    }
}

namespace {

Matrix chained_copy(const ObservedData& data, const ImputeConfig& cfg, Stream rng,
                    const std::vector<Eigen::Index>& order, const std::vector<char>& thin,
                    const std::vector<std::vector<double>>& observed) {
    const Eigen::Index n = data.n(), p = data.p();
    const bool use_y = cfg.include_outcome && data.y.size() == n;
    Matrix w = data.w;

    // Initialization by marginal resampling (or mean fill).
    for (Eigen::Index j = 0; j < p; ++j) {
        const auto& obs = observed[j];
        if (static_cast<Eigen::Index>(obs.size()) == n) continue;
        const double mean = std::accumulate(obs.begin(), obs.end(), 0.0) / static_cast<double>(obs.size());
        for (Eigen::Index i = 0; i < n; ++i) {
            if (data.r(i, j)) continue;
            w(i, j) = (cfg.mean_init || thin[j]) ? mean : obs[rng() % obs.size()];
        }
    }

    const Eigen::Index q = p - 1 + (use_y ? 1 : 0);
    for (int sweep = 0; sweep < cfg.sweeps; ++sweep) {
        for (Eigen::Index j : order) {
            if (thin[j]) continue;
            const auto n_obs = static_cast<Eigen::Index>(observed[j].size());
            Matrix pred_obs(n_obs, q);
            Vector target(n_obs);
            std::vector<Eigen::Index> missing_rows;
            Eigen::Index r = 0;
            for (Eigen::Index i = 0; i < n; ++i) {
                if (!data.r(i, j)) {
                    missing_rows.push_back(i);
                    continue;
                }
                Eigen::Index c = 0;
                for (Eigen::Index k = 0; k < p; ++k)
                    if (k != j) pred_obs(r, c++) = w(i, k);
                if (use_y) pred_obs(r, c) = data.y(i);
                target(r) = w(i, j);
                ++r;
            }
            const ColumnModel model = ColumnModel::fit(cfg.method, pred_obs, target, rng, cfg.noise_free);
            Eigen::RowVectorXd row(q);
            for (Eigen::Index i : missing_rows) {
                Eigen::Index c = 0;
                for (Eigen::Index k = 0; k < p; ++k)
                    if (k != j) row(c++) = w(i, k);
                if (use_y) row(c) = data.y(i);
                w(i, j) = model.draw(row, rng);
            }
        }
    }
    return w;
}

}  // namespace

CompletedSet impute_chained(const ObservedData& data, const ImputeConfig& cfg, const Stream& rng) {
    cfg.validate();
    MKNOCK_REQUIRE(cfg.method == ImputeMethod::ChainedDefault || cfg.method == ImputeMethod::ChainedCart ||
                       cfg.method == ImputeMethod::ChainedPMM,
                   ConfigError, "impute_chained needs a chained engine (default, cart, pmm)");
    check_shapes(data);
    const Eigen::Index n = data.n(), p = data.p();

    CompletedSet cs;
    cs.mask = data.r;
    std::vector<std::vector<double>> observed(p);
    std::vector<char> thin(p, 0);
    std::vector<Eigen::Index> order;
    for (Eigen::Index j = 0; j < p; ++j) {
        observed[j] = observed_values(data, j);
        const auto n_obs = static_cast<Eigen::Index>(observed[j].size());
        if (n_obs == n) continue;
        if (n_obs == 0) throw DataError("cannot impute fully-missing " + column_label(data, j));
        if (n_obs < kMinObservedForModel) {
            thin[j] = 1;
            cs.warnings.push_back(column_label(data, j) + " has only " + std::to_string(n_obs) +
                                  " observed rows; imputed by its mean");
            spdlog::warn("{}", cs.warnings.back());
        }
        order.push_back(j);
    }
    // Visit columns by increasing missing fraction; ties keep column order.
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        return observed[a].size() > observed[b].size();
    });

    for (int k = 0; k < cfg.K; ++k) {
        if (order.empty()) {
            cs.copies.push_back(data.w);
            continue;
        }
        cs.copies.push_back(chained_copy(data, cfg, rng.derive(static_cast<std::uint64_t>(k)), order, thin,
                                         observed));
    }
    return cs;
}

CompletedSet impute(const ObservedData& data, const ImputeConfig& cfg, const Stream& rng) {
    if (cfg.method == ImputeMethod::HalfMin || cfg.method == ImputeMethod::Mean) return impute_simple(data, cfg.method);
    return impute_chained(data, cfg, rng);
}

}  // namespace mknock

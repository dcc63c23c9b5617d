#include "core/filter.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "core/error.hpp"
#include "core/parallel.hpp"

namespace mknock {

StatTensor::StatTensor(int K, int M, Eigen::Index p) : K_(K), M_(M), p_(p) {
    MKNOCK_REQUIRE(K >= 1 && M >= 1 && p >= 1, ConfigError, "stat tensor needs K, M, p >= 1");
    z_.resize(static_cast<std::size_t>(K) * M);
    zt_.resize(z_.size());
    filled_.assign(z_.size(), 0);
}

void StatTensor::set(int k, int m, const Vector& z, const Vector& z_tilde) {
    MKNOCK_REQUIRE(k >= 0 && k < K_ && m >= 0 && m < M_, ConfigError, "stat tensor index out of range");
    MKNOCK_REQUIRE(z.size() == p_ && z_tilde.size() == p_, ConfigError, "stat tensor: wrong feature count");
    z_[slot(k, m)] = z;
    zt_[slot(k, m)] = z_tilde;
    filled_[slot(k, m)] = 1;
}

bool StatTensor::complete() const {
    return std::all_of(filled_.begin(), filled_.end(), [](char f) { return f != 0; });
}

OrderMode parse_order_mode(const std::string& name) {
    if (name == "maxmax") return OrderMode::MaxMax;
    if (name == "maxprod") return OrderMode::MaxProd;
    if (name == "sumprod") return OrderMode::SumProd;
    throw ConfigError("unknown ordering mode '" + name + "'");
}

std::string to_string(OrderMode m) {
    switch (m) {
        case OrderMode::MaxMax: return "maxmax";
        case OrderMode::MaxProd: return "maxprod";
        case OrderMode::SumProd: return "sumprod";
    }
    return "?";
}

Vector pvalues(const StatTensor& t) {
    MKNOCK_REQUIRE(t.complete(), ConfigError, "stat tensor has unfilled cells");
    Vector p(t.p());
    for (Eigen::Index j = 0; j < t.p(); ++j) {
        int count = 0;
        for (int k = 0; k < t.K(); ++k) {
            if (t.M() == 1) {
                count += t.z(k, 0, j) <= t.z_tilde(k, 0, j);
            } else {
                double prod = 1.0;
                for (int m = 0; m < t.M(); ++m) prod *= t.z(k, m, j) - t.z_tilde(k, m, j);
                count += prod <= 0;
            }
        }
        p(j) = (1.0 + count) / (1.0 + t.K());
    }
    return p;
}

std::vector<int> order_features(const StatTensor& t, OrderMode mode) {
    MKNOCK_REQUIRE(t.complete(), ConfigError, "stat tensor has unfilled cells");
    if (mode == OrderMode::MaxMax)
        MKNOCK_REQUIRE(t.M() == 1, ConfigError, "maxmax ordering needs a single outcome");
    else
        MKNOCK_REQUIRE(t.M() >= 2, ConfigError, "product orderings need at least two outcomes");
    std::vector<double> key(t.p(), 0.0);
    for (Eigen::Index j = 0; j < t.p(); ++j) {
        double acc = 0.0;
        for (int k = 0; k < t.K(); ++k) {
            double v;
            if (mode == OrderMode::MaxMax) {
                v = std::max(std::abs(t.z(k, 0, j)), std::abs(t.z_tilde(k, 0, j)));
            } else {
                v = 1.0;
                for (int m = 0; m < t.M(); ++m) v *= std::abs(t.z(k, m, j) - t.z_tilde(k, m, j));
            }
            acc = mode == OrderMode::SumProd ? acc + v : std::max(acc, v);
        }
        key[j] = acc;
    }
    std::vector<int> order(t.p());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return key[a] > key[b]; });
    return order;
}

SeqStepResult seqstep(const std::vector<double>& p_ordered, double q, int c) {
    MKNOCK_REQUIRE(q > 0 && q < 1, ConfigError, "target FDR q must lie in (0, 1)");
    MKNOCK_REQUIRE(c == 0 || c == 1, ConfigError, "offset c must be 0 or 1");
    SeqStepResult out;
    out.fdp_curve.reserve(p_ordered.size());
    int above = 0, below = 0;
    for (std::size_t j = 0; j < p_ordered.size(); ++j) {
        MKNOCK_REQUIRE(p_ordered[j] > 0 && p_ordered[j] <= 1, ConfigError, "p-values must lie in (0, 1]");
        (p_ordered[j] > 0.5 ? above : below) += 1;
        const double ratio = (c + above) / static_cast<double>(std::max(below, 1));
        out.fdp_curve.push_back(ratio);
        if (ratio <= q) out.k_hat = static_cast<int>(j + 1);
    }
    return out;
}

OrderMode default_mode(int M) { return M == 1 ? OrderMode::MaxMax : OrderMode::MaxProd; }

SelectionReport select(const StatTensor& t, double q, OrderMode mode, int c) {
    MKNOCK_REQUIRE(c == 0 || c == 1, ConfigError, "offset c must be 0 or 1");
    SelectionReport r;
    r.q = q;
    r.c = c;
    r.mode = mode;
    r.p_values = pvalues(t);
    r.order = order_features(t, mode);
    std::vector<double> ordered(r.order.size());
    for (std::size_t i = 0; i < r.order.size(); ++i) ordered[i] = r.p_values(r.order[i]);
    for (int off = 0; off <= 1; ++off) {
        const SeqStepResult s = seqstep(ordered, q, off);
        std::vector<int> sel;
        for (int i = 0; i < s.k_hat; ++i)
            if (ordered[i] <= 0.5) sel.push_back(r.order[i]);
        std::sort(sel.begin(), sel.end());
        const double est = s.k_hat > 0 ? s.fdp_curve[s.k_hat - 1] : 0.0;
        if (off == 0) {
            r.k_hat_0 = s.k_hat;
            r.selected_0 = std::move(sel);
            r.fdp_curve_0 = s.fdp_curve;
            r.fdp_estimate_0 = est;
        } else {
            r.k_hat_1 = s.k_hat;
            r.selected_1 = std::move(sel);
            r.fdp_curve_1 = s.fdp_curve;
            r.fdp_estimate_1 = est;
        }
    }
    return r;
}

std::vector<int> StabilityReport::stable(double thr) const {
    std::vector<int> out;
    for (Eigen::Index j = 0; j < frequency.size(); ++j)
        if (frequency(j) >= thr) out.push_back(static_cast<int>(j));
    return out;
}

StabilityReport stability_select(const std::function<std::vector<int>(const Stream&)>& pipeline, int R,
                                 Eigen::Index p, const Stream& rng, int threads) {
    MKNOCK_REQUIRE(R >= 1, ConfigError, "stability selection needs R >= 1");
    std::vector<std::vector<int>> picks(R);
    parallel_for(picks.size(), threads,
                 [&](std::size_t r) { picks[r] = pipeline(rng.derive(static_cast<std::uint64_t>(r))); });
    std::vector<int> counts(p, 0);
    for (const auto& sel : picks)
        for (int j : sel) {
            MKNOCK_REQUIRE(j >= 0 && j < p, DataError, "stability selection: feature index out of range");
            ++counts[j];
        }
    StabilityReport out;
    out.R = R;
    out.frequency.resize(p);
    for (Eigen::Index j = 0; j < p; ++j) out.frequency(j) = counts[j] / static_cast<double>(R);
    return out;
}

}  // namespace mknock

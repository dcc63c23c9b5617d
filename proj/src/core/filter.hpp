#pragma once

#include <functional>
#include <string>
#include <vector>

#include "core/linalg.hpp"
#include "core/rng.hpp"

namespace mknock {

/// Z and Z~ indexed by imputation k, outcome m and feature j.
class StatTensor {
public:
    StatTensor(int K, int M, Eigen::Index p);

    void set(int k, int m, const Vector& z, const Vector& z_tilde);
    double z(int k, int m, Eigen::Index j) const { return z_[slot(k, m)](j); }
    double z_tilde(int k, int m, Eigen::Index j) const { return zt_[slot(k, m)](j); }

    int K() const { return K_; }
    int M() const { return M_; }
    Eigen::Index p() const { return p_; }
    bool complete() const;

private:
    std::size_t slot(int k, int m) const { return static_cast<std::size_t>(k) * M_ + m; }
    int K_, M_;
    Eigen::Index p_;
    std::vector<Vector> z_, zt_;
    std::vector<char> filled_;
};

enum class OrderMode { MaxMax, MaxProd, SumProd };
OrderMode parse_order_mode(const std::string& name);
std::string to_string(OrderMode m);

Vector pvalues(const StatTensor& t);

/// Features sorted by decreasing key, ties by ascending index.
std::vector<int> order_features(const StatTensor& t, OrderMode mode);

struct SeqStepResult {
    int k_hat = 0;
    std::vector<double> fdp_curve;  // ratio at every prefix length 1..n
};

SeqStepResult seqstep(const std::vector<double>& p_ordered, double q, int c);

struct SelectionReport {
    Vector p_values;
    std::vector<int> order;
    int k_hat_0 = 0, k_hat_1 = 0;
    std::vector<int> selected_0, selected_1;  // ascending feature indices
    std::vector<double> fdp_curve_0, fdp_curve_1;
    double fdp_estimate_0 = 0.0, fdp_estimate_1 = 0.0;  // curve value at the cutoff (0 when k_hat = 0)
    double q = 0.2;
    int c = 1;  // offset whose selection is reported as primary
    OrderMode mode = OrderMode::MaxMax;
    std::vector<std::string> feature_names;

    const std::vector<int>& selected() const { return c == 0 ? selected_0 : selected_1; }
};

/// Defaults the mode to MaxMax for M = 1 and MaxProd otherwise.
OrderMode default_mode(int M);

SelectionReport select(const StatTensor& t, double q, OrderMode mode, int c = 1);

struct StabilityReport {
    Vector frequency;
    int R = 0;
    double threshold = 0.5;
    std::vector<std::string> feature_names;

    std::vector<int> stable(double thr) const;
};

/// Runs `pipeline(stream_r)` for r = 0..R-1 on rng.derive(r) sub-streams and
/// counts how often each feature is selected.
StabilityReport stability_select(const std::function<std::vector<int>(const Stream&)>& pipeline, int R,
                                 Eigen::Index p, const Stream& rng, int threads = 1);

}  // namespace mknock

#pragma once

#include <memory>
#include <string>
#include <vector>

#include "core/linalg.hpp"
#include "core/observed.hpp"
#include "core/rng.hpp"
#include "core/tree.hpp"

namespace mknock {

enum class ImputeMethod { HalfMin, Mean, ChainedDefault, ChainedCart, ChainedPMM };

ImputeMethod parse_impute_method(const std::string& name);
std::string to_string(ImputeMethod m);

struct ImputeConfig {
    ImputeMethod method = ImputeMethod::ChainedDefault;
    int K = 5;
    bool include_outcome = true;
    int sweeps = 10;
    // Start the chained sweeps from the observed column mean instead of a
    // random draw from the observed values.
    bool mean_init = false;
    // Test hook: the linear engine returns its mean prediction without noise.
    bool noise_free = false;

    void validate() const;
};

struct CompletedSet {
    std::vector<Matrix> copies;
    IntMatrix mask;
    std::vector<std::string> warnings;

    int K() const { return static_cast<int>(copies.size()); }
};

/// Half-min or mean fill; K = 1.
CompletedSet impute_simple(const ObservedData& data, ImputeMethod method);

/// Chained-equation multiple imputation; K independent copies, copy k drawn
/// from rng.derive(k).
CompletedSet impute_chained(const ObservedData& data, const ImputeConfig& cfg, const Stream& rng);

/// Dispatches on cfg.method.
CompletedSet impute(const ObservedData& data, const ImputeConfig& cfg, const Stream& rng);

/// Per-column conditional model used inside a chained sweep.
class ColumnModel {
public:
    static constexpr int kPmmDonors = 5;
    static constexpr int kCartMaxDepth = 8;
    static constexpr int kCartMinLeaf = 10;

    /// Fits the engine on predictor rows of the observed cells and their values.
    static ColumnModel fit(ImputeMethod engine, const Matrix& predictors, const Vector& target,
                           Stream& rng, bool noise_free = false);

    /// Stochastic prediction for one row of predictors.
    double draw(const Eigen::Ref<const Eigen::RowVectorXd>& row, Stream& rng) const;

    bool degenerate() const { return degenerate_; }
    double residual_sd() const { return sigma_; }
    const Vector& coefficients() const { return coef_; }  // intercept first

private:
    double mean_prediction(const Eigen::Ref<const Eigen::RowVectorXd>& row) const;

    ImputeMethod engine_ = ImputeMethod::ChainedDefault;
    Vector coef_;
    double sigma_ = 0.0;
    bool noise_free_ = false;
    bool degenerate_ = false;
    // PMM: observed values sorted by their predicted mean.
    std::vector<std::pair<double, double>> donors_;
    std::shared_ptr<Tree> tree_;
};

}  // namespace mknock

#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "core/design.hpp"
#include "core/lasso.hpp"
#include "core/linalg.hpp"
#include "core/rng.hpp"

namespace mknock {

enum class Statistic { LassoCoef, LassoOrder, RandomForest, GDS, GMUS, CorrectedLasso };

Statistic parse_statistic(const std::string& name);
std::string to_string(Statistic s);
/// GMUS and the corrected lasso need an error covariance.
bool uses_error_cov(Statistic s);

struct StatPair {
    Vector z;
    Vector z_tilde;
    Statistic statistic = Statistic::LassoCoef;
    std::string tuning_name;  // "lambda", "d" or "" (forest)
    double tuning = 0.0;
    double delta = 0.0;  // GMUS only
    std::uint64_t interleave_key = 0;
};

struct StatOptions {
    CvOptions cv;
    LassoOptions lasso;
    int trees = 500;
    int mtry = 0;  // 0: floor(sqrt(2p))
    std::optional<double> gmus_delta;
    int d_points = 20;
    double d_low = 0.1;   // radius grid spans [d_low, d_high] * ||beta_lasso||_1
    double d_high = 2.0;
    int threads = 1;
};

/**
 * Computes statistics on one augmented design. The standardized design and the
 * cross-validated lasso (full path, folds and fold fits at the chosen lambda)
 * are built once on first use and shared: the lasso coefficient and entry
 * statistics read them directly, and GDS, GMUS and the corrected lasso use the
 * same folds and linearize the binomial loss around those fits.
 *
 * `sigma_eps` is the p x p error covariance of the original features on their
 * measured scale; it is rescaled to the standardized columns internally and
 * set to zero on the knockoff block.
 */
class StatEngine {
public:
    StatEngine(const AugmentedDesign& design, std::optional<Matrix> sigma_eps, StatOptions opt, Stream rng);
    ~StatEngine();

    StatPair compute(Statistic s);

    const LassoCv& lasso() const;
    const Matrix& standardized() const;
    /// Error covariance in solver column order on the standardized scale.
    Matrix augmented_error_cov() const;
    /// Default or overridden GMUS delta.
    double gmus_delta() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// One-shot convenience wrappers over StatEngine.
StatPair stat_lasso_coef(const AugmentedDesign& design, const Stream& rng, StatOptions opt = {});
StatPair stat_lasso_order(const AugmentedDesign& design, const Stream& rng, StatOptions opt = {});
StatPair stat_rf(const AugmentedDesign& design, const Stream& rng, StatOptions opt = {});
StatPair stat_gds(const AugmentedDesign& design, const Stream& rng, StatOptions opt = {});
StatPair stat_gmus(const AugmentedDesign& design, const Matrix& sigma_eps, const Stream& rng,
                   StatOptions opt = {});
StatPair stat_corrected_lasso(const AugmentedDesign& design, const Matrix& sigma_eps, const Stream& rng,
                              StatOptions opt = {});

/// Dantzig / matrix-uncertainty fit at a fixed bound on a standardized design
/// (solver column order, standardized scale). Exposed for tests.
struct DantzigFit {
    Vector beta;
    double intercept = 0.0;
};
DantzigFit dantzig_at(const Matrix& x_std, const Vector& y, Family family, const LassoFit* prelim,
                      double lambda, double delta = 0.0);

}  // namespace mknock

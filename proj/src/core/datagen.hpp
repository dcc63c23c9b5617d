#pragma once

#include <optional>
#include <span>
#include <vector>

#include "core/linalg.hpp"
#include "core/rng.hpp"

namespace mknock {

struct ArSpec {
    double sigma2 = 1.0;
    double rho = 0.5;
    int p = 0;
};

/// p x p matrix with entry (i, j) = sigma2 * rho^|i - j|.
Matrix ar_cov(const ArSpec& spec);

struct BetaSpec {
    int p = 0;
    int sparsity = 0;  // number of nonzero coefficients, a multiple of 3
    double amplitude = 1.0;
};

/// Tiles (3, 1.5, 0, 0, 2, 0, 0) * amplitude over the first 7s/3 entries with
/// the given +/-1 signs (one per tiled entry); the remainder is zero.
Vector make_beta(const BetaSpec& spec, std::span<const int> signs);
/// Same, with i.i.d. Rademacher signs drawn from rng.
Vector make_beta(const BetaSpec& spec, Stream& rng);

std::vector<int> support(const Vector& beta);

/// Y_i ~ Bernoulli(sigmoid(beta0 + X_i . beta)), returned as 0/1 doubles.
Vector sample_logistic_outcome(const Matrix& x, const Vector& beta, double beta0, Stream& rng);

/// W = X + E, rows of E ~ N(0, sigma_eps). sigma_eps == 0 returns X exactly.
Matrix add_measurement_error(const Matrix& x, const Matrix& sigma_eps, Stream& rng);

enum class MissingBasis { ErrorProne, ErrorFree };

struct MissingSpec {
    double pi_mis = 2.0 / 15.0;
    double p_mis = 0.15;
    MissingBasis depends_on = MissingBasis::ErrorProne;
    double eta_range = 2.0;
};

struct MaskResult {
    IntMatrix mask;             // 1 = observed
    std::vector<int> columns;   // columns carrying missingness, ascending
    std::vector<double> intercepts;  // calibrated eta_0j per column in `columns`
};

/// Intercept eta0 such that mean_i(1 - sigmoid(eta0 + linpred_i)) == p_mis,
/// by bisection (closed form logit(1 - p_mis) when linpred is constant).
double calibrate_missing_intercept(const Vector& linpred, double p_mis);

/// MAR mask: round(pi_mis*(p-s)) null and round(pi_mis*s) non-null columns get
/// logit P(R_ij = 1) = eta_0j + basis_{i,-j} . eta_j. When `columns` is given it
/// overrides the random column choice.
MaskResult sample_mar_mask(const Matrix& basis, const MissingSpec& spec,
                           std::span<const int> truth, Stream& rng,
                           std::optional<std::vector<int>> columns = std::nullopt);

std::vector<int> choose_missing_columns(int p, std::span<const int> truth, double pi_mis,
                                        Stream& rng);

enum class Setting { One = 1, Two = 2, Three = 3, Simultaneous = 4 };

struct ScenarioConfig {
    Setting setting = Setting::One;
    int n = 1000;
    int p = 60;
    double sigma2_x = 1.0;
    double rho_x = 0.5;
    double a_beta = 1.0;
    double beta0 = -1.0;
    double sigma2_eps = 0.0;
    double rho_eps = 0.3;
    double pi_mis = 2.0 / 15.0;
    double p_mis = 0.15;
    MissingBasis mis_basis = MissingBasis::ErrorProne;
    double eta_range = 2.0;
    bool fixed_mis_columns = false;  // draw S_mis once per run instead of per replicate

    void validate() const;
    int sparsity() const { return p / 4; }
};

struct SimulatedDataset {
    Matrix x;
    Matrix w;
    IntMatrix r;
    Vector y;
    Vector beta;
    std::vector<int> truth;
    Matrix sigma_eps;
    std::vector<int> missing_columns;
};

struct Scenario {
    std::vector<SimulatedDataset> datasets;  // one, or two for the simultaneous setting
    std::vector<int> truth;                  // non-null set (intersection across datasets)
};

/// Generates one replicate. `replicate` selects the sub-stream; `root` is the
/// run-level stream (used only when fixed_mis_columns is set).
Scenario generate_scenario(const ScenarioConfig& cfg, const Stream& root, std::uint64_t replicate);

}  // namespace mknock

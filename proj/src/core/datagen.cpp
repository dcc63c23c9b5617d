#include "core/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "core/error.hpp"

namespace mknock {

Matrix ar_cov(const ArSpec& spec) {
    MKNOCK_REQUIRE(spec.sigma2 > 0, ConfigError, "ar_cov: sigma2 must be positive");
    MKNOCK_REQUIRE(spec.rho >= 0 && spec.rho < 1, ConfigError, "ar_cov: rho must lie in [0, 1)");
    MKNOCK_REQUIRE(spec.p >= 1, ConfigError, "ar_cov: p must be at least 1");
    Matrix m(spec.p, spec.p);
    for (int i = 0; i < spec.p; ++i)
        for (int j = 0; j < spec.p; ++j) m(i, j) = spec.sigma2 * std::pow(spec.rho, std::abs(i - j));
    return m;
}

namespace {

constexpr double kPattern[7] = {3.0, 1.5, 0.0, 0.0, 2.0, 0.0, 0.0};

void check_beta_spec(const BetaSpec& spec) {
    MKNOCK_REQUIRE(spec.sparsity >= 0 && spec.sparsity % 3 == 0, ConfigError,
                   "make_beta: sparsity must be a nonnegative multiple of 3");
    MKNOCK_REQUIRE(7 * spec.sparsity / 3 <= spec.p, ConfigError,
                   "make_beta: 7s/3 exceeds the dimension");
}

}  // namespace

Vector make_beta(const BetaSpec& spec, std::span<const int> signs) {
    check_beta_spec(spec);
    const int tiled = 7 * spec.sparsity / 3;
    MKNOCK_REQUIRE(static_cast<int>(signs.size()) >= tiled, ConfigError,
                   "make_beta: need one sign per tiled entry");
    Vector beta = Vector::Zero(spec.p);
    for (int j = 0; j < tiled; ++j) beta(j) = spec.amplitude * kPattern[j % 7] * signs[j];
    return beta;
}

Vector make_beta(const BetaSpec& spec, Stream& rng) {
    check_beta_spec(spec);
    const int tiled = 7 * spec.sparsity / 3;
    std::vector<int> signs(tiled);
    for (auto& s : signs) s = (rng() >> 63) ? 1 : -1;
    return make_beta(spec, signs);
}

std::vector<int> support(const Vector& beta) {
    std::vector<int> out;
    for (Eigen::Index j = 0; j < beta.size(); ++j)
        if (beta(j) != 0.0) out.push_back(static_cast<int>(j));
    return out;
}

Vector sample_logistic_outcome(const Matrix& x, const Vector& beta, double beta0, Stream& rng) {
    MKNOCK_REQUIRE(x.cols() == beta.size(), ConfigError, "sample_logistic_outcome: dimension mismatch");
    const Vector eta = (x * beta).array() + beta0;
    Vector y(x.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i) y(i) = rng.uniform() < sigmoid(eta(i)) ? 1.0 : 0.0;
    return y;
}

Matrix add_measurement_error(const Matrix& x, const Matrix& sigma_eps, Stream& rng) {
    MKNOCK_REQUIRE(sigma_eps.rows() == x.cols() && sigma_eps.cols() == x.cols(), ConfigError,
                   "add_measurement_error: covariance dimension mismatch");
    if (sigma_eps.isZero(0.0)) return x;
    MKNOCK_REQUIRE(is_symmetric(sigma_eps), MatrixError, "add_measurement_error: covariance not symmetric");
    const Matrix factor = psd_factor(sigma_eps);
    return x + sample_gaussian_rows(x.rows(), factor, rng);
}

double calibrate_missing_intercept(const Vector& linpred, double p_mis) {
    MKNOCK_REQUIRE(p_mis > 0 && p_mis < 1, ConfigError, "missing rate must lie in (0, 1)");
    if (linpred.size() == 0 || linpred.maxCoeff() == linpred.minCoeff()) {
        const double c = linpred.size() ? linpred(0) : 0.0;
        return logit(1.0 - p_mis) - c;
    }
    auto rate = [&](double eta0) {
        double s = 0.0;
        for (Eigen::Index i = 0; i < linpred.size(); ++i) s += 1.0 - sigmoid(eta0 + linpred(i));
        return s / static_cast<double>(linpred.size());
    };
    // rate() decreases in eta0; bracket then bisect.
    double lo = -1.0, hi = 1.0;
    while (rate(lo) < p_mis) lo *= 2.0;
    while (rate(hi) > p_mis) hi *= 2.0;
    for (int it = 0; it < 200 && hi - lo > 1e-10; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double r = rate(mid);
        if (std::abs(r - p_mis) < 1e-12) return mid;
        (r > p_mis ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

std::vector<int> choose_missing_columns(int p, std::span<const int> truth, double pi_mis, Stream& rng) {
    MKNOCK_REQUIRE(pi_mis >= 0 && pi_mis <= 1, ConfigError, "pi_mis must lie in [0, 1]");
    std::vector<char> is_signal(p, 0);
    for (int j : truth) is_signal.at(j) = 1;
    std::vector<int> nulls, signals;
    for (int j = 0; j < p; ++j) (is_signal[j] ? signals : nulls).push_back(j);

    const auto n0 = static_cast<std::size_t>(std::lround(pi_mis * static_cast<double>(nulls.size())));
    const auto n1 = static_cast<std::size_t>(std::lround(pi_mis * static_cast<double>(signals.size())));
    std::shuffle(nulls.begin(), nulls.end(), rng);
    std::shuffle(signals.begin(), signals.end(), rng);
    std::vector<int> cols(nulls.begin(), nulls.begin() + n0);
    cols.insert(cols.end(), signals.begin(), signals.begin() + n1);
    std::sort(cols.begin(), cols.end());
    return cols;
}

MaskResult sample_mar_mask(const Matrix& basis, const MissingSpec& spec, std::span<const int> truth,
                           Stream& rng, std::optional<std::vector<int>> columns) {
    MKNOCK_REQUIRE(spec.p_mis > 0 && spec.p_mis < 1, ConfigError, "p_mis must lie in (0, 1)");
    MKNOCK_REQUIRE(spec.eta_range >= 0, ConfigError, "eta_range must be nonnegative");
    const auto n = basis.rows();
    const auto p = static_cast<int>(basis.cols());

    MaskResult out;
    out.mask = IntMatrix::Ones(n, p);
    out.columns = columns ? *columns : choose_missing_columns(p, truth, spec.pi_mis, rng);

    std::uniform_real_distribution<double> coef(-spec.eta_range, spec.eta_range);
    for (int j : out.columns) {
        MKNOCK_REQUIRE(j >= 0 && j < p, ConfigError, "missing column index out of range");
        Vector eta(p);
        for (int k = 0; k < p; ++k) eta(k) = (k == j || spec.eta_range == 0.0) ? 0.0 : coef(rng);
        const Vector lin = basis * eta;
        const double eta0 = calibrate_missing_intercept(lin, spec.p_mis);
        out.intercepts.push_back(eta0);
        for (Eigen::Index i = 0; i < n; ++i)
            out.mask(i, j) = rng.uniform() < sigmoid(eta0 + lin(i)) ? 1 : 0;
    }
    return out;
}

void ScenarioConfig::validate() const {
    MKNOCK_REQUIRE(n >= 10, ConfigError, "n must be at least 10");
    MKNOCK_REQUIRE(p >= 4 && p % 4 == 0 && (p / 4) % 3 == 0, ConfigError,
                   "p must make p/4 a multiple of 3 (e.g. 60, 120)");
    MKNOCK_REQUIRE(sigma2_x > 0, ConfigError, "sigma2_x must be positive");
    MKNOCK_REQUIRE(rho_x >= 0 && rho_x < 1, ConfigError, "rho_x must lie in [0, 1)");
    MKNOCK_REQUIRE(sigma2_eps >= 0, ConfigError, "sigma2_eps must be nonnegative");
    MKNOCK_REQUIRE(rho_eps >= 0 && rho_eps < 1, ConfigError, "rho_eps must lie in [0, 1)");
    MKNOCK_REQUIRE(pi_mis >= 0 && pi_mis <= 1, ConfigError, "pi_mis must lie in [0, 1]");
    MKNOCK_REQUIRE(p_mis > 0 && p_mis < 1, ConfigError, "p_mis must lie in (0, 1)");
    switch (setting) {
        case Setting::One:
            MKNOCK_REQUIRE(sigma2_eps == 0, ConfigError, "setting 1 requires sigma2_eps = 0");
            break;
        case Setting::Two:
            MKNOCK_REQUIRE(pi_mis == 0, ConfigError, "setting 2 requires pi_mis = 0");
            break;
        case Setting::Three:
            MKNOCK_REQUIRE(pi_mis > 0 && sigma2_eps > 0, ConfigError,
                           "setting 3 requires both pi_mis > 0 and sigma2_eps > 0");
            break;
        case Setting::Simultaneous:
            MKNOCK_REQUIRE(7 * sparsity() / 3 + 4 <= p, ConfigError,
                           "simultaneous setting needs 7s/3 + 4 <= p");
            break;
    }
}

namespace {

SimulatedDataset draw_dataset(const ScenarioConfig& cfg, const Vector& beta, const Matrix& sigma_x,
                              const Matrix& sigma_eps, const Stream& stream,
                              const std::optional<std::vector<int>>& fixed_columns) {
    SimulatedDataset d;
    Stream feat = derive(stream, Role::Features);
    Stream err = derive(stream, Role::Errors);
    Stream mask = derive(stream, Role::Mask);
    Stream outcome = derive(stream, Role::Outcome);

    d.beta = beta;
    d.truth = support(beta);
    d.sigma_eps = sigma_eps;
    d.x = sample_gaussian_rows(cfg.n, psd_factor(sigma_x), feat);
    d.y = sample_logistic_outcome(d.x, beta, cfg.beta0, outcome);
    d.w = add_measurement_error(d.x, sigma_eps, err);
    if (cfg.pi_mis > 0) {
        MissingSpec ms{cfg.pi_mis, cfg.p_mis, cfg.mis_basis, cfg.eta_range};
        const Matrix& basis = cfg.mis_basis == MissingBasis::ErrorProne ? d.w : d.x;
        auto res = sample_mar_mask(basis, ms, d.truth, mask, fixed_columns);
        d.r = std::move(res.mask);
        d.missing_columns = std::move(res.columns);
    } else {
        d.r = IntMatrix::Ones(cfg.n, cfg.p);
    }
    return d;
}

}  // namespace

Scenario generate_scenario(const ScenarioConfig& cfg, const Stream& root, std::uint64_t replicate) {
    cfg.validate();
    const Stream rep = root.derive(replicate);
    const Matrix sigma_x = ar_cov({cfg.sigma2_x, cfg.rho_x, cfg.p});
    const Matrix sigma_eps =
        cfg.sigma2_eps > 0 ? ar_cov({cfg.sigma2_eps, cfg.rho_eps, cfg.p}) : Matrix::Zero(cfg.p, cfg.p);
    const BetaSpec bs{cfg.p, cfg.sparsity(), cfg.a_beta};
    Stream beta_stream = derive(rep, Role::Beta);

    Scenario sc;
    if (cfg.setting != Setting::Simultaneous) {
        std::optional<std::vector<int>> fixed;
        const Vector beta = make_beta(bs, beta_stream);
        if (cfg.fixed_mis_columns && cfg.pi_mis > 0) {
            Stream fs = derive(root, Role::Mask);
            fixed = choose_missing_columns(cfg.p, support(beta), cfg.pi_mis, fs);
        }
        sc.datasets.push_back(draw_dataset(cfg, beta, sigma_x, sigma_eps, rep.derive("dataset-0"), fixed));
        sc.truth = sc.datasets[0].truth;
        return sc;
    }

    // Shared tiled signals, then two dataset-specific signals of magnitude
    // (0.5, 1) at positions 7s/3 + {0,1} (first) and 7s/3 + {2,3} (second).
    const int tiled = 7 * bs.sparsity / 3;
    Vector shared = Vector::Zero(cfg.p);
    {
        std::vector<int> signs(tiled);
        for (auto& s : signs) s = (beta_stream() >> 63) ? 1 : -1;
        shared = make_beta(bs, signs);
    }
    auto rademacher = [&]() { return (beta_stream() >> 63) ? 1.0 : -1.0; };
    const double eps_a = rademacher(), eps_b = rademacher(), eps_c = rademacher(), eps_d = rademacher();
    Vector b1 = shared, b2 = shared;
    b1(tiled) = cfg.a_beta * 0.5 * rademacher() * eps_a;
    b1(tiled + 1) = cfg.a_beta * 1.0 * rademacher() * eps_b;
    b2(tiled + 2) = cfg.a_beta * 0.5 * rademacher() * eps_c;
    b2(tiled + 3) = cfg.a_beta * 1.0 * rademacher() * eps_d;

    for (int m = 0; m < 2; ++m) {
        std::optional<std::vector<int>> fixed;
        const Vector& beta = m == 0 ? b1 : b2;
        if (cfg.fixed_mis_columns && cfg.pi_mis > 0) {
            Stream fs = derive(root, Role::Mask).derive(static_cast<std::uint64_t>(m));
            fixed = choose_missing_columns(cfg.p, support(beta), cfg.pi_mis, fs);
        }
        sc.datasets.push_back(
            draw_dataset(cfg, beta, sigma_x, sigma_eps, rep.derive("dataset-" + std::to_string(m)), fixed));
    }
    std::set_intersection(sc.datasets[0].truth.begin(), sc.datasets[0].truth.end(),
                          sc.datasets[1].truth.begin(), sc.datasets[1].truth.end(),
                          std::back_inserter(sc.truth));
    return sc;
}

}  // namespace mknock

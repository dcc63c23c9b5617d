#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "core/datagen.hpp"
#include "core/error.hpp"
#include "core/rng.hpp"

using namespace mknock;

TEST_CASE("stream is reproducible and derivation leaves the parent untouched") {
    Stream a(42), b(42);
    for (int i = 0; i < 5; ++i) CHECK(a() == b());

    Stream parent(7);
    const auto before = parent.counter();
    Stream c1 = parent.derive("x");
    Stream c2 = parent.derive(3);
    CHECK(parent.counter() == before);
    CHECK(c1.key() != c2.key());

    // Derivation order does not matter.
    Stream p1(9), p2(9);
    Stream x1 = p1.derive("a");
    Stream y1 = p1.derive("b");
    Stream y2 = p2.derive("b");
    Stream x2 = p2.derive("a");
    CHECK(x1() == x2());
    CHECK(y1() == y2());
}

TEST_CASE("uniform draws lie in [0, 1) with mean near one half") {
    Stream s(1);
    double sum = 0;
    for (int i = 0; i < 100000; ++i) {
        const double u = s.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        sum += u;
    }
    CHECK(sum / 100000 == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("AR covariance entries") {
    CHECK(ar_cov({1.0, 0.0, 3}).isApprox(Matrix::Identity(3, 3)));
    const Matrix m = ar_cov({1.0, 0.5, 60});
    CHECK(m(0, 1) == doctest::Approx(0.5));
    CHECK(m(0, 2) == doctest::Approx(0.25));
    const Matrix k = ar_cov({2.0, 0.3, 4});
    CHECK(k(1, 3) == doctest::Approx(2.0 * 0.3 * 0.3));
}

TEST_CASE("coefficient tiling") {
    const std::vector<int> plus(7, 1);
    Vector b = make_beta({7, 3, 1.0}, plus);
    Vector expect(7);
    expect << 3, 1.5, 0, 0, 2, 0, 0;
    CHECK(b == expect);
    CHECK(make_beta({7, 3, 0.0}, plus).isZero());

    Stream s(5);
    const Vector big = make_beta({60, 15, 1.0}, s);
    CHECK(support(big).size() == 15);
    for (int j : support(big)) CHECK(j < 35);
    // Magnitudes follow the tile regardless of sign.
    for (int j = 0; j < 35; ++j) {
        const double mag[] = {3, 1.5, 0, 0, 2, 0, 0};
        CHECK(std::abs(big(j)) == mag[j % 7]);
    }
}

TEST_CASE("logistic outcome rates") {
    const int n = 100000;
    Matrix x = Matrix::Zero(n, 2);
    Vector beta = Vector::Zero(2);
    Stream s(11);
    CHECK(sample_logistic_outcome(x, beta, 0.0, s).mean() == doctest::Approx(0.5).epsilon(0.02));
    const double rate = sample_logistic_outcome(x, beta, -1.0, s).mean();
    CHECK(std::abs(rate - 1.0 / (1.0 + std::exp(1.0))) < 0.01);
    x.col(0).setConstant(10.0);
    beta(0) = 1.0;
    CHECK(sample_logistic_outcome(x, beta, 0.0, s).mean() >= 0.999);
}

TEST_CASE("measurement error") {
    Stream s(3);
    const Matrix x = sample_gaussian_rows(500, Matrix::Identity(4, 4), s);
    CHECK(add_measurement_error(x, Matrix::Zero(4, 4), s) == x);

    const int n = 10000, p = 6;
    const Matrix sx = ar_cov({1.0, 0.5, p});
    const Matrix se = ar_cov({0.6, 0.3, p});
    const Matrix xb = sample_gaussian_rows(n, psd_factor(sx), s);
    const Matrix w = add_measurement_error(xb, se, s);
    const Matrix err_cov = sample_covariance(w - xb);
    CHECK((err_cov - se).cwiseAbs().maxCoeff() < 0.05);
    const Matrix wc = sample_covariance(w);
    for (int j = 0; j < p; ++j) CHECK(std::abs(wc(j, j) - 1.6) < 0.1);
}

TEST_CASE("missingness intercept calibration") {
    const Vector flat = Vector::Zero(50);
    CHECK(calibrate_missing_intercept(flat, 0.05) == doctest::Approx(std::log(0.95 / 0.05)));

    Stream s(4);
    Vector lin(2000);
    for (Eigen::Index i = 0; i < lin.size(); ++i) lin(i) = 4.0 * s.uniform() - 2.0;
    const double eta0 = calibrate_missing_intercept(lin, 0.15);
    double miss = 0;
    for (Eigen::Index i = 0; i < lin.size(); ++i) miss += 1.0 - sigmoid(eta0 + lin(i));
    CHECK(miss / lin.size() == doctest::Approx(0.15).epsilon(1e-6));
}

TEST_CASE("MAR mask column counts and rates") {
    const int n = 10000, p = 60;
    Stream s(8);
    const Matrix basis = sample_gaussian_rows(n, psd_factor(ar_cov({1.0, 0.5, p})), s);
    Stream bs(2);
    const Vector beta = make_beta({p, 15, 1.0}, bs);
    const auto truth = support(beta);
    MissingSpec spec;
    const MaskResult m = sample_mar_mask(basis, spec, truth, s);
    CHECK(m.columns.size() == 8);
    int in_truth = 0;
    for (int j : m.columns) in_truth += std::binary_search(truth.begin(), truth.end(), j);
    CHECK(in_truth == 2);  // round(2/15 * 15)
    for (int j = 0; j < p; ++j) {
        const double miss = 1.0 - m.mask.col(j).cast<double>().mean();
        if (std::find(m.columns.begin(), m.columns.end(), j) != m.columns.end())
            CHECK(std::abs(miss - 0.15) < 0.02);
        else
            CHECK(miss == 0.0);
    }

    spec.pi_mis = 0.0;
    CHECK(sample_mar_mask(basis, spec, truth, s).mask.minCoeff() == 1);
}

TEST_CASE("scenario settings") {
    ScenarioConfig one;
    one.n = 300;
    const Scenario s1 = generate_scenario(one, Stream(1), 0);
    REQUIRE(s1.datasets.size() == 1);
    CHECK(s1.datasets[0].w == s1.datasets[0].x);
    CHECK(s1.truth.size() == 15);

    ScenarioConfig two;
    two.setting = Setting::Two;
    two.n = 300;
    two.pi_mis = 0.0;
    two.sigma2_eps = 0.6;
    const Scenario s2 = generate_scenario(two, Stream(1), 0);
    CHECK(s2.datasets[0].r.minCoeff() == 1);
    CHECK(s2.datasets[0].w != s2.datasets[0].x);

    ScenarioConfig sim;
    sim.setting = Setting::Simultaneous;
    sim.n = 300;
    sim.sigma2_eps = 0.6;
    const Scenario ss = generate_scenario(sim, Stream(1), 0);
    REQUIRE(ss.datasets.size() == 2);
    const auto& t1 = ss.datasets[0].truth;
    const auto& t2 = ss.datasets[1].truth;
    CHECK(ss.truth.size() == 15);
    CHECK(t1.size() == 17);
    CHECK(t2.size() == 17);
    std::set<int> uni(t1.begin(), t1.end());
    uni.insert(t2.begin(), t2.end());
    CHECK(uni.size() == 19);
}

TEST_CASE("scenario validation") {
    ScenarioConfig bad;
    bad.p = 50;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    ScenarioConfig one;
    one.sigma2_eps = 0.1;
    CHECK_THROWS_AS(one.validate(), ConfigError);
}

TEST_CASE("replicates are reproducible and distinct") {
    ScenarioConfig cfg;
    cfg.n = 100;
    cfg.p = 12;
    const Scenario a = generate_scenario(cfg, Stream(3), 5);
    const Scenario b = generate_scenario(cfg, Stream(3), 5);
    const Scenario c = generate_scenario(cfg, Stream(3), 6);
    CHECK(a.datasets[0].w == b.datasets[0].w);
    CHECK(a.datasets[0].y == b.datasets[0].y);
    CHECK(a.datasets[0].w != c.datasets[0].w);
}

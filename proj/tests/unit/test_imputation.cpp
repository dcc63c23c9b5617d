#include <doctest.h>

#include <cmath>
#include <set>

#include "core/error.hpp"
#include "core/impute.hpp"
#include "core/tree.hpp"

using namespace mknock;

namespace {

ObservedData correlated_data(int n, int p, double missing_rate, std::uint64_t seed) {
    Stream s(seed);
    ObservedData d;
    Matrix l = Matrix::Identity(p, p);
    for (int j = 1; j < p; ++j) l(j, j - 1) = 0.8;
    d.w = sample_gaussian_rows(n, l, s);
    d.r = IntMatrix::Ones(n, p);
    d.y = Vector(n);
    for (int i = 0; i < n; ++i) d.y(i) = s.uniform() < sigmoid(d.w(i, 0)) ? 1.0 : 0.0;
    for (int j = 1; j < p; ++j)
        for (int i = 0; i < n; ++i)
            if (s.uniform() < missing_rate) d.r(i, j) = 0;
    return d;
}

}  // namespace

TEST_CASE("simple fills") {
    ObservedData d;
    d.w.resize(3, 1);
    d.w << 2, std::nan(""), 4;
    d.r.resize(3, 1);
    d.r << 1, 0, 1;
    d.y = Vector::Zero(3);

    const CompletedSet h = impute_simple(d, ImputeMethod::HalfMin);
    REQUIRE(h.K() == 1);
    CHECK(h.copies[0](1, 0) == 1.0);
    const CompletedSet m = impute_simple(d, ImputeMethod::Mean);
    CHECK(m.copies[0](1, 0) == 3.0);
    CHECK(m.copies[0](0, 0) == 2.0);
    CHECK(m.copies[0](2, 0) == 4.0);
}

TEST_CASE("complete input is returned unchanged by every engine") {
    ObservedData d = correlated_data(80, 4, 0.0, 1);
    for (ImputeMethod m : {ImputeMethod::HalfMin, ImputeMethod::Mean, ImputeMethod::ChainedDefault,
                           ImputeMethod::ChainedCart, ImputeMethod::ChainedPMM}) {
        ImputeConfig cfg;
        cfg.method = m;
        cfg.K = 3;
        const CompletedSet cs = impute(d, cfg, Stream(2));
        for (const Matrix& c : cs.copies) CHECK(c == d.w);
    }
}

TEST_CASE("noise-free linear engine reproduces the least-squares prediction") {
    ObservedData d = correlated_data(60, 3, 0.0, 4);
    d.r(10, 2) = 0;
    d.w(10, 2) = 99.0;
    ImputeConfig cfg;
    cfg.K = 1;
    cfg.include_outcome = false;
    cfg.noise_free = true;

    // Oracle: OLS of column 2 on an intercept and columns 0, 1 over the other rows.
    Matrix a(59, 3);
    Vector b(59);
    int row = 0;
    for (int i = 0; i < 60; ++i) {
        if (i == 10) continue;
        a.row(row) << 1.0, d.w(i, 0), d.w(i, 1);
        b(row++) = d.w(i, 2);
    }
    const Vector coef = a.colPivHouseholderQr().solve(b);
    const double expect = coef(0) + coef(1) * d.w(10, 0) + coef(2) * d.w(10, 1);

    const CompletedSet cs = impute(d, cfg, Stream(3));
    CHECK(cs.copies[0](10, 2) == doctest::Approx(expect).epsilon(1e-9));
}

TEST_CASE("predictive mean matching only donates observed values") {
    const ObservedData d = correlated_data(120, 4, 0.3, 5);
    ImputeConfig cfg;
    cfg.method = ImputeMethod::ChainedPMM;
    cfg.K = 2;
    cfg.sweeps = 3;
    const CompletedSet cs = impute(d, cfg, Stream(6));
    for (int j = 0; j < 4; ++j) {
        std::set<double> seen;
        for (int i = 0; i < 120; ++i)
            if (d.r(i, j)) seen.insert(d.w(i, j));
        for (const Matrix& c : cs.copies)
            for (int i = 0; i < 120; ++i) CHECK(seen.count(c(i, j)) == 1);
    }
}

TEST_CASE("tree engine with too few rows to split draws from the observed column") {
    ObservedData d = correlated_data(30, 2, 0.0, 7);
    for (int i = 15; i < 30; ++i) d.r(i, 1) = 0;  // 15 observed < 2 * minimum leaf
    ImputeConfig cfg;
    cfg.method = ImputeMethod::ChainedCart;
    cfg.K = 2;
    cfg.include_outcome = false;
    const CompletedSet cs = impute(d, cfg, Stream(8));
    std::set<double> seen;
    for (int i = 0; i < 15; ++i) seen.insert(d.w(i, 1));
    for (const Matrix& c : cs.copies)
        for (int i = 15; i < 30; ++i) CHECK(seen.count(c(i, 1)) == 1);
}

TEST_CASE("copies differ and are reproducible") {
    const ObservedData d = correlated_data(100, 4, 0.25, 9);
    ImputeConfig cfg;
    cfg.K = 3;
    cfg.sweeps = 4;
    const CompletedSet a = impute(d, cfg, Stream(10));
    const CompletedSet b = impute(d, cfg, Stream(10));
    REQUIRE(a.K() == 3);
    for (int k = 0; k < 3; ++k) CHECK(a.copies[k] == b.copies[k]);
    CHECK(a.copies[0] != a.copies[1]);
}

TEST_CASE("chained imputation keeps correlated columns related") {
    // Column 1 depends on column 0 with slope 0.8; imputed cells should follow it.
    const ObservedData d = correlated_data(2000, 2, 0.3, 11);
    ImputeConfig cfg;
    cfg.K = 1;
    cfg.include_outcome = false;
    const CompletedSet cs = impute(d, cfg, Stream(12));
    double sxy = 0, sxx = 0;
    int cnt = 0;
    for (int i = 0; i < 2000; ++i)
        if (!d.r(i, 1)) {
            sxy += cs.copies[0](i, 0) * cs.copies[0](i, 1);
            sxx += cs.copies[0](i, 0) * cs.copies[0](i, 0);
            ++cnt;
        }
    REQUIRE(cnt > 400);
    CHECK(std::abs(sxy / sxx - 0.8) < 0.15);
}

TEST_CASE("configuration errors") {
    ImputeConfig cfg;
    cfg.K = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    CHECK_THROWS_AS(parse_impute_method("bogus"), ConfigError);
    CHECK(parse_impute_method(to_string(ImputeMethod::ChainedPMM)) == ImputeMethod::ChainedPMM);
}

TEST_CASE("regression tree splits on the informative feature") {
    Matrix x(200, 2);
    std::vector<double> y(200);
    Stream s(13);
    for (int i = 0; i < 200; ++i) {
        x(i, 0) = s.uniform();
        x(i, 1) = s.uniform();
        y[i] = x(i, 0) < 0.5 ? 0.0 : 10.0;
    }
    std::vector<int> rows(200);
    for (int i = 0; i < 200; ++i) rows[i] = i;
    Tree t;
    Vector imp = Vector::Zero(2);
    TreeParams tp;
    tp.max_depth = 1;
    t.fit(x, y, rows, tp, s, &imp);
    CHECK(imp(0) > 0);
    CHECK(imp(1) == 0);
    Eigen::RowVectorXd lo(2), hi(2);
    lo << 0.1, 0.5;
    hi << 0.9, 0.5;
    CHECK(t.leaf_mean(t.leaf_of(lo)) == 0.0);
    CHECK(t.leaf_mean(t.leaf_of(hi)) == 10.0);
}

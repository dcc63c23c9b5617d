#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "mknock.h"

namespace {

std::string take(char* s) {
    std::string out = s ? s : "";
    mknock_string_free(s);
    return out;
}

const std::string kDir = MKNOCK_TEST_DIR;

// Two-column logistic signal plus noise features, a few missing cells.
struct Data {
    int n = 120, p = 6;
    std::vector<double> w, y;
};

Data make_data() {
    Data d;
    unsigned long long state = 12345;
    auto unif = [&] {
        state = state * 6364136223846793005ULL + 1442695040888963407ULL;
        return static_cast<double>(state >> 11) / 9007199254740992.0;
    };
    auto gauss = [&] { return std::sqrt(-2 * std::log(1 - unif())) * std::cos(6.283185307179586 * unif()); };
    for (int i = 0; i < d.n; ++i) {
        double eta = 0;
        for (int j = 0; j < d.p; ++j) {
            const double v = gauss();
            if (j == 0) eta += 2 * v;
            if (j == 1) eta -= 2 * v;
            d.w.push_back((j == 4 && i % 9 == 0) ? NAN : v);
        }
        d.y.push_back(unif() < 1 / (1 + std::exp(-eta)) ? 1.0 : 0.0);
    }
    return d;
}

std::string write_csv(const Data& d, const std::string& name) {
    const std::string path = kDir + "/" + name;
    std::ofstream out(path);
    out.precision(17);
    out << "y";
    for (int j = 0; j < d.p; ++j) out << ",x" << j + 1;
    out << "\n";
    for (int i = 0; i < d.n; ++i) {
        out << d.y[i];
        for (int j = 0; j < d.p; ++j) {
            const double v = d.w[i * d.p + j];
            out << ",";
            if (std::isnan(v))
                out << "NA";
            else
                out << v;
        }
        out << "\n";
    }
    return path;
}

const char* kOptions =
    R"({"outcome": "y", "seed": 9, "truncate": false, "impute": {"K": 2, "sweeps": 3}, "stat": {"n_lambda": 30}})";

}  // namespace

TEST_CASE("version and errors") {
    CHECK(std::string(mknock_version()).size() > 0);

    mknock_summary* s = nullptr;
    CHECK(mknock_simulate(R"({"setting": "1"})", &s) == MKNOCK_ERR_CONFIG);
    CHECK(s == nullptr);
    CHECK(std::string(mknock_last_error()).find("seed") != std::string::npos);
    CHECK(mknock_simulate(R"({"seed": 1, "q": 2})", &s) == MKNOCK_ERR_CONFIG);
    CHECK(mknock_simulate("{", &s) == MKNOCK_ERR_CONFIG);
    CHECK(mknock_simulate(nullptr, &s) == MKNOCK_ERR_CONFIG);
    CHECK(mknock_simulate(R"({"seed": 1})", nullptr) == MKNOCK_ERR_CONFIG);

    mknock_screen* sc = nullptr;
    CHECK(mknock_screen_file("/nonexistent/data.csv", R"({"outcome": "y"})", &sc) == MKNOCK_ERR_DATA);
    CHECK(mknock_screen_file("/nonexistent/data.csv", R"({"outcome": "y", "bogus": 1})", &sc) == MKNOCK_ERR_CONFIG);
    CHECK(sc == nullptr);
}

TEST_CASE("simulation summary") {
    mknock_summary* s = nullptr;
    const char* cfg = R"({"setting": "1", "n": 200, "p": 12, "replicates": 2, "seed": 3,
                          "impute": {"K": 2, "sweeps": 2}, "statistics": ["lasso", "lasso_order"],
                          "stat": {"n_lambda": 30}})";
    REQUIRE(mknock_simulate(cfg, &s) == MKNOCK_OK);
    CHECK(mknock_summary_method_count(s) == 2);
    CHECK(mknock_summary_aborted(s) == 0);
    const char* name = nullptr;
    double fdp = -1, se_fdp = -1, power = -1, se_power = -1;
    REQUIRE(mknock_summary_method(s, 1, &name, &fdp, &se_fdp, &power, &se_power) == MKNOCK_OK);
    CHECK(std::string(name) == "lasso_order");
    CHECK(fdp >= 0.0);
    CHECK(fdp <= 1.0);
    CHECK(power >= 0.0);
    CHECK(power <= 1.0);
    CHECK(mknock_summary_method(s, 2, &name, &fdp, nullptr, nullptr, nullptr) == MKNOCK_ERR_CONFIG);

    char* out = nullptr;
    REQUIRE(mknock_summary_render(s, MKNOCK_FORMAT_JSON, &out) == MKNOCK_OK);
    const std::string json = take(out);
    CHECK(json.find("\"replicates\"") != std::string::npos);
    REQUIRE(mknock_summary_render(s, MKNOCK_FORMAT_CSV, &out) == MKNOCK_OK);
    CHECK(take(out).find("lasso_order") != std::string::npos);
    REQUIRE(mknock_summary_render(s, MKNOCK_FORMAT_TEXT, &out) == MKNOCK_OK);
    CHECK(!take(out).empty());
    mknock_summary_free(s);

    // Same seed, same report.
    mknock_summary* again = nullptr;
    REQUIRE(mknock_simulate(cfg, &again) == MKNOCK_OK);
    REQUIRE(mknock_summary_render(again, MKNOCK_FORMAT_JSON, &out) == MKNOCK_OK);
    CHECK(take(out) == json);
    mknock_summary_free(again);
}

TEST_CASE("matrix and file screens agree") {
    const Data d = make_data();
    const std::string path = write_csv(d, "capi_screen.csv");

    mknock_screen* from_file = nullptr;
    REQUIRE(mknock_screen_file(path.c_str(), kOptions, &from_file) == MKNOCK_OK);
    const char* names[] = {"x1", "x2", "x3", "x4", "x5", "x6"};
    mknock_screen* from_matrix = nullptr;
    REQUIRE(mknock_screen_matrix(d.w.data(), d.y.data(), d.n, d.p, nullptr, names, kOptions, &from_matrix) ==
            MKNOCK_OK);

    char* a = nullptr;
    char* b = nullptr;
    REQUIRE(mknock_screen_csv(from_file, nullptr, &a) == MKNOCK_OK);
    REQUIRE(mknock_screen_csv(from_matrix, "lasso", &b) == MKNOCK_OK);
    CHECK(take(a) == take(b));

    size_t count = 0;
    REQUIRE(mknock_screen_selected(from_file, nullptr, nullptr, 0, &count) == MKNOCK_OK);
    std::vector<int> idx(count + 1, -1);
    REQUIRE(mknock_screen_selected(from_file, nullptr, idx.data(), idx.size(), &count) == MKNOCK_OK);
    for (size_t i = 0; i < count; ++i) {
        CHECK(idx[i] >= 0);
        CHECK(idx[i] < d.p);
    }
    if (count > 0) CHECK(mknock_screen_selected(from_file, nullptr, idx.data(), count - 1, &count) == MKNOCK_ERR_CONFIG);
    CHECK(mknock_screen_selected(from_file, "gmus", nullptr, 0, &count) == MKNOCK_ERR_CONFIG);

    char* json = nullptr;
    REQUIRE(mknock_screen_json(from_file, &json) == MKNOCK_OK);
    CHECK(take(json).find("x5") != std::string::npos);

    mknock_screen_free(from_file);
    mknock_screen_free(from_matrix);
    std::remove(path.c_str());
}

TEST_CASE("screen data errors") {
    const double w[] = {1, 2, 3, 4};
    const double y[] = {0, NAN};
    mknock_screen* s = nullptr;
    CHECK(mknock_screen_matrix(w, y, 2, 2, nullptr, nullptr, R"({"seed": 1})", &s) == MKNOCK_ERR_DATA);
    CHECK(mknock_screen_matrix(w, y, 1, 2, nullptr, nullptr, nullptr, &s) == MKNOCK_ERR_DATA);
    CHECK(s == nullptr);
}

TEST_CASE("error covariance from QC samples") {
    const std::string path = kDir + "/capi_qc.csv";
    {
        std::ofstream out(path);
        out << "batch,a,b\n1,1,2\n1,2,2\n2,3,5\n2,4,4\n";
    }
    mknock_matrix* m = nullptr;
    REQUIRE(mknock_error_cov(path.c_str(), nullptr, &m) == MKNOCK_OK);
    REQUIRE(mknock_matrix_rows(m) == 2);
    REQUIRE(mknock_matrix_cols(m) == 2);
    CHECK(std::string(mknock_matrix_column_name(m, 1)) == "b");
    CHECK(mknock_matrix_column_name(m, 2) == nullptr);
    // Sample covariance of a = (1, 2, 3, 4), b = (2, 2, 5, 4).
    const double* v = mknock_matrix_data(m);
    CHECK(v[0] == doctest::Approx(5.0 / 3.0));
    CHECK(v[1] == doctest::Approx(1.5));
    CHECK(v[3] == doctest::Approx(2.25));
    char* csv = nullptr;
    REQUIRE(mknock_matrix_csv(m, &csv) == MKNOCK_OK);
    CHECK(take(csv).rfind("a,b\n", 0) == 0);
    mknock_matrix_free(m);

    // Paired: half the covariance of within-batch differences (-1, 0), (-1, 1).
    REQUIRE(mknock_error_cov(path.c_str(), R"({"paired": true})", &m) == MKNOCK_OK);
    v = mknock_matrix_data(m);
    CHECK(v[0] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(v[3] == doctest::Approx(0.25));
    mknock_matrix_free(m);

    CHECK(mknock_error_cov(path.c_str(), R"({"unknown": 1})", &m) == MKNOCK_ERR_CONFIG);
    std::remove(path.c_str());
}

TEST_CASE("imputation keeps observed cells") {
    const Data d = make_data();
    const std::string path = write_csv(d, "capi_impute.csv");
    mknock_matrix* m = nullptr;
    REQUIRE(mknock_impute_file(path.c_str(), R"({"outcome": "y", "seed": 4, "impute": {"K": 3}})", &m) == MKNOCK_OK);
    REQUIRE(mknock_matrix_rows(m) == static_cast<size_t>(3 * d.n));
    REQUIRE(mknock_matrix_cols(m) == static_cast<size_t>(d.p + 1));
    CHECK(std::string(mknock_matrix_column_name(m, 0)) == "imputation");
    const double* v = mknock_matrix_data(m);
    const size_t cols = d.p + 1;
    bool kept = true, filled = true;
    for (int k = 0; k < 3; ++k)
        for (int i = 0; i < d.n; ++i) {
            const double* row = v + (static_cast<size_t>(k * d.n + i)) * cols;
            if (row[0] != k + 1) kept = false;
            for (int j = 0; j < d.p; ++j) {
                const double w = d.w[i * d.p + j];
                if (std::isnan(w))
                    filled = filled && std::isfinite(row[j + 1]);
                else
                    kept = kept && std::abs(row[j + 1] - w) < 1e-12 * (1 + std::abs(w));
            }
        }
    CHECK(kept);
    CHECK(filled);
    mknock_matrix_free(m);

    CHECK(mknock_impute_file(path.c_str(), R"({"seed": 4})", &m) == MKNOCK_ERR_CONFIG);
    std::remove(path.c_str());
}

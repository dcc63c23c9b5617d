#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "core/csv.hpp"
#include "core/error.hpp"
#include "core/harness.hpp"
#include "core/pipeline.hpp"
#include "core/report.hpp"

using namespace mknock;

namespace {

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / ("mknock_unit_" + name)).string();
}

// Data CSV with the outcome first and NA for masked cells.
void write_dataset(const std::string& path, const SimulatedDataset& d) {
    std::ofstream out(path);
    out << "y";
    for (Eigen::Index j = 0; j < d.w.cols(); ++j) out << ",x" << j + 1;
    out << "\n";
    for (Eigen::Index i = 0; i < d.w.rows(); ++i) {
        out << format_double(d.y(i));
        for (Eigen::Index j = 0; j < d.w.cols(); ++j) out << "," << (d.r(i, j) ? format_double(d.w(i, j)) : "NA");
        out << "\n";
    }
}

}  // namespace

TEST_CASE("csv parsing") {
    std::istringstream in("\xEF\xBB\xBF" "a,b,\"c,d\"\r\n1, 2 ,\"x \"\"q\"\"\"\r\nNA,,3\n");
    const CsvTable t = parse_csv(in);
    CHECK(t.header == std::vector<std::string>{"a", "b", "c,d"});
    REQUIRE(t.rows.size() == 2);
    CHECK(t.rows[0][1] == "2");
    CHECK(t.rows[0][2] == "x \"q\"");
    CHECK(t.column("c,d") == 2);
    CHECK(t.column("zz") == -1);

    CHECK_FALSE(parse_cell("NA", "NA", 1, "a").has_value());
    CHECK_FALSE(parse_cell("", "NA", 1, "a").has_value());
    CHECK(*parse_cell("-1.5e3", "NA", 1, "a") == -1500.0);
    try {
        parse_cell("abc", "NA", 7, "gene");
        FAIL("expected a data error");
    } catch (const DataError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("7") != std::string::npos);
        CHECK(msg.find("gene") != std::string::npos);
    }

    std::istringstream ragged("a,b\n1,2,3\n");
    CHECK_THROWS_AS(parse_csv(ragged), DataError);
    CHECK_THROWS_AS(read_csv("/nonexistent/file.csv"), DataError);
}

TEST_CASE("number formatting round-trips") {
    for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 123456789.0, 0.0}) CHECK(std::stod(format_double(v)) == v);
    CHECK(csv_escape("plain") == "plain");
    CHECK(csv_escape("a,b") == "\"a,b\"");
    CHECK(csv_escape("q\"") == "\"q\"\"\"");
}

TEST_CASE("preprocessing drops sparse features and truncates outliers") {
    const int n = 20;
    Matrix w(n, 3);
    IntMatrix r = IntMatrix::Ones(n, 3);
    for (int i = 0; i < n; ++i) {
        w(i, 0) = i + 1;
        w(i, 1) = 1.0;
        w(i, 2) = i;
    }
    w(n - 1, 0) = 1000.0;
    for (int i = 0; i < 5; ++i) r(i, 1) = 0;  // 25% missing
    ScreenOptions opt;
    const Preprocessed p = preprocess(w, r, {"a", "b", "c"}, opt);
    CHECK(p.dropped == std::vector<std::string>{"b"});
    CHECK(p.names == std::vector<std::string>{"a", "c"});

    // Linear quantiles of (1..19, 1000): Q1 = 5.75, Q3 = 15.25.
    const double hi = 15.25 + 3 * (15.25 - 5.75);
    CHECK(p.w(n - 1, 0) == doctest::Approx(hi));
    CHECK(p.w(3, 0) == 4.0);

    opt.truncate = false;
    opt.log_transform = true;
    Matrix pos = w.array() + 1.0;
    const Preprocessed l = preprocess(pos, r, {"a", "b", "c"}, opt);
    CHECK(l.w(0, 0) == doctest::Approx(std::log(2.0)));
    pos(0, 0) = -1;
    CHECK_THROWS_AS(preprocess(pos, r, {"a", "b", "c"}, opt), DataError);

    IntMatrix masked = r;
    masked(2, 0) = 0;
    opt.log_transform = false;
    CHECK(std::isnan(preprocess(w, masked, {"a", "b", "c"}, opt).w(2, 0)));
}

TEST_CASE("screening a CSV matches the in-memory pipeline") {
    ScenarioConfig sc;
    sc.n = 200;
    sc.p = 12;
    sc.pi_mis = 0.5;
    const Scenario s = generate_scenario(sc, Stream(21), 0);
    const std::string path = temp_path("roundtrip.csv");
    write_dataset(path, s.datasets[0]);

    ScreenOptions opt;
    opt.outcomes = {"y"};
    opt.pipeline.impute.K = 2;
    opt.pipeline.impute.sweeps = 3;
    opt.pipeline.stat.cv.n_lambda = 30;
    const ScreenResult from_file = screen_files(path, opt, Stream(5));

    const SimulatedDataset& d = s.datasets[0];
    std::vector<std::string> names;
    for (int j = 0; j < 12; ++j) names.push_back("x" + std::to_string(j + 1));
    const Preprocessed pre = preprocess(d.w, d.r, names, opt);
    Vector y = d.y;
    const auto data = split_outcomes(pre.w, pre.r, pre.names, {y}, std::nullopt);
    const ScreenResult in_memory = screen_observed(data, opt, Stream(5));

    CHECK(selection_json(from_file.main.reports[0].second) == selection_json(in_memory.main.reports[0].second));
    CHECK(selection_csv(from_file.main.reports[0].second) == selection_csv(in_memory.main.reports[0].second));
    std::filesystem::remove(path);
}

TEST_CASE("screening configuration and data errors") {
    ScenarioConfig sc;
    sc.n = 60;
    sc.p = 12;
    const Scenario s = generate_scenario(sc, Stream(2), 0);
    const std::string path = temp_path("errors.csv");
    write_dataset(path, s.datasets[0]);

    ScreenOptions opt;
    opt.outcomes = {"y"};
    opt.pipeline.statistics = {Statistic::GMUS};
    CHECK_THROWS_AS(screen_files(path, opt, Stream(1)), ConfigError);

    opt.pipeline.statistics = {Statistic::LassoCoef};
    opt.outcomes = {"missing_column"};
    CHECK_THROWS_AS(screen_files(path, opt, Stream(1)), DataError);

    {
        std::ofstream out(path);
        out << "y,x1\nNA,1\nNA,2\n";
    }
    opt.outcomes = {"y"};
    CHECK_THROWS_AS(screen_files(path, opt, Stream(1)), DataError);
    std::filesystem::remove(path);
}

TEST_CASE("simulation configuration parsing") {
    const SimConfig two = parse_sim_config(R"({"setting": "2", "seed": 3})");
    CHECK(two.scenario.setting == Setting::Two);
    CHECK(two.scenario.pi_mis == 0.0);
    CHECK(two.scenario.sigma2_eps == 0.6);
    CHECK(*two.seed == 3);

    const SimConfig three = parse_sim_config(R"({"setting": 3, "statistics": ["gmus", "cl"], "q": 0.1})");
    CHECK(three.scenario.sigma2_eps == 0.1);
    CHECK(three.pipeline.statistics == std::vector<Statistic>{Statistic::GMUS, Statistic::CorrectedLasso});
    CHECK(three.pipeline.q == 0.1);

    const SimConfig custom = parse_sim_config(R"({"setting": "2", "sigma2_eps": 1.0, "impute": {"K": 1}})");
    CHECK(custom.scenario.sigma2_eps == 1.0);
    CHECK(custom.pipeline.impute.K == 1);

    CHECK_THROWS_AS(parse_sim_config(R"({"bogus": 1})"), ConfigError);
    CHECK_THROWS_AS(parse_sim_config(R"({"impute": {"k": 2}})"), ConfigError);
    CHECK_THROWS_AS(parse_sim_config("{not json"), ConfigError);
    CHECK_THROWS_AS(parse_sim_config(R"({"n": "many"})"), ConfigError);

    SimConfig noseed;
    CHECK_THROWS_AS(noseed.validate(), ConfigError);
    SimConfig sim = parse_sim_config(R"({"setting": "simul", "sigma2_eps": 0.6, "seed": 1, "mode": "maxmax"})");
    CHECK_THROWS_AS(sim.validate(), ConfigError);

    // The serialized configuration parses back to the same document.
    const std::string text = sim_config_json(three);
    CHECK(sim_config_json(parse_sim_config(text)) == text);
}

TEST_CASE("run summaries") {
    SimConfig cfg;
    cfg.scenario.n = 150;
    cfg.scenario.p = 12;
    cfg.replicates = 2;
    cfg.seed = 4;
    cfg.pipeline.impute.K = 2;
    cfg.pipeline.impute.sweeps = 2;
    cfg.pipeline.stat.cv.n_lambda = 30;
    cfg.pipeline.statistics = {Statistic::LassoCoef, Statistic::LassoOrder};
    const RunSummary s = run_replicates(cfg);
    CHECK(s.requested == 2);
    CHECK(s.completed + s.aborted == 2);
    REQUIRE(s.methods.size() == 2);

    // Means are recomputed from the per-replicate records.
    double fdp = 0;
    int count = 0;
    for (const auto& rec : s.records)
        if (!rec.aborted) {
            fdp += rec.per_method[0].fdp;
            ++count;
        }
    CHECK(s.method(Statistic::LassoCoef).mean_fdp == doctest::Approx(fdp / count));

    const std::string csv = run_summary_csv(s);
    CHECK(csv.find("lasso_order") != std::string::npos);
    const std::string json = run_summary_json(s);
    CHECK(json.find("wall_seconds") == std::string::npos);
    const std::string text = run_summary_text(s);
    CHECK(text.find("FDP") != std::string::npos);
}

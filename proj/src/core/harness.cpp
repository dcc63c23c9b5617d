#include "core/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <set>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "core/error.hpp"
#include "core/parallel.hpp"

namespace mknock {

using nlohmann::json;

Setting parse_setting(const std::string& s) {
    if (s == "1") return Setting::One;
    if (s == "2") return Setting::Two;
    if (s == "3") return Setting::Three;
    if (s == "simul" || s == "4" || s == "simultaneous") return Setting::Simultaneous;
    throw ConfigError("unknown setting '" + s + "' (expected 1, 2, 3 or simul)");
}

std::string to_string(Setting s) {
    switch (s) {
        case Setting::One: return "1";
        case Setting::Two: return "2";
        case Setting::Three: return "3";
        case Setting::Simultaneous: return "simul";
    }
    return "?";
}

MissingBasis parse_basis(const std::string& s) {
    if (s == "W" || s == "w") return MissingBasis::ErrorProne;
    if (s == "X" || s == "x") return MissingBasis::ErrorFree;
    throw ConfigError("unknown missingness basis '" + s + "' (expected W or X)");
}

std::string to_string(MissingBasis b) { return b == MissingBasis::ErrorProne ? "W" : "X"; }

namespace {

SSolver parse_s_solver(const std::string& s) {
    if (s == "equi") return SSolver::Equi;
    if (s == "block") return SSolver::Block;
    throw ConfigError("unknown s solver '" + s + "' (expected equi or block)");
}

std::string to_string(SSolver s) { return s == SSolver::Equi ? "equi" : "block"; }

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    MKNOCK_REQUIRE(j.is_object(), ConfigError, where + " must be a JSON object");
    for (const auto& [k, v] : j.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || k == a;
        if (!ok) throw ConfigError("unknown configuration field '" + where + (where.empty() ? "" : ".") + k + "'");
    }
}

template <class T>
void read(const json& j, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("configuration field '") + key + "': " + e.what());
    }
}

std::string scalar_string(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    throw ConfigError("expected a string or integer");
}

void read_pipeline(const json& j, PipelineConfig& pc) {
    if (j.contains("impute")) {
        const json& im = j["impute"];
        check_keys(im, {"method", "K", "include_outcome", "sweeps", "mean_init"}, "impute");
        if (im.contains("method")) pc.impute.method = parse_impute_method(scalar_string(im["method"]));
        read(im, "K", pc.impute.K);
        read(im, "include_outcome", pc.impute.include_outcome);
        read(im, "sweeps", pc.impute.sweeps);
        read(im, "mean_init", pc.impute.mean_init);
    }
    if (j.contains("statistics")) {
        const json& st = j["statistics"];
        pc.statistics.clear();
        if (st.is_string()) {
            pc.statistics.push_back(parse_statistic(st.get<std::string>()));
        } else {
            MKNOCK_REQUIRE(st.is_array(), ConfigError, "statistics must be a string or an array");
            for (const auto& s : st) pc.statistics.push_back(parse_statistic(scalar_string(s)));
        }
    }
    read(j, "q", pc.q);
    read(j, "c", pc.c);
    if (j.contains("mode")) pc.mode = parse_order_mode(scalar_string(j["mode"]));
    if (j.contains("knockoff")) {
        const json& k = j["knockoff"];
        check_keys(k, {"s_solver", "block_size", "pool_sigma", "shrink"}, "knockoff");
        if (k.contains("s_solver")) pc.s_solver = parse_s_solver(scalar_string(k["s_solver"]));
        read(k, "block_size", pc.block_size);
        read(k, "pool_sigma", pc.pool_sigma);
        read(k, "shrink", pc.shrink);
    }
    if (j.contains("stat")) {
        const json& s = j["stat"];
        check_keys(s, {"cv_folds", "n_lambda", "lambda_min_ratio", "trees", "mtry", "gmus_delta", "d_points", "d_low",
                       "d_high"},
                   "stat");
        read(s, "cv_folds", pc.stat.cv.folds);
        read(s, "n_lambda", pc.stat.cv.n_lambda);
        read(s, "lambda_min_ratio", pc.stat.cv.lambda_min_ratio);
        read(s, "trees", pc.stat.trees);
        read(s, "mtry", pc.stat.mtry);
        if (s.contains("gmus_delta") && !s["gmus_delta"].is_null()) {
            double d = 0;
            read(s, "gmus_delta", d);
            pc.stat.gmus_delta = d;
        }
        read(s, "d_points", pc.stat.d_points);
        read(s, "d_low", pc.stat.d_low);
        read(s, "d_high", pc.stat.d_high);
    }
}

}  // namespace

void SimConfig::validate() const {
    scenario.validate();
    pipeline.validate();
    MKNOCK_REQUIRE(replicates >= 1, ConfigError, "replicates must be at least 1");
    MKNOCK_REQUIRE(threads >= 0, ConfigError, "threads must be >= 0");
    MKNOCK_REQUIRE(seed.has_value(), ConfigError, "a seed is required");
    if (scenario.setting == Setting::Simultaneous)
        MKNOCK_REQUIRE(!pipeline.mode || *pipeline.mode != OrderMode::MaxMax, ConfigError,
                       "the simultaneous setting needs a product ordering (maxprod or sumprod)");
    else
        MKNOCK_REQUIRE(!pipeline.mode || *pipeline.mode == OrderMode::MaxMax, ConfigError,
                       "single-outcome settings use the maxmax ordering");
}

SimConfig parse_sim_config(const std::string& json_text, SimConfig cfg) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("invalid JSON configuration: ") + e.what());
    }
    check_keys(j, {"setting", "n", "p", "sigma2_x", "rho_x", "a_beta", "beta0", "sigma2_eps", "rho_eps", "pi_mis",
                   "p_mis", "mis_basis", "eta_range", "fixed_mis_columns", "impute", "statistics", "q", "c", "mode",
                   "replicates", "seed", "threads", "include_timing", "knockoff", "stat"},
               "");
    auto& sc = cfg.scenario;
    if (j.contains("setting")) {
        sc.setting = parse_setting(scalar_string(j["setting"]));
        if (!j.contains("sigma2_eps")) {
            if (sc.setting == Setting::One) sc.sigma2_eps = 0.0;
            if (sc.setting == Setting::Two && sc.sigma2_eps == 0.0) sc.sigma2_eps = 0.6;
            if (sc.setting == Setting::Three && sc.sigma2_eps == 0.0) sc.sigma2_eps = 0.1;
        }
        if (!j.contains("pi_mis") && sc.setting == Setting::Two) sc.pi_mis = 0.0;
    }
    read(j, "n", sc.n);
    read(j, "p", sc.p);
    read(j, "sigma2_x", sc.sigma2_x);
    read(j, "rho_x", sc.rho_x);
    read(j, "a_beta", sc.a_beta);
    read(j, "beta0", sc.beta0);
    read(j, "sigma2_eps", sc.sigma2_eps);
    read(j, "rho_eps", sc.rho_eps);
    read(j, "pi_mis", sc.pi_mis);
    read(j, "p_mis", sc.p_mis);
    read(j, "eta_range", sc.eta_range);
    read(j, "fixed_mis_columns", sc.fixed_mis_columns);
    if (j.contains("mis_basis")) sc.mis_basis = parse_basis(scalar_string(j["mis_basis"]));

    read_pipeline(j, cfg.pipeline);
    read(j, "replicates", cfg.replicates);
    if (j.contains("seed")) {
        std::uint64_t s = 0;
        read(j, "seed", s);
        cfg.seed = s;
    }
    read(j, "threads", cfg.threads);
    read(j, "include_timing", cfg.include_timing);
    return cfg;
}

ScreenOptions parse_screen_options(const std::string& json_text, std::uint64_t* seed, ScreenOptions opt) {
    json j;
    try {
        j = json::parse(json_text.empty() ? std::string("{}") : json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("invalid JSON options: ") + e.what());
    }
    check_keys(j, {"outcome", "outcomes", "na", "log_transform", "truncate", "max_missing", "qc", "paired_qc",
                   "diagonal_qc", "stability", "stability_threshold", "seed", "threads", "impute", "statistics", "q",
                   "c", "mode", "knockoff", "stat"},
               "");
    if (j.contains("outcome")) opt.outcomes = {scalar_string(j["outcome"])};
    read(j, "outcomes", opt.outcomes);
    read(j, "na", opt.na);
    read(j, "log_transform", opt.log_transform);
    read(j, "truncate", opt.truncate);
    read(j, "max_missing", opt.max_missing);
    if (j.contains("qc") && !j["qc"].is_null()) {
        std::string q;
        read(j, "qc", q);
        opt.qc_path = q;
    }
    read(j, "paired_qc", opt.paired_qc);
    read(j, "diagonal_qc", opt.diagonal_qc);
    read(j, "stability", opt.stability);
    read(j, "stability_threshold", opt.stability_threshold);
    read(j, "threads", opt.pipeline.threads);
    read_pipeline(j, opt.pipeline);
    if (opt.pipeline.threads == 0) opt.pipeline.threads = hardware_threads();
    MKNOCK_REQUIRE(opt.stability >= 0, ConfigError, "stability repetitions must be >= 0");
    if (seed) {
        *seed = 0;
        read(j, "seed", *seed);
    }
    return opt;
}

std::string sim_config_json(const SimConfig& cfg) {
    const auto& sc = cfg.scenario;
    const auto& pc = cfg.pipeline;
    json j;
    j["setting"] = to_string(sc.setting);
    j["n"] = sc.n;
    j["p"] = sc.p;
    j["sigma2_x"] = sc.sigma2_x;
    j["rho_x"] = sc.rho_x;
    j["a_beta"] = sc.a_beta;
    j["beta0"] = sc.beta0;
    j["sigma2_eps"] = sc.sigma2_eps;
    j["rho_eps"] = sc.rho_eps;
    j["pi_mis"] = sc.pi_mis;
    j["p_mis"] = sc.p_mis;
    j["mis_basis"] = to_string(sc.mis_basis);
    j["eta_range"] = sc.eta_range;
    j["fixed_mis_columns"] = sc.fixed_mis_columns;
    j["impute"] = {{"method", to_string(pc.impute.method)},
                   {"K", pc.impute.K},
                   {"include_outcome", pc.impute.include_outcome},
                   {"sweeps", pc.impute.sweeps},
                   {"mean_init", pc.impute.mean_init}};
    json stats = json::array();
    for (Statistic s : pc.statistics) stats.push_back(to_string(s));
    j["statistics"] = stats;
    j["q"] = pc.q;
    j["c"] = pc.c;
    if (pc.mode) j["mode"] = to_string(*pc.mode);
    j["knockoff"] = {{"s_solver", to_string(pc.s_solver)},
                     {"block_size", pc.block_size},
                     {"pool_sigma", pc.pool_sigma},
                     {"shrink", pc.shrink}};
    j["stat"] = {{"cv_folds", pc.stat.cv.folds},
                 {"n_lambda", pc.stat.cv.n_lambda},
                 {"lambda_min_ratio", pc.stat.cv.lambda_min_ratio},
                 {"trees", pc.stat.trees},
                 {"mtry", pc.stat.mtry},
                 {"gmus_delta", pc.stat.gmus_delta ? json(*pc.stat.gmus_delta) : json(nullptr)},
                 {"d_points", pc.stat.d_points},
                 {"d_low", pc.stat.d_low},
                 {"d_high", pc.stat.d_high}};
    j["replicates"] = cfg.replicates;
    if (cfg.seed) j["seed"] = *cfg.seed;
    j["threads"] = cfg.threads;
    j["include_timing"] = cfg.include_timing;
    return j.dump(2);
}

FdpPower fdp_power(const std::vector<int>& selected, const std::vector<int>& truth, Eigen::Index p) {
    const std::set<int> t(truth.begin(), truth.end());
    std::set<int> s;
    for (int j : selected) {
        MKNOCK_REQUIRE(j >= 0 && j < p, ConfigError, "selected index out of range");
        s.insert(j);
    }
    for (int j : t) MKNOCK_REQUIRE(j >= 0 && j < p, ConfigError, "truth index out of range");
    int hits = 0;
    for (int j : s) hits += t.count(j) > 0;
    FdpPower out;
    out.fdp = static_cast<double>(s.size() - hits) / static_cast<double>(std::max<std::size_t>(s.size(), 1));
    if (!t.empty()) out.power = static_cast<double>(hits) / static_cast<double>(t.size());
    return out;
}

const MethodSummary& RunSummary::method(Statistic s) const {
    for (const auto& m : methods)
        if (m.statistic == s) return m;
    throw ConfigError("no summary for statistic " + to_string(s));
}

ObservedData observed_from(const SimulatedDataset& d) {
    ObservedData o;
    o.y = d.y;
    o.w = d.w;
    o.r = d.r;
    o.sigma_eps = d.sigma_eps;
    for (Eigen::Index j = 0; j < d.w.cols(); ++j) o.feature_names.push_back("x" + std::to_string(j + 1));
    return o;
}

ReplicateRecord run_replicate(const SimConfig& cfg, int replicate) {
    ReplicateRecord rec;
    rec.replicate = replicate;
    const Stream root(*cfg.seed);
    const Scenario sc = generate_scenario(cfg.scenario, root, static_cast<std::uint64_t>(replicate));
    std::vector<ObservedData> data;
    for (const auto& d : sc.datasets) data.push_back(observed_from(d));
    const Stream ps = root.derive(static_cast<std::uint64_t>(replicate)).derive("pipeline");
    const PipelineResult res = run_pipeline(data, cfg.pipeline, ps);
    for (const auto& [stat, rep] : res.reports) {
        rec.per_method.push_back(fdp_power(rep.selected(), sc.truth, cfg.scenario.p));
        rec.n_selected.push_back(static_cast<int>(rep.selected().size()));
    }
    return rec;
}

RunSummary run_replicates(const SimConfig& cfg) {
    cfg.validate();
    const auto start = std::chrono::steady_clock::now();
    RunSummary sum;
    sum.config = cfg;
    sum.requested = cfg.replicates;
    sum.records.resize(cfg.replicates);
    const int workers = cfg.threads == 0 ? hardware_threads() : cfg.threads;
    parallel_for(sum.records.size(), workers, [&](std::size_t r) {
        try {
            sum.records[r] = run_replicate(cfg, static_cast<int>(r));
        } catch (const Error& e) {
            ReplicateRecord rec;
            rec.replicate = static_cast<int>(r);
            rec.aborted = true;
            rec.error = e.what();
            spdlog::warn("replicate {} aborted: {}", r, e.what());
            sum.records[r] = std::move(rec);
        }
    });
    const std::size_t S = cfg.pipeline.statistics.size();
    for (std::size_t si = 0; si < S; ++si) {
        MethodSummary ms;
        ms.statistic = cfg.pipeline.statistics[si];
        std::vector<double> fdp, pow;
        for (const auto& rec : sum.records) {
            if (rec.aborted) continue;
            fdp.push_back(rec.per_method[si].fdp);
            if (rec.per_method[si].power) pow.push_back(*rec.per_method[si].power);
        }
        auto mean_se = [](const std::vector<double>& v, double& mean, double& se) {
            mean = se = 0.0;
            if (v.empty()) return;
            double s = 0.0;
            for (double x : v) s += x;
            mean = s / static_cast<double>(v.size());
            if (v.size() < 2) return;
            double ss = 0.0;
            for (double x : v) ss += (x - mean) * (x - mean);
            se = std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
        };
        mean_se(fdp, ms.mean_fdp, ms.se_fdp);
        mean_se(pow, ms.mean_power, ms.se_power);
        ms.replicates = static_cast<int>(fdp.size());
        ms.power_replicates = static_cast<int>(pow.size());
        sum.methods.push_back(ms);
    }
    for (const auto& rec : sum.records) (rec.aborted ? sum.aborted : sum.completed) += 1;
    sum.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return sum;
}

}  // namespace mknock

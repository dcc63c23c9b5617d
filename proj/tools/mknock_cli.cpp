// Command-line front end over the C interface.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "mknock.h"

using nlohmann::json;

namespace {

constexpr int kExitConfig = 2;

struct Owned {
    char* s = nullptr;
    ~Owned() { mknock_string_free(s); }
};

int fail(int status) {
    std::cerr << "error: " << mknock_last_error() << "\n";
    return status;
}

bool write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        std::cerr << "error: cannot write '" << path << "'\n";
        return false;
    }
    out << text;
    return true;
}

// Flags given on the command line become JSON fields; --config then overrides them.
json merge_config(json flags, const std::string& config_path, int& status) {
    status = 0;
    if (config_path.empty()) return flags;
    std::ifstream in(config_path);
    if (!in) {
        std::cerr << "error: cannot read config '" << config_path << "'\n";
        status = kExitConfig;
        return flags;
    }
    try {
        json file = json::parse(in);
        flags.merge_patch(file);
    } catch (const json::exception& e) {
        std::cerr << "error: invalid config '" << config_path << "': " << e.what() << "\n";
        status = kExitConfig;
    }
    return flags;
}

struct PipelineFlags {
    std::string impute;
    int K = 0;
    bool no_outcome = false;
    std::vector<std::string> stats;
    double q = 0;
    int c = 0;
    std::string mode, s_solver;
    bool pool_sigma = false;
    double gmus_delta = 0;
    int folds = 0, trees = 0;
    int threads = 0;
    CLI::Option *o_impute, *o_K, *o_noy, *o_stats, *o_q, *o_c, *o_mode, *o_solver, *o_pool, *o_delta, *o_folds,
        *o_trees, *o_threads;

    void add(CLI::App* app) {
        o_impute = app->add_option("--impute", impute, "imputation: halfmin, mean, default, cart, pmm");
        o_K = app->add_option("--K", K, "number of imputations");
        o_noy = app->add_flag("--no-outcome-in-impute", no_outcome, "exclude the outcome from imputation models");
        o_stats = app->add_option("--stat", stats, "statistic(s): lasso, lasso_order, rf, gds, gmus, corrected_lasso");
        o_q = app->add_option("--q", q, "target FDR");
        o_c = app->add_option("--c", c, "SeqStep offset (0 or 1)");
        o_mode = app->add_option("--mode", mode, "ordering: maxmax, maxprod, sumprod");
        o_solver = app->add_option("--s-solver", s_solver, "knockoff s solver: equi, block");
        o_pool = app->add_flag("--pool-sigma", pool_sigma, "one knockoff model pooled over imputations");
        o_delta = app->add_option("--gmus-delta", gmus_delta, "override the GMUS delta");
        o_folds = app->add_option("--cv-folds", folds, "cross-validation folds");
        o_trees = app->add_option("--trees", trees, "random forest trees");
        o_threads = app->add_option("--threads", threads, "worker threads (0: all cores)");
    }

    void to_json(json& j) const {
        if (o_impute->count() || o_K->count() || o_noy->count()) {
            json im = json::object();
            if (o_impute->count()) im["method"] = impute;
            if (o_K->count()) im["K"] = K;
            if (o_noy->count()) im["include_outcome"] = !no_outcome;
            j["impute"] = im;
        }
        if (o_stats->count()) j["statistics"] = stats;
        if (o_q->count()) j["q"] = q;
        if (o_c->count()) j["c"] = c;
        if (o_mode->count()) j["mode"] = mode;
        if (o_solver->count() || o_pool->count()) {
            json k = json::object();
            if (o_solver->count()) k["s_solver"] = s_solver;
            if (o_pool->count()) k["pool_sigma"] = pool_sigma;
            j["knockoff"] = k;
        }
        if (o_delta->count() || o_folds->count() || o_trees->count()) {
            json s = json::object();
            if (o_delta->count()) s["gmus_delta"] = gmus_delta;
            if (o_folds->count()) s["cv_folds"] = folds;
            if (o_trees->count()) s["trees"] = trees;
            j["stat"] = s;
        }
        if (o_threads->count()) j["threads"] = threads;
    }
};

struct ScreenFlags {
    std::string data, qc, na, out, config;
    std::vector<std::string> outcomes;
    bool log = false, no_truncate = false, paired = false, diagonal = false;
    double max_missing = 0.2, stability_threshold = 0.5;
    int stability = 0;
    std::uint64_t seed = 0;
    PipelineFlags pipe;
    CLI::Option *o_qc, *o_na, *o_log, *o_trunc, *o_paired, *o_diag, *o_maxmis, *o_stab, *o_stabthr, *o_seed;

    void add(CLI::App* app, bool multi) {
        app->add_option("--data", data, "data CSV")->required();
        auto* o = app->add_option("--outcome", outcomes, multi ? "outcome columns (two or more)" : "outcome column");
        if (!multi) o->expected(1);
        o_qc = app->add_option("--qc", qc, "QC CSV for the measurement-error covariance");
        o_paired = app->add_flag("--paired-qc", paired, "estimate from within-batch QC pairs");
        o_diag = app->add_flag("--diagonal-qc", diagonal, "keep only QC variances");
        o_na = app->add_option("--na", na, "missing-value token");
        o_log = app->add_flag("--log", log, "log-transform features");
        o_trunc = app->add_flag("--no-truncate", no_truncate, "skip quartile truncation");
        o_maxmis = app->add_option("--max-missing", max_missing, "drop features above this missing fraction");
        o_stab = app->add_option("--stability", stability, "stability-selection repetitions");
        o_stabthr = app->add_option("--stability-threshold", stability_threshold, "reported frequency threshold");
        o_seed = app->add_option("--seed", seed, "random seed");
        app->add_option("--out", out, "output prefix (writes <prefix>.json and <prefix>_<stat>.csv)");
        app->add_option("--config", config, "JSON options overriding flags");
        pipe.add(app);
    }

    json to_json() const {
        json j = json::object();
        if (!outcomes.empty()) j["outcomes"] = outcomes;
        if (o_qc->count()) j["qc"] = qc;
        if (o_paired->count()) j["paired_qc"] = paired;
        if (o_diag->count()) j["diagonal_qc"] = diagonal;
        if (o_na->count()) j["na"] = na;
        if (o_log->count()) j["log_transform"] = log;
        if (o_trunc->count()) j["truncate"] = !no_truncate;
        if (o_maxmis->count()) j["max_missing"] = max_missing;
        if (o_stab->count()) j["stability"] = stability;
        if (o_stabthr->count()) j["stability_threshold"] = stability_threshold;
        if (o_seed->count()) j["seed"] = seed;
        pipe.to_json(j);
        return j;
    }
};

int run_screen(const ScreenFlags& f) {
    int status = 0;
    const json opts = merge_config(f.to_json(), f.config, status);
    if (status) return status;
    mknock_screen* s = nullptr;
    const int rc = mknock_screen_file(f.data.c_str(), opts.dump().c_str(), &s);
    if (rc != MKNOCK_OK) return fail(rc);
    Owned js;
    mknock_screen_json(s, &js.s);
    if (f.out.empty()) {
        std::cout << js.s;
    } else {
        if (!write_file(f.out + ".json", js.s)) return 1;
        const json parsed = json::parse(js.s);
        for (const auto& [name, block] : parsed["methods"].items()) {
            Owned csv;
            if (mknock_screen_csv(s, name.c_str(), &csv.s) != MKNOCK_OK) return fail(MKNOCK_ERR_INTERNAL);
            if (!write_file(f.out + "_" + name + ".csv", csv.s)) return 1;
            std::cout << name << ": selected " << block["selected"].size() << " features\n";
        }
    }
    mknock_screen_free(s);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Knockoff variable selection with missing data and measurement error"};
    app.require_subcommand(1);
    int verbosity = 0;
    app.add_flag("-v,--verbose", verbosity, "more logging (repeatable)");

    // simulate
    auto* sim = app.add_subcommand("simulate", "run simulation replicates");
    std::string setting, basis, sim_out, sim_config;
    int n = 0, p = 0, reps = 0;
    double sigma2_x = 0, rho_x = 0, a_beta = 0, beta0 = 0, sigma2_eps = 0, rho_eps = 0, pi_mis = 0, p_mis = 0;
    std::uint64_t seed = 0;
    bool timing = false, fixed_cols = false;
    auto* o_setting = sim->add_option("--setting", setting, "1, 2, 3 or simul");
    auto* o_n = sim->add_option("--n", n, "sample size");
    auto* o_p = sim->add_option("--p", p, "number of features");
    auto* o_sx = sim->add_option("--sigma2-x", sigma2_x, "feature variance");
    auto* o_rx = sim->add_option("--rho-x", rho_x, "feature AR correlation");
    auto* o_ab = sim->add_option("--a-beta", a_beta, "signal amplitude");
    auto* o_b0 = sim->add_option("--beta0", beta0, "outcome intercept");
    auto* o_se = sim->add_option("--sigma2-eps", sigma2_eps, "measurement-error variance");
    auto* o_re = sim->add_option("--rho-eps", rho_eps, "measurement-error AR correlation");
    auto* o_pi = sim->add_option("--pi-mis", pi_mis, "fraction of columns with missing values");
    auto* o_pm = sim->add_option("--p-mis", p_mis, "missing rate within those columns");
    auto* o_mb = sim->add_option("--mis-basis", basis, "missingness depends on W or X");
    auto* o_fixed = sim->add_flag("--fixed-mis-columns", fixed_cols, "draw the missing columns once per run");
    auto* o_reps = sim->add_option("--replicates", reps, "number of replicates");
    auto* o_seed = sim->add_option("--seed", seed, "random seed (required)");
    auto* o_timing = sim->add_flag("--timing", timing, "include wall time in the JSON report");
    sim->add_option("--out", sim_out, "output prefix (writes <prefix>.json and <prefix>.csv)");
    sim->add_option("--config", sim_config, "JSON configuration overriding flags");
    PipelineFlags sim_pipe;
    sim_pipe.add(sim);

    auto* screen = app.add_subcommand("screen", "select features for one outcome from a data CSV");
    ScreenFlags screen_flags;
    screen_flags.add(screen, false);
    auto* multi = app.add_subcommand("screen-multi", "simultaneous selection across several outcomes");
    ScreenFlags multi_flags;
    multi_flags.add(multi, true);

    auto* ecov = app.add_subcommand("error-cov", "estimate the measurement-error covariance from QC samples");
    std::string qc_path, ecov_out, ecov_na;
    std::vector<std::string> ecov_features;
    bool ecov_paired = false, ecov_diag = false, ecov_log = false;
    ecov->add_option("--qc", qc_path, "QC CSV")->required();
    auto* o_feat = ecov->add_option("--feature", ecov_features, "restrict to these columns");
    auto* o_epaired = ecov->add_flag("--paired", ecov_paired, "within-batch pairs");
    auto* o_ediag = ecov->add_flag("--diagonal", ecov_diag, "variances only");
    auto* o_elog = ecov->add_flag("--log", ecov_log, "log-transform values");
    auto* o_ena = ecov->add_option("--na", ecov_na, "missing-value token");
    ecov->add_option("--out", ecov_out, "output CSV (stdout when absent)");

    auto* imp = app.add_subcommand("impute", "export completed data sets");
    std::string imp_data, imp_outcome, imp_out, imp_na, imp_method;
    int imp_K = 0;
    std::uint64_t imp_seed = 0;
    bool imp_noy = false;
    imp->add_option("--data", imp_data, "data CSV")->required();
    imp->add_option("--outcome", imp_outcome, "outcome column")->required();
    auto* o_imethod = imp->add_option("--impute", imp_method, "imputation: halfmin, mean, default, cart, pmm");
    auto* o_iK = imp->add_option("--K", imp_K, "number of imputations");
    auto* o_inoy = imp->add_flag("--no-outcome-in-impute", imp_noy, "exclude the outcome from imputation models");
    auto* o_ina = imp->add_option("--na", imp_na, "missing-value token");
    auto* o_iseed = imp->add_option("--seed", imp_seed, "random seed");
    imp->add_option("--out", imp_out, "output CSV (stdout when absent)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }
    mknock_set_verbosity(verbosity);

    if (*sim) {
        json j = json::object();
        if (o_setting->count()) j["setting"] = setting;
        if (o_n->count()) j["n"] = n;
        if (o_p->count()) j["p"] = p;
        if (o_sx->count()) j["sigma2_x"] = sigma2_x;
        if (o_rx->count()) j["rho_x"] = rho_x;
        if (o_ab->count()) j["a_beta"] = a_beta;
        if (o_b0->count()) j["beta0"] = beta0;
        if (o_se->count()) j["sigma2_eps"] = sigma2_eps;
        if (o_re->count()) j["rho_eps"] = rho_eps;
        if (o_pi->count()) j["pi_mis"] = pi_mis;
        if (o_pm->count()) j["p_mis"] = p_mis;
        if (o_mb->count()) j["mis_basis"] = basis;
        if (o_fixed->count()) j["fixed_mis_columns"] = fixed_cols;
        if (o_reps->count()) j["replicates"] = reps;
        if (o_seed->count()) j["seed"] = seed;
        if (o_timing->count()) j["include_timing"] = timing;
        sim_pipe.to_json(j);
        int status = 0;
        j = merge_config(j, sim_config, status);
        if (status) return status;
        if (!j.contains("seed")) {
            std::cerr << "error: simulate requires --seed\n";
            return kExitConfig;
        }
        mknock_summary* s = nullptr;
        const int rc = mknock_simulate(j.dump().c_str(), &s);
        if (rc != MKNOCK_OK) return fail(rc);
        Owned text, js, csv;
        mknock_summary_render(s, MKNOCK_FORMAT_TEXT, &text.s);
        mknock_summary_render(s, MKNOCK_FORMAT_JSON, &js.s);
        mknock_summary_render(s, MKNOCK_FORMAT_CSV, &csv.s);
        std::cout << text.s;
        mknock_summary_free(s);
        if (!sim_out.empty() && (!write_file(sim_out + ".json", js.s) || !write_file(sim_out + ".csv", csv.s)))
            return 1;
        return 0;
    }
    if (*screen) return run_screen(screen_flags);
    if (*multi) {
        if (multi_flags.outcomes.size() < 2 && multi_flags.config.empty()) {
            std::cerr << "error: screen-multi needs at least two --outcome columns\n";
            return kExitConfig;
        }
        return run_screen(multi_flags);
    }
    if (*ecov) {
        json j = json::object();
        if (o_feat->count()) j["features"] = ecov_features;
        if (o_epaired->count()) j["paired"] = ecov_paired;
        if (o_ediag->count()) j["diagonal"] = ecov_diag;
        if (o_elog->count()) j["log_transform"] = ecov_log;
        if (o_ena->count()) j["na"] = ecov_na;
        mknock_matrix* m = nullptr;
        const int rc = mknock_error_cov(qc_path.c_str(), j.dump().c_str(), &m);
        if (rc != MKNOCK_OK) return fail(rc);
        for (size_t i = 0; i < mknock_matrix_warning_count(m); ++i)
            std::cerr << "warning: " << mknock_matrix_warning(m, i) << "\n";
        Owned csv;
        mknock_matrix_csv(m, &csv.s);
        mknock_matrix_free(m);
        if (ecov_out.empty()) std::cout << csv.s;
        else if (!write_file(ecov_out, csv.s)) return 1;
        return 0;
    }
    if (*imp) {
        json j = json::object();
        j["outcome"] = imp_outcome;
        if (o_imethod->count() || o_iK->count() || o_inoy->count()) {
            json im = json::object();
            if (o_imethod->count()) im["method"] = imp_method;
            if (o_iK->count()) im["K"] = imp_K;
            if (o_inoy->count()) im["include_outcome"] = !imp_noy;
            j["impute"] = im;
        }
        if (o_ina->count()) j["na"] = imp_na;
        if (o_iseed->count()) j["seed"] = imp_seed;
        mknock_matrix* m = nullptr;
        const int rc = mknock_impute_file(imp_data.c_str(), j.dump().c_str(), &m);
        if (rc != MKNOCK_OK) return fail(rc);
        Owned csv;
        mknock_matrix_csv(m, &csv.s);
        mknock_matrix_free(m);
        if (imp_out.empty()) std::cout << csv.s;
        else if (!write_file(imp_out, csv.s)) return 1;
        return 0;
    }
    return 0;
}

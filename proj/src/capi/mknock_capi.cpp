#include "mknock.h"

#include <cmath>
#include <cstring>
#include <limits>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "core/csv.hpp"
#include "core/error.hpp"
#include "core/harness.hpp"
#include "core/report.hpp"

using namespace mknock;

struct mknock_summary {
    RunSummary summary;
};

struct mknock_screen {
    ScreenResult result;
};

struct mknock_matrix {
    Matrix values;  // kept row-major in `flat`
    std::vector<double> flat;
    std::vector<std::string> names;
    std::vector<std::string> warnings;
};

namespace {

thread_local std::string g_last_error;

template <class Fn>
mknock_status guarded(Fn&& fn) {
    try {
        fn();
        return MKNOCK_OK;
    } catch (const Error& e) {
        g_last_error = e.what();
        return static_cast<mknock_status>(static_cast<int>(e.kind()));
    } catch (const std::bad_alloc&) {
        g_last_error = "out of memory";
    } catch (const std::exception& e) {
        g_last_error = e.what();
    } catch (...) {
        g_last_error = "unknown error";
    }
    return MKNOCK_ERR_INTERNAL;
}

char* dup(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

void require_out(const void* p) { MKNOCK_REQUIRE(p != nullptr, ConfigError, "output pointer is null"); }

mknock_matrix* make_matrix(const Matrix& m, std::vector<std::string> names, std::vector<std::string> warnings) {
    auto* out = new mknock_matrix;
    out->values = m;
    out->flat.resize(static_cast<std::size_t>(m.size()));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) out->flat[static_cast<std::size_t>(i * m.cols() + j)] = m(i, j);
    out->names = std::move(names);
    out->warnings = std::move(warnings);
    return out;
}

const SelectionReport& pick(const ScreenResult& r, const char* statistic, const StabilityReport** st) {
    MKNOCK_REQUIRE(!r.main.reports.empty(), ConfigError, "screen has no reports");
    Statistic s = r.main.reports.front().first;
    if (statistic) s = parse_statistic(statistic);
    if (st) {
        *st = nullptr;
        for (const auto& [s2, sr] : r.stability)
            if (s2 == s) *st = &sr;
    }
    return r.main.report(s);
}

}  // namespace

extern "C" {

const char* mknock_version(void) { return "1.0.0"; }

const char* mknock_last_error(void) { return g_last_error.c_str(); }

void mknock_string_free(char* s) { std::free(s); }

void mknock_set_verbosity(int level) {
    spdlog::set_level(level >= 2 ? spdlog::level::debug : level == 1 ? spdlog::level::info : spdlog::level::warn);
}

mknock_status mknock_simulate(const char* config_json, mknock_summary** out) {
    return guarded([&] {
        require_out(out);
        MKNOCK_REQUIRE(config_json != nullptr, ConfigError, "configuration is null");
        const SimConfig cfg = parse_sim_config(config_json);
        auto* s = new mknock_summary;
        try {
            s->summary = run_replicates(cfg);
        } catch (...) {
            delete s;
            throw;
        }
        *out = s;
    });
}

void mknock_summary_free(mknock_summary* s) { delete s; }

mknock_status mknock_summary_render(const mknock_summary* s, mknock_format format, char** out) {
    return guarded([&] {
        require_out(out);
        MKNOCK_REQUIRE(s != nullptr, ConfigError, "summary is null");
        switch (format) {
            case MKNOCK_FORMAT_JSON: *out = dup(run_summary_json(s->summary)); return;
            case MKNOCK_FORMAT_CSV: *out = dup(run_summary_csv(s->summary)); return;
            case MKNOCK_FORMAT_TEXT: *out = dup(run_summary_text(s->summary)); return;
        }
        throw ConfigError("unknown output format");
    });
}

size_t mknock_summary_method_count(const mknock_summary* s) { return s ? s->summary.methods.size() : 0; }

mknock_status mknock_summary_method(const mknock_summary* s, size_t index, const char** statistic, double* mean_fdp,
                                    double* se_fdp, double* mean_power, double* se_power) {
    return guarded([&] {
        MKNOCK_REQUIRE(s != nullptr, ConfigError, "summary is null");
        MKNOCK_REQUIRE(index < s->summary.methods.size(), ConfigError, "method index out of range");
        const MethodSummary& m = s->summary.methods[index];
        static thread_local std::string name;
        name = to_string(m.statistic);
        const double nan = std::numeric_limits<double>::quiet_NaN();
        if (statistic) *statistic = name.c_str();
        if (mean_fdp) *mean_fdp = m.mean_fdp;
        if (se_fdp) *se_fdp = m.se_fdp;
        if (mean_power) *mean_power = m.power_replicates > 0 ? m.mean_power : nan;
        if (se_power) *se_power = m.power_replicates > 0 ? m.se_power : nan;
    });
}

int mknock_summary_aborted(const mknock_summary* s) { return s ? s->summary.aborted : 0; }

mknock_status mknock_screen_file(const char* data_csv, const char* options_json, mknock_screen** out) {
    return guarded([&] {
        require_out(out);
        MKNOCK_REQUIRE(data_csv != nullptr, ConfigError, "data path is null");
        std::uint64_t seed = 0;
        const ScreenOptions opt = parse_screen_options(options_json ? options_json : "", &seed);
        auto* s = new mknock_screen;
        try {
            s->result = screen_files(data_csv, opt, Stream(seed));
        } catch (...) {
            delete s;
            throw;
        }
        *out = s;
    });
}

mknock_status mknock_screen_matrix(const double* w, const double* y, size_t n, size_t p, const double* sigma_eps,
                                   const char* const* names, const char* options_json, mknock_screen** out) {
    return guarded([&] {
        require_out(out);
        MKNOCK_REQUIRE(w != nullptr && y != nullptr, ConfigError, "data pointers are null");
        MKNOCK_REQUIRE(n >= 2 && p >= 1, DataError, "need at least two rows and one feature");
        std::uint64_t seed = 0;
        const ScreenOptions opt = parse_screen_options(options_json ? options_json : "", &seed);
        ObservedData d;
        const auto N = static_cast<Eigen::Index>(n), P = static_cast<Eigen::Index>(p);
        d.w = Matrix::Zero(N, P);
        d.r = IntMatrix::Ones(N, P);
        d.y.resize(N);
        for (Eigen::Index i = 0; i < N; ++i) {
            MKNOCK_REQUIRE(std::isfinite(y[i]), DataError, "outcome row " + std::to_string(i + 1) + " is not finite");
            d.y(i) = y[i];
            for (Eigen::Index j = 0; j < P; ++j) {
                const double v = w[i * P + j];
                if (std::isnan(v))
                    d.r(i, j) = 0;
                else
                    d.w(i, j) = v;
            }
        }
        if (sigma_eps) {
            Matrix s(P, P);
            for (Eigen::Index a = 0; a < P; ++a)
                for (Eigen::Index b = 0; b < P; ++b) s(a, b) = sigma_eps[a * P + b];
            d.sigma_eps = s;
        }
        for (Eigen::Index j = 0; j < P; ++j)
            d.feature_names.push_back(names && names[j] ? std::string(names[j]) : "x" + std::to_string(j + 1));
        auto* s = new mknock_screen;
        try {
            s->result = screen_observed({d}, opt, Stream(seed));
        } catch (...) {
            delete s;
            throw;
        }
        *out = s;
    });
}

void mknock_screen_free(mknock_screen* s) { delete s; }

mknock_status mknock_screen_json(const mknock_screen* s, char** out) {
    return guarded([&] {
        require_out(out);
        MKNOCK_REQUIRE(s != nullptr, ConfigError, "screen is null");
        *out = dup(screen_json(s->result));
    });
}

mknock_status mknock_screen_csv(const mknock_screen* s, const char* statistic, char** out) {
    return guarded([&] {
        require_out(out);
        MKNOCK_REQUIRE(s != nullptr, ConfigError, "screen is null");
        const StabilityReport* st = nullptr;
        const SelectionReport& r = pick(s->result, statistic, &st);
        *out = dup(selection_csv(r, st));
    });
}

mknock_status mknock_screen_selected(const mknock_screen* s, const char* statistic, int* indices, size_t capacity,
                                     size_t* count) {
    return guarded([&] {
        require_out(count);
        MKNOCK_REQUIRE(s != nullptr, ConfigError, "screen is null");
        const auto& sel = pick(s->result, statistic, nullptr).selected();
        *count = sel.size();
        if (indices) {
            MKNOCK_REQUIRE(capacity >= sel.size(), ConfigError, "index buffer too small");
            for (std::size_t i = 0; i < sel.size(); ++i) indices[i] = sel[i];
        }
    });
}

mknock_status mknock_error_cov(const char* qc_csv, const char* options_json, mknock_matrix** out) {
    return guarded([&] {
        require_out(out);
        MKNOCK_REQUIRE(qc_csv != nullptr, ConfigError, "QC path is null");
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(options_json && *options_json ? options_json : "{}");
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(std::string("invalid JSON options: ") + e.what());
        }
        for (const auto& [k, v] : j.items())
            if (k != "features" && k != "paired" && k != "diagonal" && k != "log_transform" && k != "na" &&
                k != "floor")
                throw ConfigError("unknown option '" + k + "'");
        std::vector<std::string> features;
        try {
            if (j.contains("features")) features = j["features"].get<std::vector<std::string>>();
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(std::string("option 'features': ") + e.what());
        }
        if (features.empty()) {
            const CsvTable t = read_csv(qc_csv);
            for (const auto& h : t.header)
                if (h != "batch" && h != "pair") features.push_back(h);
        }
        const QcSamples qc = load_qc(qc_csv, features, j.value("na", std::string("NA")), j.value("log_transform", false));
        const double floor = j.value("floor", 1e-4);
        const bool diag = j.value("diagonal", false);
        const ErrorCovEstimate est = j.value("paired", false) ? qc_paired_cov(qc, diag, floor) : qc_cov(qc, diag, floor);
        *out = make_matrix(est.sigma, features, est.warnings);
    });
}

mknock_status mknock_impute_file(const char* data_csv, const char* options_json, mknock_matrix** out) {
    return guarded([&] {
        require_out(out);
        MKNOCK_REQUIRE(data_csv != nullptr, ConfigError, "data path is null");
        std::uint64_t seed = 0;
        const ScreenOptions opt = parse_screen_options(options_json ? options_json : "", &seed);
        MKNOCK_REQUIRE(!opt.outcomes.empty(), ConfigError, "an outcome column is required");
        const LoadedData loaded = load_data(data_csv, {opt.outcomes.front()}, opt.na);
        const auto data = split_outcomes(loaded.w, loaded.r, loaded.names, loaded.y, std::nullopt);
        const CompletedSet cs = impute(data[0], opt.pipeline.impute, derive(Stream(seed), Role::Impute));
        Matrix stacked(cs.K() * data[0].n(), data[0].p() + 1);
        for (int k = 0; k < cs.K(); ++k) {
            stacked.block(k * data[0].n(), 0, data[0].n(), 1).setConstant(k + 1);
            stacked.block(k * data[0].n(), 1, data[0].n(), data[0].p()) = cs.copies[k];
        }
        std::vector<std::string> names{"imputation"};
        for (const auto& n : loaded.names) names.push_back(n);
        *out = make_matrix(stacked, names, cs.warnings);
    });
}

void mknock_matrix_free(mknock_matrix* m) { delete m; }
size_t mknock_matrix_rows(const mknock_matrix* m) { return m ? static_cast<size_t>(m->values.rows()) : 0; }
size_t mknock_matrix_cols(const mknock_matrix* m) { return m ? static_cast<size_t>(m->values.cols()) : 0; }
const double* mknock_matrix_data(const mknock_matrix* m) { return m ? m->flat.data() : nullptr; }

const char* mknock_matrix_column_name(const mknock_matrix* m, size_t col) {
    return m && col < m->names.size() ? m->names[col].c_str() : nullptr;
}

mknock_status mknock_matrix_csv(const mknock_matrix* m, char** out) {
    return guarded([&] {
        require_out(out);
        MKNOCK_REQUIRE(m != nullptr, ConfigError, "matrix is null");
        *out = dup(matrix_csv(m->values, m->names));
    });
}

size_t mknock_matrix_warning_count(const mknock_matrix* m) { return m ? m->warnings.size() : 0; }

const char* mknock_matrix_warning(const mknock_matrix* m, size_t index) {
    return m && index < m->warnings.size() ? m->warnings[index].c_str() : nullptr;
}

}  // extern "C"

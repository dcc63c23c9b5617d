#include "core/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include <spdlog/spdlog.h>

#include "core/csv.hpp"
#include "core/error.hpp"
#include "core/parallel.hpp"

namespace mknock {

void PipelineConfig::validate() const {
    impute.validate();
    MKNOCK_REQUIRE(!statistics.empty(), ConfigError, "at least one statistic is required");
    MKNOCK_REQUIRE(q > 0 && q < 1, ConfigError, "target FDR q must lie in (0, 1)");
    MKNOCK_REQUIRE(c == 0 || c == 1, ConfigError, "offset c must be 0 or 1");
    MKNOCK_REQUIRE(block_size >= 1, ConfigError, "block size must be positive");
    MKNOCK_REQUIRE(stat.cv.folds >= 2, ConfigError, "cross-validation needs at least two folds");
    MKNOCK_REQUIRE(stat.trees >= 1, ConfigError, "forest needs at least one tree");
}

const SelectionReport& PipelineResult::report(Statistic s) const {
    for (const auto& [stat, rep] : reports)
        if (stat == s) return rep;
    throw ConfigError("no report for statistic " + to_string(s));
}

PipelineResult run_pipeline(const std::vector<ObservedData>& outcomes, const PipelineConfig& cfg, const Stream& rng) {
    cfg.validate();
    MKNOCK_REQUIRE(!outcomes.empty(), ConfigError, "pipeline needs at least one outcome");
    const Eigen::Index p = outcomes[0].p();
    for (const auto& d : outcomes) {
        MKNOCK_REQUIRE(d.p() == p, ConfigError, "all outcome datasets must share the feature set");
        MKNOCK_REQUIRE(d.y.size() == d.n(), ConfigError, "outcome length differs from the row count");
        for (Statistic s : cfg.statistics)
            if (uses_error_cov(s))
                MKNOCK_REQUIRE(d.sigma_eps.has_value(), ConfigError,
                               "statistic " + to_string(s) + " needs an error covariance");
    }
    const int M = static_cast<int>(outcomes.size());
    const Stream base = derive(rng, Role::Impute);

    PipelineResult res;
    std::vector<CompletedSet> completed(M);
    for (int m = 0; m < M; ++m) {
        completed[m] = impute(outcomes[m], cfg.impute, base.derive(static_cast<std::uint64_t>(m)));
        for (const auto& w : completed[m].warnings) res.warnings.push_back(w);
    }
    const int K = completed[0].K();
    for (const auto& c : completed)
        MKNOCK_REQUIRE(c.K() == K, ConfigError, "outcomes produced different numbers of completed copies");

    std::vector<std::optional<KnockoffPlan>> pooled(M);
    if (cfg.pool_sigma) {
        for (int m = 0; m < M; ++m) {
            GaussianModel g = fit_gaussian_pooled(completed[m].copies, cfg.shrink);
            pooled[m] = make_plan(std::move(g), cfg.s_solver, cfg.block_size);
        }
    }

    const std::size_t S = cfg.statistics.size();
    const std::size_t cells = static_cast<std::size_t>(M) * K;
    std::vector<std::vector<StatPair>> out(cells);
    std::vector<std::vector<std::string>> cell_warnings(cells);
    StatOptions sopt = cfg.stat;
    parallel_for(cells, cfg.threads, [&](std::size_t cell) {
        const int m = static_cast<int>(cell / K), k = static_cast<int>(cell % K);
        const Matrix& w = completed[m].copies[k];
        const Stream s = rng.derive("copy").derive(static_cast<std::uint64_t>(m)).derive(static_cast<std::uint64_t>(k));
        KnockoffPlan plan = pooled[m] ? *pooled[m] : make_plan(fit_gaussian(w, cfg.shrink), cfg.s_solver, cfg.block_size);
        for (const auto& msg : plan.model.warnings) cell_warnings[cell].push_back(msg);
        const Matrix wk = sample_knockoffs(w, plan, derive(s, Role::Knockoff));
        const Vector& y = outcomes[m].y;
        const AugmentedDesign design = make_design(w, wk, y, detect_family(y), derive(s, Role::Interleave));
        StatEngine engine(design, outcomes[m].sigma_eps, sopt, derive(s, Role::Statistic));
        for (Statistic st : cfg.statistics) out[cell].push_back(engine.compute(st));
    });
    for (auto& cw : cell_warnings)
        for (auto& w : cw) res.warnings.push_back(std::move(w));

    const OrderMode mode = cfg.mode.value_or(default_mode(M));
    res.pairs.resize(S);
    for (std::size_t si = 0; si < S; ++si) {
        StatTensor t(K, M, p);
        for (std::size_t cell = 0; cell < cells; ++cell) {
            const int m = static_cast<int>(cell / K), k = static_cast<int>(cell % K);
            t.set(k, m, out[cell][si].z, out[cell][si].z_tilde);
            res.pairs[si].push_back(out[cell][si]);
        }
        SelectionReport rep = select(t, cfg.q, mode, cfg.c);
        rep.feature_names = outcomes[0].feature_names;
        res.reports.emplace_back(cfg.statistics[si], std::move(rep));
    }
    return res;
}

namespace {

double quantile(std::vector<double> v, double prob) {
    std::sort(v.begin(), v.end());
    const double pos = prob * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace

Preprocessed preprocess(const Matrix& w, const IntMatrix& r, const std::vector<std::string>& names,
                        const ScreenOptions& opt) {
    MKNOCK_REQUIRE(opt.max_missing >= 0 && opt.max_missing <= 1, ConfigError,
                   "missing-fraction limit must lie in [0, 1]");
    const Eigen::Index n = w.rows();
    Preprocessed out;
    std::vector<Eigen::Index> keep;
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
        const double frac = 1.0 - r.col(j).cast<double>().sum() / static_cast<double>(n);
        if (frac > opt.max_missing) {
            out.dropped.push_back(names[j]);
            spdlog::info("dropping feature '{}': {:.1f}% missing", names[j], 100.0 * frac);
        } else {
            keep.push_back(j);
        }
    }
    out.w.resize(n, static_cast<Eigen::Index>(keep.size()));
    out.r.resize(n, static_cast<Eigen::Index>(keep.size()));
    for (std::size_t c = 0; c < keep.size(); ++c) {
        const Eigen::Index j = keep[c];
        const auto cc = static_cast<Eigen::Index>(c);
        out.names.push_back(names[j]);
        out.r.col(cc) = r.col(j);
        out.w.col(cc) = w.col(j);
        std::vector<double> obs;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (!r(i, j)) {
                out.w(i, cc) = std::numeric_limits<double>::quiet_NaN();
                continue;
            }
            if (opt.log_transform) {
                if (!(w(i, j) > 0))
                    throw DataError("row " + std::to_string(i + 1) + ", column '" + names[j] +
                                    "': log transform needs positive values");
                out.w(i, cc) = std::log(w(i, j));
            }
            obs.push_back(out.w(i, cc));
        }
        if (opt.truncate && obs.size() >= 2) {
            const double q1 = quantile(obs, 0.25), q3 = quantile(obs, 0.75);
            const double lo = q1 - 3.0 * (q3 - q1), hi = q3 + 3.0 * (q3 - q1);
            int clipped = 0;
            for (Eigen::Index i = 0; i < n; ++i) {
                if (!r(i, j)) continue;
                const double v = out.w(i, cc);
                const double t = std::clamp(v, lo, hi);
                clipped += t != v;
                out.w(i, cc) = t;
            }
            if (clipped > 0) spdlog::debug("feature '{}': {} values truncated", names[j], clipped);
        }
    }
    MKNOCK_REQUIRE(!keep.empty(), DataError, "no features left after the missingness filter");
    return out;
}

QcSamples load_qc(const std::string& path, const std::vector<std::string>& features, const std::string& na,
                  bool log_transform) {
    const CsvTable t = read_csv(path);
    std::vector<int> cols;
    for (const auto& f : features) {
        const int c = t.column(f);
        if (c < 0) throw DataError(path + ": QC file has no column '" + f + "'");
        cols.push_back(c);
    }
    const int bcol = t.column("batch"), pcol = t.column("pair");
    QcSamples qc;
    qc.feature_names = features;
    std::vector<std::vector<double>> rows;
    std::size_t dropped = 0;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        std::vector<double> vals;
        bool any_na = false;
        for (std::size_t c = 0; c < cols.size(); ++c) {
            const auto v = parse_cell(t.rows[i][cols[c]], na, i + 1, features[c]);
            if (!v) {
                any_na = true;
                break;
            }
            if (log_transform) {
                if (!(*v > 0))
                    throw DataError(path + ": row " + std::to_string(i + 1) + ", column '" + features[c] +
                                    "': log transform needs positive values");
                vals.push_back(std::log(*v));
            } else {
                vals.push_back(*v);
            }
        }
        if (any_na) {
            ++dropped;
            continue;
        }
        rows.push_back(std::move(vals));
        if (bcol >= 0) qc.batch.push_back(t.rows[i][bcol]);
        if (pcol >= 0) qc.pair.push_back(t.rows[i][pcol]);
    }
    if (dropped > 0) spdlog::info("QC: dropped {} rows with missing values", dropped);
    qc.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(features.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t c = 0; c < features.size(); ++c)
            qc.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = rows[i][c];
    return qc;
}

ScreenResult screen_observed(const std::vector<ObservedData>& outcomes, const ScreenOptions& opt, const Stream& rng) {
    ScreenResult res;
    res.main = run_pipeline(outcomes, opt.pipeline, rng);
    res.features = outcomes.at(0).feature_names;
    res.warnings = res.main.warnings;
    if (opt.stability > 0) {
        const Stream st = derive(rng, Role::Stability);
        const std::size_t S = opt.pipeline.statistics.size();
        const Eigen::Index p = outcomes[0].p();
        std::vector<std::vector<std::vector<int>>> picks(opt.stability);
        PipelineConfig inner = opt.pipeline;
        inner.threads = 1;
        parallel_for(picks.size(), opt.pipeline.threads, [&](std::size_t r) {
            const PipelineResult pr = run_pipeline(outcomes, inner, st.derive(static_cast<std::uint64_t>(r)));
            for (const auto& [s, rep] : pr.reports) picks[r].push_back(rep.selected());
        });
        for (std::size_t si = 0; si < S; ++si) {
            StabilityReport sr;
            sr.R = opt.stability;
            sr.threshold = opt.stability_threshold;
            sr.feature_names = res.features;
            sr.frequency = Vector::Zero(p);
            for (const auto& pk : picks)
                for (int j : pk[si]) sr.frequency(j) += 1.0;
            sr.frequency /= static_cast<double>(opt.stability);
            res.stability.emplace_back(opt.pipeline.statistics[si], std::move(sr));
        }
    }
    return res;
}

LoadedData load_data(const std::string& path, const std::vector<std::string>& outcomes, const std::string& na) {
    MKNOCK_REQUIRE(!outcomes.empty(), ConfigError, "an outcome column is required");
    const CsvTable t = read_csv(path);
    MKNOCK_REQUIRE(!t.rows.empty(), DataError, path + ": no data rows");
    std::set<int> outcome_cols;
    LoadedData d;
    for (const auto& o : outcomes) {
        const int c = t.column(o);
        if (c < 0) throw DataError(path + ": no outcome column '" + o + "'");
        outcome_cols.insert(c);
    }
    std::vector<int> feature_cols;
    for (std::size_t c = 0; c < t.header.size(); ++c)
        if (!outcome_cols.count(static_cast<int>(c))) {
            feature_cols.push_back(static_cast<int>(c));
            d.names.push_back(t.header[c]);
        }
    MKNOCK_REQUIRE(!feature_cols.empty(), DataError, path + ": no feature columns");
    const auto n = static_cast<Eigen::Index>(t.rows.size());
    const auto p = static_cast<Eigen::Index>(feature_cols.size());
    d.w = Matrix::Zero(n, p);
    d.r = IntMatrix::Ones(n, p);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < p; ++j) {
            const auto v = parse_cell(t.rows[i][feature_cols[j]], na, static_cast<std::size_t>(i + 1), d.names[j]);
            if (v) {
                d.w(i, j) = *v;
            } else {
                d.w(i, j) = std::numeric_limits<double>::quiet_NaN();
                d.r(i, j) = 0;
            }
        }
    for (const auto& o : outcomes) {
        const int c = t.column(o);
        Vector y(n);
        int observed = 0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto v = parse_cell(t.rows[i][c], na, static_cast<std::size_t>(i + 1), o);
            y(i) = v ? *v : std::numeric_limits<double>::quiet_NaN();
            observed += v.has_value();
        }
        if (observed == 0) throw DataError(path + ": outcome '" + o + "' is missing in every row");
        d.y.push_back(std::move(y));
    }
    return d;
}

std::vector<ObservedData> split_outcomes(const Matrix& w, const IntMatrix& r, const std::vector<std::string>& names,
                                         const std::vector<Vector>& y, const std::optional<Matrix>& sigma_eps,
                                         std::vector<std::string>* warnings) {
    std::vector<ObservedData> out;
    for (std::size_t m = 0; m < y.size(); ++m) {
        std::vector<int> rows;
        for (Eigen::Index i = 0; i < y[m].size(); ++i)
            if (!std::isnan(y[m](i))) rows.push_back(static_cast<int>(i));
        const auto dropped = static_cast<std::size_t>(y[m].size()) - rows.size();
        if (dropped > 0) {
            const std::string msg = "outcome " + std::to_string(m) + ": dropped " + std::to_string(dropped) +
                                    " rows with a missing outcome";
            spdlog::info("{}", msg);
            if (warnings) warnings->push_back(msg);
        }
        ObservedData d;
        d.y = take_rows(y[m], rows);
        d.w = take_rows(w, rows);
        d.r.resize(static_cast<Eigen::Index>(rows.size()), r.cols());
        for (std::size_t i = 0; i < rows.size(); ++i) d.r.row(static_cast<Eigen::Index>(i)) = r.row(rows[i]);
        for (Eigen::Index i = 0; i < d.w.rows(); ++i)
            for (Eigen::Index j = 0; j < d.w.cols(); ++j)
                if (!d.r(i, j)) d.w(i, j) = 0.0;
        d.sigma_eps = sigma_eps;
        d.feature_names = names;
        out.push_back(std::move(d));
    }
    return out;
}

ScreenResult screen_files(const std::string& data_csv, const ScreenOptions& opt, const Stream& rng) {
    opt.pipeline.validate();
    MKNOCK_REQUIRE(!opt.outcomes.empty(), ConfigError, "an outcome column is required");
    bool needs_cov = false;
    for (Statistic s : opt.pipeline.statistics) needs_cov = needs_cov || uses_error_cov(s);
    MKNOCK_REQUIRE(!needs_cov || opt.qc_path.has_value(), ConfigError,
                   "the requested statistic needs an error covariance; supply a QC file");

    const LoadedData loaded = load_data(data_csv, opt.outcomes, opt.na);
    const Preprocessed pre = preprocess(loaded.w, loaded.r, loaded.names, opt);
    std::optional<ErrorCovEstimate> cov;
    if (opt.qc_path) {
        const QcSamples qc = load_qc(*opt.qc_path, pre.names, opt.na, opt.log_transform);
        cov = opt.paired_qc ? qc_paired_cov(qc, opt.diagonal_qc) : qc_cov(qc, opt.diagonal_qc);
    }
    std::vector<std::string> warnings;
    const auto data = split_outcomes(pre.w, pre.r, pre.names, loaded.y,
                                     cov ? std::optional<Matrix>(cov->sigma) : std::nullopt, &warnings);
    ScreenResult res = screen_observed(data, opt, rng);
    res.dropped_features = pre.dropped;
    res.error_cov = std::move(cov);
    for (auto& w : warnings) res.warnings.push_back(std::move(w));
    if (res.error_cov)
        for (const auto& w : res.error_cov->warnings) res.warnings.push_back(w);
    return res;
}

}  // namespace mknock

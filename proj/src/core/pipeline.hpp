#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "core/errorcov.hpp"
#include "core/filter.hpp"
#include "core/impute.hpp"
#include "core/knockoff.hpp"
#include "core/observed.hpp"
#include "core/rng.hpp"
#include "core/stats.hpp"

namespace mknock {

struct PipelineConfig {
    ImputeConfig impute;
    std::vector<Statistic> statistics{Statistic::LassoCoef};
    double q = 0.2;
    int c = 1;
    std::optional<OrderMode> mode;  // default: MaxMax for one outcome, MaxProd otherwise
    SSolver s_solver = SSolver::Equi;
    int block_size = 10;
    bool pool_sigma = false;  // one knockoff model from all completed copies
    double shrink = kDefaultShrink;
    StatOptions stat;
    int threads = 1;  // workers over (outcome, copy) pairs

    void validate() const;
};

struct PipelineResult {
    std::vector<std::pair<Statistic, SelectionReport>> reports;  // in cfg.statistics order
    std::vector<std::vector<StatPair>> pairs;  // [statistic][m * K + k]
    std::vector<std::string> warnings;

    const SelectionReport& report(Statistic s) const;
};

/// Impute -> knockoffs per completed copy -> statistics -> filter, for one
/// dataset per outcome (M = outcomes.size()). Every dataset must have the same
/// features; rows may differ.
PipelineResult run_pipeline(const std::vector<ObservedData>& outcomes, const PipelineConfig& cfg,
                            const Stream& rng);

struct ScreenOptions {
    std::vector<std::string> outcomes;  // one for screen, two or more for screen-multi
    std::string na = "NA";
    bool log_transform = false;
    bool truncate = true;
    double max_missing = 0.2;
    std::optional<std::string> qc_path;
    bool paired_qc = false;
    bool diagonal_qc = false;
    int stability = 0;  // repetitions; 0 disables
    double stability_threshold = 0.5;
    PipelineConfig pipeline;
};

struct ScreenResult {
    PipelineResult main;
    std::vector<std::pair<Statistic, StabilityReport>> stability;
    std::vector<std::string> features;          // retained, in report order
    std::vector<std::string> dropped_features;  // over the missingness limit
    std::optional<ErrorCovEstimate> error_cov;
    std::vector<std::string> warnings;
};

struct Preprocessed {
    Matrix w;     // retained features, NaN where missing
    IntMatrix r;  // 1 = observed
    std::vector<std::string> names;
    std::vector<std::string> dropped;
    std::vector<std::string> warnings;
};

/// Missing-fraction filter, optional log transform and quartile truncation of
/// the observed values (Q1 - 3 IQR, Q3 + 3 IQR).
Preprocessed preprocess(const Matrix& w, const IntMatrix& r, const std::vector<std::string>& names,
                        const ScreenOptions& opt);

/// QC samples restricted to `features` (rows with any NA dropped).
QcSamples load_qc(const std::string& path, const std::vector<std::string>& features, const std::string& na,
                  bool log_transform);

/// Runs the screen on in-memory data (already preprocessed); `rng` drives the
/// main run and, under derive(Stability), the stability repetitions.
ScreenResult screen_observed(const std::vector<ObservedData>& outcomes, const ScreenOptions& opt,
                             const Stream& rng);

/// Reads a data CSV (and optional QC CSV), preprocesses and screens.
ScreenResult screen_files(const std::string& data_csv, const ScreenOptions& opt, const Stream& rng);

/// Data CSV -> per-outcome observed data before preprocessing, for reuse by
/// the impute subcommand. Rows with a missing outcome are dropped per outcome.
struct LoadedData {
    Matrix w;
    IntMatrix r;
    std::vector<std::string> names;
    std::vector<Vector> y;                 // per outcome, full length (NaN when missing)
};
LoadedData load_data(const std::string& path, const std::vector<std::string>& outcomes, const std::string& na);

/// Per-outcome observed data over the given feature matrix.
std::vector<ObservedData> split_outcomes(const Matrix& w, const IntMatrix& r, const std::vector<std::string>& names,
                                         const std::vector<Vector>& y, const std::optional<Matrix>& sigma_eps,
                                         std::vector<std::string>* warnings = nullptr);

}  // namespace mknock

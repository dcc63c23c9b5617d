#pragma once

#include <string>
#include <vector>

#include "core/filter.hpp"
#include "core/harness.hpp"
#include "core/impute.hpp"
#include "core/pipeline.hpp"

namespace mknock {

/// Per-feature JSON records plus cutoffs; `stability` may be null.
std::string selection_json(const SelectionReport& r, const StabilityReport* stability = nullptr);

/// One row per feature: index, name, p, order_rank, selected_0, selected_1, frequency.
std::string selection_csv(const SelectionReport& r, const StabilityReport* stability = nullptr);

/// Full screen result: one selection block per statistic, dropped features,
/// error-covariance flags and warnings.
std::string screen_json(const ScreenResult& r);

std::string run_summary_json(const RunSummary& s);
/// One row per statistic.
std::string run_summary_csv(const RunSummary& s);
/// Aligned text table, one row per configuration and a column pair per method.
std::string run_summary_text(const RunSummary& s);

/// Header row of names, then one row per matrix row.
std::string matrix_csv(const Matrix& m, const std::vector<std::string>& names);

/// Completed copies stacked, with a leading `imputation` column (1-based).
std::string completed_csv(const CompletedSet& cs, const std::vector<std::string>& names);

}  // namespace mknock

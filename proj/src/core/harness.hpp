#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "core/datagen.hpp"
#include "core/pipeline.hpp"

namespace mknock {

struct SimConfig {
    ScenarioConfig scenario;
    PipelineConfig pipeline;
    int replicates = 50;
    std::optional<std::uint64_t> seed;
    int threads = 1;             // replicate workers; 0 = all cores
    bool include_timing = false;  // wall time in the JSON report

    void validate() const;
};

/// Parses a JSON configuration. Fields absent from the document keep the
/// values already in `base`; unknown fields are configuration errors. When
/// the setting is given but sigma2_eps / pi_mis are not, setting-consistent
/// values are filled in (setting 1: no error; setting 2: no missingness and
/// sigma2_eps = 0.6; setting 3: sigma2_eps = 0.1).
SimConfig parse_sim_config(const std::string& json_text, SimConfig base = {});
std::string sim_config_json(const SimConfig& cfg);

/// Screening options from JSON (outcome/outcomes, na, log_transform, truncate,
/// max_missing, qc, paired_qc, diagonal_qc, stability, stability_threshold,
/// seed, threads and the pipeline fields shared with SimConfig).
ScreenOptions parse_screen_options(const std::string& json_text, std::uint64_t* seed = nullptr,
                                   ScreenOptions base = {});

Setting parse_setting(const std::string& s);
std::string to_string(Setting s);
MissingBasis parse_basis(const std::string& s);
std::string to_string(MissingBasis b);

struct FdpPower {
    double fdp = 0.0;
    std::optional<double> power;  // undefined for an empty truth
};

FdpPower fdp_power(const std::vector<int>& selected, const std::vector<int>& truth, Eigen::Index p);

struct ReplicateRecord {
    int replicate = 0;
    bool aborted = false;
    std::string error;
    std::vector<FdpPower> per_method;  // in statistics order
    std::vector<int> n_selected;
};

struct MethodSummary {
    Statistic statistic = Statistic::LassoCoef;
    double mean_fdp = 0.0, se_fdp = 0.0;
    double mean_power = 0.0, se_power = 0.0;
    int replicates = 0;      // replicates contributing to FDP
    int power_replicates = 0;  // replicates with a nonempty truth
};

struct RunSummary {
    SimConfig config;
    std::vector<MethodSummary> methods;
    int requested = 0;
    int completed = 0;
    int aborted = 0;
    double wall_seconds = 0.0;
    std::vector<ReplicateRecord> records;

    const MethodSummary& method(Statistic s) const;
};

/// One replicate: generate, build observed data, run the pipeline, score.
ReplicateRecord run_replicate(const SimConfig& cfg, int replicate);

/// Replicates in a parallel pool; aggregation is in replicate order, so the
/// summary does not depend on the number of workers.
RunSummary run_replicates(const SimConfig& cfg);

/// Observed data for dataset m of a generated scenario.
ObservedData observed_from(const SimulatedDataset& d);

}  // namespace mknock

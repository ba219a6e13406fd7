#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "filters/enkf.hpp"
#include "filters/models.hpp"

namespace filters {

enum class ExperimentKind {
    pf_rate,      // particle filter vs Kalman, Monte Carlo rate in J
    enkf_rate,    // ensemble moments vs Kalman, Monte Carlo rate in J
    mf_exactness, // closed-form mean-field recursion vs Kalman
    collapse,     // particle weight degeneracy across state dimensions
    epsilon_trend,// Gaussian-mismatch epsilon and filter error across theta
    single_run,   // one filter on one dataset
};

std::string to_string(ExperimentKind kind);
ExperimentKind experiment_from_string(const std::string& name);

/// Declarative experiment description; parsed from JSON.
struct ExperimentConfig {
    ExperimentKind experiment = ExperimentKind::single_run;
    std::string model_name = "linear1d";
    std::map<std::string, double> model_params;
    int horizon = 10;
    std::vector<int> ensemble_sizes; // J values; rate experiments need >= 1 entry
    int replicates = 1;
    std::uint64_t seed = 0;
    GainVariant variant = GainVariant::direct_gamma;
    std::string out_dir = ".";
    std::vector<double> thetas = {0.0, 0.25, 0.5, 1.0}; // epsilon-trend sweep
    std::vector<int> dims = {1, 10, 50, 100};           // collapse sweep
    std::string filter = "kalman";                      // single-run choice
    int grid_nodes = 4001;
    double span = 10.0;
    int threads = 1;
};

ExperimentConfig config_from_json(const std::string& text);
ExperimentConfig config_from_json_file(const std::string& path);
std::string config_to_json(const ExperimentConfig& config);

/// One tidy result row. CSV schema (frozen):
/// experiment,model,theta,dim,J,replicate,step,metric_name,value
/// with -1 in replicate/step and 0 in J for rows where the column does not
/// apply. Failed replicates appear as metric_name=error_code rows.
struct ResultRow {
    std::string metric;
    double theta = 0.0;
    int dim = 0;
    int ensemble_size = 0;
    int replicate = -1;
    int step = -1;
    double value = 0.0;
};

struct RunRecord {
    ExperimentConfig config;
    std::vector<ResultRow> rows;
    std::vector<std::pair<std::string, double>> summary;
    std::map<std::string, std::vector<double>> series;
    std::vector<std::pair<std::string, std::string>> notes;
    std::vector<std::pair<std::string, std::string>> artifacts; // (filename, content)
    double wall_seconds = 0.0;
    std::string library_version;
};

/// Runs the configured experiment. Deterministic given (config, seed):
/// every emitted value except wall_seconds is reproducible.
RunRecord run_experiment(const ExperimentConfig& config);

std::string run_record_csv(const RunRecord& record);
std::string run_record_json(const RunRecord& record);

/// Writes <out_dir>/<experiment>.csv and .json; returns the CSV path.
std::string write_outputs(const RunRecord& record, const std::string& out_dir);

struct RateFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 1.0;
};

/// Ordinary least squares on (log J, log error). Needs at least three pairs
/// and strictly positive errors.
RateFit fit_rate(const std::vector<double>& sizes, const std::vector<double>& errors);

/// Entry point behind the `filters` binary; exposed so tests can drive the
/// CLI in process. Returns the process exit code (0 ok, 2 config error,
/// 3 numerical failure).
int cli_main(int argc, const char* const* argv);

} // namespace filters

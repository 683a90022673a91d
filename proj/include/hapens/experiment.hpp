#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hapens/ensemble.hpp"
#include "hapens/indicators.hpp"
#include "hapens/model_library.hpp"
#include "hapens/qdo.hpp"
#include "hapens/selectors.hpp"

namespace hapens {

// One search method to run. `label` names output files and defaults to the
// method name; it must be unique within a config.
struct MethodSpec {
    std::string name;
    std::string label;
    int iterations = 50;                         // greedy family and qd loop count
    double beta = 0.68;                          // multi-ges cost pressure
    CostMetric cost_metric = CostMetric::Memory; // qd behavior dimension
    int offspring = 20;
    int init_pop = 20;
    double pmac = 0.5;
    int remap_period = 10;
    int grid = 7;
};

// Where the model library comes from: a directory on disk or a synthetic
// generator config.
struct LibrarySource {
    std::string path;
    std::optional<SyntheticConfig> synthetic;
};

struct ExperimentConfig {
    LibrarySource library;
    std::vector<MethodSpec> methods;
    std::vector<std::uint64_t> seeds;
    CostMode cost_mode = CostMode::Aggregate;
    std::filesystem::path out_dir;
};

// One persisted run: a method's full ensemble set for one seed, with cached
// losses and costs.
struct RunRecord {
    std::string library_id;
    std::string algorithm;
    nlohmann::json params;
    double wall_time_s = 0.0;
    EnsembleSet set; // set.method is the label, set.seed the experiment seed
};

const std::vector<std::string>& known_methods();

CostMetric parse_cost_metric(const std::string& s);
std::string to_string(CostMetric m);
CostMode parse_cost_mode(const std::string& s);
std::string to_string(CostMode m);

// Stable per-(seed, method) stream seed so methods and seeds are independent.
std::uint64_t method_seed(std::uint64_t seed, const std::string& label);

ExperimentConfig parse_experiment_config(const nlohmann::json& j);
MethodSpec parse_method_spec(const nlohmann::json& j);
SyntheticConfig parse_synthetic_config(const nlohmann::json& j);
nlohmann::json synthetic_config_json(const SyntheticConfig& cfg);

std::string library_identity(const LibrarySource& source);
ModelLibrary resolve_library(const LibrarySource& source);

nlohmann::json method_params_json(const MethodSpec& spec);
nlohmann::json record_to_json(const RunRecord& record);
RunRecord record_from_json(const nlohmann::json& j);
RunRecord load_record(const std::filesystem::path& file);

// Record files in a directory (label__seedN.json), sorted by filename.
std::vector<std::filesystem::path> list_record_files(const std::filesystem::path& dir);

void atomic_write_file(const std::filesystem::path& file, const std::string& content);

EnsembleSet run_method(const ModelLibrary& lib, const MethodSpec& spec, std::uint64_t seed);

// Runs every (method, seed) pair and writes one record file each; returns the
// written paths.
std::vector<std::filesystem::path> cmd_run(const ExperimentConfig& config);

// Cross-method evaluation grouped by seed: per-seed fronts, hypervolume and
// IGD+ against the pooled reference front, plus per-method means and ranks.
nlohmann::json cmd_evaluate(const std::vector<std::filesystem::path>& record_files,
                            CostMode mode);

// CSV with one row per (method, seed): total ensembles, unique repetition
// vectors, and Pareto-front size.
std::string cmd_pareto(const std::vector<std::filesystem::path>& record_files, CostMode mode);

// Runs multi-ges once per (beta, seed) and reports per-beta mean hypervolume,
// mean final inference time and mean final test AUC. Duplicate betas are
// dropped with a warning (returned in the json under "warnings").
nlohmann::json cmd_sweep_beta(const LibrarySource& source, std::vector<double> betas,
                              int iterations, const std::vector<std::uint64_t>& seeds,
                              CostMode mode);

} // namespace hapens

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hapens/matrix.hpp"

namespace hapens {

enum class Split { Val, Test };

struct HardwareCost {
    double inference_time_s = 0.0;
    double memory_bytes = 0.0;
    double disk_bytes = 0.0;

    bool operator==(const HardwareCost&) const = default;
};

// One pretrained model: its name, per-split probability predictions and
// deployment costs. Prediction rows sum to one.
struct ModelEntry {
    std::string name;
    Matrix val_predictions;  // n_val x n_classes
    Matrix test_predictions; // n_test x n_classes
    HardwareCost cost;

    bool operator==(const ModelEntry&) const = default;
};

struct ModelLibrary {
    std::vector<ModelEntry> models;
    std::vector<int> val_labels;
    std::vector<int> test_labels;
    int n_classes = 0;

    std::size_t size() const { return models.size(); }
    std::size_t n_val() const { return val_labels.size(); }
    std::size_t n_test() const { return test_labels.size(); }

    const std::vector<int>& labels(Split s) const {
        return s == Split::Val ? val_labels : test_labels;
    }
    const Matrix& predictions(std::size_t model, Split s) const {
        return s == Split::Val ? models[model].val_predictions
                               : models[model].test_predictions;
    }

    bool operator==(const ModelLibrary&) const = default;
};

struct SyntheticConfig {
    int p = 8;           // number of models
    int n_val = 200;
    int n_test = 100;
    int n_classes = 2;
    double skill_min = 0.5; // per-model signal strength range
    double skill_max = 3.0;
    double error_correlation = 0.3; // share of noise common to all models, in [0,1]
    double cost_min = 1e-2;         // log-uniform range for each cost metric
    double cost_max = 1e2;
    std::uint64_t seed = 0;
};

// Reads a library directory: library.json, val_labels.csv, test_labels.csv,
// val/<name>.csv and test/<name>.csv. Throws DataError on missing files,
// inconsistent shapes, invalid probabilities or invalid labels. Prediction
// rows whose sum deviates from one by more than 1e-12 but at most 1e-6 are
// renormalized; larger deviations are rejected.
ModelLibrary load_library(const std::filesystem::path& dir);

// Writes the on-disk layout read by load_library. Probabilities are written
// with enough digits to round-trip exactly.
void write_library(const ModelLibrary& lib, const std::filesystem::path& dir);

// Deterministically generates a library from the config: class-balanced
// labels, per-model skill levels, per-sample difficulty, and a noise mix
// whose shared component is weighted by error_correlation. Costs are drawn
// log-uniformly per metric. Throws ConfigError on invalid parameters.
ModelLibrary generate_synthetic(const SyntheticConfig& config);

// Returns human-readable invariant violations (empty when the library is valid).
std::vector<std::string> validate_library(const ModelLibrary& lib);

} // namespace hapens

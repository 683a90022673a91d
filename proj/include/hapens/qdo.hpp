#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <unordered_set>
#include <vector>

#include "hapens/ensemble.hpp"
#include "hapens/model_library.hpp"

namespace hapens {

struct CountsHash {
    std::size_t operator()(const std::vector<int>& v) const noexcept {
        std::uint64_t h = 1469598103934665603ULL;
        for (int x : v) {
            h ^= static_cast<std::uint64_t>(static_cast<std::uint32_t>(x));
            h *= 1099511628211ULL;
        }
        return static_cast<std::size_t>(h);
    }
};

// Repetition vectors already evaluated in the current run.
using SeenSet = std::unordered_set<std::vector<int>, CountsHash>;

// One archive event: a descriptor was routed to `cell` and either accepted
// as its elite or rejected. Re-bucketing during a boundary remap emits
// events with from_remap set; `epoch` increments at every remap.
struct ArchiveLogEntry {
    int epoch = 0;
    int cell = 0;
    double val_loss = 0.0;
    bool accepted = false;
    bool from_remap = false;
};

// Grid archive over behavior space with sliding, quantile-based cell
// boundaries. Each cell keeps the lowest-validation-loss ensemble routed to
// it since the last remap.
class Archive {
public:
    explicit Archive(int grid = 7);

    int grid() const { return grid_; }
    int epoch() const { return epoch_; }
    const std::vector<double>& boundaries(int dim) const { return boundaries_[dim]; }
    const std::vector<double>& history(int dim) const { return history_[dim]; }
    const std::vector<ArchiveLogEntry>& log() const { return log_; }
    const std::optional<Ensemble>& cell(int index) const { return cells_[index]; }

    // Flat cell index (alc bin * grid + hw bin). Values left of the first
    // interior cut map to bin 0, right of the last to the final bin.
    int cell_index(const BehaviorDescriptor& b) const;

    // Appends the descriptor to the history, then accepts the ensemble if its
    // cell is empty or its validation loss is strictly lower than the elite's.
    bool insert(const Ensemble& e);

    // Sets initial boundaries from the given descriptors without touching
    // history or elites.
    void seed_boundaries(const std::vector<BehaviorDescriptor>& descriptors);

    // Recomputes the cut points as evenly spaced quantiles of the full
    // history and re-buckets the current elites; colliding elites keep the
    // lower validation loss.
    void remap();

    int occupancy() const;
    // Elite with the lowest validation loss; earliest cell index on ties.
    const Ensemble* best() const;
    std::vector<const Ensemble*> elites() const; // ascending cell index

private:
    int bin(double v, int dim) const;
    void set_boundaries(const std::vector<double>& values, int dim);

    int grid_;
    int epoch_ = 0;
    std::vector<std::optional<Ensemble>> cells_;
    std::array<std::vector<double>, 2> boundaries_; // grid_+1 cut points per dim
    std::array<std::vector<double>, 2> history_;
    std::vector<ArchiveLogEntry> log_;
};

// Quantile with midpoint interpolation: for fraction f over n sorted values,
// the value at index f*(n-1) when integral, otherwise the midpoint of its
// two neighbors.
double quantile_midpoint(const std::vector<double>& sorted, double f);

// Parent selection mixes exploiting the global best elite with uniform
// draws over all elites. The mix shifts every ten iterations toward
// whichever mode produced more archive acceptances (ties lower it).
struct SamplingState {
    double mode_probability = 0.5; // chance of picking the global-best elite
    int best_tally = 0;            // acceptances credited to best-mode draws
    int random_tally = 0;

    static constexpr double kMin = 0.1;
    static constexpr double kMax = 0.9;
    static constexpr double kStep = 0.1;
};

SamplingState update_sampling_state(SamplingState state);

struct ParentPick {
    const Ensemble* first = nullptr;
    const Ensemble* second = nullptr;
    bool first_best = false; // true when drawn via the global-best mode
    bool second_best = false;
};

// Throws std::invalid_argument("empty archive") when no elites exist. With a
// single elite both parents are that elite.
ParentPick select_parents(const Archive& archive, const SamplingState& state,
                          std::mt19937_64& rng);

// Two-point crossover over the ordered union S of both parents' non-zero
// indices with 1-based cut positions a < b: positions k <= a or k > b take
// the first parent's count, the rest the second's. An all-zero child falls
// back to the element-wise rounded-up average.
RepetitionVector two_point_crossover(const RepetitionVector& r, const RepetitionVector& r_prime,
                                     int cut_a, int cut_b);

// Draws the cut positions uniformly when |S| >= 3; otherwise (or for an
// all-zero child) returns the element-wise rounded-up average.
RepetitionVector crossover(const RepetitionVector& r, const RepetitionVector& r_prime,
                           std::mt19937_64& rng);

struct MutationResult {
    RepetitionVector vec;
    int increment = 1;
    bool brake = false; // set when 50 attempts at some increment were exhausted
};

// Adds the current increment to one uniformly drawn index, rejecting vectors
// already seen. After 50 failed attempts the increment doubles (1 -> 2 -> 4
// -> 8) and the brake flag is raised, telling the caller to force mutation
// for the rest of the iteration. If every attempt fails the last candidate
// is returned and the evaluation layer deduplicates it.
MutationResult mutate(const RepetitionVector& child, const SeenSet& seen, std::mt19937_64& rng);

struct HapensConfig {
    CostMetric cost_metric = CostMetric::Memory; // second behavior dimension
    int initial_population = 20;
    int iterations = 100;
    int offspring_per_iteration = 20;
    double mutation_after_crossover = 0.5;
    int remap_period = 10;
    int grid = 7;
    std::uint64_t seed = 0;
};

// Draws initial_population ensembles: pick total s uniform in [1, min(8, p)],
// then s model indices uniformly with replacement. Colliding draws reuse the
// first evaluation. Descriptors use the configured cost metric.
std::vector<Ensemble> init_population(const ModelLibrary& lib, const HapensConfig& config,
                                      std::mt19937_64& rng);

// -sum over positive weights of w * ln w.
double weight_entropy(const WeightVector& w);

struct RunTrace {
    Archive archive{7};
    std::size_t unique_evaluations = 0;
    std::size_t duplicate_emissions = 0;
};

// Quality-diversity search over ensembles with behavior (ALC, hardware cost):
// evolve an archive of per-niche elites by crossover and mutation and return
// every evaluated ensemble. No repetition vector is scored twice.
EnsembleSet hapens_run(const ModelLibrary& lib, const HapensConfig& config,
                       std::mt19937_64& rng, RunTrace* trace = nullptr);

// Cost-blind variant: the second behavior dimension is the weight entropy.
EnsembleSet qdo_es_run(const ModelLibrary& lib, const HapensConfig& config,
                       std::mt19937_64& rng, RunTrace* trace = nullptr);

} // namespace hapens

#pragma once

#include <vector>

#include "hapens/matrix.hpp"
#include "hapens/model_library.hpp"

namespace hapens {

// How many times each model was picked into an ensemble. The pick total T
// induces the mixing weights c_j / T.
struct RepetitionVector {
    std::vector<int> counts;

    int total() const;
    std::vector<std::size_t> support() const; // indices with non-zero count, ascending

    bool operator==(const RepetitionVector&) const = default;
};

struct WeightVector {
    std::vector<double> weights;

    bool operator==(const WeightVector&) const = default;
};

struct EnsembleCosts {
    double inference_time_s = 0.0;
    double memory_bytes = 0.0;
    double disk_bytes = 0.0;
    int size = 0; // distinct models with non-zero weight

    bool operator==(const EnsembleCosts&) const = default;
};

enum class CostMetric { Time, Memory, Disk, Size };

double cost_value(const EnsembleCosts& costs, CostMetric metric);

// w_j = c_j / T. Throws std::invalid_argument("empty ensemble") when T = 0.
WeightVector to_weights(const RepetitionVector& r);

// Weighted average of the member models' probability matrices.
Matrix ensemble_predict(const ModelLibrary& lib, const WeightVector& w, Split split);

// Area under the ROC curve via the rank-sum statistic with midrank tie
// handling. Two-class problems score on column 1; with more classes the
// result is the unweighted mean of the per-class one-vs-rest AUCs using each
// class's probability column. Throws "degenerate class" when some class has
// no positives or no negatives.
double roc_auc(const Matrix& pred, const std::vector<int>& labels);

// 1 - roc_auc of the ensemble on the chosen split.
double fitness_loss(const ModelLibrary& lib, const WeightVector& w, Split split);

// -ln of the probability assigned to the true class, clipped to [1e-15, 1].
std::vector<double> per_sample_log_loss(const Matrix& pred, const std::vector<int>& labels);
std::vector<double> per_sample_log_loss(const ModelEntry& model, const std::vector<int>& val_labels);

// Pearson correlation; 0 when either input has zero variance.
double pearson(const std::vector<double>& a, const std::vector<double>& b);

// Mean pairwise Pearson correlation of the member models' per-sample
// validation losses. A single-model ensemble scores 1.
double average_loss_correlation(const ModelLibrary& lib, const RepetitionVector& r);

// Costs add over the distinct member models; repeated picks of one model are
// charged once.
EnsembleCosts ensemble_costs(const ModelLibrary& lib, const RepetitionVector& r);

// (v - min) / (max - min); all zeros when max == min.
std::vector<double> min_max_normalize(const std::vector<double>& values);

// Per row: the mean of the three cost metrics, each min-max normalized down
// its column.
std::vector<double> hardware_aggregate(const std::vector<EnsembleCosts>& rows);

// Precomputed, mean-centered per-model validation loss vectors for fast
// repeated correlation queries. Build once per library before heavy search;
// read-only afterwards. alc() matches average_loss_correlation exactly.
class AlcCache {
public:
    explicit AlcCache(const ModelLibrary& lib);
    double alc(const RepetitionVector& r) const;

private:
    std::vector<std::vector<double>> centered_;
    std::vector<double> norms_;
};

} // namespace hapens

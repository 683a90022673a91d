#pragma once

#include <string>
#include <vector>

#include "hapens/ensemble.hpp"
#include "hapens/model_library.hpp"

namespace hapens {

enum class CostMode { Time, Memory, Disk, Size, Aggregate };

// One ensemble in the evaluation plane: both coordinates minimized, in [0,1]
// after normalization.
struct ObjectivePoint {
    double perf_loss = 0.0;
    double cost = 0.0;

    bool operator==(const ObjectivePoint&) const = default;
};

struct FrontEvaluation {
    std::string method;
    double hv = 0.0;
    double igd_plus = 0.0;
    std::vector<ObjectivePoint> front;
    std::size_t n_ensembles = 0;
    std::size_t n_pareto = 0;
};

// Non-dominated subset under weak dominance (<= in both coordinates, < in at
// least one). Exact duplicates collapse to one point. Sorted by perf_loss
// ascending.
std::vector<ObjectivePoint> pareto_front(std::vector<ObjectivePoint> points);

// Exact area dominated by the points and bounded by the reference point.
// Points with any coordinate at or beyond the reference contribute nothing.
double hypervolume_2d(const std::vector<ObjectivePoint>& points, ObjectivePoint reference);

// Mean over the reference front of the one-sided distance
// sqrt(sum_i max(a_i - z_i, 0)^2) to the nearest solution point. Throws
// std::invalid_argument("empty front") when either side is empty.
double igd_plus(const std::vector<ObjectivePoint>& solution,
                const std::vector<ObjectivePoint>& reference_front);

// Maps each set's ensembles to objective points: test loss and the chosen
// cost, both normalized over the union of all sets so methods share one
// scale. Order-preserving per set. Throws
// std::invalid_argument("incomparable sets") when the sets disagree on the
// model count.
std::vector<std::vector<ObjectivePoint>> build_objective_space(
    const std::vector<const EnsembleSet*>& sets, CostMode mode);

// Pareto front of the union of all point lists.
std::vector<ObjectivePoint> reference_front(
    const std::vector<std::vector<ObjectivePoint>>& per_set_points);

// Exhaustively evaluates every repetition vector with pick total 1..max_total.
// Guarded to p <= 6 and max_total <= 4; beyond that throws
// std::invalid_argument("instance too large for oracle").
EnsembleSet brute_force_front(const ModelLibrary& lib, int max_total);

// Shared objective space, cross-set reference front, then per-set
// hypervolume (reference point (1,1)), IGD+ and own Pareto front.
std::vector<FrontEvaluation> evaluate_sets(const std::vector<const EnsembleSet*>& sets,
                                           CostMode mode);

} // namespace hapens

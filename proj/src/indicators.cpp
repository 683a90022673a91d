#include "hapens/indicators.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hapens {

std::vector<ObjectivePoint> pareto_front(std::vector<ObjectivePoint> points) {
    std::sort(points.begin(), points.end(), [](const ObjectivePoint& a, const ObjectivePoint& b) {
        if (a.perf_loss != b.perf_loss) {
            return a.perf_loss < b.perf_loss;
        }
        return a.cost < b.cost;
    });
    std::vector<ObjectivePoint> front;
    for (const auto& p : points) {
        if (front.empty() || p.cost < front.back().cost) {
            front.push_back(p);
        }
    }
    return front;
}

double hypervolume_2d(const std::vector<ObjectivePoint>& points, ObjectivePoint reference) {
    std::vector<ObjectivePoint> inside;
    for (const auto& p : points) {
        if (p.perf_loss < reference.perf_loss && p.cost < reference.cost) {
            inside.push_back(p);
        }
    }
    const auto front = pareto_front(std::move(inside));
    double hv = 0.0;
    for (std::size_t i = 0; i < front.size(); ++i) {
        const double next_perf = i + 1 < front.size() ? front[i + 1].perf_loss : reference.perf_loss;
        hv += (next_perf - front[i].perf_loss) * (reference.cost - front[i].cost);
    }
    return hv;
}

double igd_plus(const std::vector<ObjectivePoint>& solution,
                const std::vector<ObjectivePoint>& reference_front) {
    if (solution.empty() || reference_front.empty()) {
        throw std::invalid_argument("empty front");
    }
    double sum = 0.0;
    for (const auto& z : reference_front) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& a : solution) {
            const double dp = std::max(a.perf_loss - z.perf_loss, 0.0);
            const double dc = std::max(a.cost - z.cost, 0.0);
            best = std::min(best, std::sqrt(dp * dp + dc * dc));
        }
        sum += best;
    }
    return sum / static_cast<double>(reference_front.size());
}

std::vector<std::vector<ObjectivePoint>> build_objective_space(
    const std::vector<const EnsembleSet*>& sets, CostMode mode) {
    if (sets.empty()) {
        throw std::invalid_argument("incomparable sets");
    }
    std::size_t p = 0;
    for (const auto* set : sets) {
        if (!set || set->ensembles.empty()) {
            throw std::invalid_argument("incomparable sets");
        }
        for (const auto& e : set->ensembles) {
            if (p == 0) {
                p = e.repetition.counts.size();
            } else if (e.repetition.counts.size() != p) {
                throw std::invalid_argument("incomparable sets");
            }
        }
    }

    std::vector<double> perf_raw;
    std::vector<EnsembleCosts> cost_rows;
    for (const auto* set : sets) {
        for (const auto& e : set->ensembles) {
            perf_raw.push_back(e.test_loss);
            cost_rows.push_back(e.costs);
        }
    }
    const auto perf = min_max_normalize(perf_raw);
    std::vector<double> cost;
    if (mode == CostMode::Aggregate) {
        cost = hardware_aggregate(cost_rows);
    } else {
        const CostMetric metric = mode == CostMode::Time     ? CostMetric::Time
                                  : mode == CostMode::Memory ? CostMetric::Memory
                                  : mode == CostMode::Disk   ? CostMetric::Disk
                                                             : CostMetric::Size;
        std::vector<double> raw;
        raw.reserve(cost_rows.size());
        for (const auto& row : cost_rows) {
            raw.push_back(cost_value(row, metric));
        }
        cost = min_max_normalize(raw);
    }

    std::vector<std::vector<ObjectivePoint>> out;
    out.reserve(sets.size());
    std::size_t at = 0;
    for (const auto* set : sets) {
        std::vector<ObjectivePoint> points;
        points.reserve(set->ensembles.size());
        for (std::size_t i = 0; i < set->ensembles.size(); ++i, ++at) {
            points.push_back({perf[at], cost[at]});
        }
        out.push_back(std::move(points));
    }
    return out;
}

std::vector<ObjectivePoint> reference_front(
    const std::vector<std::vector<ObjectivePoint>>& per_set_points) {
    std::vector<ObjectivePoint> all;
    for (const auto& points : per_set_points) {
        all.insert(all.end(), points.begin(), points.end());
    }
    return pareto_front(std::move(all));
}

EnsembleSet brute_force_front(const ModelLibrary& lib, int max_total) {
    if (lib.size() > 6 || max_total > 4 || max_total < 1) {
        throw std::invalid_argument("instance too large for oracle");
    }
    EnsembleSet set{"brute-force", 0, {}};
    RepetitionVector counts{std::vector<int>(lib.size(), 0)};
    int emitted = 0;
    auto recurse = [&](auto&& self, std::size_t index, int used) -> void {
        if (index == lib.size()) {
            if (used >= 1) {
                ++emitted;
                set.ensembles.push_back(evaluate_ensemble(lib, counts, "brute-force", emitted));
            }
            return;
        }
        for (int c = 0; c <= max_total - used; ++c) {
            counts.counts[index] = c;
            self(self, index + 1, used + c);
        }
        counts.counts[index] = 0;
    };
    recurse(recurse, 0, 0);
    return set;
}

std::vector<FrontEvaluation> evaluate_sets(const std::vector<const EnsembleSet*>& sets,
                                           CostMode mode) {
    const auto spaces = build_objective_space(sets, mode);
    const auto reference = reference_front(spaces);
    std::vector<FrontEvaluation> out;
    out.reserve(sets.size());
    for (std::size_t i = 0; i < sets.size(); ++i) {
        FrontEvaluation fe;
        fe.method = sets[i]->method;
        fe.hv = hypervolume_2d(spaces[i], {1.0, 1.0});
        fe.igd_plus = igd_plus(spaces[i], reference);
        fe.front = pareto_front(spaces[i]);
        fe.n_ensembles = spaces[i].size();
        fe.n_pareto = fe.front.size();
        out.push_back(std::move(fe));
    }
    return out;
}

} // namespace hapens

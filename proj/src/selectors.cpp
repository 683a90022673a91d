#include "hapens/selectors.hpp"

#include <limits>
#include <stdexcept>

namespace hapens {

namespace {

// Validation loss of the ensemble with one extra pick of model m.
double candidate_loss(const ModelLibrary& lib, RepetitionVector& counts, std::size_t m) {
    counts.counts[m] += 1;
    const double loss = fitness_loss(lib, to_weights(counts), Split::Val);
    counts.counts[m] -= 1;
    return loss;
}

void require_iterations(int iterations) {
    if (iterations < 1) {
        throw std::invalid_argument("iterations must be at least 1");
    }
}

} // namespace

EnsembleSet single_best(const ModelLibrary& lib) {
    RepetitionVector counts{std::vector<int>(lib.size(), 0)};
    std::size_t best = 0;
    double best_loss = std::numeric_limits<double>::infinity();
    for (std::size_t m = 0; m < lib.size(); ++m) {
        const double loss = candidate_loss(lib, counts, m);
        if (loss < best_loss) {
            best_loss = loss;
            best = m;
        }
    }
    counts.counts[best] = 1;
    EnsembleSet set{"single-best", 0, {}};
    set.ensembles.push_back(evaluate_ensemble(lib, counts, "single-best", 1));
    return set;
}

EnsembleSet ges_star(const ModelLibrary& lib, int iterations) {
    require_iterations(iterations);
    RepetitionVector counts{std::vector<int>(lib.size(), 0)};
    EnsembleSet set{"ges-star", 0, {}};
    set.ensembles.reserve(iterations);
    for (int it = 1; it <= iterations; ++it) {
        std::size_t best = 0;
        double best_loss = std::numeric_limits<double>::infinity();
        for (std::size_t m = 0; m < lib.size(); ++m) {
            const double loss = candidate_loss(lib, counts, m);
            if (loss < best_loss) {
                best_loss = loss;
                best = m;
            }
        }
        counts.counts[best] += 1;
        set.ensembles.push_back(evaluate_ensemble(lib, counts, "ges-star", it));
    }
    return set;
}

EnsembleSet ges(const ModelLibrary& lib, int iterations) {
    const EnsembleSet star = ges_star(lib, iterations);
    std::size_t best = 0;
    for (std::size_t i = 1; i < star.ensembles.size(); ++i) {
        if (star.ensembles[i].val_loss < star.ensembles[best].val_loss) {
            best = i;
        }
    }
    EnsembleSet set{"ges", 0, {star.ensembles[best]}};
    set.ensembles.front().provenance.method = "ges";
    return set;
}

EnsembleSet multi_ges(const ModelLibrary& lib, const MultiGesConfig& config) {
    require_iterations(config.iterations);
    if (!(config.beta >= 0.0 && config.beta <= 1.0)) {
        throw std::invalid_argument("beta must lie in [0,1]");
    }
    const double alpha = 1.0 - config.beta;

    RepetitionVector counts{std::vector<int>(lib.size(), 0)};
    EnsembleSet set{"multi-ges", 0, {}};
    set.ensembles.reserve(config.iterations);
    std::vector<double> perf_raw(lib.size());
    std::vector<double> time_raw(lib.size());
    for (int it = 1; it <= config.iterations; ++it) {
        for (std::size_t m = 0; m < lib.size(); ++m) {
            perf_raw[m] = candidate_loss(lib, counts, m);
            counts.counts[m] += 1;
            time_raw[m] = ensemble_costs(lib, counts).inference_time_s;
            counts.counts[m] -= 1;
        }
        const auto perf = min_max_normalize(perf_raw);
        const auto time = min_max_normalize(time_raw);
        std::size_t best = 0;
        double best_score = std::numeric_limits<double>::infinity();
        for (std::size_t m = 0; m < lib.size(); ++m) {
            const double score = alpha * perf[m] + config.beta * time[m];
            if (score < best_score) {
                best_score = score;
                best = m;
            }
        }
        counts.counts[best] += 1;
        set.ensembles.push_back(evaluate_ensemble(lib, counts, "multi-ges", it));
    }
    return set;
}

} // namespace hapens

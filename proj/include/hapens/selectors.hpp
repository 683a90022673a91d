#pragma once

#include "hapens/ensemble.hpp"
#include "hapens/model_library.hpp"

namespace hapens {

struct MultiGesConfig {
    double beta = 0.68; // cost pressure in [0,1]; performance weight is 1 - beta
    int iterations = 50;
};

// The single model with the lowest validation loss, as a one-hot ensemble.
// Ties go to the lowest model index.
EnsembleSet single_best(const ModelLibrary& lib);

// Greedy forward selection with replacement: each iteration adds the model
// whose addition minimizes validation loss (ties to the lowest index) and
// records the intermediate ensemble. Snapshot i has pick total T = i.
EnsembleSet ges_star(const ModelLibrary& lib, int iterations);

// The single snapshot of ges_star with the lowest validation loss; the
// earliest one on ties.
EnsembleSet ges(const ModelLibrary& lib, int iterations);

// Greedy selection scored by J = (1 - beta) * P + beta * T, where P is the
// candidate's validation loss and T its cumulative inference time, each
// min-max normalized across the candidates of the current iteration. Records
// every intermediate ensemble; beta = 0 reproduces ges_star exactly.
EnsembleSet multi_ges(const ModelLibrary& lib, const MultiGesConfig& config);

} // namespace hapens

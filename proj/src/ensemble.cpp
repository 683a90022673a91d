#include "hapens/ensemble.hpp"

namespace hapens {

Ensemble evaluate_ensemble(const ModelLibrary& lib, RepetitionVector repetition,
                           std::string method, int iteration) {
    Ensemble e;
    e.weights = to_weights(repetition);
    e.repetition = std::move(repetition);
    e.val_loss = fitness_loss(lib, e.weights, Split::Val);
    e.test_loss = fitness_loss(lib, e.weights, Split::Test);
    e.costs = ensemble_costs(lib, e.repetition);
    e.provenance = {std::move(method), iteration};
    return e;
}

} // namespace hapens

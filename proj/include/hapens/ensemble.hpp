#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hapens/metrics.hpp"
#include "hapens/model_library.hpp"

namespace hapens {

// Position of an ensemble in behavior space: mean pairwise loss correlation
// of its members, and a second coordinate that depends on the search variant
// (a hardware cost, or the weight entropy).
struct BehaviorDescriptor {
    double alc = 0.0;
    double hw = 0.0;

    bool operator==(const BehaviorDescriptor&) const = default;
};

struct Provenance {
    std::string method;
    int iteration = 0;

    bool operator==(const Provenance&) const = default;
};

struct Ensemble {
    RepetitionVector repetition;
    WeightVector weights;
    double val_loss = 0.0;
    double test_loss = 0.0;
    EnsembleCosts costs;
    std::optional<BehaviorDescriptor> behavior;
    Provenance provenance;

    bool operator==(const Ensemble&) const = default;
};

struct EnsembleSet {
    std::string method;
    std::uint64_t seed = 0;
    std::vector<Ensemble> ensembles;

    bool operator==(const EnsembleSet&) const = default;
};

// Fully scores a repetition vector against the library: weights, validation
// and test loss, and costs. The test loss is cached here for later front
// construction; search code must only read val_loss.
Ensemble evaluate_ensemble(const ModelLibrary& lib, RepetitionVector repetition,
                           std::string method, int iteration);

} // namespace hapens

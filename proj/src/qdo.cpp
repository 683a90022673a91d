#include "hapens/qdo.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <unordered_map>

namespace hapens {

namespace {

constexpr int kMutationAttempts = 50;
constexpr int kMaxIncrement = 8;

} // namespace

Archive::Archive(int grid) : grid_(grid), cells_(static_cast<std::size_t>(grid) * grid) {
    if (grid < 1) {
        throw std::invalid_argument("grid must be at least 1");
    }
    boundaries_[0].assign(grid_ + 1, 0.0);
    boundaries_[1].assign(grid_ + 1, 0.0);
}

int Archive::bin(double v, int dim) const {
    // Count interior cuts strictly below v; bins are right-closed, values
    // outside the outer cuts clamp to the edge bins.
    int b = 0;
    for (int k = 1; k < grid_; ++k) {
        if (boundaries_[dim][k] < v) {
            ++b;
        }
    }
    return b;
}

int Archive::cell_index(const BehaviorDescriptor& d) const {
    return bin(d.alc, 0) * grid_ + bin(d.hw, 1);
}

bool Archive::insert(const Ensemble& e) {
    if (!e.behavior) {
        throw std::invalid_argument("ensemble has no behavior descriptor");
    }
    history_[0].push_back(e.behavior->alc);
    history_[1].push_back(e.behavior->hw);
    const int idx = cell_index(*e.behavior);
    const bool accepted = !cells_[idx] || e.val_loss < cells_[idx]->val_loss;
    log_.push_back({epoch_, idx, e.val_loss, accepted, false});
    if (accepted) {
        cells_[idx] = e;
    }
    return accepted;
}

void Archive::set_boundaries(const std::vector<double>& values, int dim) {
    std::vector<double> sorted(values);
    std::sort(sorted.begin(), sorted.end());
    for (int k = 0; k <= grid_; ++k) {
        boundaries_[dim][k] = quantile_midpoint(sorted, static_cast<double>(k) / grid_);
    }
}

void Archive::seed_boundaries(const std::vector<BehaviorDescriptor>& descriptors) {
    if (descriptors.empty()) {
        throw std::invalid_argument("empty archive");
    }
    std::vector<double> alc, hw;
    alc.reserve(descriptors.size());
    hw.reserve(descriptors.size());
    for (const auto& d : descriptors) {
        alc.push_back(d.alc);
        hw.push_back(d.hw);
    }
    set_boundaries(alc, 0);
    set_boundaries(hw, 1);
}

void Archive::remap() {
    if (history_[0].empty()) {
        throw std::invalid_argument("empty archive");
    }
    set_boundaries(history_[0], 0);
    set_boundaries(history_[1], 1);
    ++epoch_;

    std::vector<Ensemble> elites;
    for (auto& c : cells_) {
        if (c) {
            elites.push_back(std::move(*c));
            c.reset();
        }
    }
    for (auto& e : elites) {
        const int idx = cell_index(*e.behavior);
        const bool accepted = !cells_[idx] || e.val_loss < cells_[idx]->val_loss;
        log_.push_back({epoch_, idx, e.val_loss, accepted, true});
        if (accepted) {
            cells_[idx] = std::move(e);
        }
    }
}

int Archive::occupancy() const {
    int n = 0;
    for (const auto& c : cells_) {
        n += c.has_value();
    }
    return n;
}

const Ensemble* Archive::best() const {
    const Ensemble* best = nullptr;
    for (const auto& c : cells_) {
        if (c && (!best || c->val_loss < best->val_loss)) {
            best = &*c;
        }
    }
    return best;
}

std::vector<const Ensemble*> Archive::elites() const {
    std::vector<const Ensemble*> out;
    for (const auto& c : cells_) {
        if (c) {
            out.push_back(&*c);
        }
    }
    return out;
}

double quantile_midpoint(const std::vector<double>& sorted, double f) {
    if (sorted.empty()) {
        throw std::invalid_argument("empty values");
    }
    const std::size_t n = sorted.size();
    if (n == 1) {
        return sorted.front();
    }
    const double h = f * static_cast<double>(n - 1);
    const double floor_h = std::floor(h);
    const auto i = static_cast<std::size_t>(floor_h);
    if (i >= n - 1) {
        return sorted[n - 1];
    }
    if (h == floor_h) {
        return sorted[i];
    }
    return 0.5 * (sorted[i] + sorted[i + 1]);
}

SamplingState update_sampling_state(SamplingState state) {
    const double step =
        state.best_tally > state.random_tally ? SamplingState::kStep : -SamplingState::kStep;
    state.mode_probability =
        std::clamp(state.mode_probability + step, SamplingState::kMin, SamplingState::kMax);
    state.best_tally = 0;
    state.random_tally = 0;
    return state;
}

ParentPick select_parents(const Archive& archive, const SamplingState& state,
                          std::mt19937_64& rng) {
    const auto elites = archive.elites();
    if (elites.empty()) {
        throw std::invalid_argument("empty archive");
    }
    const Ensemble* best = archive.best();
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto pick = [&](bool& best_mode) {
        best_mode = unit(rng) < state.mode_probability;
        if (best_mode) {
            return best;
        }
        std::uniform_int_distribution<std::size_t> which(0, elites.size() - 1);
        return elites[which(rng)];
    };
    ParentPick out;
    out.first = pick(out.first_best);
    out.second = pick(out.second_best);
    return out;
}

namespace {

std::vector<std::size_t> union_support(const RepetitionVector& r, const RepetitionVector& r_prime) {
    std::vector<std::size_t> s;
    for (std::size_t j = 0; j < r.counts.size(); ++j) {
        if (r.counts[j] > 0 || r_prime.counts[j] > 0) {
            s.push_back(j);
        }
    }
    return s;
}

RepetitionVector average_crossover(const RepetitionVector& r, const RepetitionVector& r_prime) {
    RepetitionVector child{std::vector<int>(r.counts.size(), 0)};
    for (std::size_t j = 0; j < r.counts.size(); ++j) {
        child.counts[j] = (r.counts[j] + r_prime.counts[j] + 1) / 2; // ceil
    }
    return child;
}

} // namespace

RepetitionVector two_point_crossover(const RepetitionVector& r, const RepetitionVector& r_prime,
                                     int cut_a, int cut_b) {
    if (r.counts.size() != r_prime.counts.size()) {
        throw std::invalid_argument("dimension mismatch");
    }
    const auto s = union_support(r, r_prime);
    const int len = static_cast<int>(s.size());
    if (cut_a < 1 || cut_b <= cut_a || cut_b > len) {
        throw std::invalid_argument("bad crossover cuts");
    }
    RepetitionVector child{std::vector<int>(r.counts.size(), 0)};
    for (int k = 1; k <= len; ++k) {
        const std::size_t j = s[k - 1];
        child.counts[j] = (k <= cut_a || k > cut_b) ? r.counts[j] : r_prime.counts[j];
    }
    if (child.total() == 0) {
        return average_crossover(r, r_prime);
    }
    return child;
}

RepetitionVector crossover(const RepetitionVector& r, const RepetitionVector& r_prime,
                           std::mt19937_64& rng) {
    if (r.counts.size() != r_prime.counts.size()) {
        throw std::invalid_argument("dimension mismatch");
    }
    const auto s = union_support(r, r_prime);
    if (s.size() < 3) {
        return average_crossover(r, r_prime);
    }
    std::uniform_int_distribution<int> cut(1, static_cast<int>(s.size()));
    int a = cut(rng);
    int b = cut(rng);
    while (a == b) {
        a = cut(rng);
        b = cut(rng);
    }
    if (a > b) {
        std::swap(a, b);
    }
    return two_point_crossover(r, r_prime, a, b);
}

MutationResult mutate(const RepetitionVector& child, const SeenSet& seen, std::mt19937_64& rng) {
    const std::size_t p = child.counts.size();
    std::uniform_int_distribution<std::size_t> which(0, p - 1);
    RepetitionVector candidate = child;
    bool brake = false;
    for (int increment = 1; increment <= kMaxIncrement; increment *= 2) {
        if (increment > 1) {
            brake = true;
        }
        for (int attempt = 0; attempt < kMutationAttempts; ++attempt) {
            candidate = child;
            candidate.counts[which(rng)] += increment;
            if (!seen.contains(candidate.counts)) {
                return {std::move(candidate), increment, brake};
            }
        }
    }
    // Entire neighborhood exhausted: hand back the duplicate; the evaluation
    // layer reuses the cached result.
    return {std::move(candidate), kMaxIncrement, true};
}

double weight_entropy(const WeightVector& w) {
    double h = 0.0;
    for (double v : w.weights) {
        if (v > 0.0) {
            h -= v * std::log(v);
        }
    }
    return h;
}

namespace {

std::vector<RepetitionVector> initial_repetitions(std::size_t p, const HapensConfig& cfg,
                                                  std::mt19937_64& rng) {
    const int max_picks = static_cast<int>(std::min<std::size_t>(8, p));
    std::uniform_int_distribution<int> picks(1, max_picks);
    std::uniform_int_distribution<std::size_t> which(0, p - 1);
    std::vector<RepetitionVector> out;
    out.reserve(cfg.initial_population);
    for (int i = 0; i < cfg.initial_population; ++i) {
        RepetitionVector r{std::vector<int>(p, 0)};
        const int s = picks(rng);
        for (int k = 0; k < s; ++k) {
            r.counts[which(rng)] += 1;
        }
        out.push_back(std::move(r));
    }
    return out;
}

using DescriptorFn = std::function<BehaviorDescriptor(const Ensemble&)>;

EnsembleSet run_quality_diversity(const ModelLibrary& lib, const HapensConfig& cfg,
                                  std::mt19937_64& rng, const std::string& method,
                                  const DescriptorFn& describe, RunTrace* trace) {
    if (lib.size() == 0) {
        throw std::invalid_argument("empty ensemble");
    }
    if (cfg.initial_population < 1 || cfg.iterations < 0 || cfg.offspring_per_iteration < 1 ||
        cfg.remap_period < 1 ||
        !(cfg.mutation_after_crossover >= 0.0 && cfg.mutation_after_crossover <= 1.0)) {
        throw std::invalid_argument("bad search configuration");
    }

    Archive archive(cfg.grid);
    SamplingState state;
    SeenSet seen;
    std::unordered_map<std::vector<int>, Ensemble, CountsHash> evaluated;
    std::size_t duplicate_emissions = 0;

    EnsembleSet set{method, cfg.seed, {}};

    // Scores a repetition vector once; duplicates reuse the cached ensemble.
    auto evaluate = [&](const RepetitionVector& r, int iteration) -> Ensemble {
        if (auto it = evaluated.find(r.counts); it != evaluated.end()) {
            ++duplicate_emissions;
            Ensemble copy = it->second;
            copy.provenance.iteration = iteration;
            return copy;
        }
        Ensemble e = evaluate_ensemble(lib, r, method, iteration);
        e.behavior = describe(e);
        evaluated.emplace(r.counts, e);
        seen.insert(r.counts);
        return e;
    };

    std::vector<BehaviorDescriptor> init_descriptors;
    for (const auto& r : initial_repetitions(lib.size(), cfg, rng)) {
        Ensemble e = evaluate(r, 0);
        init_descriptors.push_back(*e.behavior);
        set.ensembles.push_back(std::move(e));
    }
    archive.seed_boundaries(init_descriptors);
    for (const auto& e : set.ensembles) {
        archive.insert(e);
    }

    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int iteration = 1; iteration <= cfg.iterations; ++iteration) {
        double p_mutate = cfg.mutation_after_crossover;
        for (int o = 0; o < cfg.offspring_per_iteration; ++o) {
            const ParentPick parents = select_parents(archive, state, rng);
            RepetitionVector child =
                crossover(parents.first->repetition, parents.second->repetition, rng);
            const bool already_seen = seen.contains(child.counts);
            bool do_mutate = already_seen;
            if (!already_seen) {
                do_mutate = unit(rng) < p_mutate;
            }
            if (do_mutate) {
                MutationResult m = mutate(child, seen, rng);
                child = std::move(m.vec);
                if (m.brake) {
                    p_mutate = 1.0;
                }
            }
            Ensemble e = evaluate(child, iteration);
            const bool accepted = archive.insert(e);
            if (accepted) {
                (parents.first_best ? state.best_tally : state.random_tally) += 1;
                (parents.second_best ? state.best_tally : state.random_tally) += 1;
            }
            set.ensembles.push_back(std::move(e));
        }
        if (iteration % cfg.remap_period == 0) {
            archive.remap();
        }
        if (iteration % 10 == 0) {
            state = update_sampling_state(state);
        }
    }

    if (trace) {
        trace->archive = archive;
        trace->unique_evaluations = evaluated.size();
        trace->duplicate_emissions = duplicate_emissions;
    }
    return set;
}

} // namespace

std::vector<Ensemble> init_population(const ModelLibrary& lib, const HapensConfig& cfg,
                                      std::mt19937_64& rng) {
    if (lib.size() == 0 || cfg.initial_population < 1) {
        throw std::invalid_argument("bad search configuration");
    }
    const AlcCache alc(lib);
    std::unordered_map<std::vector<int>, std::size_t, CountsHash> first;
    std::vector<Ensemble> out;
    for (const auto& r : initial_repetitions(lib.size(), cfg, rng)) {
        if (auto it = first.find(r.counts); it != first.end()) {
            out.push_back(out[it->second]);
            continue;
        }
        Ensemble e = evaluate_ensemble(lib, r, "hapens", 0);
        e.behavior = BehaviorDescriptor{alc.alc(e.repetition), cost_value(e.costs, cfg.cost_metric)};
        first.emplace(e.repetition.counts, out.size());
        out.push_back(std::move(e));
    }
    return out;
}

EnsembleSet hapens_run(const ModelLibrary& lib, const HapensConfig& cfg, std::mt19937_64& rng,
                       RunTrace* trace) {
    const AlcCache alc(lib);
    return run_quality_diversity(
        lib, cfg, rng, "hapens",
        [&alc, &cfg](const Ensemble& e) {
            return BehaviorDescriptor{alc.alc(e.repetition), cost_value(e.costs, cfg.cost_metric)};
        },
        trace);
}

EnsembleSet qdo_es_run(const ModelLibrary& lib, const HapensConfig& cfg, std::mt19937_64& rng,
                       RunTrace* trace) {
    const AlcCache alc(lib);
    return run_quality_diversity(
        lib, cfg, rng, "qdo-es",
        [&alc](const Ensemble& e) {
            return BehaviorDescriptor{alc.alc(e.repetition), weight_entropy(e.weights)};
        },
        trace);
}

} // namespace hapens

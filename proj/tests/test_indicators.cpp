#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>
#include <vector>

#include "hapens/indicators.hpp"
#include "hapens/qdo.hpp"
#include "hapens/selectors.hpp"
#include "test_helpers.hpp"

using namespace hapens;

TEST_CASE("pareto front keeps exactly the non-dominated points") {
    const std::vector<ObjectivePoint> pts{
        {0.5, 0.5}, {0.2, 0.8}, {0.8, 0.2}, {0.6, 0.6}, {0.5, 0.5}, // duplicate
        {0.2, 0.9},                                                 // dominated by (0.2, 0.8)
    };
    const auto front = pareto_front(pts);
    REQUIRE(front.size() == 3);
    CHECK(front[0] == ObjectivePoint{0.2, 0.8});
    CHECK(front[1] == ObjectivePoint{0.5, 0.5});
    CHECK(front[2] == ObjectivePoint{0.8, 0.2});

    // Weak dominance: equal on one coordinate, better on the other.
    const auto weak = pareto_front({{0.3, 0.3}, {0.3, 0.2}});
    REQUIRE(weak.size() == 1);
    CHECK(weak[0] == ObjectivePoint{0.3, 0.2});
}

TEST_CASE("pareto front matches the all-pairs oracle on random sets") {
    std::mt19937_64 rng(51);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> quant(0, 6);
    for (int trial = 0; trial < 300; ++trial) {
        std::vector<ObjectivePoint> pts(3 + trial % 25);
        for (auto& p : pts) {
            // Quantized half the time so duplicates and ties occur.
            if (trial % 2 == 0) {
                p = {unit(rng), unit(rng)};
            } else {
                p = {quant(rng) / 6.0, quant(rng) / 6.0};
            }
        }
        const auto got = pareto_front(pts);
        const auto expected = oracle::pareto_all_pairs(pts);
        CHECK(got == expected);
        CHECK(std::is_sorted(got.begin(), got.end(), [](const auto& a, const auto& b) {
            return a.perf_loss < b.perf_loss;
        }));
    }
}

TEST_CASE("hypervolume fixtures decompose into rectangles") {
    const ObjectivePoint ref{1.0, 1.0};
    CHECK(hypervolume_2d({{0.5, 0.5}}, ref) == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(hypervolume_2d({{0.2, 0.6}, {0.6, 0.2}}, ref) == doctest::Approx(0.48).epsilon(1e-15));
    CHECK(hypervolume_2d({{0.1, 0.9}, {0.3, 0.5}, {0.5, 0.3}, {0.9, 0.1}}, ref) ==
          doctest::Approx(0.49).epsilon(1e-15));
    // Points at or beyond the reference contribute nothing; dominated points
    // are absorbed.
    CHECK(hypervolume_2d({{0.4, 0.4}, {0.5, 0.5}, {1.0, 0.3}, {0.2, 1.2}}, ref) ==
          doctest::Approx(0.36).epsilon(1e-15));
    CHECK(hypervolume_2d({{0.25, 0.75}, {0.25, 0.75}, {0.75, 0.25}, {0.25, 0.8}}, ref) ==
          doctest::Approx(0.3125).epsilon(1e-15));

    CHECK(hypervolume_2d({}, ref) == 0.0);
    CHECK(hypervolume_2d({{1.0, 1.0}}, ref) == 0.0);
    CHECK(hypervolume_2d({{0.0, 0.0}}, ref) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("hypervolume agrees with a monte carlo estimate") {
    std::mt19937_64 rng(53);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const ObjectivePoint ref{1.0, 1.0};
    for (int trial = 0; trial < 5; ++trial) {
        std::vector<ObjectivePoint> pts(20);
        for (auto& p : pts) {
            p = {unit(rng), unit(rng)};
        }
        const double exact = hypervolume_2d(pts, ref);
        const double estimate = oracle::hv_monte_carlo(pts, ref, 1000000, 1000 + trial);
        CHECK(std::abs(exact - estimate) < 2e-3);
    }
}

TEST_CASE("hypervolume honours non-unit reference points") {
    const ObjectivePoint ref{2.0, 3.0};
    CHECK(hypervolume_2d({{1.0, 1.0}}, ref) == doctest::Approx(2.0).epsilon(1e-15));
    const double mc = oracle::hv_monte_carlo({{1.0, 1.0}, {0.5, 2.0}}, ref, 500000, 99);
    CHECK(std::abs(hypervolume_2d({{1.0, 1.0}, {0.5, 2.0}}, ref) - mc) < 5e-3);
}

TEST_CASE("igd-plus clamps superior dimensions") {
    const std::vector<ObjectivePoint> ref{{0.5, 0.5}};
    // Solution better on perf, worse on cost: only the cost gap counts.
    CHECK(igd_plus({{0.2, 0.6}}, ref) == doctest::Approx(0.1).epsilon(1e-12));
    // Dominating solution point scores zero.
    CHECK(igd_plus({{0.2, 0.2}}, ref) == 0.0);

    // Mean over reference points: (0.5, 0.5) sits 0.5 from each extreme.
    const std::vector<ObjectivePoint> two_ref{{0.0, 1.0}, {1.0, 0.0}};
    CHECK(igd_plus({{0.5, 0.5}}, two_ref) == doctest::Approx(0.5).epsilon(1e-12));

    // A front measured against itself is perfect.
    const std::vector<ObjectivePoint> front{{0.1, 0.9}, {0.5, 0.5}, {0.9, 0.1}};
    CHECK(igd_plus(front, front) == 0.0);

    CHECK_THROWS_WITH_AS(igd_plus({}, ref), "empty front", std::invalid_argument);
    CHECK_THROWS_WITH_AS(igd_plus(front, {}), "empty front", std::invalid_argument);
}

TEST_CASE("objective space normalizes losses and costs over the union") {
    const auto lib = oracle::random_library(2000, 5, 40, 20, 2);
    const auto star = ges_star(lib, 8);
    const auto best = single_best(lib);

    const auto spaces = build_objective_space({&star, &best}, CostMode::Time);
    REQUIRE(spaces.size() == 2);
    REQUIRE(spaces[0].size() == star.ensembles.size());
    REQUIRE(spaces[1].size() == 1);

    double lo_loss = 1e300;
    double hi_loss = -1e300;
    double lo_cost = 1e300;
    double hi_cost = -1e300;
    for (const auto* set : {&star, &best}) {
        for (const auto& e : set->ensembles) {
            lo_loss = std::min(lo_loss, e.test_loss);
            hi_loss = std::max(hi_loss, e.test_loss);
            lo_cost = std::min(lo_cost, e.costs.inference_time_s);
            hi_cost = std::max(hi_cost, e.costs.inference_time_s);
        }
    }
    for (std::size_t s = 0; s < 2; ++s) {
        const auto& set = s == 0 ? star : best;
        for (std::size_t i = 0; i < spaces[s].size(); ++i) {
            const auto& e = set.ensembles[i];
            const double want_perf = hi_loss == lo_loss
                                         ? 0.0
                                         : (e.test_loss - lo_loss) / (hi_loss - lo_loss);
            const double want_cost =
                hi_cost == lo_cost
                    ? 0.0
                    : (e.costs.inference_time_s - lo_cost) / (hi_cost - lo_cost);
            CHECK(spaces[s][i].perf_loss == doctest::Approx(want_perf).epsilon(1e-12));
            CHECK(spaces[s][i].cost == doctest::Approx(want_cost).epsilon(1e-12));
        }
    }
}

TEST_CASE("aggregate cost mode averages the three normalized metrics") {
    const auto lib = oracle::random_library(2100, 4, 30, 15, 2);
    const auto star = ges_star(lib, 5);
    const auto spaces = build_objective_space({&star}, CostMode::Aggregate);

    std::vector<EnsembleCosts> rows;
    for (const auto& e : star.ensembles) {
        rows.push_back(e.costs);
    }
    const auto expected = hardware_aggregate(rows);
    for (std::size_t i = 0; i < star.ensembles.size(); ++i) {
        CHECK(spaces[0][i].cost == doctest::Approx(expected[i]).epsilon(1e-12));
        CHECK(spaces[0][i].cost >= 0.0);
        CHECK(spaces[0][i].cost <= 1.0);
    }
}

TEST_CASE("objective space rejects mismatched or empty inputs") {
    const auto lib4 = oracle::random_library(2200, 4, 20, 10, 2);
    const auto lib5 = oracle::random_library(2201, 5, 20, 10, 2);
    const auto a = single_best(lib4);
    const auto b = single_best(lib5);
    CHECK_THROWS_WITH_AS(build_objective_space({&a, &b}, CostMode::Time), "incomparable sets",
                         std::invalid_argument);
    CHECK_THROWS_WITH_AS(build_objective_space({}, CostMode::Time), "incomparable sets",
                         std::invalid_argument);
    EnsembleSet empty;
    CHECK_THROWS_WITH_AS(build_objective_space({&empty}, CostMode::Time), "incomparable sets",
                         std::invalid_argument);
}

TEST_CASE("single ensemble normalizes to the origin and unit hypervolume") {
    const auto lib = oracle::random_library(2300, 3, 20, 10, 2);
    const auto best = single_best(lib);
    const auto spaces = build_objective_space({&best}, CostMode::Aggregate);
    CHECK(spaces[0][0] == ObjectivePoint{0.0, 0.0});
    const auto evals = evaluate_sets({&best}, CostMode::Aggregate);
    CHECK(evals[0].hv == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(evals[0].igd_plus == 0.0);
    CHECK(evals[0].n_ensembles == 1);
    CHECK(evals[0].n_pareto == 1);
}

TEST_CASE("reference front is the pareto front of the union") {
    std::mt19937_64 rng(57);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<std::vector<ObjectivePoint>> groups(3);
    std::vector<ObjectivePoint> all;
    for (auto& g : groups) {
        g.resize(10);
        for (auto& p : g) {
            p = {unit(rng), unit(rng)};
            all.push_back(p);
        }
    }
    CHECK(reference_front(groups) == oracle::pareto_all_pairs(all));
}

TEST_CASE("exhaustive oracle enumerates stars-and-bars ensembles") {
    const auto lib2 = oracle::random_library(2400, 2, 16, 8, 2);
    const auto tiny = brute_force_front(lib2, 2);
    CHECK(tiny.ensembles.size() == 5); // (1,0),(0,1),(2,0),(1,1),(0,2)
    std::set<std::vector<int>> vectors;
    for (const auto& e : tiny.ensembles) {
        vectors.insert(e.repetition.counts);
        CHECK(e.repetition.total() >= 1);
        CHECK(e.repetition.total() <= 2);
    }
    CHECK(vectors.size() == 5);

    const auto lib4 = oracle::random_library(2401, 4, 16, 8, 2);
    const auto four = brute_force_front(lib4, 4);
    // sum_{T=1..4} C(T+3,3) = 4 + 10 + 20 + 35
    CHECK(four.ensembles.size() == 69);

    const auto lib7 = oracle::random_library(2402, 7, 16, 8, 2);
    CHECK_THROWS_WITH_AS(brute_force_front(lib7, 2), "instance too large for oracle",
                         std::invalid_argument);
    CHECK_THROWS_WITH_AS(brute_force_front(lib4, 5), "instance too large for oracle",
                         std::invalid_argument);
    CHECK_THROWS_WITH_AS(brute_force_front(lib4, 0), "instance too large for oracle",
                         std::invalid_argument);
}

TEST_CASE("no method beats the exhaustive front at equal budget") {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const auto lib = oracle::random_library(2500 + seed, 4, 24, 12, 2);
        const auto oracle_set = brute_force_front(lib, 4);
        const auto star = ges_star(lib, 12);

        EnsembleSet restricted;
        restricted.method = star.method;
        for (const auto& e : star.ensembles) {
            if (e.repetition.total() <= 4) {
                restricted.ensembles.push_back(e);
            }
        }
        REQUIRE_FALSE(restricted.ensembles.empty());

        const auto evals = evaluate_sets({&oracle_set, &restricted}, CostMode::Time);
        CHECK(evals[1].hv <= evals[0].hv + 1e-12);

        // Every restricted point is weakly dominated by an oracle point in
        // raw coordinates.
        for (const auto& e : restricted.ensembles) {
            bool covered = false;
            for (const auto& o : oracle_set.ensembles) {
                if (o.test_loss <= e.test_loss &&
                    o.costs.inference_time_s <= e.costs.inference_time_s) {
                    covered = true;
                    break;
                }
            }
            CHECK(covered);
        }
    }
}

TEST_CASE("evaluate_sets is invariant to set order") {
    const auto lib = oracle::random_library(2600, 5, 30, 15, 2);
    const auto a = ges_star(lib, 6);
    const auto b = single_best(lib);
    HapensConfig cfg;
    cfg.initial_population = 6;
    cfg.iterations = 5;
    cfg.offspring_per_iteration = 4;
    std::mt19937_64 rng(3);
    const auto c = hapens_run(lib, cfg, rng);

    const auto fwd = evaluate_sets({&a, &b, &c}, CostMode::Aggregate);
    const auto rev = evaluate_sets({&c, &b, &a}, CostMode::Aggregate);
    CHECK(fwd[0].hv == rev[2].hv);
    CHECK(fwd[1].hv == rev[1].hv);
    CHECK(fwd[2].hv == rev[0].hv);
    CHECK(fwd[0].igd_plus == rev[2].igd_plus);
    CHECK(fwd[2].igd_plus == rev[0].igd_plus);
}

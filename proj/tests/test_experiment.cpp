#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "hapens/ensemble.hpp"
#include "hapens/errors.hpp"
#include "hapens/experiment.hpp"
#include "hapens/indicators.hpp"
#include "hapens/selectors.hpp"
#include "test_helpers.hpp"

using namespace hapens;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& tag) {
    const fs::path dir = fs::temp_directory_path() / ("hapens_exp_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

json strip_wall_time(json j) {
    j.erase("wall_time_s");
    return j;
}

json read_json(const fs::path& file) {
    std::ifstream in(file);
    REQUIRE(in.good());
    json j;
    in >> j;
    return j;
}

ExperimentConfig small_config(const fs::path& out, std::uint64_t lib_seed = 1) {
    ExperimentConfig cfg;
    SyntheticConfig syn;
    syn.p = 6;
    syn.n_val = 60;
    syn.n_test = 30;
    syn.seed = lib_seed;
    cfg.library.synthetic = syn;
    cfg.methods = {
        parse_method_spec({{"name", "single-best"}}),
        parse_method_spec({{"name", "ges-star"}, {"iterations", 8}}),
        parse_method_spec({{"name", "hapens"},
                           {"iterations", 6},
                           {"offspring", 5},
                           {"init_pop", 6}}),
    };
    cfg.seeds = {1, 2};
    cfg.out_dir = out;
    return cfg;
}

// CLI path exported by the test harness; subprocess cases skip when absent.
const char* cli_path() { return std::getenv("HAPENS_CLI"); }

int run_cli(const std::string& args) {
    const std::string cmd = std::string(cli_path()) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

} // namespace

TEST_CASE("per-method stream seeds are stable and independent") {
    const auto a = method_seed(1, "hapens");
    CHECK(a == method_seed(1, "hapens"));
    CHECK(a != method_seed(2, "hapens"));
    CHECK(a != method_seed(1, "qdo-es"));
    CHECK(method_seed(0, "x") != method_seed(0, "y"));
}

TEST_CASE("cost metric and mode names round-trip") {
    for (const std::string s : {"time", "memory", "disk", "size"}) {
        CHECK(to_string(parse_cost_metric(s)) == s);
    }
    for (const std::string s : {"time", "memory", "disk", "size", "aggregate"}) {
        CHECK(to_string(parse_cost_mode(s)) == s);
    }
    CHECK_THROWS_AS(parse_cost_metric("watts"), ConfigError);
    CHECK_THROWS_AS(parse_cost_mode("watts"), ConfigError);
    try {
        parse_cost_mode("watts");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("aggregate") != std::string::npos);
    }
}

TEST_CASE("method specs parse with defaults and validation") {
    const auto spec = parse_method_spec({{"name", "multi-ges"}});
    CHECK(spec.label == "multi-ges");
    CHECK(spec.iterations == 50);
    CHECK(spec.beta == 0.68);

    const auto custom = parse_method_spec(
        {{"name", "hapens"}, {"label", "hapens-time"}, {"cost_metric", "time"}, {"grid", 5}});
    CHECK(custom.label == "hapens-time");
    CHECK(custom.cost_metric == CostMetric::Time);
    CHECK(custom.grid == 5);

    CHECK_THROWS_AS(parse_method_spec({{"name", "bogus"}}), ConfigError);
    try {
        parse_method_spec({{"name", "bogus"}});
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("valid methods") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_method_spec({{"name", "multi-ges"}, {"beta", 2.0}}), ConfigError);
    CHECK_THROWS_AS(parse_method_spec({{"name", "ges"}, {"iterations", 0}}), ConfigError);
}

TEST_CASE("experiment config wants exactly one library source") {
    json base{
        {"methods", json::array({{{"name", "ges"}}})},
        {"seeds", {1}},
        {"out_dir", "out"},
    };

    auto both = base;
    both["library"] = "dir";
    both["synthetic"] = {{"p", 4}};
    CHECK_THROWS_AS(parse_experiment_config(both), ConfigError);

    auto neither = base;
    CHECK_THROWS_AS(parse_experiment_config(neither), ConfigError);

    auto ok = base;
    ok["library"] = "dir";
    const auto cfg = parse_experiment_config(ok);
    CHECK(cfg.library.path == "dir");
    CHECK(cfg.cost_mode == CostMode::Aggregate);

    auto dup = ok;
    dup["methods"] = json::array({{{"name", "ges"}}, {{"name", "ges"}}});
    CHECK_THROWS_AS(parse_experiment_config(dup), ConfigError);

    auto empty_seeds = ok;
    empty_seeds["seeds"] = json::array();
    CHECK_THROWS_AS(parse_experiment_config(empty_seeds), ConfigError);
}

TEST_CASE("run records serialize losslessly") {
    const auto lib = oracle::random_library(3000, 5, 40, 20, 3);
    RunRecord record;
    record.library_id = "synthetic:test";
    record.algorithm = "hapens";
    record.params = method_params_json(parse_method_spec({{"name", "hapens"}}));
    record.wall_time_s = 1.25;
    record.set = run_method(lib, parse_method_spec({{"name", "hapens"},
                                                    {"iterations", 5},
                                                    {"offspring", 4},
                                                    {"init_pop", 5}}),
                            7);

    const json j = record_to_json(record);
    const RunRecord back = record_from_json(j);
    CHECK(back.library_id == record.library_id);
    CHECK(back.wall_time_s == record.wall_time_s);
    CHECK(back.set == record.set);
    CHECK(record_to_json(back) == j);

    // Cached metrics must match a fresh evaluation against the library.
    for (const auto& e : back.set.ensembles) {
        const auto fresh = evaluate_ensemble(lib, e.repetition, "x", 0);
        CHECK(std::abs(fresh.val_loss - e.val_loss) < 1e-12);
        CHECK(std::abs(fresh.test_loss - e.test_loss) < 1e-12);
        CHECK(std::abs(fresh.costs.inference_time_s - e.costs.inference_time_s) < 1e-12);
    }

    json bad = j;
    bad.erase("ensembles");
    CHECK_THROWS_AS(record_from_json(bad), DataError);
}

TEST_CASE("cmd_run writes one deterministic record per method and seed") {
    const fs::path out = fresh_dir("run");
    const auto cfg = small_config(out);
    const auto files = cmd_run(cfg);
    CHECK(files.size() == 6); // 3 methods x 2 seeds

    std::set<std::string> names;
    for (const auto& f : files) {
        CHECK(fs::exists(f));
        names.insert(f.filename().string());
    }
    CHECK(names.count("single-best__seed1.json") == 1);
    CHECK(names.count("ges-star__seed2.json") == 1);
    CHECK(names.count("hapens__seed1.json") == 1);

    // Reruns reproduce every payload byte except the timing field.
    const json before = strip_wall_time(read_json(out / "hapens__seed2.json"));
    const fs::path out2 = fresh_dir("run_again");
    auto cfg2 = cfg;
    cfg2.out_dir = out2;
    cmd_run(cfg2);
    const json after = strip_wall_time(read_json(out2 / "hapens__seed2.json"));
    CHECK(before == after);

    // Records advertise the shared library identity and method params.
    const json rec = read_json(out / "single-best__seed1.json");
    CHECK(rec.at("algorithm") == "single-best");
    CHECK(rec.at("seed") == 1);
    CHECK(rec.at("library").get<std::string>().find("synthetic:") == 0);
    CHECK(rec.at("params").at("name") == "single-best");

    fs::remove_all(out);
    fs::remove_all(out2);
}

TEST_CASE("evaluation aggregates per-seed fronts and ranks") {
    const fs::path out = fresh_dir("eval");
    const auto cfg = small_config(out);
    cmd_run(cfg);

    const auto files = list_record_files(out);
    REQUIRE(files.size() == 6);
    const json eval = cmd_evaluate(files, CostMode::Aggregate);

    CHECK(eval.at("cost_mode") == "aggregate");
    CHECK(eval.at("seeds") == json::array({1, 2}));
    REQUIRE(eval.at("summary").size() == 3);
    for (const auto& label : {"single-best", "ges-star", "hapens"}) {
        REQUIRE(eval.at("summary").contains(label));
        const auto& s = eval.at("summary").at(label);
        CHECK(s.at("mean_hv").get<double>() >= 0.0);
        CHECK(s.at("mean_hv").get<double>() <= 1.0);
        CHECK(s.at("mean_igd_plus").get<double>() >= 0.0);
        CHECK(s.at("mean_rank_hv").get<double>() >= 1.0);
        CHECK(s.at("mean_rank_hv").get<double>() <= 3.0);
    }
    // Ranks average to (1 + 2 + 3) / 3 across methods.
    double rank_sum = 0.0;
    for (const auto& [label, s] : eval.at("summary").items()) {
        rank_sum += s.at("mean_rank_hv").get<double>();
    }
    CHECK(rank_sum == doctest::Approx(6.0).epsilon(1e-12));

    // Per-seed blocks carry fronts. A method whose front equals the
    // cross-method reference front must score IGD+ 0; others score > 0.
    for (const auto& seed : {"1", "2"}) {
        REQUIRE(eval.at("per_seed").contains(seed));
        std::vector<ObjectivePoint> all;
        for (const auto& [label, block] : eval.at("per_seed").at(seed).items()) {
            REQUIRE(block.at("front").is_array());
            for (const auto& pt : block.at("front")) {
                all.push_back({pt[0].get<double>(), pt[1].get<double>()});
            }
        }
        const auto reference = pareto_front(all);
        for (const auto& [label, block] : eval.at("per_seed").at(seed).items()) {
            std::vector<ObjectivePoint> own;
            for (const auto& pt : block.at("front")) {
                own.push_back({pt[0].get<double>(), pt[1].get<double>()});
            }
            const double igd = block.at("igd_plus").get<double>();
            CHECK(igd >= 0.0);
            if (own == reference) {
                CHECK(igd == 0.0);
            }
        }
    }

    // With a single method the reference front is its own front exactly.
    std::vector<fs::path> solo;
    for (const auto& f : files) {
        if (f.filename().string().find("ges-star") == 0) {
            solo.push_back(f);
        }
    }
    const json solo_eval = cmd_evaluate(solo, CostMode::Aggregate);
    for (const auto& seed : {"1", "2"}) {
        CHECK(solo_eval.at("per_seed").at(seed).at("ges-star").at("igd_plus") == 0.0);
    }

    // Evaluation is independent of record file order.
    auto shuffled = files;
    std::reverse(shuffled.begin(), shuffled.end());
    CHECK(cmd_evaluate(shuffled, CostMode::Aggregate) == eval);

    fs::remove_all(out);
}

TEST_CASE("evaluation rejects inconsistent record collections") {
    const fs::path out_a = fresh_dir("mixed_a");
    const fs::path out_b = fresh_dir("mixed_b");
    cmd_run(small_config(out_a, 1));
    cmd_run(small_config(out_b, 2)); // different synthetic seed -> other library

    CHECK_THROWS_AS(cmd_evaluate({}, CostMode::Time), EvalError);

    auto mixed = list_record_files(out_a);
    const auto extra = list_record_files(out_b);
    mixed.push_back(extra.front());
    CHECK_THROWS_AS(cmd_evaluate(mixed, CostMode::Time), EvalError);
    try {
        cmd_evaluate(mixed, CostMode::Time);
    } catch (const EvalError& e) {
        CHECK(std::string(e.what()).find("mixed libraries") != std::string::npos);
    }

    // A record present twice is a duplicate (method, seed) pair.
    auto dup = list_record_files(out_a);
    dup.push_back(dup.front());
    CHECK_THROWS_AS(cmd_evaluate(dup, CostMode::Time), EvalError);

    // Dropping one seed's record for one method leaves a hole.
    auto holey = list_record_files(out_a);
    holey.erase(std::remove_if(holey.begin(), holey.end(),
                               [](const fs::path& f) {
                                   return f.filename() == "hapens__seed2.json";
                               }),
                holey.end());
    CHECK_THROWS_AS(cmd_evaluate(holey, CostMode::Time), EvalError);

    fs::remove_all(out_a);
    fs::remove_all(out_b);
}

TEST_CASE("pareto table counts totals, uniques and front sizes") {
    const fs::path out = fresh_dir("pareto");
    const auto cfg = small_config(out);
    cmd_run(cfg);

    const std::string csv = cmd_pareto(list_record_files(out), CostMode::Aggregate);
    std::vector<std::string> lines;
    std::size_t pos = 0;
    while (pos < csv.size()) {
        const auto nl = csv.find('\n', pos);
        lines.push_back(csv.substr(pos, nl - pos));
        pos = nl == std::string::npos ? csv.size() : nl + 1;
    }
    REQUIRE(lines.size() == 7); // header + 3 methods x 2 seeds
    CHECK(lines[0] == "method,seed,total,unique,pareto");

    // single-best emits exactly one ensemble; greedy snapshots are all
    // distinct because the pick total grows every step.
    for (const auto& line : lines) {
        if (line.find("single-best") == 0) {
            CHECK(line.substr(line.find(',', 12)) == ",1,1,1");
        }
        if (line.find("ges-star") == 0) {
            CHECK(line.find(",8,8,") != std::string::npos);
        }
    }

    // The hapens rows agree with an independent recount of the records.
    for (std::uint64_t seed : {1, 2}) {
        const auto rec = load_record(out / ("hapens__seed" + std::to_string(seed) + ".json"));
        std::set<std::vector<int>> distinct;
        for (const auto& e : rec.set.ensembles) {
            distinct.insert(e.repetition.counts);
        }
        const std::string want = "hapens," + std::to_string(seed) + "," +
                                 std::to_string(rec.set.ensembles.size()) + "," +
                                 std::to_string(distinct.size()) + ",";
        bool found = false;
        for (const auto& line : lines) {
            if (line.find(want) == 0) {
                found = true;
            }
        }
        CHECK(found);
    }

    fs::remove_all(out);
}

TEST_CASE("beta sweep reports one block per unique pressure") {
    LibrarySource source;
    SyntheticConfig syn;
    syn.p = 5;
    syn.n_val = 40;
    syn.n_test = 20;
    syn.seed = 4;
    source.synthetic = syn;

    const json sweep = cmd_sweep_beta(source, {0.0, 0.5, 0.5, 1.0}, 6, {1, 2}, CostMode::Time);
    CHECK(sweep.at("betas") == json::array({0.0, 0.5, 1.0}));
    REQUIRE(sweep.at("warnings").size() == 1);
    CHECK(sweep.at("warnings")[0].get<std::string>().find("duplicate beta") == 0);
    REQUIRE(sweep.at("per_beta").size() == 3);
    for (const auto& [key, block] : sweep.at("per_beta").items()) {
        CHECK(block.at("mean_hv").get<double>() >= 0.0);
        CHECK(block.at("mean_final_inference_time_s").get<double>() > 0.0);
        CHECK(block.at("hv_per_seed").size() == 2);
    }

    CHECK_THROWS_AS(cmd_sweep_beta(source, {1.5}, 5, {1}, CostMode::Time), ConfigError);
    CHECK_THROWS_AS(cmd_sweep_beta(source, {}, 5, {1}, CostMode::Time), ConfigError);

    // Zero pressure walks the plain greedy trajectory, so its hypervolume
    // matches a directly evaluated greedy run.
    const ModelLibrary lib = generate_synthetic(syn);
    const auto star = ges_star(lib, 6);
    const auto direct = evaluate_sets({&star}, CostMode::Time);
    const json zero = cmd_sweep_beta(source, {0.0}, 6, {1}, CostMode::Time);
    CHECK(zero.at("per_beta").at("0").at("mean_hv").get<double>() ==
          doctest::Approx(direct[0].hv).epsilon(1e-12));
}

TEST_CASE("cli subcommands cover the full pipeline") {
    REQUIRE(cli_path() != nullptr);
    const fs::path dir = fresh_dir("cli");
    const std::string lib = (dir / "lib").string();
    const std::string rec = (dir / "rec").string();

    CHECK(run_cli("generate --models 5 --val-samples 40 --test-samples 20 --seed 3 --out " +
                  lib) == 0);
    CHECK(fs::exists(dir / "lib" / "library.json"));

    CHECK(run_cli("run --library " + lib +
                  " --method ges-star --iterations 6 --seeds 1,2 --out " + rec) == 0);
    CHECK(run_cli("run --library " + lib +
                  " --method hapens --iterations 5 --offspring 4 --init-pop 5 --seeds 1,2 "
                  "--out " +
                  rec) == 0);
    CHECK(fs::exists(dir / "rec" / "ges-star__seed1.json"));
    CHECK(fs::exists(dir / "rec" / "hapens__seed2.json"));

    CHECK(run_cli("evaluate --records " + rec) == 0);
    CHECK(fs::exists(dir / "rec" / "evaluation.json"));

    CHECK(run_cli("pareto --records " + rec + " --cost-mode time") == 0);
    CHECK(fs::exists(dir / "rec" / "pareto.csv"));

    const std::string sweep = (dir / "sweep.json").string();
    CHECK(run_cli("sweep-beta --library " + lib +
                  " --betas 0,1 --iterations 4 --seeds 1 --out " + sweep) == 0);
    CHECK(fs::exists(sweep));

    fs::remove_all(dir);
}

TEST_CASE("cli maps failures to documented exit codes") {
    REQUIRE(cli_path() != nullptr);
    const fs::path dir = fresh_dir("cli_err");

    CHECK(run_cli("") == 2);                      // missing subcommand
    CHECK(run_cli("generate --models 5") == 2);   // missing --out
    CHECK(run_cli("generate --models 1 --out " + (dir / "x").string()) == 2);
    CHECK(run_cli("run --library /does/not/exist --method ges --out " +
                  (dir / "r").string()) == 3);
    CHECK(run_cli("run --library " + (dir / "x").string() + " --method bogus --out " +
                  (dir / "r").string()) == 2);
    fs::create_directories(dir / "empty");
    CHECK(run_cli("evaluate --records " + (dir / "empty").string()) == 4);
    CHECK(run_cli("evaluate --records " + (dir / "missing_dir").string()) == 3);

    fs::remove_all(dir);
}

TEST_CASE("cli run honours experiment config files") {
    REQUIRE(cli_path() != nullptr);
    const fs::path dir = fresh_dir("cli_cfg");
    const json cfg{
        {"synthetic", {{"p", 5}, {"n_val", 40}, {"n_test", 20}, {"seed", 9}}},
        {"methods",
         json::array({{{"name", "single-best"}},
                      {{"name", "multi-ges"}, {"iterations", 6}, {"beta", 0.5}}})},
        {"seeds", {1, 2, 3}},
        {"cost_mode", "time"},
        {"out_dir", (dir / "rec").string()},
    };
    std::ofstream(dir / "config.json") << cfg.dump(2);

    CHECK(run_cli("run --config " + (dir / "config.json").string()) == 0);
    const auto files = list_record_files(dir / "rec");
    CHECK(files.size() == 6); // 2 methods x 3 seeds

    const auto rec = load_record(dir / "rec" / "multi-ges__seed2.json");
    CHECK(rec.algorithm == "multi-ges");
    CHECK(rec.params.at("beta") == 0.5);
    CHECK(rec.set.ensembles.size() == 6);

    fs::remove_all(dir);
}

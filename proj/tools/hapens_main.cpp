#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hapens/errors.hpp"
#include "hapens/experiment.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json read_json_file(const fs::path& file) {
    std::ifstream in(file);
    if (!in) {
        throw hapens::ConfigError("cannot read config file '" + file.string() + "'");
    }
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw hapens::ConfigError("malformed config file '" + file.string() + "': " + e.what());
    }
    return j;
}

struct GenerateArgs {
    hapens::SyntheticConfig cfg;
    std::string out;
};

struct RunArgs {
    std::string config_file;
    std::string library;
    std::string method;
    std::string label;
    int iterations = 50;
    double beta = 0.68;
    std::string cost_metric = "memory";
    int offspring = 20;
    int init_pop = 20;
    double pmac = 0.5;
    int remap_period = 10;
    std::vector<std::uint64_t> seeds;
    std::string cost_mode;
    std::string out;
};

struct RecordsArgs {
    std::string records;
    std::string cost_mode = "aggregate";
    std::string out;
};

struct SweepArgs {
    std::string config_file;
    std::string library;
    std::vector<double> betas;
    int iterations = 50;
    std::vector<std::uint64_t> seeds;
    std::string cost_mode = "aggregate";
    std::string out = "sweep.json";
};

int dispatch_generate(const GenerateArgs& args) {
    const hapens::ModelLibrary lib = hapens::generate_synthetic(args.cfg);
    hapens::write_library(lib, args.out);
    std::cout << "wrote library with " << lib.size() << " models to " << args.out << "\n";
    return 0;
}

int dispatch_run(const RunArgs& args, bool has_method) {
    hapens::ExperimentConfig cfg;
    if (!args.config_file.empty()) {
        cfg = hapens::parse_experiment_config(read_json_file(args.config_file));
    } else {
        if (args.library.empty()) {
            throw hapens::ConfigError("run needs --config or --library");
        }
        if (!has_method) {
            throw hapens::ConfigError("run needs --config or --method");
        }
        json spec{
            {"name", args.method},       {"iterations", args.iterations},
            {"beta", args.beta},         {"cost_metric", args.cost_metric},
            {"offspring", args.offspring}, {"init_pop", args.init_pop},
            {"pmac", args.pmac},         {"remap_period", args.remap_period},
        };
        if (!args.label.empty()) {
            spec["label"] = args.label;
        }
        cfg.methods.push_back(hapens::parse_method_spec(spec));
        cfg.seeds = {0};
    }
    if (!args.library.empty()) {
        cfg.library.path = args.library;
        cfg.library.synthetic.reset();
    }
    if (!args.seeds.empty()) {
        cfg.seeds = args.seeds;
    }
    if (!args.cost_mode.empty()) {
        cfg.cost_mode = hapens::parse_cost_mode(args.cost_mode);
    }
    if (!args.out.empty()) {
        cfg.out_dir = args.out;
    }
    if (cfg.out_dir.empty()) {
        throw hapens::ConfigError("run needs an output directory (--out)");
    }
    const auto written = hapens::cmd_run(cfg);
    for (const auto& f : written) {
        std::cout << "wrote " << f.string() << "\n";
    }
    return 0;
}

int dispatch_evaluate(const RecordsArgs& args) {
    const auto files = hapens::list_record_files(args.records);
    const json out = hapens::cmd_evaluate(files, hapens::parse_cost_mode(args.cost_mode));
    const fs::path file =
        args.out.empty() ? fs::path(args.records) / "evaluation.json" : fs::path(args.out);
    hapens::atomic_write_file(file, out.dump(2) + "\n");
    std::cout << "wrote " << file.string() << "\n";
    return 0;
}

int dispatch_pareto(const RecordsArgs& args) {
    const auto files = hapens::list_record_files(args.records);
    const std::string csv = hapens::cmd_pareto(files, hapens::parse_cost_mode(args.cost_mode));
    const fs::path file =
        args.out.empty() ? fs::path(args.records) / "pareto.csv" : fs::path(args.out);
    hapens::atomic_write_file(file, csv);
    std::cout << "wrote " << file.string() << "\n";
    return 0;
}

int dispatch_sweep(const SweepArgs& args) {
    hapens::LibrarySource source;
    std::vector<std::uint64_t> seeds = args.seeds;
    if (!args.config_file.empty()) {
        const json j = read_json_file(args.config_file);
        if (j.contains("library")) {
            source.path = j.at("library").get<std::string>();
        }
        if (j.contains("synthetic")) {
            source.synthetic = hapens::parse_synthetic_config(j.at("synthetic"));
        }
        if (seeds.empty() && j.contains("seeds")) {
            for (const auto& s : j.at("seeds")) {
                seeds.push_back(s.get<std::uint64_t>());
            }
        }
    }
    if (!args.library.empty()) {
        source.path = args.library;
        source.synthetic.reset();
    }
    if (source.path.empty() && !source.synthetic) {
        throw hapens::ConfigError("sweep-beta needs --library or --config");
    }
    if (seeds.empty()) {
        seeds = {0};
    }
    const json out = hapens::cmd_sweep_beta(source, args.betas, args.iterations, seeds,
                                            hapens::parse_cost_mode(args.cost_mode));
    hapens::atomic_write_file(args.out, out.dump(2) + "\n");
    std::cout << "wrote " << args.out << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Post-hoc ensemble selection with hardware-aware Pareto fronts"};
    app.require_subcommand(1);

    GenerateArgs gen;
    auto* generate = app.add_subcommand("generate", "Generate a synthetic model library");
    generate->add_option("--models", gen.cfg.p, "Number of models");
    generate->add_option("--val-samples", gen.cfg.n_val, "Validation sample count");
    generate->add_option("--test-samples", gen.cfg.n_test, "Test sample count");
    generate->add_option("--classes", gen.cfg.n_classes, "Class count");
    generate->add_option("--error-correlation", gen.cfg.error_correlation,
                         "Shared-noise fraction in [0,1]");
    generate->add_option("--skill-min", gen.cfg.skill_min, "Lower skill bound");
    generate->add_option("--skill-max", gen.cfg.skill_max, "Upper skill bound");
    generate->add_option("--cost-min", gen.cfg.cost_min, "Lower cost bound (log-uniform)");
    generate->add_option("--cost-max", gen.cfg.cost_max, "Upper cost bound (log-uniform)");
    generate->add_option("--seed", gen.cfg.seed, "Generator seed");
    generate->add_option("--out", gen.out, "Output directory")->required();

    RunArgs run;
    auto* run_cmd = app.add_subcommand("run", "Run selection methods and write run records");
    run_cmd->add_option("--config", run.config_file, "Experiment config JSON");
    run_cmd->add_option("--library", run.library, "Model library directory");
    auto* method_opt = run_cmd->add_option("--method", run.method,
                                           "single-best|ges|ges-star|multi-ges|hapens|qdo-es");
    run_cmd->add_option("--label", run.label, "Record label (defaults to method name)");
    run_cmd->add_option("--iterations", run.iterations, "Search iterations");
    run_cmd->add_option("--beta", run.beta, "multi-ges cost pressure in [0,1]");
    run_cmd->add_option("--cost-metric", run.cost_metric, "time|memory|disk|size");
    run_cmd->add_option("--offspring", run.offspring, "Offspring per iteration");
    run_cmd->add_option("--init-pop", run.init_pop, "Initial population size");
    run_cmd->add_option("--pmac", run.pmac, "Mutation-after-crossover probability");
    run_cmd->add_option("--remap-period", run.remap_period, "Iterations between boundary remaps");
    run_cmd->add_option("--seeds", run.seeds, "Comma-separated seeds")->delimiter(',');
    run_cmd->add_option("--cost-mode", run.cost_mode, "time|memory|disk|size|aggregate");
    run_cmd->add_option("--out", run.out, "Output directory for run records");

    RecordsArgs eval_args;
    auto* evaluate = app.add_subcommand("evaluate", "Compare run records; writes evaluation.json");
    evaluate->add_option("--records", eval_args.records, "Directory of run records")->required();
    evaluate->add_option("--cost-mode", eval_args.cost_mode, "time|memory|disk|size|aggregate");
    evaluate->add_option("--out", eval_args.out, "Output file (default: records/evaluation.json)");

    RecordsArgs pareto_args;
    auto* pareto = app.add_subcommand("pareto", "Per-run front statistics; writes pareto.csv");
    pareto->add_option("--records", pareto_args.records, "Directory of run records")->required();
    pareto->add_option("--cost-mode", pareto_args.cost_mode, "time|memory|disk|size|aggregate");
    pareto->add_option("--out", pareto_args.out, "Output file (default: records/pareto.csv)");

    SweepArgs sweep;
    auto* sweep_cmd = app.add_subcommand("sweep-beta", "Sweep multi-ges cost pressures");
    sweep_cmd->add_option("--config", sweep.config_file, "Experiment config JSON (library source)");
    sweep_cmd->add_option("--library", sweep.library, "Model library directory");
    sweep_cmd->add_option("--betas", sweep.betas, "Comma-separated betas")
        ->delimiter(',')
        ->required();
    sweep_cmd->add_option("--iterations", sweep.iterations, "Iterations per run");
    sweep_cmd->add_option("--seeds", sweep.seeds, "Comma-separated seeds")->delimiter(',');
    sweep_cmd->add_option("--cost-mode", sweep.cost_mode, "time|memory|disk|size|aggregate");
    sweep_cmd->add_option("--out", sweep.out, "Output file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (app.got_subcommand(generate)) {
            return dispatch_generate(gen);
        }
        if (app.got_subcommand(run_cmd)) {
            return dispatch_run(run, method_opt->count() > 0);
        }
        if (app.got_subcommand(evaluate)) {
            return dispatch_evaluate(eval_args);
        }
        if (app.got_subcommand(pareto)) {
            return dispatch_pareto(pareto_args);
        }
        if (app.got_subcommand(sweep_cmd)) {
            return dispatch_sweep(sweep);
        }
    } catch (const hapens::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const hapens::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const hapens::EvalError& e) {
        std::cerr << "evaluation error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

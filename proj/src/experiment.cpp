#include "hapens/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <unordered_set>

#include "hapens/errors.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace hapens {

namespace {

std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::string format_beta(double beta) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", beta);
    return buf;
}

bool safe_label(const std::string& label) {
    if (label.empty()) {
        return false;
    }
    return std::all_of(label.begin(), label.end(), [](unsigned char c) {
        return std::isalnum(c) || c == '-' || c == '_' || c == '.';
    });
}

json front_json(const std::vector<ObjectivePoint>& front) {
    json out = json::array();
    for (const auto& p : front) {
        out.push_back({p.perf_loss, p.cost});
    }
    return out;
}

struct LoadedRecords {
    std::vector<RunRecord> records;
    std::vector<std::uint64_t> seeds;        // ascending
    std::vector<std::string> labels;         // ascending
    // records indexed by (seed, label)
    std::map<std::pair<std::uint64_t, std::string>, const RunRecord*> by_key;
};

LoadedRecords load_records(const std::vector<fs::path>& files) {
    if (files.empty()) {
        throw EvalError("no run records given");
    }
    LoadedRecords out;
    out.records.reserve(files.size());
    for (const auto& f : files) {
        out.records.push_back(load_record(f));
    }
    const std::string& library_id = out.records.front().library_id;
    std::set<std::uint64_t> seeds;
    std::set<std::string> labels;
    for (const auto& r : out.records) {
        if (r.library_id != library_id) {
            throw EvalError("mixed libraries: records disagree on the source library");
        }
        seeds.insert(r.set.seed);
        labels.insert(r.set.method);
        const auto key = std::make_pair(r.set.seed, r.set.method);
        if (!out.by_key.emplace(key, &r).second) {
            throw EvalError("duplicate record for method '" + r.set.method + "' seed " +
                            std::to_string(r.set.seed));
        }
    }
    out.seeds.assign(seeds.begin(), seeds.end());
    out.labels.assign(labels.begin(), labels.end());
    for (std::uint64_t seed : out.seeds) {
        for (const auto& label : out.labels) {
            if (!out.by_key.contains({seed, label})) {
                throw EvalError("method '" + label + "' missing for seed " + std::to_string(seed));
            }
        }
    }
    return out;
}

// Average rank (1 = best) with ties sharing the mean of their positions.
std::vector<double> ranks_of(const std::vector<double>& values, bool higher_is_better) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) {
        order[i] = i;
    }
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return higher_is_better ? values[a] > values[b] : values[a] < values[b];
    });
    std::vector<double> ranks(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i + 1;
        while (j < n && values[order[j]] == values[order[i]]) {
            ++j;
        }
        const double mean_rank = 0.5 * static_cast<double>(i + 1 + j);
        for (std::size_t t = i; t < j; ++t) {
            ranks[order[t]] = mean_rank;
        }
        i = j;
    }
    return ranks;
}

} // namespace

const std::vector<std::string>& known_methods() {
    static const std::vector<std::string> methods = {"single-best", "ges",    "ges-star",
                                                     "multi-ges",   "hapens", "qdo-es"};
    return methods;
}

CostMetric parse_cost_metric(const std::string& s) {
    if (s == "time") return CostMetric::Time;
    if (s == "memory") return CostMetric::Memory;
    if (s == "disk") return CostMetric::Disk;
    if (s == "size") return CostMetric::Size;
    throw ConfigError("unknown cost metric '" + s + "'; valid: time, memory, disk, size");
}

std::string to_string(CostMetric m) {
    switch (m) {
        case CostMetric::Time: return "time";
        case CostMetric::Memory: return "memory";
        case CostMetric::Disk: return "disk";
        case CostMetric::Size: return "size";
    }
    return "?";
}

CostMode parse_cost_mode(const std::string& s) {
    if (s == "time") return CostMode::Time;
    if (s == "memory") return CostMode::Memory;
    if (s == "disk") return CostMode::Disk;
    if (s == "size") return CostMode::Size;
    if (s == "aggregate") return CostMode::Aggregate;
    throw ConfigError("unknown cost mode '" + s + "'; valid: time, memory, disk, size, aggregate");
}

std::string to_string(CostMode m) {
    switch (m) {
        case CostMode::Time: return "time";
        case CostMode::Memory: return "memory";
        case CostMode::Disk: return "disk";
        case CostMode::Size: return "size";
        case CostMode::Aggregate: return "aggregate";
    }
    return "?";
}

std::uint64_t method_seed(std::uint64_t seed, const std::string& label) {
    return splitmix64(seed ^ fnv1a64(label));
}

SyntheticConfig parse_synthetic_config(const json& j) {
    SyntheticConfig cfg;
    try {
        cfg.p = j.value("p", cfg.p);
        cfg.n_val = j.value("n_val", cfg.n_val);
        cfg.n_test = j.value("n_test", cfg.n_test);
        cfg.n_classes = j.value("n_classes", cfg.n_classes);
        cfg.skill_min = j.value("skill_min", cfg.skill_min);
        cfg.skill_max = j.value("skill_max", cfg.skill_max);
        cfg.error_correlation = j.value("error_correlation", cfg.error_correlation);
        cfg.cost_min = j.value("cost_min", cfg.cost_min);
        cfg.cost_max = j.value("cost_max", cfg.cost_max);
        cfg.seed = j.value("seed", cfg.seed);
    } catch (const json::exception& e) {
        throw ConfigError("invalid synthetic config: " + std::string(e.what()));
    }
    return cfg;
}

json synthetic_config_json(const SyntheticConfig& cfg) {
    return {
        {"p", cfg.p},
        {"n_val", cfg.n_val},
        {"n_test", cfg.n_test},
        {"n_classes", cfg.n_classes},
        {"skill_min", cfg.skill_min},
        {"skill_max", cfg.skill_max},
        {"error_correlation", cfg.error_correlation},
        {"cost_min", cfg.cost_min},
        {"cost_max", cfg.cost_max},
        {"seed", cfg.seed},
    };
}

MethodSpec parse_method_spec(const json& j) {
    MethodSpec spec;
    try {
        spec.name = j.at("name").get<std::string>();
        spec.label = j.value("label", spec.name);
        spec.iterations = j.value("iterations", spec.iterations);
        spec.beta = j.value("beta", spec.beta);
        if (j.contains("cost_metric")) {
            spec.cost_metric = parse_cost_metric(j.at("cost_metric").get<std::string>());
        }
        spec.offspring = j.value("offspring", spec.offspring);
        spec.init_pop = j.value("init_pop", spec.init_pop);
        spec.pmac = j.value("pmac", spec.pmac);
        spec.remap_period = j.value("remap_period", spec.remap_period);
        spec.grid = j.value("grid", spec.grid);
    } catch (const json::exception& e) {
        throw ConfigError("invalid method configuration: " + std::string(e.what()));
    }
    const auto& methods = known_methods();
    if (std::find(methods.begin(), methods.end(), spec.name) == methods.end()) {
        std::string valid;
        for (const auto& m : methods) {
            valid += (valid.empty() ? "" : ", ") + m;
        }
        throw ConfigError("unknown method '" + spec.name + "'; valid methods: " + valid);
    }
    if (!safe_label(spec.label)) {
        throw ConfigError("method label '" + spec.label +
                          "' must be non-empty and use only letters, digits, '.', '_' or '-'");
    }
    if (spec.iterations < 1) {
        throw ConfigError("method '" + spec.label + "': iterations must be at least 1");
    }
    if (!(spec.beta >= 0.0 && spec.beta <= 1.0)) {
        throw ConfigError("method '" + spec.label + "': beta must lie in [0,1]");
    }
    if (spec.offspring < 1 || spec.init_pop < 1 || spec.remap_period < 1 || spec.grid < 1 ||
        !(spec.pmac >= 0.0 && spec.pmac <= 1.0)) {
        throw ConfigError("method '" + spec.label + "': bad search parameters");
    }
    return spec;
}

ExperimentConfig parse_experiment_config(const json& j) {
    ExperimentConfig cfg;
    try {
        if (j.contains("library")) {
            cfg.library.path = j.at("library").get<std::string>();
        }
        if (j.contains("synthetic")) {
            cfg.library.synthetic = parse_synthetic_config(j.at("synthetic"));
        }
        for (const auto& m : j.at("methods")) {
            cfg.methods.push_back(parse_method_spec(m));
        }
        for (const auto& s : j.at("seeds")) {
            cfg.seeds.push_back(s.get<std::uint64_t>());
        }
        if (j.contains("cost_mode")) {
            cfg.cost_mode = parse_cost_mode(j.at("cost_mode").get<std::string>());
        }
        cfg.out_dir = j.contains("out_dir") ? j.at("out_dir").get<std::string>()
                                            : j.value("out", std::string{});
    } catch (const json::exception& e) {
        throw ConfigError("invalid experiment config: " + std::string(e.what()));
    }
    if (cfg.library.path.empty() && !cfg.library.synthetic) {
        throw ConfigError("config needs either 'library' or 'synthetic'");
    }
    if (!cfg.library.path.empty() && cfg.library.synthetic) {
        throw ConfigError("config must not set both 'library' and 'synthetic'");
    }
    if (cfg.methods.empty()) {
        throw ConfigError("config needs at least one method");
    }
    if (cfg.seeds.empty()) {
        throw ConfigError("config needs at least one seed");
    }
    std::unordered_set<std::string> labels;
    for (const auto& m : cfg.methods) {
        if (!labels.insert(m.label).second) {
            throw ConfigError("duplicate method label '" + m.label + "'");
        }
    }
    return cfg;
}

std::string library_identity(const LibrarySource& source) {
    if (source.synthetic) {
        return "synthetic:" + synthetic_config_json(*source.synthetic).dump();
    }
    return "path:" + source.path;
}

ModelLibrary resolve_library(const LibrarySource& source) {
    if (source.synthetic) {
        return generate_synthetic(*source.synthetic);
    }
    return load_library(source.path);
}

json method_params_json(const MethodSpec& spec) {
    json p{{"name", spec.name}};
    if (spec.name == "ges" || spec.name == "ges-star" || spec.name == "multi-ges") {
        p["iterations"] = spec.iterations;
    }
    if (spec.name == "multi-ges") {
        p["beta"] = spec.beta;
    }
    if (spec.name == "hapens" || spec.name == "qdo-es") {
        p["iterations"] = spec.iterations;
        p["offspring"] = spec.offspring;
        p["init_pop"] = spec.init_pop;
        p["pmac"] = spec.pmac;
        p["remap_period"] = spec.remap_period;
        p["grid"] = spec.grid;
    }
    if (spec.name == "hapens") {
        p["cost_metric"] = to_string(spec.cost_metric);
    }
    return p;
}

json record_to_json(const RunRecord& record) {
    json ensembles = json::array();
    for (const auto& e : record.set.ensembles) {
        json je{
            {"counts", e.repetition.counts},
            {"val_loss", e.val_loss},
            {"test_loss", e.test_loss},
            {"inference_time_s", e.costs.inference_time_s},
            {"memory_bytes", e.costs.memory_bytes},
            {"disk_bytes", e.costs.disk_bytes},
            {"size", e.costs.size},
            {"iteration", e.provenance.iteration},
        };
        if (e.behavior) {
            je["alc"] = e.behavior->alc;
            je["behavior_hw"] = e.behavior->hw;
        }
        ensembles.push_back(std::move(je));
    }
    return {
        {"library", record.library_id},
        {"algorithm", record.algorithm},
        {"method", record.set.method},
        {"seed", record.set.seed},
        {"params", record.params},
        {"wall_time_s", record.wall_time_s},
        {"ensembles", std::move(ensembles)},
    };
}

RunRecord record_from_json(const json& j) {
    RunRecord r;
    try {
        r.library_id = j.at("library").get<std::string>();
        r.algorithm = j.at("algorithm").get<std::string>();
        r.params = j.at("params");
        r.wall_time_s = j.value("wall_time_s", 0.0);
        r.set.method = j.at("method").get<std::string>();
        r.set.seed = j.at("seed").get<std::uint64_t>();
        for (const auto& je : j.at("ensembles")) {
            Ensemble e;
            e.repetition.counts = je.at("counts").get<std::vector<int>>();
            e.weights = to_weights(e.repetition);
            e.val_loss = je.at("val_loss").get<double>();
            e.test_loss = je.at("test_loss").get<double>();
            e.costs.inference_time_s = je.at("inference_time_s").get<double>();
            e.costs.memory_bytes = je.at("memory_bytes").get<double>();
            e.costs.disk_bytes = je.at("disk_bytes").get<double>();
            e.costs.size = je.at("size").get<int>();
            e.provenance = {r.set.method, je.at("iteration").get<int>()};
            if (je.contains("alc")) {
                e.behavior = BehaviorDescriptor{je.at("alc").get<double>(),
                                                je.at("behavior_hw").get<double>()};
            }
            r.set.ensembles.push_back(std::move(e));
        }
    } catch (const json::exception& e) {
        throw DataError("invalid run record: " + std::string(e.what()));
    }
    return r;
}

RunRecord load_record(const fs::path& file) {
    std::ifstream in(file);
    if (!in) {
        throw DataError("cannot read run record '" + file.string() + "'");
    }
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw DataError("invalid run record '" + file.string() + "': " + e.what());
    }
    return record_from_json(j);
}

std::vector<fs::path> list_record_files(const fs::path& dir) {
    if (!fs::is_directory(dir)) {
        throw DataError("record directory '" + dir.string() + "' does not exist");
    }
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".json" &&
            entry.path().filename().string().find("__seed") != std::string::npos) {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    return files;
}

void atomic_write_file(const fs::path& file, const std::string& content) {
    if (file.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(file.parent_path(), ec);
    }
    const fs::path tmp = file.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw DataError("cannot write '" + tmp.string() + "'");
        }
        out << content;
    }
    fs::rename(tmp, file);
}

EnsembleSet run_method(const ModelLibrary& lib, const MethodSpec& spec, std::uint64_t seed) {
    EnsembleSet set;
    if (spec.name == "single-best") {
        set = single_best(lib);
    } else if (spec.name == "ges") {
        set = ges(lib, spec.iterations);
    } else if (spec.name == "ges-star") {
        set = ges_star(lib, spec.iterations);
    } else if (spec.name == "multi-ges") {
        set = multi_ges(lib, {spec.beta, spec.iterations});
    } else if (spec.name == "hapens" || spec.name == "qdo-es") {
        HapensConfig cfg;
        cfg.cost_metric = spec.cost_metric;
        cfg.initial_population = spec.init_pop;
        cfg.iterations = spec.iterations;
        cfg.offspring_per_iteration = spec.offspring;
        cfg.mutation_after_crossover = spec.pmac;
        cfg.remap_period = spec.remap_period;
        cfg.grid = spec.grid;
        cfg.seed = method_seed(seed, spec.label);
        std::mt19937_64 rng(cfg.seed);
        set = spec.name == "hapens" ? hapens_run(lib, cfg, rng) : qdo_es_run(lib, cfg, rng);
    } else {
        throw ConfigError("unknown method '" + spec.name + "'");
    }
    set.method = spec.label;
    set.seed = seed;
    return set;
}

std::vector<fs::path> cmd_run(const ExperimentConfig& config) {
    if (config.out_dir.empty()) {
        throw ConfigError("run needs an output directory");
    }
    const ModelLibrary lib = resolve_library(config.library);
    const std::string library_id = library_identity(config.library);

    std::vector<fs::path> written;
    for (const auto& spec : config.methods) {
        for (std::uint64_t seed : config.seeds) {
            const auto start = std::chrono::steady_clock::now();
            RunRecord record;
            record.set = run_method(lib, spec, seed);
            record.wall_time_s = std::chrono::duration<double>(
                                     std::chrono::steady_clock::now() - start).count();
            record.library_id = library_id;
            record.algorithm = spec.name;
            record.params = method_params_json(spec);
            const fs::path file =
                config.out_dir / (spec.label + "__seed" + std::to_string(seed) + ".json");
            atomic_write_file(file, record_to_json(record).dump(2) + "\n");
            written.push_back(file);
        }
    }
    return written;
}

json cmd_evaluate(const std::vector<fs::path>& record_files, CostMode mode) {
    const LoadedRecords loaded = load_records(record_files);

    json per_seed = json::object();
    std::map<std::string, std::vector<double>> hv_by_label;
    std::map<std::string, std::vector<double>> igd_by_label;
    std::map<std::string, std::vector<double>> hv_rank_by_label;
    std::map<std::string, std::vector<double>> igd_rank_by_label;

    for (std::uint64_t seed : loaded.seeds) {
        std::vector<const EnsembleSet*> sets;
        for (const auto& label : loaded.labels) {
            sets.push_back(&loaded.by_key.at({seed, label})->set);
        }
        const auto evals = evaluate_sets(sets, mode);

        std::vector<double> hvs, igds;
        json seed_out = json::object();
        for (const auto& fe : evals) {
            hvs.push_back(fe.hv);
            igds.push_back(fe.igd_plus);
            seed_out[fe.method] = {
                {"hv", fe.hv},
                {"igd_plus", fe.igd_plus},
                {"front", front_json(fe.front)},
                {"n_ensembles", fe.n_ensembles},
                {"n_pareto", fe.n_pareto},
            };
        }
        const auto hv_ranks = ranks_of(hvs, /*higher_is_better=*/true);
        const auto igd_ranks = ranks_of(igds, /*higher_is_better=*/false);
        for (std::size_t i = 0; i < evals.size(); ++i) {
            hv_by_label[evals[i].method].push_back(evals[i].hv);
            igd_by_label[evals[i].method].push_back(evals[i].igd_plus);
            hv_rank_by_label[evals[i].method].push_back(hv_ranks[i]);
            igd_rank_by_label[evals[i].method].push_back(igd_ranks[i]);
        }
        per_seed[std::to_string(seed)] = std::move(seed_out);
    }

    auto mean = [](const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) {
            s += x;
        }
        return s / static_cast<double>(v.size());
    };
    json summary = json::object();
    for (const auto& label : loaded.labels) {
        const RunRecord* any = loaded.by_key.at({loaded.seeds.front(), label});
        summary[label] = {
            {"mean_hv", mean(hv_by_label[label])},
            {"mean_igd_plus", mean(igd_by_label[label])},
            {"mean_rank_hv", mean(hv_rank_by_label[label])},
            {"mean_rank_igd_plus", mean(igd_rank_by_label[label])},
            {"algorithm", any->algorithm},
            {"params", any->params},
        };
    }

    return {
        {"cost_mode", to_string(mode)},
        {"library", loaded.records.front().library_id},
        {"seeds", loaded.seeds},
        {"methods", loaded.labels},
        {"per_seed", std::move(per_seed)},
        {"summary", std::move(summary)},
    };
}

std::string cmd_pareto(const std::vector<fs::path>& record_files, CostMode mode) {
    const LoadedRecords loaded = load_records(record_files);

    std::string csv = "method,seed,total,unique,pareto\n";
    std::map<std::pair<std::string, std::uint64_t>, std::string> rows;
    for (std::uint64_t seed : loaded.seeds) {
        std::vector<const EnsembleSet*> sets;
        for (const auto& label : loaded.labels) {
            sets.push_back(&loaded.by_key.at({seed, label})->set);
        }
        const auto spaces = build_objective_space(sets, mode);
        for (std::size_t i = 0; i < sets.size(); ++i) {
            SeenSet unique;
            for (const auto& e : sets[i]->ensembles) {
                unique.insert(e.repetition.counts);
            }
            const auto front = pareto_front(spaces[i]);
            rows[{loaded.labels[i], seed}] =
                loaded.labels[i] + "," + std::to_string(seed) + "," +
                std::to_string(sets[i]->ensembles.size()) + "," + std::to_string(unique.size()) +
                "," + std::to_string(front.size());
        }
    }
    for (const auto& [key, row] : rows) {
        csv += row + "\n";
    }
    return csv;
}

json cmd_sweep_beta(const LibrarySource& source, std::vector<double> betas, int iterations,
                    const std::vector<std::uint64_t>& seeds, CostMode mode) {
    if (betas.empty()) {
        throw ConfigError("sweep needs at least one beta");
    }
    if (seeds.empty()) {
        throw ConfigError("sweep needs at least one seed");
    }
    json warnings = json::array();
    std::vector<double> unique_betas;
    for (double b : betas) {
        if (!(b >= 0.0 && b <= 1.0)) {
            throw ConfigError("beta " + format_beta(b) + " outside [0,1]");
        }
        if (std::find(unique_betas.begin(), unique_betas.end(), b) != unique_betas.end()) {
            warnings.push_back("duplicate beta " + format_beta(b) + " ignored");
            continue;
        }
        unique_betas.push_back(b);
    }

    const ModelLibrary lib = resolve_library(source);

    // One multi-ges trajectory per (beta, seed); evaluated per seed across
    // betas so hypervolumes share one normalization.
    std::map<std::string, std::vector<double>> hv;
    std::map<std::string, std::vector<double>> final_time;
    std::map<std::string, std::vector<double>> final_auc;
    std::map<std::string, json> hv_per_seed;
    for (double beta : unique_betas) {
        hv_per_seed[format_beta(beta)] = json::object();
    }

    for (std::uint64_t seed : seeds) {
        std::vector<EnsembleSet> sets;
        sets.reserve(unique_betas.size());
        for (double beta : unique_betas) {
            EnsembleSet set = multi_ges(lib, {beta, iterations});
            set.method = "multi-ges-b" + format_beta(beta);
            set.seed = seed;
            sets.push_back(std::move(set));
        }
        std::vector<const EnsembleSet*> views;
        for (const auto& s : sets) {
            views.push_back(&s);
        }
        const auto evals = evaluate_sets(views, mode);
        for (std::size_t i = 0; i < unique_betas.size(); ++i) {
            const std::string key = format_beta(unique_betas[i]);
            const Ensemble& final = sets[i].ensembles.back();
            hv[key].push_back(evals[i].hv);
            final_time[key].push_back(final.costs.inference_time_s);
            final_auc[key].push_back(1.0 - final.test_loss);
            hv_per_seed[key][std::to_string(seed)] = evals[i].hv;
        }
    }

    auto mean = [](const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) {
            s += x;
        }
        return s / static_cast<double>(v.size());
    };
    json per_beta = json::object();
    for (double beta : unique_betas) {
        const std::string key = format_beta(beta);
        per_beta[key] = {
            {"mean_hv", mean(hv[key])},
            {"mean_final_inference_time_s", mean(final_time[key])},
            {"mean_final_test_auc", mean(final_auc[key])},
            {"hv_per_seed", hv_per_seed[key]},
        };
    }
    return {
        {"library", library_identity(source)},
        {"cost_mode", to_string(mode)},
        {"iterations", iterations},
        {"seeds", seeds},
        {"betas", unique_betas},
        {"per_beta", std::move(per_beta)},
        {"warnings", std::move(warnings)},
    };
}

} // namespace hapens

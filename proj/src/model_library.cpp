#include "hapens/model_library.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "hapens/errors.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace hapens {

namespace {

constexpr double kRowSumTolerance = 1e-6;
// Rows already this close to one are kept verbatim so that a load/write cycle
// is idempotent.
constexpr double kRowSumExact = 1e-12;

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::ifstream open_or_throw(const fs::path& file) {
    std::ifstream in(file);
    if (!in) {
        throw DataError("library incomplete: missing '" + file.string() + "'");
    }
    return in;
}

std::vector<std::string> read_lines(std::ifstream& in) {
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        lines.push_back(line);
    }
    while (!lines.empty() && lines.back().empty()) {
        lines.pop_back();
    }
    return lines;
}

std::vector<int> read_label_file(const fs::path& file) {
    auto in = open_or_throw(file);
    std::vector<int> labels;
    for (const auto& line : read_lines(in)) {
        int value = 0;
        auto [ptr, ec] = std::from_chars(line.data(), line.data() + line.size(), value);
        if (ec != std::errc() || ptr != line.data() + line.size()) {
            throw DataError("invalid label: '" + line + "' in " + file.string());
        }
        labels.push_back(value);
    }
    return labels;
}

Matrix read_prediction_file(const fs::path& file, const std::string& model) {
    auto in = open_or_throw(file);
    const auto lines = read_lines(in);
    std::vector<std::vector<double>> rows;
    rows.reserve(lines.size());
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::string& line = lines[i];
        std::vector<double> row;
        const char* pos = line.data();
        const char* end = line.data() + line.size();
        while (pos < end) {
            double v = 0.0;
            auto [ptr, ec] = std::from_chars(pos, end, v);
            if (ec != std::errc()) {
                throw DataError("invalid probabilities: model '" + model + "' row " +
                                std::to_string(i) + " is not numeric");
            }
            row.push_back(v);
            pos = ptr;
            if (pos < end) {
                if (*pos != ',') {
                    throw DataError("invalid probabilities: model '" + model + "' row " +
                                    std::to_string(i) + " has malformed separators");
                }
                ++pos;
            }
        }
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw DataError("inconsistent shapes: model '" + model + "' row " +
                            std::to_string(i) + " has " + std::to_string(row.size()) +
                            " columns, expected " + std::to_string(rows.front().size()));
        }
        rows.push_back(std::move(row));
    }
    const std::size_t cols = rows.empty() ? 0 : rows.front().size();
    Matrix m(rows.size(), cols);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t c = 0; c < cols; ++c) {
            m(i, c) = rows[i][c];
        }
    }
    return m;
}

void normalize_rows(Matrix& m, const std::string& model, const char* split) {
    for (std::size_t i = 0; i < m.rows(); ++i) {
        double sum = 0.0;
        for (std::size_t c = 0; c < m.cols(); ++c) {
            double v = m(i, c);
            if (!std::isfinite(v) || v < -kRowSumExact || v > 1.0 + kRowSumExact) {
                throw DataError("invalid probabilities: model '" + model + "' " + split +
                                " row " + std::to_string(i) + " has entry " + format_double(v));
            }
            sum += v;
        }
        if (std::abs(sum - 1.0) > kRowSumTolerance) {
            throw DataError("invalid probabilities: model '" + model + "' " + split +
                            " row " + std::to_string(i) + " sums to " + format_double(sum));
        }
        if (std::abs(sum - 1.0) > kRowSumExact) {
            for (std::size_t c = 0; c < m.cols(); ++c) {
                m(i, c) /= sum;
            }
        }
        for (std::size_t c = 0; c < m.cols(); ++c) {
            m(i, c) = std::clamp(m(i, c), 0.0, 1.0);
        }
    }
}

void write_label_file(const fs::path& file, const std::vector<int>& labels) {
    std::ofstream out(file);
    if (!out) {
        throw DataError("cannot write '" + file.string() + "'");
    }
    for (int v : labels) {
        out << v << '\n';
    }
}

void write_prediction_file(const fs::path& file, const Matrix& m) {
    std::ofstream out(file);
    if (!out) {
        throw DataError("cannot write '" + file.string() + "'");
    }
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t c = 0; c < m.cols(); ++c) {
            if (c > 0) {
                out << ',';
            }
            out << format_double(m(i, c));
        }
        out << '\n';
    }
}

} // namespace

ModelLibrary load_library(const fs::path& dir) {
    auto meta_in = open_or_throw(dir / "library.json");
    json meta;
    try {
        meta_in >> meta;
    } catch (const json::exception& e) {
        throw DataError("invalid library: malformed library.json (" + std::string(e.what()) + ")");
    }

    ModelLibrary lib;
    try {
        lib.n_classes = meta.at("n_classes").get<int>();
        for (const auto& m : meta.at("models")) {
            ModelEntry entry;
            entry.name = m.at("name").get<std::string>();
            entry.cost.inference_time_s = m.at("inference_time_s").get<double>();
            entry.cost.memory_bytes = m.at("memory_bytes").get<double>();
            entry.cost.disk_bytes = m.at("disk_bytes").get<double>();
            lib.models.push_back(std::move(entry));
        }
    } catch (const json::exception& e) {
        throw DataError("invalid library: library.json missing fields (" + std::string(e.what()) + ")");
    }

    lib.val_labels = read_label_file(dir / "val_labels.csv");
    lib.test_labels = read_label_file(dir / "test_labels.csv");

    for (auto& entry : lib.models) {
        entry.val_predictions = read_prediction_file(dir / "val" / (entry.name + ".csv"), entry.name);
        entry.test_predictions = read_prediction_file(dir / "test" / (entry.name + ".csv"), entry.name);
        const struct {
            const char* split;
            const Matrix* m;
            std::size_t n;
        } shapes[] = {
            {"val", &entry.val_predictions, lib.n_val()},
            {"test", &entry.test_predictions, lib.n_test()},
        };
        for (const auto& s : shapes) {
            if (s.m->rows() != s.n || s.m->cols() != static_cast<std::size_t>(lib.n_classes)) {
                throw DataError("inconsistent shapes: model '" + entry.name + "' " + s.split +
                                " predictions are " + std::to_string(s.m->rows()) + "x" +
                                std::to_string(s.m->cols()) + ", expected " + std::to_string(s.n) +
                                "x" + std::to_string(lib.n_classes));
            }
        }
        normalize_rows(entry.val_predictions, entry.name, "val");
        normalize_rows(entry.test_predictions, entry.name, "test");
    }

    for (const char* which : {"val", "test"}) {
        const auto& labels = std::string(which) == "val" ? lib.val_labels : lib.test_labels;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (labels[i] < 0 || labels[i] >= lib.n_classes) {
                throw DataError("invalid label: " + std::to_string(labels[i]) + " at " + which +
                                " index " + std::to_string(i));
            }
        }
    }

    const auto violations = validate_library(lib);
    if (!violations.empty()) {
        throw DataError("invalid library: " + violations.front());
    }
    return lib;
}

void write_library(const ModelLibrary& lib, const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir / "val", ec);
    fs::create_directories(dir / "test", ec);

    json meta;
    meta["n_classes"] = lib.n_classes;
    meta["models"] = json::array();
    for (const auto& m : lib.models) {
        meta["models"].push_back({
            {"name", m.name},
            {"inference_time_s", m.cost.inference_time_s},
            {"memory_bytes", m.cost.memory_bytes},
            {"disk_bytes", m.cost.disk_bytes},
        });
    }
    std::ofstream out(dir / "library.json");
    if (!out) {
        throw DataError("cannot write '" + (dir / "library.json").string() + "'");
    }
    out << meta.dump(2) << '\n';
    out.close();

    write_label_file(dir / "val_labels.csv", lib.val_labels);
    write_label_file(dir / "test_labels.csv", lib.test_labels);
    for (const auto& m : lib.models) {
        write_prediction_file(dir / "val" / (m.name + ".csv"), m.val_predictions);
        write_prediction_file(dir / "test" / (m.name + ".csv"), m.test_predictions);
    }
}

ModelLibrary generate_synthetic(const SyntheticConfig& cfg) {
    auto reject = [](const std::string& why) {
        throw ConfigError("invalid synthetic config: " + why);
    };
    if (cfg.p < 2) reject("need at least 2 models");
    if (cfg.n_val < 2) reject("need at least 2 validation samples");
    if (cfg.n_test < 1) reject("need at least 1 test sample");
    if (cfg.n_classes < 2) reject("need at least 2 classes");
    if (cfg.n_val < cfg.n_classes) reject("validation split smaller than class count");
    if (cfg.n_test < cfg.n_classes) reject("test split smaller than class count");
    if (!(cfg.error_correlation >= 0.0 && cfg.error_correlation <= 1.0)) {
        reject("error_correlation outside [0,1]");
    }
    if (!std::isfinite(cfg.skill_min) || !std::isfinite(cfg.skill_max) || cfg.skill_min > cfg.skill_max) {
        reject("bad skill range");
    }
    if (!(cfg.cost_min > 0.0) || !(cfg.cost_max >= cfg.cost_min) || !std::isfinite(cfg.cost_max)) {
        reject("bad cost range");
    }

    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    const int p = cfg.p;
    const int k = cfg.n_classes;

    std::vector<double> skill(p);
    for (auto& s : skill) {
        s = cfg.skill_min + (cfg.skill_max - cfg.skill_min) * unit(rng);
    }

    std::vector<HardwareCost> costs(p);
    const double log_lo = std::log(cfg.cost_min);
    const double log_hi = std::log(cfg.cost_max);
    auto sample_cost = [&] { return std::exp(log_lo + (log_hi - log_lo) * unit(rng)); };
    for (auto& c : costs) {
        c.inference_time_s = sample_cost();
        c.memory_bytes = sample_cost();
        c.disk_bytes = sample_cost();
    }

    auto balanced_labels = [&](int n) {
        std::vector<int> labels(n);
        for (int i = 0; i < n; ++i) {
            labels[i] = i % k;
        }
        std::shuffle(labels.begin(), labels.end(), rng);
        return labels;
    };
    ModelLibrary lib;
    lib.n_classes = k;
    lib.val_labels = balanced_labels(cfg.n_val);
    lib.test_labels = balanced_labels(cfg.n_test);

    auto difficulties = [&](int n) {
        std::vector<double> d(n);
        for (auto& x : d) {
            x = std::exp(0.3 * gauss(rng));
        }
        return d;
    };
    const auto val_difficulty = difficulties(cfg.n_val);
    const auto test_difficulty = difficulties(cfg.n_test);

    auto noise_matrix = [&](int n) {
        Matrix m(n, k);
        for (auto& x : m.data()) {
            x = gauss(rng);
        }
        return m;
    };
    const Matrix val_shared = noise_matrix(cfg.n_val);
    const Matrix test_shared = noise_matrix(cfg.n_test);

    const double shared_w = std::sqrt(cfg.error_correlation);
    const double indep_w = std::sqrt(1.0 - cfg.error_correlation);

    auto predictions = [&](int j, const std::vector<int>& labels, const Matrix& shared,
                           const std::vector<double>& difficulty) {
        const std::size_t n = labels.size();
        Matrix pred(n, k);
        std::vector<double> z(k);
        for (std::size_t i = 0; i < n; ++i) {
            double z_max = -std::numeric_limits<double>::infinity();
            for (int c = 0; c < k; ++c) {
                const double noise = shared_w * shared(i, c) + indep_w * gauss(rng);
                z[c] = skill[j] * (c == labels[i] ? 1.0 : 0.0) + difficulty[i] * noise;
                z_max = std::max(z_max, z[c]);
            }
            double sum = 0.0;
            for (int c = 0; c < k; ++c) {
                pred(i, c) = std::exp(z[c] - z_max);
                sum += pred(i, c);
            }
            for (int c = 0; c < k; ++c) {
                pred(i, c) /= sum;
            }
        }
        return pred;
    };

    for (int j = 0; j < p; ++j) {
        ModelEntry entry;
        char name[16];
        std::snprintf(name, sizeof name, "m%03d", j);
        entry.name = name;
        entry.val_predictions = predictions(j, lib.val_labels, val_shared, val_difficulty);
        entry.test_predictions = predictions(j, lib.test_labels, test_shared, test_difficulty);
        entry.cost = costs[j];
        lib.models.push_back(std::move(entry));
    }
    return lib;
}

std::vector<std::string> validate_library(const ModelLibrary& lib) {
    std::vector<std::string> issues;
    auto add = [&issues](std::string msg) { issues.push_back(std::move(msg)); };

    if (lib.models.empty()) {
        add("library has no models");
    }
    if (lib.n_classes < 2) {
        add("n_classes is " + std::to_string(lib.n_classes) + ", need at least 2");
    }
    if (lib.n_val() < 2) {
        add("validation split has " + std::to_string(lib.n_val()) + " samples, need at least 2");
    }
    if (lib.n_test() < 1) {
        add("test split is empty");
    }

    std::unordered_map<std::string, std::size_t> seen_names;
    for (std::size_t j = 0; j < lib.models.size(); ++j) {
        const auto& m = lib.models[j];
        auto [it, inserted] = seen_names.emplace(m.name, j);
        if (!inserted) {
            add("duplicate model name '" + m.name + "' (models " + std::to_string(it->second) +
                " and " + std::to_string(j) + ")");
        }
        const auto& c = m.cost;
        for (double v : {c.inference_time_s, c.memory_bytes, c.disk_bytes}) {
            if (!std::isfinite(v) || v < 0.0) {
                add("model '" + m.name + "' has negative or non-finite cost");
                break;
            }
        }
        const struct {
            const char* split;
            const Matrix* pred;
            std::size_t n;
        } shapes[] = {
            {"val", &m.val_predictions, lib.n_val()},
            {"test", &m.test_predictions, lib.n_test()},
        };
        for (const auto& s : shapes) {
            if (s.pred->rows() != s.n || s.pred->cols() != static_cast<std::size_t>(lib.n_classes)) {
                add("model '" + m.name + "' " + s.split + " predictions are " +
                    std::to_string(s.pred->rows()) + "x" + std::to_string(s.pred->cols()) +
                    ", expected " + std::to_string(s.n) + "x" + std::to_string(lib.n_classes));
                continue;
            }
            for (std::size_t i = 0; i < s.pred->rows(); ++i) {
                double sum = 0.0;
                bool in_range = true;
                for (std::size_t col = 0; col < s.pred->cols(); ++col) {
                    const double v = (*s.pred)(i, col);
                    if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
                        in_range = false;
                    }
                    sum += v;
                }
                if (!in_range) {
                    add("model '" + m.name + "' " + s.split + " row " + std::to_string(i) +
                        " has entries outside [0,1]");
                } else if (std::abs(sum - 1.0) > kRowSumTolerance) {
                    add("model '" + m.name + "' " + s.split + " row " + std::to_string(i) +
                        " sums to " + format_double(sum));
                }
            }
        }
    }

    for (const char* which : {"val", "test"}) {
        const auto& labels = std::string(which) == "val" ? lib.val_labels : lib.test_labels;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (labels[i] < 0 || labels[i] >= lib.n_classes) {
                add("label " + std::to_string(labels[i]) + " at " + which + " index " +
                    std::to_string(i) + " is out of range");
            }
        }
    }
    std::vector<bool> present(std::max(lib.n_classes, 0), false);
    for (int label : lib.val_labels) {
        if (label >= 0 && label < lib.n_classes) {
            present[label] = true;
        }
    }
    for (int c = 0; c < lib.n_classes; ++c) {
        if (!present[c]) {
            add("class " + std::to_string(c) + " absent from validation labels");
        }
    }
    return issues;
}

} // namespace hapens

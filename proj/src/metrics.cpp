#include "hapens/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace hapens {

namespace {

constexpr double kProbabilityFloor = 1e-15;

struct Centered {
    std::vector<double> values;
    double norm = 0.0;
};

Centered center(const std::vector<double>& v) {
    Centered c;
    c.values.resize(v.size());
    double mean = 0.0;
    for (double x : v) {
        mean += x;
    }
    mean /= static_cast<double>(v.size());
    double sum_sq = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        c.values[i] = v[i] - mean;
        sum_sq += c.values[i] * c.values[i];
    }
    c.norm = std::sqrt(sum_sq);
    return c;
}

double pearson_centered(const std::vector<double>& a, double norm_a,
                        const std::vector<double>& b, double norm_b) {
    if (norm_a == 0.0 || norm_b == 0.0) {
        return 0.0;
    }
    double dot = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
    }
    return dot / (norm_a * norm_b);
}

double mean_pairwise_correlation(const std::vector<const std::vector<double>*>& centered,
                                 const std::vector<double>& norms) {
    const std::size_t s = centered.size();
    if (s == 1) {
        return 1.0;
    }
    double sum = 0.0;
    for (std::size_t a = 0; a < s; ++a) {
        for (std::size_t b = a + 1; b < s; ++b) {
            sum += pearson_centered(*centered[a], norms[a], *centered[b], norms[b]);
        }
    }
    return sum / (static_cast<double>(s) * static_cast<double>(s - 1) / 2.0);
}

// AUC for one binary problem from scores and a positive mask.
double binary_auc(const std::vector<double>& scores, const std::vector<char>& positive) {
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&scores](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    std::vector<double> rank(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i + 1;
        while (j < n && scores[order[j]] == scores[order[i]]) {
            ++j;
        }
        const double mid = 0.5 * static_cast<double>(i + 1 + j); // mean of 1-based ranks i+1..j
        for (std::size_t t = i; t < j; ++t) {
            rank[order[t]] = mid;
        }
        i = j;
    }

    std::size_t n_pos = 0;
    double rank_sum_pos = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        if (positive[t]) {
            ++n_pos;
            rank_sum_pos += rank[t];
        }
    }
    const std::size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0) {
        throw std::invalid_argument("degenerate class");
    }
    const double u = rank_sum_pos - 0.5 * static_cast<double>(n_pos) * static_cast<double>(n_pos + 1);
    return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

} // namespace

int RepetitionVector::total() const {
    int t = 0;
    for (int c : counts) {
        t += c;
    }
    return t;
}

std::vector<std::size_t> RepetitionVector::support() const {
    std::vector<std::size_t> s;
    for (std::size_t j = 0; j < counts.size(); ++j) {
        if (counts[j] > 0) {
            s.push_back(j);
        }
    }
    return s;
}

double cost_value(const EnsembleCosts& costs, CostMetric metric) {
    switch (metric) {
        case CostMetric::Time: return costs.inference_time_s;
        case CostMetric::Memory: return costs.memory_bytes;
        case CostMetric::Disk: return costs.disk_bytes;
        case CostMetric::Size: return static_cast<double>(costs.size);
    }
    return 0.0;
}

WeightVector to_weights(const RepetitionVector& r) {
    const int t = r.total();
    if (t == 0) {
        throw std::invalid_argument("empty ensemble");
    }
    WeightVector w;
    w.weights.resize(r.counts.size());
    for (std::size_t j = 0; j < r.counts.size(); ++j) {
        w.weights[j] = static_cast<double>(r.counts[j]) / static_cast<double>(t);
    }
    return w;
}

Matrix ensemble_predict(const ModelLibrary& lib, const WeightVector& w, Split split) {
    if (w.weights.size() != lib.size()) {
        throw std::invalid_argument("dimension mismatch");
    }
    const std::size_t n = split == Split::Val ? lib.n_val() : lib.n_test();
    Matrix out(n, static_cast<std::size_t>(lib.n_classes));
    for (std::size_t j = 0; j < lib.size(); ++j) {
        const double wj = w.weights[j];
        if (wj == 0.0) {
            continue;
        }
        const Matrix& pred = lib.predictions(j, split);
        for (std::size_t idx = 0; idx < out.data().size(); ++idx) {
            out.data()[idx] += wj * pred.data()[idx];
        }
    }
    return out;
}

double roc_auc(const Matrix& pred, const std::vector<int>& labels) {
    if (pred.rows() != labels.size() || pred.cols() < 2) {
        throw std::invalid_argument("dimension mismatch");
    }
    const std::size_t n = labels.size();
    const std::size_t k = pred.cols();
    std::vector<double> scores(n);
    std::vector<char> positive(n);

    if (k == 2) {
        for (std::size_t i = 0; i < n; ++i) {
            scores[i] = pred(i, 1);
            positive[i] = labels[i] == 1;
        }
        return binary_auc(scores, positive);
    }
    double sum = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
        for (std::size_t i = 0; i < n; ++i) {
            scores[i] = pred(i, c);
            positive[i] = static_cast<std::size_t>(labels[i]) == c;
        }
        sum += binary_auc(scores, positive);
    }
    return sum / static_cast<double>(k);
}

double fitness_loss(const ModelLibrary& lib, const WeightVector& w, Split split) {
    return 1.0 - roc_auc(ensemble_predict(lib, w, split), lib.labels(split));
}

std::vector<double> per_sample_log_loss(const Matrix& pred, const std::vector<int>& labels) {
    if (pred.rows() != labels.size()) {
        throw std::invalid_argument("dimension mismatch");
    }
    std::vector<double> loss(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const double v = std::clamp(pred(i, static_cast<std::size_t>(labels[i])),
                                    kProbabilityFloor, 1.0);
        loss[i] = -std::log(v);
    }
    return loss;
}

std::vector<double> per_sample_log_loss(const ModelEntry& model, const std::vector<int>& val_labels) {
    return per_sample_log_loss(model.val_predictions, val_labels);
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.empty()) {
        throw std::invalid_argument("dimension mismatch");
    }
    const Centered ca = center(a);
    const Centered cb = center(b);
    return pearson_centered(ca.values, ca.norm, cb.values, cb.norm);
}

double average_loss_correlation(const ModelLibrary& lib, const RepetitionVector& r) {
    if (r.counts.size() != lib.size()) {
        throw std::invalid_argument("dimension mismatch");
    }
    const auto support = r.support();
    if (support.empty()) {
        throw std::invalid_argument("empty ensemble");
    }
    std::vector<Centered> centered;
    centered.reserve(support.size());
    for (std::size_t j : support) {
        centered.push_back(center(per_sample_log_loss(lib.models[j], lib.val_labels)));
    }
    std::vector<const std::vector<double>*> views;
    std::vector<double> norms;
    for (const auto& c : centered) {
        views.push_back(&c.values);
        norms.push_back(c.norm);
    }
    return mean_pairwise_correlation(views, norms);
}

EnsembleCosts ensemble_costs(const ModelLibrary& lib, const RepetitionVector& r) {
    if (r.counts.size() != lib.size()) {
        throw std::invalid_argument("dimension mismatch");
    }
    const auto support = r.support();
    if (support.empty()) {
        throw std::invalid_argument("empty ensemble");
    }
    EnsembleCosts costs;
    for (std::size_t j : support) {
        costs.inference_time_s += lib.models[j].cost.inference_time_s;
        costs.memory_bytes += lib.models[j].cost.memory_bytes;
        costs.disk_bytes += lib.models[j].cost.disk_bytes;
    }
    costs.size = static_cast<int>(support.size());
    return costs;
}

std::vector<double> min_max_normalize(const std::vector<double>& values) {
    if (values.empty()) {
        throw std::invalid_argument("empty values");
    }
    const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
    const double lo = *lo_it;
    const double hi = *hi_it;
    std::vector<double> out(values.size(), 0.0);
    if (hi == lo) {
        return out;
    }
    const double span = hi - lo;
    for (std::size_t i = 0; i < values.size(); ++i) {
        out[i] = (values[i] - lo) / span;
    }
    return out;
}

std::vector<double> hardware_aggregate(const std::vector<EnsembleCosts>& rows) {
    if (rows.empty()) {
        throw std::invalid_argument("empty values");
    }
    std::vector<double> time(rows.size()), memory(rows.size()), disk(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        time[i] = rows[i].inference_time_s;
        memory[i] = rows[i].memory_bytes;
        disk[i] = rows[i].disk_bytes;
    }
    const auto time_n = min_max_normalize(time);
    const auto memory_n = min_max_normalize(memory);
    const auto disk_n = min_max_normalize(disk);
    std::vector<double> out(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out[i] = (time_n[i] + memory_n[i] + disk_n[i]) / 3.0;
    }
    return out;
}

AlcCache::AlcCache(const ModelLibrary& lib) {
    centered_.reserve(lib.size());
    norms_.reserve(lib.size());
    for (const auto& model : lib.models) {
        Centered c = center(per_sample_log_loss(model, lib.val_labels));
        centered_.push_back(std::move(c.values));
        norms_.push_back(c.norm);
    }
}

double AlcCache::alc(const RepetitionVector& r) const {
    if (r.counts.size() != centered_.size()) {
        throw std::invalid_argument("dimension mismatch");
    }
    const auto support = r.support();
    if (support.empty()) {
        throw std::invalid_argument("empty ensemble");
    }
    std::vector<const std::vector<double>*> views;
    std::vector<double> norms;
    views.reserve(support.size());
    norms.reserve(support.size());
    for (std::size_t j : support) {
        views.push_back(&centered_[j]);
        norms.push_back(norms_[j]);
    }
    return mean_pairwise_correlation(views, norms);
}

} // namespace hapens

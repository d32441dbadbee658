#pragma once

#include <algorithm>
#include <vector>

#include "dynmap/dataset.hpp"
#include "dynmap/evaluation.hpp"
#include "dynmap/model.hpp"

namespace dynmap {

// Exploratory k-NN over raw (lat, lon) degrees and scaled (month, hour).
// Deliberately not ECEF: this mirrors the simple feature space of the
// exploratory study, not the learned model's encoding.
struct KnnConfig {
    size_t k = 30;
    bool use_time = false;
    bool use_loc = true;
    double month_scale = 1.0;
    double hour_scale = 1.0;
};

namespace detail {

inline std::vector<double> knn_features(const SampleRecord& r, const KnnConfig& cfg) {
    std::vector<double> f;
    if (cfg.use_loc) {
        f.push_back(r.location.lat_deg);
        f.push_back(r.location.lon_deg);
    }
    if (cfg.use_time) {
        f.push_back(r.time.month * cfg.month_scale);
        f.push_back(r.time.hour * cfg.hour_scale);
    }
    return f;
}

}  // namespace detail

// Indices of the k nearest training records, ascending by (distance, index).
inline std::vector<size_t> knn_neighbors(const Dataset& train, const SampleRecord& query,
                                         const KnnConfig& cfg) {
    if (!cfg.use_time && !cfg.use_loc) throw ValidationError("knn: empty feature set");
    const size_t n = train.records.size();
    if (n == 0) throw ValidationError("knn: empty training set");
    if (cfg.k == 0 || cfg.k > n) throw ValidationError("knn: k must be in [1, N]");

    const std::vector<double> q = detail::knn_features(query, cfg);
    std::vector<std::pair<double, size_t>> dist(n);
    for (size_t i = 0; i < n; ++i) {
        const std::vector<double> f = detail::knn_features(train.records[i], cfg);
        double d2 = 0.0;
        for (size_t j = 0; j < q.size(); ++j) {
            const double d = f[j] - q[j];
            d2 += d * d;
        }
        dist[i] = {d2, i};
    }
    std::partial_sort(dist.begin(), dist.begin() + cfg.k, dist.end());
    std::vector<size_t> idx(cfg.k);
    for (size_t i = 0; i < cfg.k; ++i) idx[i] = dist[i].second;
    return idx;
}

// Mean of the neighbors' targets; places renormalized.
inline AttributePrediction knn_predict(const Dataset& train, const SampleRecord& query,
                                       const KnnConfig& cfg) {
    const std::vector<size_t> nbrs = knn_neighbors(train, query, cfg);
    AttributePrediction pred;
    pred.places.assign(train.dims.places, 0.0);
    pred.transient.assign(train.dims.transient, 0.0);
    for (size_t i : nbrs) {
        const auto& t = train.records[i].targets;
        for (size_t j = 0; j < pred.places.size(); ++j) pred.places[j] += t.places[j];
        for (size_t j = 0; j < pred.transient.size(); ++j) pred.transient[j] += t.transient[j];
    }
    double sum = 0.0;
    for (double p : pred.places) sum += p;
    for (double& p : pred.places) p /= sum;
    const double inv_k = 1.0 / static_cast<double>(nbrs.size());
    for (double& t : pred.transient) t *= inv_k;
    return pred;
}

// Training-set mean targets; the "ignore all features" baseline.
inline AttributePrediction prior_baseline(const Dataset& train) {
    if (train.records.empty()) throw ValidationError("prior_baseline: empty training set");
    AttributePrediction pred;
    pred.places.assign(train.dims.places, 0.0);
    pred.transient.assign(train.dims.transient, 0.0);
    for (const auto& r : train.records) {
        for (size_t j = 0; j < pred.places.size(); ++j) pred.places[j] += r.targets.places[j];
        for (size_t j = 0; j < pred.transient.size(); ++j)
            pred.transient[j] += r.targets.transient[j];
    }
    double sum = 0.0;
    for (double p : pred.places) sum += p;
    for (double& p : pred.places) p /= sum;
    const double inv_n = 1.0 / static_cast<double>(train.records.size());
    for (double& t : pred.transient) t *= inv_n;
    return pred;
}

// Places Top-1 accuracy of knn_predict over the validation set.
inline double knn_top1_places(const Dataset& train, const Dataset& validation,
                              const KnnConfig& cfg) {
    std::vector<std::vector<double>> preds, targets;
    preds.reserve(validation.records.size());
    targets.reserve(validation.records.size());
    for (const auto& r : validation.records) {
        preds.push_back(knn_predict(train, r, cfg).places);
        targets.push_back(r.targets.places);
    }
    return topk_accuracy(preds, targets, 1);
}

// Cartesian grid over (month, hour) scale candidates, maximizing Places Top-1
// on the validation set. Ties go to the smaller month scale, then hour scale.
inline std::pair<double, double> grid_search_time_scale(const Dataset& train,
                                                        const Dataset& validation,
                                                        const std::vector<double>& candidates,
                                                        KnnConfig cfg) {
    if (candidates.empty()) throw ValidationError("grid_search_time_scale: empty candidate list");
    if (train.records.empty() || validation.records.empty()) {
        throw ValidationError("grid_search_time_scale: empty dataset");
    }
    std::vector<double> sorted = candidates;
    std::sort(sorted.begin(), sorted.end());
    double best_acc = -1.0;
    std::pair<double, double> best{sorted.front(), sorted.front()};
    for (double sm : sorted) {
        for (double sh : sorted) {
            cfg.month_scale = sm;
            cfg.hour_scale = sh;
            const double acc = knn_top1_places(train, validation, cfg);
            if (acc > best_acc) {
                best_acc = acc;
                best = {sm, sh};
            }
        }
    }
    return best;
}

inline const std::vector<double> kDefaultScaleGrid = {0.1, 0.3, 1.0, 3.0, 10.0, 30.0, 100.0};

}  // namespace dynmap

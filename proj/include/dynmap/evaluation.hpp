#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "dynmap/dataset.hpp"
#include "dynmap/neuralnet.hpp"

namespace dynmap {

// Per-candidate distances between query attributes and a predicted candidate.
struct DistanceProfile {
    double kl_places = 0.0;
    double l2_transient = 0.0;
    double combine = 0.0;  // defined only after candidate-set normalization
};

struct CombineConfig {
    double lambda = 0.58;  // weight on Places
};

// Index (ties -> lowest) of the largest entry.
inline size_t argmax_index(const std::vector<double>& v) {
    size_t best = 0;
    for (size_t i = 1; i < v.size(); ++i)
        if (v[i] > v[best]) best = i;
    return best;
}

// Hit iff the target's argmax class is among the k largest predicted entries,
// where equal predicted values are ordered by ascending index.
inline double topk_accuracy(const std::vector<std::vector<double>>& predictions,
                            const std::vector<std::vector<double>>& targets, size_t k) {
    if (predictions.size() != targets.size()) throw DimensionError("topk_accuracy: length mismatch");
    if (predictions.empty()) return 0.0;
    size_t hits = 0;
    for (size_t i = 0; i < predictions.size(); ++i) {
        const auto& pred = predictions[i];
        if (pred.size() != targets[i].size()) throw DimensionError("topk_accuracy: shape mismatch");
        if (k < 1 || k > pred.size()) throw ValidationError("topk_accuracy: k out of range");
        const size_t truth = argmax_index(targets[i]);
        const double v = pred[truth];
        size_t ahead = 0;  // entries ranked strictly before class `truth`
        for (size_t c = 0; c < pred.size(); ++c) {
            if (pred[c] > v || (pred[c] == v && c < truth)) ++ahead;
        }
        if (ahead < k) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

// Fraction of scalar (sample, attribute) pairs with |pred - target| <= tau,
// pooled over all samples and attributes.
inline double within_threshold(const std::vector<std::vector<double>>& predictions,
                               const std::vector<std::vector<double>>& targets, double tau) {
    if (predictions.size() != targets.size())
        throw DimensionError("within_threshold: length mismatch");
    if (!(tau > 0.0)) throw ValidationError("within_threshold: tau must be positive");
    size_t hits = 0, total = 0;
    for (size_t i = 0; i < predictions.size(); ++i) {
        if (predictions[i].size() != targets[i].size())
            throw DimensionError("within_threshold: shape mismatch");
        for (size_t j = 0; j < predictions[i].size(); ++j) {
            if (std::abs(predictions[i][j] - targets[i][j]) <= tau) ++hits;
            ++total;
        }
    }
    return total == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(total);
}

// Same pooling per attribute index, for per-attribute breakdowns.
inline std::vector<double> within_threshold_per_attribute(
    const std::vector<std::vector<double>>& predictions,
    const std::vector<std::vector<double>>& targets, double tau) {
    if (predictions.empty()) return {};
    std::vector<double> acc(predictions[0].size(), 0.0);
    for (size_t i = 0; i < predictions.size(); ++i) {
        for (size_t j = 0; j < acc.size(); ++j) {
            if (std::abs(predictions[i][j] - targets[i][j]) <= tau) acc[j] += 1.0;
        }
    }
    for (double& a : acc) a /= static_cast<double>(predictions.size());
    return acc;
}

// KL(query.places || candidate.places) and Euclidean distance on transient.
inline std::pair<double, double> attribute_distance(const AttributeTargets& query,
                                                    const std::vector<double>& cand_places,
                                                    const std::vector<double>& cand_transient) {
    const double kl = nn::kl_divergence(query.places, cand_places);
    if (query.transient.size() != cand_transient.size())
        throw DimensionError("attribute_distance: transient length mismatch");
    double l2 = 0.0;
    for (size_t i = 0; i < cand_transient.size(); ++i) {
        const double d = query.transient[i] - cand_transient[i];
        l2 += d * d;
    }
    return {kl, std::sqrt(l2)};
}

// Min-max normalizes each distance column over the candidate set (a constant
// column becomes all zeros), then combine = lambda * kl + (1 - lambda) * l2.
inline std::vector<double> combine_distances(const std::vector<std::pair<double, double>>& profiles,
                                             const CombineConfig& cfg) {
    if (profiles.empty()) throw ValidationError("combine_distances: empty candidate set");
    if (cfg.lambda < 0.0 || cfg.lambda > 1.0)
        throw ValidationError("combine_distances: lambda must be in [0, 1]");
    double kl_min = profiles[0].first, kl_max = profiles[0].first;
    double l2_min = profiles[0].second, l2_max = profiles[0].second;
    for (const auto& [kl, l2] : profiles) {
        kl_min = std::min(kl_min, kl);
        kl_max = std::max(kl_max, kl);
        l2_min = std::min(l2_min, l2);
        l2_max = std::max(l2_max, l2);
    }
    const double kl_span = kl_max - kl_min;
    const double l2_span = l2_max - l2_min;
    std::vector<double> out(profiles.size());
    for (size_t i = 0; i < profiles.size(); ++i) {
        const double kln = kl_span > 0.0 ? (profiles[i].first - kl_min) / kl_span : 0.0;
        const double l2n = l2_span > 0.0 ? (profiles[i].second - l2_min) / l2_span : 0.0;
        out[i] = cfg.lambda * kln + (1.0 - cfg.lambda) * l2n;
    }
    return out;
}

// Stable ascending sort permutation; ties keep original index order.
inline std::vector<size_t> rank_candidates(const std::vector<double>& scores) {
    if (scores.empty()) throw ValidationError("rank_candidates: empty scores");
    for (double s : scores)
        if (std::isnan(s)) throw ValidationError("rank_candidates: NaN score");
    std::vector<size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&scores](size_t a, size_t b) { return scores[a] < scores[b]; });
    return idx;
}

// Hit iff rank + 1 <= ceil(n * k_percent / 100).
inline bool topk_percent_hit(size_t rank_of_truth, size_t n_candidates, double k_percent) {
    if (rank_of_truth >= n_candidates) throw ValidationError("topk_percent_hit: rank out of range");
    if (!(k_percent > 0.0)) throw ValidationError("topk_percent_hit: k_percent must be positive");
    const auto budget = static_cast<size_t>(
        std::ceil(static_cast<double>(n_candidates) * k_percent / 100.0));
    return rank_of_truth + 1 <= budget;
}

}  // namespace dynmap

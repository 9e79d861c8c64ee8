#pragma once

// Rank-based detection metrics (AUC, McClish-standardized pAUC) and the
// chance-normalized quantities used to compare known- and unknown-identity
// evaluation. Scores are oriented so that higher means more anomalous.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "idfree/error.hpp"

namespace idfree::metrics {

inline constexpr double kChanceLevel = 0.5;
inline constexpr double kDefaultMaxFpr = 0.1;

struct LabeledScores {
    std::vector<double> scores;
    std::vector<bool> labels;  // true = anomalous
};

struct MetricPair {
    double auc = 0.0;
    double pauc = 0.0;
    double p = kDefaultMaxFpr;

    friend bool operator==(const MetricPair&, const MetricPair&) = default;
};

enum class AverageMode { arithmetic, harmonic };

inline std::string_view to_string(AverageMode mode) {
    return mode == AverageMode::harmonic ? "harmonic" : "arithmetic";
}

inline AverageMode parse_average_mode(std::string_view text) {
    if (text == "harmonic") return AverageMode::harmonic;
    if (text == "arithmetic") return AverageMode::arithmetic;
    throw UsageError("unknown averaging mode '" + std::string(text) + "'");
}

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
};

namespace detail {

struct ClassCounts {
    std::size_t normal = 0;
    std::size_t anomalous = 0;
};

inline ClassCounts check_labeled(const LabeledScores& data) {
    if (data.scores.size() != data.labels.size())
        throw DataError("scores and labels differ in length (" + std::to_string(data.scores.size()) +
                        " vs " + std::to_string(data.labels.size()) + ")");
    if (data.scores.empty()) throw DataError("empty score list");
    ClassCounts counts;
    for (std::size_t i = 0; i < data.scores.size(); ++i) {
        if (!std::isfinite(data.scores[i])) throw DataError("non-finite score at position " + std::to_string(i));
        data.labels[i] ? ++counts.anomalous : ++counts.normal;
    }
    if (counts.normal == 0 || counts.anomalous == 0)
        throw DataError("degenerate labels: need at least one normal and one anomalous score");
    return counts;
}

// Indices sorted by descending score.
inline std::vector<std::size_t> descending_order(std::span<const double> scores) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    return order;
}

}  // namespace detail

/// Empirical ROC curve. Tied scores form a single (diagonal) step, so the
/// curve starts at (0,0), ends at (1,1) and has one vertex per distinct score.
inline std::vector<RocPoint> roc_points(const LabeledScores& data) {
    const auto counts = detail::check_labeled(data);
    const auto order = detail::descending_order(data.scores);
    const auto neg = static_cast<double>(counts.normal);
    const auto pos = static_cast<double>(counts.anomalous);

    std::vector<RocPoint> curve{{0.0, 0.0}};
    std::size_t fp = 0;
    std::size_t tp = 0;
    for (std::size_t i = 0; i < order.size();) {
        const double threshold = data.scores[order[i]];
        while (i < order.size() && data.scores[order[i]] == threshold) {
            data.labels[order[i]] ? ++tp : ++fp;
            ++i;
        }
        curve.push_back({static_cast<double>(fp) / neg, static_cast<double>(tp) / pos});
    }
    return curve;
}

/// Mann-Whitney estimate of P(anomalous score > normal score), ties count 1/2.
/// Computed from mid-ranks, which keeps U a half-integer and the result
/// identical to pairwise counting.
inline double auc(const LabeledScores& data) {
    const auto counts = detail::check_labeled(data);
    auto order = detail::descending_order(data.scores);
    std::reverse(order.begin(), order.end());  // ascending

    double rank_sum = 0.0;
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        std::size_t anomalous_in_group = 0;
        while (j < order.size() && data.scores[order[j]] == data.scores[order[i]]) {
            if (data.labels[order[j]]) ++anomalous_in_group;
            ++j;
        }
        // ranks i+1 .. j, mid-rank (i+1+j)/2
        const double mid_rank = static_cast<double>(i + 1 + j) / 2.0;
        rank_sum += mid_rank * static_cast<double>(anomalous_in_group);
        i = j;
    }
    const auto pos = static_cast<double>(counts.anomalous);
    const auto neg = static_cast<double>(counts.normal);
    const double u = rank_sum - pos * (pos + 1.0) / 2.0;
    return u / (pos * neg);
}

/// Raw area under the empirical ROC on FPR in [0, p].
inline double partial_area(const LabeledScores& data, double p) {
    if (!(p > 0.0 && p <= 1.0)) throw UsageError("pAUC FPR cap must lie in (0, 1], got " + std::to_string(p));
    const auto curve = roc_points(data);
    double area = 0.0;
    for (std::size_t i = 1; i < curve.size(); ++i) {
        const RocPoint a = curve[i - 1];
        RocPoint b = curve[i];
        if (a.fpr >= p) break;
        if (b.fpr > p) {
            const double t = (p - a.fpr) / (b.fpr - a.fpr);
            b = {p, a.tpr + t * (b.tpr - a.tpr)};
        }
        area += (b.fpr - a.fpr) * (a.tpr + b.tpr) / 2.0;
    }
    return area;
}

/// McClish-standardized partial AUC: 0.5 at chance, 1.0 for a perfect ranking.
inline double pauc(const LabeledScores& data, double p = kDefaultMaxFpr) {
    const double raw = partial_area(data, p);
    const double min_area = p * p / 2.0;
    const double max_area = p;
    return 0.5 * (1.0 + (raw - min_area) / (max_area - min_area));
}

inline MetricPair metric_pair(const LabeledScores& data, double p = kDefaultMaxFpr) {
    return {auc(data), pauc(data, p), p};
}

/// Fraction of above-chance performance lost without machine identity.
/// Undefined (nullopt) when the known-identity performance is at or below chance.
inline std::optional<double> delta_norm(double a_known, double a_unknown) {
    if (!(a_known > kChanceLevel)) return std::nullopt;
    return 1.0 - (a_unknown - kChanceLevel) / (a_known - kChanceLevel);
}

/// (raw - 1/k) / (1 - 1/k). Negative below chance.
inline double normalize_id_accuracy(double raw, std::size_t k) {
    if (k < 2) throw UsageError("identification accuracy normalization needs at least two machines");
    if (!(raw >= 0.0 && raw <= 1.0)) throw UsageError("raw identification accuracy outside [0, 1]");
    const double chance = 1.0 / static_cast<double>(k);
    return (raw - chance) / (1.0 - chance);
}

/// Pools every AUC and pAUC value and averages them.
inline double aggregate(std::span<const MetricPair> per_machine, AverageMode mode = AverageMode::harmonic) {
    if (per_machine.empty()) throw DataError("cannot aggregate an empty metric list");
    std::vector<double> values;
    values.reserve(per_machine.size() * 2);
    for (const auto& pair : per_machine) {
        values.push_back(pair.auc);
        values.push_back(pair.pauc);
    }
    const auto n = static_cast<double>(values.size());
    if (mode == AverageMode::arithmetic) return std::accumulate(values.begin(), values.end(), 0.0) / n;

    double inverse_sum = 0.0;
    for (double v : values) {
        if (!(v > 0.0)) throw DataError("harmonic mean requires strictly positive metric values");
        inverse_sum += 1.0 / v;
    }
    return n / inverse_sum;
}

}  // namespace idfree::metrics

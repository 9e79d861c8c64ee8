#pragma once

// Synthetic machine clusters with a single separability knob, and sweep
// drivers relating implicit identification accuracy to normalized
// degradation.
//
// Machine centers sit on a regular simplex (all pairs at distance
// `separation`). Normal vectors are center + spread * N(0, I); anomalous
// vectors are additionally pushed by `anomaly_offset` along a uniformly random
// direction.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "idfree/error.hpp"
#include "idfree/metrics.hpp"
#include "idfree/protocol.hpp"
#include "idfree/scorers.hpp"

namespace idfree::simulate {

struct SimConfig {
    std::size_t k = 5;
    std::size_t d = 8;
    std::size_t n_ref = 100;
    std::size_t n_norm = 100;
    std::size_t n_anom = 100;
    double separation = 6.0;
    double spread = 1.0;
    double anomaly_offset = 4.0;
    std::uint64_t seed = 20260101;
    scorers::ScorerSpec scorer{};
    protocol::EvalConfig eval{};

    friend bool operator==(const SimConfig&, const SimConfig&) = default;
};

inline void validate(const SimConfig& c) {
    if (c.k < 1) throw UsageError("machine count k must be at least 1");
    if (c.d < 1) throw UsageError("feature dimension d must be at least 1");
    if (c.d + 1 < c.k) throw UsageError("simplex placement of k machines needs d >= k - 1");
    if (c.n_ref < 2) throw UsageError("n_ref must be at least 2");
    if (c.n_norm < 1 || c.n_anom < 1) throw UsageError("n_norm and n_anom must be at least 1");
    if (!std::isfinite(c.separation) || c.separation < 0.0) throw UsageError("separation must be finite and >= 0");
    if (!std::isfinite(c.spread) || c.spread <= 0.0) throw UsageError("spread must be finite and > 0");
    if (!std::isfinite(c.anomaly_offset) || c.anomaly_offset <= 0.0)
        throw UsageError("anomaly_offset must be finite and > 0");
}

/// SplitMix64 finalizer; used to derive independent stream seeds.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
    return mix64(mix64(mix64(seed) ^ a) ^ (b * 0x9e3779b97f4a7c15ULL + 1));
}

enum class Stream : std::uint64_t { reference = 1, normal = 2, anomalous = 3 };

inline std::mt19937_64 make_stream(std::uint64_t seed, std::size_t machine, Stream s) {
    return std::mt19937_64(derive_seed(seed, machine, static_cast<std::uint64_t>(s)));
}

/// k mutually equidistant points (pairwise distance `separation`) in R^d.
/// Uses the Helmert basis of the hyperplane orthogonal to (1, ..., 1).
inline std::vector<std::vector<double>> simplex_centers(std::size_t k, std::size_t d, double separation) {
    if (k < 1) throw UsageError("need at least one center");
    if (d + 1 < k) throw UsageError("simplex placement of " + std::to_string(k) + " points needs d >= k - 1");
    std::vector<std::vector<double>> centers(k, std::vector<double>(d, 0.0));
    const double scale = separation / std::sqrt(2.0);
    for (std::size_t j = 1; j < k; ++j) {
        const double norm = std::sqrt(static_cast<double>(j * (j + 1)));
        for (std::size_t i = 0; i < k; ++i) {
            double h = 0.0;
            if (i < j) h = 1.0;
            else if (i == j) h = -static_cast<double>(j);
            centers[i][j - 1] = scale * h / norm;
        }
    }
    return centers;
}

inline std::string machine_name(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "m%02zu", index);
    return buf;
}

struct SimData {
    std::map<std::string, scorers::ReferenceSet> references;
    protocol::MergedTestSet merged;
};

inline SimData generate(const SimConfig& config) {
    validate(config);
    const auto centers = simplex_centers(config.k, config.d, config.separation);

    std::map<std::string, scorers::ReferenceSet> references;
    std::map<std::string, std::vector<protocol::Recording>> per_machine;
    for (std::size_t m = 0; m < config.k; ++m) {
        const auto name = machine_name(m);
        const auto& center = centers[m];
        // Each stream owns its distribution so cached normal deviates never cross streams.
        auto around_center = [&](std::mt19937_64& rng, std::normal_distribution<double>& gauss) {
            std::vector<double> v(config.d);
            for (std::size_t i = 0; i < config.d; ++i) v[i] = center[i] + config.spread * gauss(rng);
            return v;
        };

        auto ref_rng = make_stream(config.seed, m, Stream::reference);
        std::normal_distribution<double> ref_gauss;
        std::vector<std::vector<double>> ref;
        ref.reserve(config.n_ref);
        for (std::size_t i = 0; i < config.n_ref; ++i) ref.push_back(around_center(ref_rng, ref_gauss));
        references.emplace(name, scorers::ReferenceSet(name, std::move(ref)));

        auto& tests = per_machine[name];
        auto normal_rng = make_stream(config.seed, m, Stream::normal);
        std::normal_distribution<double> normal_gauss;
        for (std::size_t i = 0; i < config.n_norm; ++i) {
            char id[64];
            std::snprintf(id, sizeof id, "%s-n%05zu", name.c_str(), i);
            tests.push_back({id, {name, std::nullopt, protocol::Split::dev}, false, protocol::Split::dev,
                             std::nullopt, around_center(normal_rng, normal_gauss)});
        }
        auto anomalous_rng = make_stream(config.seed, m, Stream::anomalous);
        std::normal_distribution<double> anomalous_gauss;
        for (std::size_t i = 0; i < config.n_anom; ++i) {
            std::vector<double> direction(config.d);
            double norm = 0.0;
            do {
                norm = 0.0;
                for (auto& x : direction) {
                    x = anomalous_gauss(anomalous_rng);
                    norm += x * x;
                }
                norm = std::sqrt(norm);
            } while (norm == 0.0);
            auto v = around_center(anomalous_rng, anomalous_gauss);
            for (std::size_t j = 0; j < config.d; ++j) v[j] += config.anomaly_offset * direction[j] / norm;
            char id[64];
            std::snprintf(id, sizeof id, "%s-a%05zu", name.c_str(), i);
            tests.push_back({id, {name, std::nullopt, protocol::Split::dev}, true, protocol::Split::dev, std::nullopt,
                             std::move(v)});
        }
    }
    return {std::move(references), protocol::merge_test_sets(std::move(per_machine))};
}

struct SweepPoint {
    double separation = 0.0;
    std::size_t repeat = 0;
    std::uint64_t seed = 0;
    std::optional<double> id_accuracy_normalized;
    std::optional<double> delta_norm;
    std::optional<double> a_known;
    std::optional<double> a_unknown;
    std::optional<double> misid_probability;
    std::optional<std::string> error;

    friend bool operator==(const SweepPoint&, const SweepPoint&) = default;
};

struct SweepResult {
    SimConfig base;
    std::vector<SweepPoint> points;

    friend bool operator==(const SweepResult&, const SweepResult&) = default;
};

/// Generates data, scores it, runs both evaluation paths and returns the full report.
inline protocol::EvalReport simulate_report(const SimConfig& config) {
    const auto data = generate(config);
    std::map<std::string, scorers::MachineScorer> machines;
    for (const auto& [name, ref] : data.references) machines.emplace(name, scorers::MachineScorer{config.scorer, ref});
    const auto matrix = scorers::build_score_matrix(machines, data.merged);
    auto eval = config.eval;
    eval.seed = config.seed;
    return protocol::full_report(matrix, data.merged, eval);
}

inline SweepPoint point_from_report(const SimConfig& config, const protocol::EvalReport& report) {
    SweepPoint point;
    point.separation = config.separation;
    point.seed = config.seed;
    point.id_accuracy_normalized = report.identification.normalized_accuracy;
    point.delta_norm = report.delta_norm;
    point.a_known = report.known.aggregate;
    point.a_unknown = report.unknown.aggregate;
    point.misid_probability = report.identification.misid_probability;
    return point;
}

inline SweepPoint run_point(const SimConfig& config) { return point_from_report(config, simulate_report(config)); }

/// linspace(3.2, 10.0, 10): from heavy cluster overlap to near-perfect identification
/// at the default spread and anomaly offset.
inline std::vector<double> default_separations() {
    std::vector<double> out;
    for (int i = 0; i < 10; ++i) out.push_back(3.2 + (10.0 - 3.2) * i / 9.0);
    return out;
}

/// One point per (separation, repeat), ordered by separation index then repeat.
/// Points run on up to `threads` workers; each owns a seed derived from
/// (base seed, separation index, repeat), so results do not depend on scheduling.
inline SweepResult sweep(const SimConfig& base, const std::vector<double>& separations, std::size_t repeats,
                         std::size_t threads = 1) {
    if (separations.empty()) throw UsageError("sweep needs at least one separation");
    if (repeats < 1) throw UsageError("sweep needs at least one repeat");
    validate(base);

    const std::size_t total = separations.size() * repeats;
    SweepResult result{base, std::vector<SweepPoint>(total)};
    std::atomic<std::size_t> next{0};

    auto work = [&] {
        for (std::size_t i = next++; i < total; i = next++) {
            const std::size_t s = i / repeats;
            const std::size_t r = i % repeats;
            SimConfig config = base;
            config.separation = separations[s];
            config.seed = derive_seed(base.seed, s, r);
            SweepPoint point;
            try {
                point = run_point(config);
            } catch (const std::exception& e) {
                point.separation = config.separation;
                point.seed = config.seed;
                point.error = e.what();
            }
            point.repeat = r;
            result.points[i] = std::move(point);
        }
    };

    const std::size_t workers = std::clamp<std::size_t>(threads, 1, total);
    if (workers == 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(work);
    }
    return result;
}

/// Average ranks (1-based), ties share the mean rank.
inline std::vector<double> average_ranks(const std::vector<double>& values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return values[a] < values[b]; });
    std::vector<double> ranks(values.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j < order.size() && values[order[j]] == values[order[i]]) ++j;
        const double rank = static_cast<double>(i + 1 + j) / 2.0;
        for (std::size_t t = i; t < j; ++t) ranks[order[t]] = rank;
        i = j;
    }
    return ranks;
}

/// Spearman rank correlation (Pearson correlation of average ranks).
inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw DataError("spearman needs two equal-length series of size >= 2");
    const auto rx = average_ranks(x);
    const auto ry = average_ranks(y);
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
    const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) throw DataError("spearman undefined for a constant series");
    return sxy / std::sqrt(sxx * syy);
}

}  // namespace idfree::simulate

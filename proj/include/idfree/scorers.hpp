#pragma once

// Reference-set-backed machine-specific scorers s_m(x) and score normalizers.
// A scorer only ever sees TestProbe values, never the true machine label.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "idfree/error.hpp"
#include "idfree/protocol.hpp"

namespace idfree::scorers {

using Vector = std::vector<double>;

/// Normal-only reference vectors of one machine.
class ReferenceSet {
public:
    ReferenceSet(std::string machine, std::vector<Vector> vectors)
        : machine_(std::move(machine)), vectors_(std::move(vectors)) {
        if (vectors_.empty()) throw DataError("reference set for '" + machine_ + "' is empty");
        dim_ = vectors_.front().size();
        if (dim_ == 0) throw DataError("reference set for '" + machine_ + "' has zero-dimensional vectors");
        for (const auto& v : vectors_) {
            if (v.size() != dim_) throw DataError("reference set for '" + machine_ + "' mixes vector dimensions");
            for (double x : v)
                if (!std::isfinite(x)) throw DataError("reference set for '" + machine_ + "' has a non-finite value");
        }
    }

    const std::string& machine() const { return machine_; }
    const std::vector<Vector>& vectors() const { return vectors_; }
    std::size_t size() const { return vectors_.size(); }
    std::size_t dim() const { return dim_; }

    ReferenceSet without(std::size_t index) const {
        std::vector<Vector> rest;
        rest.reserve(vectors_.size() - 1);
        for (std::size_t i = 0; i < vectors_.size(); ++i)
            if (i != index) rest.push_back(vectors_[i]);
        return ReferenceSet(machine_, std::move(rest));
    }

private:
    std::string machine_;
    std::vector<Vector> vectors_;
    std::size_t dim_ = 0;
};

enum class ScorerKind { nearest_reference, mahalanobis };
enum class NormalizerKind { none, zscore_reference, local_density };

inline std::string_view to_string(ScorerKind k) {
    return k == ScorerKind::nearest_reference ? "nearest_reference" : "mahalanobis";
}

inline std::string_view to_string(NormalizerKind k) {
    switch (k) {
        case NormalizerKind::zscore_reference: return "zscore_reference";
        case NormalizerKind::local_density: return "local_density";
        default: return "none";
    }
}

inline ScorerKind parse_scorer_kind(std::string_view text) {
    if (text == "nearest_reference") return ScorerKind::nearest_reference;
    if (text == "mahalanobis") return ScorerKind::mahalanobis;
    throw UsageError("unknown scorer kind '" + std::string(text) + "'");
}

inline NormalizerKind parse_normalizer_kind(std::string_view text) {
    if (text == "none") return NormalizerKind::none;
    if (text == "zscore_reference") return NormalizerKind::zscore_reference;
    if (text == "local_density") return NormalizerKind::local_density;
    throw UsageError("unknown normalizer kind '" + std::string(text) + "'");
}

struct NormalizerSpec {
    NormalizerKind kind = NormalizerKind::none;
    std::size_t k_norm = 1;

    friend bool operator==(const NormalizerSpec&, const NormalizerSpec&) = default;
};

struct ScorerSpec {
    ScorerKind kind = ScorerKind::nearest_reference;
    std::size_t k = 1;
    // Diagonal covariance regularization; unset means 1e-6 * trace / d.
    std::optional<double> epsilon;
    NormalizerSpec normalizer;

    friend bool operator==(const ScorerSpec&, const ScorerSpec&) = default;
};

inline double euclidean(std::span<const double> a, std::span<const double> b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        sum += d * d;
    }
    return std::sqrt(sum);
}

namespace detail {

inline void check_dim(const ReferenceSet& ref, std::span<const double> x) {
    if (x.size() != ref.dim())
        throw DataError("feature dimension " + std::to_string(x.size()) + " does not match reference dimension " +
                        std::to_string(ref.dim()) + " of machine '" + ref.machine() + "'");
}

// Distances from x to all reference vectors, ascending.
inline std::vector<double> sorted_distances(const ReferenceSet& ref, std::span<const double> x) {
    std::vector<double> d;
    d.reserve(ref.size());
    for (const auto& v : ref.vectors()) d.push_back(euclidean(x, v));
    std::sort(d.begin(), d.end());
    return d;
}

inline double mean_of_first(const std::vector<double>& sorted, std::size_t k) {
    return std::accumulate(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k), 0.0) /
           static_cast<double>(k);
}

}  // namespace detail

/// Precomputed raw scorer for one machine.
class RawScorer {
public:
    RawScorer(const ScorerSpec& spec, ReferenceSet ref) : spec_(spec), ref_(std::move(ref)) {
        if (spec_.kind == ScorerKind::nearest_reference) {
            if (spec_.k < 1 || spec_.k > ref_.size())
                throw UsageError("nearest_reference k=" + std::to_string(spec_.k) + " outside [1, " +
                                 std::to_string(ref_.size()) + "] for machine '" + ref_.machine() + "'");
        } else {
            fit_gaussian();
        }
    }

    double operator()(std::span<const double> x) const {
        detail::check_dim(ref_, x);
        if (spec_.kind == ScorerKind::nearest_reference)
            return detail::mean_of_first(detail::sorted_distances(ref_, x), spec_.k);
        const Eigen::Map<const Eigen::VectorXd> xv(x.data(), static_cast<Eigen::Index>(x.size()));
        const Eigen::VectorXd diff = xv - mean_;
        const double q = diff.dot(solver_.solve(diff));
        return std::sqrt(std::max(q, 0.0));
    }

    const ReferenceSet& reference() const { return ref_; }
    const ScorerSpec& spec() const { return spec_; }

private:
    void fit_gaussian() {
        const auto n = static_cast<Eigen::Index>(ref_.size());
        const auto d = static_cast<Eigen::Index>(ref_.dim());
        if (n < 2) throw DataError("mahalanobis scorer needs at least two reference vectors");
        Eigen::MatrixXd data(n, d);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < d; ++j) data(i, j) = ref_.vectors()[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        mean_ = data.colwise().mean().transpose();
        const Eigen::MatrixXd centered = data.rowwise() - mean_.transpose();
        Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n - 1);
        double eps = spec_.epsilon.value_or(1e-6 * cov.trace() / static_cast<double>(d));
        if (spec_.epsilon && !(eps > 0.0)) throw UsageError("mahalanobis epsilon must be positive");
        if (!(eps > 0.0)) eps = 1e-12;  // all reference vectors identical
        cov.diagonal().array() += eps;
        solver_.compute(cov);
        if (solver_.info() != Eigen::Success) throw InvariantError("regularized covariance is not positive definite");
    }

    ScorerSpec spec_;
    ReferenceSet ref_;
    Eigen::VectorXd mean_;
    Eigen::LDLT<Eigen::MatrixXd> solver_;
};

using RawScoreFn = std::function<double(const ReferenceSet&, std::span<const double>)>;
using ScoreFn = std::function<double(std::span<const double>)>;

/// Raw score of x against ref under spec (normalizer ignored).
inline double raw_score(const ScorerSpec& spec, const ReferenceSet& ref, std::span<const double> x) {
    return RawScorer(spec, ref)(x);
}

/// Wraps a raw scoring function with a reference-based normalizer.
///   zscore_reference: (raw(x) - mu) / sigma over leave-one-out reference scores
///   local_density:    raw(x) / mean kNN spacing of the k_norm references nearest x
inline ScoreFn normalize(const NormalizerSpec& spec, const ReferenceSet& ref, RawScoreFn raw) {
    switch (spec.kind) {
        case NormalizerKind::none:
            return [ref, raw = std::move(raw)](std::span<const double> x) { return raw(ref, x); };

        case NormalizerKind::zscore_reference: {
            if (ref.size() < 2) throw DataError("zscore_reference needs at least two reference vectors");
            std::vector<double> held_out;
            held_out.reserve(ref.size());
            for (std::size_t i = 0; i < ref.size(); ++i) held_out.push_back(raw(ref.without(i), ref.vectors()[i]));
            const double n = static_cast<double>(held_out.size());
            const double mu = std::accumulate(held_out.begin(), held_out.end(), 0.0) / n;
            double var = 0.0;
            for (double s : held_out) var += (s - mu) * (s - mu);
            const auto [lo, hi] = std::minmax_element(held_out.begin(), held_out.end());
            const double sigma = *lo == *hi ? 0.0 : std::sqrt(var / n);
            if (!(sigma > 0.0))
                throw DataError("zscore_reference: reference scores of machine '" + ref.machine() +
                                "' have zero spread");
            return [ref, raw = std::move(raw), mu, sigma](std::span<const double> x) {
                return (raw(ref, x) - mu) / sigma;
            };
        }

        case NormalizerKind::local_density: {
            if (spec.k_norm < 1) throw UsageError("local_density k_norm must be at least 1");
            if (ref.size() < spec.k_norm + 1)
                throw DataError("local_density needs more than k_norm=" + std::to_string(spec.k_norm) +
                                " reference vectors for machine '" + ref.machine() + "'");
            // Mean distance of every reference vector to its k_norm nearest other references.
            std::vector<double> spacing(ref.size());
            for (std::size_t i = 0; i < ref.size(); ++i) {
                std::vector<double> d;
                for (std::size_t j = 0; j < ref.size(); ++j)
                    if (j != i) d.push_back(euclidean(ref.vectors()[i], ref.vectors()[j]));
                std::sort(d.begin(), d.end());
                spacing[i] = detail::mean_of_first(d, spec.k_norm);
            }
            const std::size_t k_norm = spec.k_norm;
            return [ref, raw = std::move(raw), spacing = std::move(spacing), k_norm](std::span<const double> x) {
                detail::check_dim(ref, x);
                std::vector<std::pair<double, std::size_t>> near;
                near.reserve(ref.size());
                for (std::size_t i = 0; i < ref.size(); ++i) near.emplace_back(euclidean(x, ref.vectors()[i]), i);
                std::partial_sort(near.begin(), near.begin() + static_cast<std::ptrdiff_t>(k_norm), near.end());
                double local = 0.0;
                for (std::size_t i = 0; i < k_norm; ++i) local += spacing[near[i].second];
                local /= static_cast<double>(k_norm);
                if (!(local > 0.0))
                    throw DataError("local_density: zero local spacing in reference set of '" + ref.machine() + "'");
                return raw(ref, x) / local;
            };
        }
    }
    throw InvariantError("unhandled normalizer kind");
}

/// Full scoring function for one machine: raw scorer plus the spec's normalizer.
inline ScoreFn make_scorer(const ScorerSpec& spec, const ReferenceSet& ref) {
    auto fitted = std::make_shared<const RawScorer>(spec, ref);
    RawScoreFn raw = [spec, fitted](const ReferenceSet& r, std::span<const double> x) {
        // normalize() only passes the full reference or leave-one-out subsets of it.
        if (r.size() == fitted->reference().size()) return (*fitted)(x);
        return RawScorer(spec, r)(x);
    };
    return normalize(spec.normalizer, fitted->reference(), std::move(raw));
}

/// s_m(x) for x under machine m's scorer spec and reference set.
inline double score(const ScorerSpec& spec, const ReferenceSet& ref, std::span<const double> x) {
    return make_scorer(spec, ref)(x);
}

struct MachineScorer {
    ScorerSpec spec;
    ReferenceSet reference;
};

/// Scores every probe under every machine. Columns follow the map's (name) order.
inline protocol::ScoreMatrix build_score_matrix(const std::map<std::string, MachineScorer>& machines,
                                                std::span<const protocol::TestProbe> probes) {
    if (machines.empty()) throw DataError("no machine scorers configured");
    std::vector<std::string> missing;
    for (const auto& p : probes)
        if (!p.features) missing.push_back(p.id);
    if (!missing.empty()) {
        std::string msg = "recordings without features:";
        for (const auto& id : missing) msg += " " + id;
        throw DataError(msg);
    }

    std::vector<std::string> names;
    std::vector<ScoreFn> fns;
    for (const auto& [name, ms] : machines) {
        if (ms.reference.machine() != name)
            throw DataError("scorer for '" + name + "' holds the reference set of '" + ms.reference.machine() + "'");
        names.push_back(name);
        fns.push_back(make_scorer(ms.spec, ms.reference));
    }
    protocol::ScoreMatrix matrix(names);
    for (const auto& p : probes) {
        std::vector<double> row;
        row.reserve(fns.size());
        for (const auto& fn : fns) row.push_back(fn(*p.features));
        matrix.set_row(p.id, std::move(row));
    }
    return matrix;
}

inline protocol::ScoreMatrix build_score_matrix(const std::map<std::string, MachineScorer>& machines,
                                                const protocol::MergedTestSet& merged) {
    for (const auto& m : merged.machines())
        if (!machines.contains(m.name)) throw DataError("no scorer configured for machine '" + m.name + "'");
    const auto probes = merged.probes();
    return build_score_matrix(machines, std::span<const protocol::TestProbe>(probes));
}

}  // namespace idfree::scorers

#pragma once

// Machine-wise ASD data model and the two evaluation paths:
//   known identity   - each recording is scored by its own machine, s_{m*}(x)
//   unknown identity - recordings of all machines in a split are merged and
//                      scored by s(x) = min_m s_m(x)
// In both paths metrics are computed per true machine after inference and
// then averaged. True machine labels live behind MergedTestSet and are only
// handed out to the evaluation functions below.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "idfree/error.hpp"
#include "idfree/metrics.hpp"

namespace idfree::protocol {

enum class Split { dev, eval };
enum class Domain { source, target };

inline std::string_view to_string(Split s) { return s == Split::dev ? "dev" : "eval"; }
inline std::string_view to_string(Domain d) { return d == Domain::source ? "source" : "target"; }

inline Split parse_split(std::string_view text) {
    if (text == "dev") return Split::dev;
    if (text == "eval") return Split::eval;
    throw DataError("unknown split '" + std::string(text) + "' (expected dev or eval)");
}

inline Domain parse_domain(std::string_view text) {
    if (text == "source") return Domain::source;
    if (text == "target") return Domain::target;
    throw DataError("unknown domain '" + std::string(text) + "' (expected source or target)");
}

/// Machines compare by name; type and split are metadata.
struct MachineId {
    std::string name;
    std::optional<std::string> type;
    std::optional<Split> split;

    friend bool operator==(const MachineId& a, const MachineId& b) { return a.name == b.name; }
    friend auto operator<=>(const MachineId& a, const MachineId& b) { return a.name <=> b.name; }
};

struct Recording {
    std::string id;
    MachineId true_machine;
    bool is_anomaly = false;
    Split split = Split::dev;
    std::optional<Domain> domain;
    std::optional<std::vector<double>> features;
};

/// What a scorer is allowed to see of a merged test recording.
struct TestProbe {
    std::string id;
    Split split = Split::dev;
    std::optional<std::vector<double>> features;
};

struct HiddenLabel {
    std::string machine;
    bool is_anomaly = false;
};
using HiddenLabels = std::map<std::string, HiddenLabel, std::less<>>;

/// s_m(x) for a fixed, ordered machine set. Rows are keyed by recording id.
class ScoreMatrix {
public:
    ScoreMatrix() = default;

    explicit ScoreMatrix(std::vector<std::string> machines) : machines_(std::move(machines)) {
        if (machines_.empty()) throw DataError("score matrix needs at least one machine");
        std::set<std::string, std::less<>> seen;
        for (const auto& m : machines_)
            if (!seen.insert(m).second) throw DataError("duplicate machine column '" + m + "'");
    }

    void set_row(std::string id, std::vector<double> row) {
        if (row.size() != machines_.size())
            throw DataError("row '" + id + "' has " + std::to_string(row.size()) + " entries, expected " +
                            std::to_string(machines_.size()));
        for (std::size_t j = 0; j < row.size(); ++j)
            if (!std::isfinite(row[j]))
                throw DataError("row '" + id + "' has a non-finite score for machine '" + machines_[j] + "'");
        if (!rows_.emplace(id, std::move(row)).second) throw DataError("duplicate score row '" + id + "'");
    }

    const std::vector<std::string>& machines() const { return machines_; }
    std::size_t size() const { return rows_.size(); }
    const std::map<std::string, std::vector<double>, std::less<>>& rows() const { return rows_; }
    bool has_row(std::string_view id) const { return rows_.contains(id); }

    std::optional<std::size_t> find_machine(std::string_view machine) const {
        const auto it = std::find(machines_.begin(), machines_.end(), machine);
        if (it == machines_.end()) return std::nullopt;
        return static_cast<std::size_t>(it - machines_.begin());
    }

    std::size_t machine_index(std::string_view machine) const {
        if (auto idx = find_machine(machine)) return *idx;
        throw DataError("score matrix has no column for machine '" + std::string(machine) + "'");
    }

    const std::vector<double>& row(std::string_view id) const {
        const auto it = rows_.find(id);
        if (it == rows_.end()) throw DataError("score matrix has no row for recording '" + std::string(id) + "'");
        return it->second;
    }

    /// Applies f to every entry.
    template <typename F>
    ScoreMatrix transformed(F&& f) const {
        ScoreMatrix out(machines_);
        for (const auto& [id, row] : rows_) {
            std::vector<double> mapped(row.size());
            std::transform(row.begin(), row.end(), mapped.begin(), f);
            out.set_row(id, std::move(mapped));
        }
        return out;
    }

    friend bool operator==(const ScoreMatrix&, const ScoreMatrix&) = default;

private:
    std::vector<std::string> machines_;
    std::map<std::string, std::vector<double>, std::less<>> rows_;
};

class MergedTestSet;

/// Passkey for reading true machine labels out of a MergedTestSet.
class EvaluationKey {
    EvaluationKey() = default;
    friend HiddenLabels hidden_labels(const MergedTestSet& merged);
    friend std::map<std::string, std::vector<Recording>> partition(const MergedTestSet& merged);
};

/// Test recordings of several machines within one split, sorted by id.
class MergedTestSet {
public:
    std::size_t size() const { return recordings_.size(); }
    Split split() const { return split_; }

    /// The fixed, known machine set, sorted by name.
    const std::vector<MachineId>& machines() const { return machines_; }

    std::vector<std::string> machine_names() const {
        std::vector<std::string> names;
        names.reserve(machines_.size());
        for (const auto& m : machines_) names.push_back(m.name);
        return names;
    }

    std::vector<TestProbe> probes() const {
        std::vector<TestProbe> out;
        out.reserve(recordings_.size());
        for (const auto& r : recordings_) out.push_back({r.id, r.split, r.features});
        return out;
    }

    const std::vector<Recording>& recordings(EvaluationKey) const { return recordings_; }

private:
    friend MergedTestSet merge_test_sets(std::map<std::string, std::vector<Recording>> per_machine);

    std::vector<Recording> recordings_;
    std::vector<MachineId> machines_;
    Split split_ = Split::dev;
};

/// Merges per-machine test sets of one split into a single set ordered by recording id.
inline MergedTestSet merge_test_sets(std::map<std::string, std::vector<Recording>> per_machine) {
    if (per_machine.empty()) throw DataError("merge needs at least one machine");
    MergedTestSet merged;
    std::set<std::string, std::less<>> ids;
    std::optional<Split> split;
    for (auto& [machine, recordings] : per_machine) {
        if (recordings.empty()) throw DataError("machine '" + machine + "' has an empty test set");
        MachineId id = recordings.front().true_machine;
        id.name = machine;
        merged.machines_.push_back(std::move(id));
        for (auto& r : recordings) {
            if (r.true_machine.name != machine)
                throw DataError("recording '" + r.id + "' is filed under machine '" + machine + "' but labeled '" +
                                r.true_machine.name + "'");
            if (!ids.insert(r.id).second) throw DataError("duplicate recording id '" + r.id + "'");
            if (split && *split != r.split)
                throw DataError("recording '" + r.id + "' belongs to a different split; merge is per split");
            split = r.split;
            merged.recordings_.push_back(std::move(r));
        }
    }
    merged.split_ = *split;
    std::sort(merged.recordings_.begin(), merged.recordings_.end(),
              [](const Recording& a, const Recording& b) { return a.id < b.id; });
    return merged;
}

inline HiddenLabels hidden_labels(const MergedTestSet& merged) {
    HiddenLabels labels;
    for (const auto& r : merged.recordings(EvaluationKey{})) labels.emplace(r.id, HiddenLabel{r.true_machine.name, r.is_anomaly});
    return labels;
}

/// Post hoc split of a merged set back into per-machine sets.
inline std::map<std::string, std::vector<Recording>> partition(const MergedTestSet& merged) {
    std::map<std::string, std::vector<Recording>> out;
    for (const auto& r : merged.recordings(EvaluationKey{})) out[r.true_machine.name].push_back(r);
    return out;
}

struct AggregatedScore {
    double score = 0.0;
    std::size_t machine_index = 0;
    bool tie = false;
};

/// min over the row; ties go to the lowest index and are flagged.
inline AggregatedScore aggregate_score(std::span<const double> row) {
    if (row.empty()) throw DataError("cannot aggregate an empty score row");
    AggregatedScore best{row[0], 0, false};
    for (std::size_t j = 0; j < row.size(); ++j) {
        if (!std::isfinite(row[j])) throw DataError("non-finite score at machine index " + std::to_string(j));
        if (j == 0) continue;
        if (row[j] < best.score) {
            best = {row[j], j, false};
        } else if (row[j] == best.score) {
            best.tie = true;
        }
    }
    return best;
}

struct Identification {
    std::map<std::string, std::string, std::less<>> assigned;  // recording id -> machine
    std::size_t ties = 0;
};

namespace detail {

// Matrix column indices of the merged set's machines, in matrix order.
inline std::vector<std::size_t> candidate_columns(const ScoreMatrix& matrix, const MergedTestSet& merged) {
    std::vector<std::size_t> cols;
    for (const auto& m : merged.machines()) cols.push_back(matrix.machine_index(m.name));
    std::sort(cols.begin(), cols.end());
    return cols;
}

inline std::vector<double> select(const std::vector<double>& row, std::span<const std::size_t> cols) {
    std::vector<double> out;
    out.reserve(cols.size());
    for (auto c : cols) out.push_back(row[c]);
    return out;
}

inline void require_rows(const ScoreMatrix& matrix, const std::vector<TestProbe>& probes) {
    std::vector<std::string> missing;
    for (const auto& p : probes)
        if (!matrix.has_row(p.id)) missing.push_back(p.id);
    if (missing.empty()) return;
    std::string msg = "score matrix is missing rows for:";
    for (const auto& id : missing) msg += " " + id;
    throw DataError(msg);
}

}  // namespace detail

/// Implicit machine identification: argmin_m s_m(x) over the split's machines.
inline Identification identify(const ScoreMatrix& matrix, const MergedTestSet& merged) {
    const auto probes = merged.probes();
    detail::require_rows(matrix, probes);
    const auto cols = detail::candidate_columns(matrix, merged);
    Identification result;
    for (const auto& probe : probes) {
        const auto picked = aggregate_score(detail::select(matrix.row(probe.id), cols));
        result.assigned.emplace(probe.id, matrix.machines()[cols[picked.machine_index]]);
        if (picked.tie) ++result.ties;
    }
    return result;
}

inline double misid_probability(const std::map<std::string, std::string, std::less<>>& identified,
                                const HiddenLabels& truth) {
    if (identified.size() != truth.size()) throw DataError("identification and labels cover different recordings");
    if (truth.empty()) throw DataError("no recordings to identify");
    std::size_t wrong = 0;
    for (const auto& [id, label] : truth) {
        const auto it = identified.find(id);
        if (it == identified.end()) throw DataError("recording '" + id + "' was not identified");
        if (it->second != label.machine) ++wrong;
    }
    return static_cast<double>(wrong) / static_cast<double>(truth.size());
}

struct EvalConfig {
    double p = metrics::kDefaultMaxFpr;
    metrics::AverageMode mode = metrics::AverageMode::harmonic;
    std::optional<std::uint64_t> seed;

    friend bool operator==(const EvalConfig&, const EvalConfig&) = default;
};

struct MachineResult {
    std::string machine;
    std::size_t n_normal = 0;
    std::size_t n_anomalous = 0;
    std::optional<metrics::MetricPair> metrics;  // nullopt: single-class labels

    friend bool operator==(const MachineResult&, const MachineResult&) = default;
};

struct ModeResult {
    std::vector<MachineResult> per_machine;
    std::optional<double> aggregate;

    friend bool operator==(const ModeResult&, const ModeResult&) = default;
};

struct IdentificationStats {
    std::size_t k = 0;
    std::size_t n = 0;
    double raw_accuracy = 0.0;
    std::optional<double> normalized_accuracy;  // nullopt for k < 2
    double misid_probability = 0.0;
    std::size_t ties = 0;

    friend bool operator==(const IdentificationStats&, const IdentificationStats&) = default;
};

struct UnknownResult {
    ModeResult mode;
    IdentificationStats identification;
};

struct EvalReport {
    std::string scope;
    EvalConfig config;
    std::vector<std::string> machines;
    ModeResult known;
    ModeResult unknown;
    std::optional<double> delta_norm;
    IdentificationStats identification;
    std::string normalizer = "none";
    std::vector<std::string> warnings;

    friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

using PerMachineScores = std::map<std::string, metrics::LabeledScores>;

/// Oracle column s_{m*}(x) of each recording, grouped by true machine.
inline PerMachineScores known_scores(const ScoreMatrix& matrix, const MergedTestSet& merged) {
    detail::require_rows(matrix, merged.probes());
    PerMachineScores out;
    for (const auto& [machine, recordings] : partition(merged)) {
        const auto col = matrix.machine_index(machine);
        auto& slot = out[machine];
        for (const auto& r : recordings) {
            slot.scores.push_back(matrix.row(r.id)[col]);
            slot.labels.push_back(r.is_anomaly);
        }
    }
    return out;
}

/// min_m s_m(x), grouped post hoc by true machine.
inline PerMachineScores unknown_scores(const ScoreMatrix& matrix, const MergedTestSet& merged) {
    detail::require_rows(matrix, merged.probes());
    const auto cols = detail::candidate_columns(matrix, merged);
    PerMachineScores out;
    for (const auto& [machine, recordings] : partition(merged)) {
        auto& slot = out[machine];
        for (const auto& r : recordings) {
            slot.scores.push_back(aggregate_score(detail::select(matrix.row(r.id), cols)).score);
            slot.labels.push_back(r.is_anomaly);
        }
    }
    return out;
}

/// Per-machine metrics plus the pooled average. Machines whose labels are
/// single-class get no metrics and a warning.
inline ModeResult evaluate_scores(const PerMachineScores& scores, const EvalConfig& config,
                                  std::vector<std::string>* warnings = nullptr) {
    ModeResult result;
    std::vector<metrics::MetricPair> defined;
    for (const auto& [machine, data] : scores) {
        MachineResult mr{machine, 0, 0, std::nullopt};
        for (bool label : data.labels) label ? ++mr.n_anomalous : ++mr.n_normal;
        if (mr.n_normal > 0 && mr.n_anomalous > 0) {
            mr.metrics = metrics::metric_pair(data, config.p);
            defined.push_back(*mr.metrics);
        } else if (warnings) {
            warnings->push_back("machine '" + machine + "' has single-class test labels; excluded from aggregation");
        }
        result.per_machine.push_back(std::move(mr));
    }
    if (!defined.empty()) result.aggregate = metrics::aggregate(defined, config.mode);
    return result;
}

inline ModeResult evaluate_known(const ScoreMatrix& matrix, const MergedTestSet& merged, const EvalConfig& config = {},
                                 std::vector<std::string>* warnings = nullptr) {
    return evaluate_scores(known_scores(matrix, merged), config, warnings);
}

inline IdentificationStats identification_stats(const ScoreMatrix& matrix, const MergedTestSet& merged) {
    const auto ident = identify(matrix, merged);
    const auto truth = hidden_labels(merged);
    IdentificationStats stats;
    stats.k = merged.machines().size();
    stats.n = truth.size();
    stats.misid_probability = misid_probability(ident.assigned, truth);
    stats.raw_accuracy = 1.0 - stats.misid_probability;
    if (stats.k >= 2) stats.normalized_accuracy = metrics::normalize_id_accuracy(stats.raw_accuracy, stats.k);
    stats.ties = ident.ties;
    return stats;
}

inline UnknownResult evaluate_unknown(const ScoreMatrix& matrix, const MergedTestSet& merged,
                                      const EvalConfig& config = {}, std::vector<std::string>* warnings = nullptr) {
    return {evaluate_scores(unknown_scores(matrix, merged), config, warnings), identification_stats(matrix, merged)};
}

/// Combines both modes into a report; Δ_norm is taken on the aggregates.
inline EvalReport assemble_report(std::string scope, const EvalConfig& config, std::vector<std::string> machines,
                                  ModeResult known, ModeResult unknown, IdentificationStats identification,
                                  std::vector<std::string> warnings = {}) {
    EvalReport report;
    report.scope = std::move(scope);
    report.config = config;
    report.machines = std::move(machines);
    report.known = std::move(known);
    report.unknown = std::move(unknown);
    report.identification = identification;
    report.warnings = std::move(warnings);
    if (report.known.aggregate && report.unknown.aggregate)
        report.delta_norm = metrics::delta_norm(*report.known.aggregate, *report.unknown.aggregate);
    return report;
}

inline EvalReport full_report(const ScoreMatrix& matrix, const MergedTestSet& merged, const EvalConfig& config = {}) {
    std::vector<std::string> warnings;
    auto known = evaluate_known(matrix, merged, config, &warnings);
    auto unknown = evaluate_unknown(matrix, merged, config);  // same partition, warnings already recorded
    return assemble_report(std::string(to_string(merged.split())), config, merged.machine_names(), std::move(known),
                           std::move(unknown.mode), unknown.identification, std::move(warnings));
}

/// Pools several split reports: per-machine metric pairs are concatenated and
/// re-averaged; identification counts are pooled, and the normalized accuracy
/// is the recording-weighted mean of the per-split normalized values.
inline EvalReport joint_report(std::span<const EvalReport> reports, const EvalConfig& config) {
    if (reports.empty()) throw DataError("no split reports to combine");
    ModeResult known;
    ModeResult unknown;
    std::vector<std::string> machines;
    std::vector<std::string> warnings;
    IdentificationStats ident;
    double wrong = 0.0;
    double weighted_norm = 0.0;
    bool norm_defined = true;
    for (const auto& r : reports) {
        for (auto mr : r.known.per_machine) {
            mr.machine = r.scope + "/" + mr.machine;
            known.per_machine.push_back(std::move(mr));
        }
        for (auto mr : r.unknown.per_machine) {
            mr.machine = r.scope + "/" + mr.machine;
            unknown.per_machine.push_back(std::move(mr));
        }
        for (const auto& m : r.machines) machines.push_back(r.scope + "/" + m);
        warnings.insert(warnings.end(), r.warnings.begin(), r.warnings.end());
        ident.k += r.identification.k;
        ident.n += r.identification.n;
        ident.ties += r.identification.ties;
        wrong += r.identification.misid_probability * static_cast<double>(r.identification.n);
        if (r.identification.normalized_accuracy)
            weighted_norm += *r.identification.normalized_accuracy * static_cast<double>(r.identification.n);
        else
            norm_defined = false;
    }
    auto pooled = [&](const ModeResult& mode) -> std::optional<double> {
        std::vector<metrics::MetricPair> defined;
        for (const auto& mr : mode.per_machine)
            if (mr.metrics) defined.push_back(*mr.metrics);
        if (defined.empty()) return std::nullopt;
        return metrics::aggregate(defined, config.mode);
    };
    known.aggregate = pooled(known);
    unknown.aggregate = pooled(unknown);
    const auto n = static_cast<double>(ident.n);
    ident.misid_probability = wrong / n;
    ident.raw_accuracy = 1.0 - ident.misid_probability;
    if (norm_defined) ident.normalized_accuracy = weighted_norm / n;
    return assemble_report("joint", config, std::move(machines), std::move(known), std::move(unknown), ident,
                           std::move(warnings));
}

}  // namespace idfree::protocol

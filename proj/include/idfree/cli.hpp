#pragma once

// Subcommands of the idfree-asd tool. Each cmd_* function is pure apart from
// reading its input files; run_cli adds argument parsing, output files and
// exit codes (0 ok, 1 usage, 2 data, 3 internal).

#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"

#include "idfree/error.hpp"
#include "idfree/io.hpp"
#include "idfree/metrics.hpp"
#include "idfree/protocol.hpp"
#include "idfree/scorers.hpp"
#include "idfree/simulate.hpp"

namespace idfree::cli {

namespace fs = std::filesystem;
using io::Json;

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kInternal = 3 };

// ---------------------------------------------------------------------------
// evaluate

struct EvaluateOptions {
    std::optional<fs::path> scores;
    std::optional<fs::path> manifest;
    fs::path labels;
    protocol::EvalConfig eval;
    std::optional<bool> higher_is_anomalous;
};

struct EvaluateOutput {
    std::vector<protocol::EvalReport> reports;  // one per split, then "joint" when several splits exist
    std::vector<std::string> warnings;
    Json document;
};

namespace detail {

struct ManifestScores {
    protocol::ScoreMatrix matrix;
    std::string normalizer;
};

inline std::string join_ids(const std::vector<std::string>& ids) {
    std::string out;
    for (const auto& id : ids) out += (out.empty() ? "" : " ") + id;
    return out;
}

inline Json parse_json_file(const fs::path& path, const std::string& text) {
    try {
        return Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw DataError(path.filename().string() + ": " + e.what());
    }
}

// Manifest: {"format", "features", "scorer", "machines": [{"id", "reference", "scorer"?}]}
inline ManifestScores scores_from_manifest(const fs::path& path, const std::vector<protocol::Recording>& recordings,
                                           std::vector<io::InputDigest>& digests) {
    const auto text = io::read_file(path);
    digests.push_back(io::digest_of("manifest", path, text));
    const auto manifest = parse_json_file(path, text);
    const auto dir = path.parent_path();
    try {
        if (manifest.at("format") != io::kFormatTag) throw DataError("manifest: unsupported format version");
        const auto base = manifest.contains("scorer") ? io::scorer_spec_from_json(manifest.at("scorer"))
                                                      : scorers::ScorerSpec{};

        const fs::path features_path = dir / manifest.at("features").get<std::string>();
        const auto features_text = io::read_file(features_path);
        digests.push_back(io::digest_of("features", features_path, features_text));
        const auto features = io::parse_features(features_text, features_path.filename().string());

        std::map<std::string, scorers::MachineScorer> machines;
        std::set<std::string> normalizers;
        for (const auto& m : manifest.at("machines")) {
            const auto id = m.at("id").get<std::string>();
            const fs::path ref_path = dir / m.at("reference").get<std::string>();
            const auto ref_text = io::read_file(ref_path);
            digests.push_back(io::digest_of("reference:" + id, ref_path, ref_text));
            std::vector<std::vector<double>> vectors;
            for (auto& [rid, v] : io::parse_features(ref_text, ref_path.filename().string())) vectors.push_back(v);
            auto spec = m.contains("scorer") ? io::scorer_spec_from_json(m.at("scorer"), base) : base;
            normalizers.insert(std::string(scorers::to_string(spec.normalizer.kind)));
            if (!machines.emplace(id, scorers::MachineScorer{spec, scorers::ReferenceSet(id, std::move(vectors))}).second)
                throw DataError("manifest lists machine '" + id + "' twice");
        }

        std::vector<protocol::TestProbe> probes;
        std::vector<std::string> missing;
        for (const auto& r : recordings) {
            const auto it = features.find(r.id);
            if (it == features.end()) {
                missing.push_back(r.id);
                continue;
            }
            probes.push_back({r.id, r.split, it->second});
        }
        if (!missing.empty()) throw DataError("recordings without features: " + join_ids(missing));
        return {scorers::build_score_matrix(machines, probes),
                normalizers.size() == 1 ? *normalizers.begin() : std::string("mixed")};
    } catch (const Json::exception& e) {
        throw DataError("manifest: " + std::string(e.what()));
    }
}

}  // namespace detail

inline EvaluateOutput cmd_evaluate(const EvaluateOptions& opt) {
    if (opt.scores.has_value() == opt.manifest.has_value())
        throw UsageError("evaluate needs exactly one of --scores or --manifest");
    if (!(opt.eval.p > 0.0 && opt.eval.p <= 1.0)) throw UsageError("--pauc-p must lie in (0, 1]");

    EvaluateOutput out;
    std::vector<io::InputDigest> digests;

    const auto labels_text = io::read_file(opt.labels);
    digests.push_back(io::digest_of("labels", opt.labels, labels_text));
    auto labels = io::parse_labels(labels_text, opt.labels.filename().string());
    out.warnings = labels.warnings;

    {
        std::set<std::string> ids;
        for (const auto& r : labels.recordings)
            if (!ids.insert(r.id).second)
                throw DataError("recording id '" + r.id + "' appears in several splits; score rows would be ambiguous");
    }

    protocol::ScoreMatrix matrix;
    std::string normalizer = "unspecified";
    std::optional<bool> orientation = opt.higher_is_anomalous;
    if (opt.scores) {
        const auto text = io::read_file(*opt.scores);
        digests.push_back(io::digest_of("scores", *opt.scores, text));
        auto parsed = io::parse_scores(text, opt.scores->filename().string());
        if (!orientation) orientation = parsed.higher_is_anomalous;
        matrix = std::move(parsed.matrix);
    } else {
        auto built = detail::scores_from_manifest(*opt.manifest, labels.recordings, digests);
        matrix = std::move(built.matrix);
        normalizer = built.normalizer;
    }
    const bool higher_is_anomalous = orientation.value_or(true);
    if (!higher_is_anomalous) matrix = matrix.transformed([](double v) { return -v; });

    // Cross-reference recordings and machines.
    std::set<std::string> label_ids;
    std::vector<std::string> missing_rows;
    for (const auto& r : labels.recordings) {
        label_ids.insert(r.id);
        if (!matrix.has_row(r.id)) missing_rows.push_back(r.id);
    }
    if (!missing_rows.empty()) throw DataError("recordings in labels but not in scores: " + detail::join_ids(missing_rows));
    std::vector<std::string> extra_rows;
    for (const auto& [id, row] : matrix.rows())
        if (!label_ids.contains(id)) extra_rows.push_back(id);
    if (!extra_rows.empty()) throw DataError("recordings in scores but not in labels: " + detail::join_ids(extra_rows));

    std::set<std::string> label_machines;
    std::vector<std::string> missing_machines;
    for (const auto& r : labels.recordings)
        if (label_machines.insert(r.true_machine.name).second && !matrix.find_machine(r.true_machine.name))
            missing_machines.push_back(r.true_machine.name);
    if (!missing_machines.empty())
        throw DataError("no score column for machine(s): " + detail::join_ids(missing_machines));
    for (const auto& m : matrix.machines())
        if (!label_machines.contains(m)) out.warnings.push_back("score column '" + m + "' has no labeled recordings");

    // One merged test set per split.
    std::map<protocol::Split, std::map<std::string, std::vector<protocol::Recording>>> by_split;
    for (auto& r : labels.recordings) by_split[r.split][r.true_machine.name].push_back(std::move(r));

    for (auto& [split, per_machine] : by_split) {
        const auto merged = protocol::merge_test_sets(std::move(per_machine));
        auto report = protocol::full_report(matrix, merged, opt.eval);
        report.normalizer = normalizer;
        for (const auto& w : report.warnings) out.warnings.push_back(std::string(protocol::to_string(split)) + ": " + w);
        out.reports.push_back(std::move(report));
    }
    if (out.reports.size() > 1) {
        auto joint = protocol::joint_report(out.reports, opt.eval);
        joint.normalizer = normalizer;
        out.reports.push_back(std::move(joint));
    }

    Json body;
    body["config"] = io::to_json(opt.eval);
    body["config"]["higher_is_anomalous"] = higher_is_anomalous;
    Json reports = Json::array();
    for (const auto& r : out.reports) reports.push_back(io::to_json(r));
    body["reports"] = std::move(reports);
    body["warnings"] = out.warnings;
    out.document = io::report_document("evaluation", digests, std::move(body));
    return out;
}

// ---------------------------------------------------------------------------
// check-table

inline constexpr double kTableTolerancePercentPoints = 0.005;

struct TableCheck {
    io::TableRow row;
    std::optional<double> computed;
    bool pass = false;
};

struct CheckTableOutput {
    std::vector<TableCheck> checks;
    bool all_pass = true;
    std::string text;
    Json document;
};

inline CheckTableOutput check_rows(std::vector<io::TableRow> rows, double tolerance_pp = kTableTolerancePercentPoints) {
    CheckTableOutput out;
    Json results = Json::array();
    for (auto& row : rows) {
        TableCheck check{std::move(row), std::nullopt, false};
        check.computed = metrics::delta_norm(check.row.a_known, check.row.a_unknown);
        if (!check.computed || !check.row.expected_delta) {
            check.pass = !check.computed && !check.row.expected_delta;
        } else {
            // representation slack only; the tolerance itself is fixed
            check.pass = std::abs(*check.computed * 100.0 - *check.row.expected_delta * 100.0) <= tolerance_pp + 1e-12;
        }
        out.all_pass = out.all_pass && check.pass;

        char line[512];
        const std::string computed = check.computed ? io::format_double(std::round(*check.computed * 1e6) / 1e4) + "%" : "undefined";
        const std::string expected = check.row.expected_delta ? io::format_percent(check.row.expected_delta) + "%" : "undefined";
        std::snprintf(line, sizeof line, "%s  %s  a_known=%s a_unknown=%s delta_norm=%s expected=%s\n",
                      check.pass ? "PASS" : "FAIL", check.row.label.c_str(),
                      io::format_double(check.row.a_known).c_str(), io::format_double(check.row.a_unknown).c_str(),
                      computed.c_str(), expected.c_str());
        out.text += line;

        Json r;
        r["label"] = check.row.label;
        r["a_known"] = check.row.a_known;
        r["a_unknown"] = check.row.a_unknown;
        r["delta_norm"] = io::optional_number(check.computed);
        r["delta_norm_percent"] = io::format_percent(check.computed);
        r["expected_delta"] = io::optional_number(check.row.expected_delta);
        r["pass"] = check.pass;
        results.push_back(std::move(r));
        out.checks.push_back(std::move(check));
    }
    out.document = Json{{"tolerance_percent_points", tolerance_pp}, {"all_pass", out.all_pass}, {"rows", std::move(results)}};
    return out;
}

inline CheckTableOutput cmd_check_table(const fs::path& path) {
    const auto text = io::read_file(path);
    auto out = check_rows(io::parse_table(text, path.filename().string()));
    out.document = io::report_document("check-table", {io::digest_of("table", path, text)}, std::move(out.document));
    return out;
}

// ---------------------------------------------------------------------------
// simulate / sweep

struct SimulateOutput {
    simulate::SweepResult result;
    std::optional<protocol::EvalReport> report;  // single-point runs only
    std::string csv;
    std::string svg;
    Json document;
};

inline SimulateOutput cmd_simulate(const simulate::SimConfig& config) {
    simulate::validate(config);
    SimulateOutput out;
    out.report = simulate::simulate_report(config);
    out.result = {config, {simulate::point_from_report(config, *out.report)}};
    out.csv = io::sweep_csv(out.result);
    out.svg = io::sweep_svg(out.result);
    Json body = io::to_json(out.result);
    body["report"] = io::to_json(*out.report);
    out.document = io::report_document("simulate", {}, std::move(body));
    return out;
}

inline SimulateOutput cmd_sweep(const simulate::SimConfig& base, const std::vector<double>& separations,
                                std::size_t repeats, std::size_t threads = 1) {
    SimulateOutput out;
    out.result = simulate::sweep(base, separations, repeats, threads);
    out.csv = io::sweep_csv(out.result);
    out.svg = io::sweep_svg(out.result);
    Json body = io::to_json(out.result);
    body["repeats"] = repeats;
    out.document = io::report_document("sweep", {}, std::move(body));
    return out;
}

// ---------------------------------------------------------------------------
// argument parsing and dispatch

inline Json error_json(std::string_view kind, int code, std::string_view message) {
    return Json{{"error", {{"kind", kind}, {"exit_code", code}, {"message", message}}}};
}

inline void emit(const std::optional<fs::path>& path, const std::string& content, std::ostream& out) {
    if (path) io::write_file_atomic(*path, content);
    else out << content;
}

inline bool parse_flag_bool(const std::string& text) {
    if (text == "true") return true;
    if (text == "false") return false;
    throw UsageError("expected true or false, got '" + text + "'");
}

inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Identity-free anomalous sound detection evaluation"};
    app.name("idfree-asd");
    app.require_subcommand(1);

    std::string avg = "harmonic";
    double pauc_p = metrics::kDefaultMaxFpr;
    std::optional<std::uint64_t> seed;
    std::optional<fs::path> out_path, csv_path, svg_path;

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "Evaluate a score matrix with and without machine identity");
    EvaluateOptions eval_opt;
    std::string scores_s, manifest_s, labels_s, higher_s;
    evaluate->add_option("--scores", scores_s, "Wide score CSV (recording_id,<machine>...)");
    evaluate->add_option("--manifest", manifest_s, "Scorer manifest JSON (reference sets + test features)");
    evaluate->add_option("--labels", labels_s, "Label CSV (recording_id,true_machine,is_anomaly,split[,domain])")->required();
    evaluate->add_option("--higher-is-anomalous", higher_s, "Score orientation {true|false}; overrides the file header");

    // check-table
    auto* check = app.add_subcommand("check-table", "Recompute normalized degradation for aggregate rows");
    std::string table_s;
    check->add_option("table", table_s, "CSV of label,a_known,a_unknown,expected_delta")->required();

    // simulate / sweep
    auto* sim = app.add_subcommand("simulate", "Run one synthetic evaluation point");
    auto* swp = app.add_subcommand("sweep", "Sweep cluster separation and emit the scatter table");
    simulate::SimConfig sim_cfg;
    std::string scorer_kind = "nearest_reference", normalizer_kind = "none";
    std::optional<double> epsilon;
    std::vector<double> separations;
    std::size_t repeats = 5;
    std::size_t threads = 1;
    for (auto* sc : {sim, swp}) {
        sc->add_option("--k", sim_cfg.k, "Number of machines")->capture_default_str();
        sc->add_option("--d", sim_cfg.d, "Feature dimension")->capture_default_str();
        sc->add_option("--n-ref", sim_cfg.n_ref, "Reference vectors per machine")->capture_default_str();
        sc->add_option("--n-norm", sim_cfg.n_norm, "Normal test recordings per machine")->capture_default_str();
        sc->add_option("--n-anom", sim_cfg.n_anom, "Anomalous test recordings per machine")->capture_default_str();
        sc->add_option("--spread", sim_cfg.spread, "Within-machine standard deviation")->capture_default_str();
        sc->add_option("--anomaly-offset", sim_cfg.anomaly_offset, "Radial anomaly shift")->capture_default_str();
        sc->add_option("--scorer", scorer_kind, "nearest_reference | mahalanobis")->capture_default_str();
        sc->add_option("--scorer-k", sim_cfg.scorer.k, "Neighbours for nearest_reference")->capture_default_str();
        sc->add_option("--epsilon", epsilon, "Covariance regularization for mahalanobis");
        sc->add_option("--normalizer", normalizer_kind, "none | zscore_reference | local_density")->capture_default_str();
        sc->add_option("--k-norm", sim_cfg.scorer.normalizer.k_norm, "Neighbourhood size for local_density")->capture_default_str();
        sc->add_option("--csv", csv_path, "Scatter CSV output path");
        sc->add_option("--svg", svg_path, "Scatter SVG output path");
    }
    sim->add_option("--separation", sim_cfg.separation, "Distance between machine centers")->capture_default_str();
    swp->add_option("--separations", separations, "Comma-separated separations (default 3.2..10, 10 points)")->delimiter(',');
    swp->add_option("--repeats", repeats, "Repeats per separation")->capture_default_str();
    swp->add_option("--threads", threads, "Worker threads")->capture_default_str();

    for (auto* sc : {evaluate, check, sim, swp}) {
        sc->add_option("--out", out_path, "Report output path (default: stdout)");
        if (sc == check) continue;
        sc->add_option("--pauc-p", pauc_p, "pAUC maximum false-positive rate")->capture_default_str();
        sc->add_option("--avg", avg, "Averaging over machines {harmonic|arithmetic}")->capture_default_str();
        sc->add_option("--seed", seed, "Random seed (recorded in reports)");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        err << error_json("usage", kUsage, e.what()).dump() << "\n";
        return kUsage;
    }

    try {
        protocol::EvalConfig eval{pauc_p, metrics::parse_average_mode(avg), seed};
        if (!(eval.p > 0.0 && eval.p <= 1.0)) throw UsageError("--pauc-p must lie in (0, 1]");

        if (*evaluate) {
            if (!scores_s.empty()) eval_opt.scores = scores_s;
            if (!manifest_s.empty()) eval_opt.manifest = manifest_s;
            eval_opt.labels = labels_s;
            eval_opt.eval = eval;
            if (!higher_s.empty()) eval_opt.higher_is_anomalous = parse_flag_bool(higher_s);
            const auto result = cmd_evaluate(eval_opt);
            for (const auto& w : result.warnings) err << "warning: " << w << "\n";
            emit(out_path, io::dump(result.document), out);
            return kOk;
        }
        if (*check) {
            const auto result = cmd_check_table(table_s);
            if (out_path) io::write_file_atomic(*out_path, io::dump(result.document));
            out << result.text;
            if (!result.all_pass) {
                err << error_json("data", kData, "table check failed").dump() << "\n";
                return kData;
            }
            return kOk;
        }

        sim_cfg.scorer.kind = scorers::parse_scorer_kind(scorer_kind);
        sim_cfg.scorer.normalizer.kind = scorers::parse_normalizer_kind(normalizer_kind);
        sim_cfg.scorer.epsilon = epsilon;
        sim_cfg.eval = eval;
        sim_cfg.eval.seed.reset();
        if (seed) sim_cfg.seed = *seed;

        const auto result = *sim ? cmd_simulate(sim_cfg)
                                 : cmd_sweep(sim_cfg, separations.empty() ? simulate::default_separations() : separations,
                                             repeats, threads);
        if (csv_path) io::write_file_atomic(*csv_path, result.csv);
        if (svg_path) io::write_file_atomic(*svg_path, result.svg);
        emit(out_path, io::dump(result.document), out);
        return kOk;
    } catch (const UsageError& e) {
        err << error_json("usage", kUsage, e.what()).dump() << "\n";
        return kUsage;
    } catch (const DataError& e) {
        err << error_json("data", kData, e.what()).dump() << "\n";
        return kData;
    } catch (const std::exception& e) {
        err << error_json("internal", kInternal, e.what()).dump() << "\n";
        return kInternal;
    }
}

}  // namespace idfree::cli

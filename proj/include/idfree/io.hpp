#pragma once

// File formats and report serialization.
//
// Every text format starts with the line `# format: idfree-asd/1`. Further
// lines starting with '#' are comments, except `# higher-is-anomalous: <bool>`
// in score files, which declares the score orientation.

#include <algorithm>
#include <array>
#include <cmath>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include <openssl/evp.h>

#include "json.hpp"

#include "idfree/error.hpp"
#include "idfree/metrics.hpp"
#include "idfree/protocol.hpp"
#include "idfree/scorers.hpp"
#include "idfree/simulate.hpp"

namespace idfree::io {

using Json = nlohmann::ordered_json;

inline constexpr std::string_view kFormatTag = "idfree-asd/1";
inline constexpr std::string_view kFormatLine = "# format: idfree-asd/1";
inline constexpr std::string_view kToolVersion = "1.0.0";

// ---------------------------------------------------------------------------
// Text helpers

inline std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

inline std::vector<std::string> split_fields(std::string_view line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.emplace_back(trim(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

/// Shortest decimal that round-trips.
inline std::string format_double(double v) {
    std::array<char, 64> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

inline std::string format_percent(std::optional<double> fraction) {
    if (!fraction) return "undefined";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f", *fraction * 100.0);
    return buf;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Writes via a temporary file in the same directory and renames over the target.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot write '" + tmp.string() + "'");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw DataError("write to '" + tmp.string() + "' failed");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw DataError("cannot rename '" + tmp.string() + "' to '" + path.string() + "': " + ec.message());
}

inline std::string sha256_hex(std::string_view content) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int len = 0;
    if (EVP_Digest(content.data(), content.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1)
        throw InvariantError("SHA-256 digest failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

struct InputDigest {
    std::string role;
    std::string name;  // file name only, so reports do not depend on the working directory
    std::string sha256;

    friend bool operator==(const InputDigest&, const InputDigest&) = default;
};

inline InputDigest digest_of(std::string role, const std::filesystem::path& path, std::string_view content) {
    return {std::move(role), path.filename().string(), sha256_hex(content)};
}

// ---------------------------------------------------------------------------
// CSV reading

struct CsvLine {
    std::size_t number = 0;  // 1-based line number in the file
    std::vector<std::string> fields;
};

struct CsvTable {
    std::string source;
    std::vector<std::string> comments;  // text after '#', format line excluded
    CsvLine header;
    std::vector<CsvLine> rows;
};

inline CsvTable parse_csv(std::string_view text, std::string source) {
    CsvTable table;
    table.source = std::move(source);
    std::size_t number = 0;
    bool saw_format = false;
    bool saw_header = false;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        const auto raw = text.substr(pos, nl == std::string_view::npos ? text.npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++number;
        const auto line = trim(raw);
        if (!saw_format) {
            if (line != kFormatLine)
                throw DataError(table.source + ":" + std::to_string(number) + ": expected leading '" +
                                std::string(kFormatLine) + "'");
            saw_format = true;
            continue;
        }
        if (line.empty()) continue;
        if (line.front() == '#') {
            table.comments.emplace_back(trim(line.substr(1)));
            continue;
        }
        CsvLine parsed{number, split_fields(line)};
        if (!saw_header) {
            table.header = std::move(parsed);
            saw_header = true;
            continue;
        }
        if (parsed.fields.size() != table.header.fields.size())
            throw DataError(table.source + ":" + std::to_string(number) + ": expected " +
                            std::to_string(table.header.fields.size()) + " fields, found " +
                            std::to_string(parsed.fields.size()));
        table.rows.push_back(std::move(parsed));
    }
    if (!saw_format) throw DataError(table.source + ": empty file");
    if (!saw_header) throw DataError(table.source + ": missing header row");
    return table;
}

inline double parse_number(std::string_view field, const std::string& where) {
    double value = 0.0;
    const auto* first = field.data();
    const auto* last = field.data() + field.size();
    if (!field.empty() && *first == '+') ++first;
    const auto res = std::from_chars(first, last, value);
    if (field.empty() || res.ec != std::errc{} || res.ptr != last)
        throw DataError(where + ": malformed number '" + std::string(field) + "'");
    if (!std::isfinite(value)) throw DataError(where + ": non-finite number '" + std::string(field) + "'");
    return value;
}

inline bool parse_bool(std::string_view field, const std::string& where) {
    if (field == "1" || field == "true") return true;
    if (field == "0" || field == "false") return false;
    throw DataError(where + ": malformed boolean '" + std::string(field) + "' (expected 0/1/true/false)");
}

inline std::string where(const CsvTable& t, const CsvLine& line) {
    return t.source + ":" + std::to_string(line.number);
}

// ---------------------------------------------------------------------------
// Score files: recording_id,<machine_1>,...,<machine_K>

struct ScoreFile {
    protocol::ScoreMatrix matrix;
    std::optional<bool> higher_is_anomalous;  // from the file's comment header, if present
};

inline ScoreFile parse_scores(std::string_view text, const std::string& source = "scores") {
    const auto table = parse_csv(text, source);
    ScoreFile out;
    for (const auto& c : table.comments) {
        constexpr std::string_view key = "higher-is-anomalous:";
        if (c.starts_with(key)) out.higher_is_anomalous = parse_bool(trim(std::string_view(c).substr(key.size())), source);
    }
    const auto& h = table.header.fields;
    if (h.empty() || h.front() != "recording_id")
        throw DataError(where(table, table.header) + ": score header must start with 'recording_id'");
    if (h.size() < 2) throw DataError(where(table, table.header) + ": score file has no machine columns");
    std::vector<std::string> machines(h.begin() + 1, h.end());
    for (const auto& m : machines)
        if (m.empty()) throw DataError(where(table, table.header) + ": empty machine name in header");
    out.matrix = protocol::ScoreMatrix(std::move(machines));
    for (const auto& line : table.rows) {
        const auto loc = where(table, line);
        if (line.fields[0].empty()) throw DataError(loc + ": empty recording id");
        std::vector<double> row;
        for (std::size_t j = 1; j < line.fields.size(); ++j) row.push_back(parse_number(line.fields[j], loc));
        try {
            out.matrix.set_row(line.fields[0], std::move(row));
        } catch (const DataError& e) {
            throw DataError(loc + ": " + e.what());
        }
    }
    return out;
}

inline std::string write_scores(const protocol::ScoreMatrix& matrix) {
    std::string out(kFormatLine);
    out += "\nrecording_id";
    for (const auto& m : matrix.machines()) out += "," + m;
    out += "\n";
    for (const auto& [id, row] : matrix.rows()) {
        out += id;
        for (double v : row) out += "," + format_double(v);
        out += "\n";
    }
    return out;
}

// ---------------------------------------------------------------------------
// Label files: recording_id,true_machine,is_anomaly,split[,domain][,machine_type]

struct LabelFile {
    std::vector<protocol::Recording> recordings;
    std::vector<std::string> warnings;
};

inline LabelFile parse_labels(std::string_view text, const std::string& source = "labels") {
    const auto table = parse_csv(text, source);
    const auto& h = table.header.fields;
    const std::vector<std::string> required{"recording_id", "true_machine", "is_anomaly", "split"};
    if (h.size() < required.size() || !std::equal(required.begin(), required.end(), h.begin()))
        throw DataError(where(table, table.header) +
                        ": label header must start with recording_id,true_machine,is_anomaly,split");
    std::optional<std::size_t> domain_col;
    std::optional<std::size_t> type_col;
    LabelFile out;
    for (std::size_t j = required.size(); j < h.size(); ++j) {
        if (h[j] == "domain" && !domain_col) domain_col = j;
        else if (h[j] == "machine_type" && !type_col) type_col = j;
        else out.warnings.push_back(source + ": ignoring unknown column '" + h[j] + "'");
    }
    std::set<std::pair<protocol::Split, std::string>> seen;
    for (const auto& line : table.rows) {
        const auto loc = where(table, line);
        const auto& f = line.fields;
        if (f[0].empty()) throw DataError(loc + ": empty recording id");
        if (f[1].empty()) throw DataError(loc + ": empty machine id");
        protocol::Recording r;
        r.id = f[0];
        r.is_anomaly = parse_bool(f[2], loc);
        try {
            r.split = protocol::parse_split(f[3]);
            if (domain_col && !f[*domain_col].empty()) r.domain = protocol::parse_domain(f[*domain_col]);
        } catch (const DataError& e) {
            throw DataError(loc + ": " + e.what());
        }
        r.true_machine.name = f[1];
        r.true_machine.split = r.split;
        if (type_col && !f[*type_col].empty()) r.true_machine.type = f[*type_col];
        if (!seen.emplace(r.split, r.id).second) throw DataError(loc + ": duplicate recording id '" + r.id + "'");
        out.recordings.push_back(std::move(r));
    }
    if (out.recordings.empty()) throw DataError(source + ": no label rows");
    return out;
}

// ---------------------------------------------------------------------------
// Feature files: recording_id,f_0,...,f_{d-1}

inline std::map<std::string, std::vector<double>> parse_features(std::string_view text,
                                                                 const std::string& source = "features") {
    const auto table = parse_csv(text, source);
    const auto& h = table.header.fields;
    if (h.empty() || h.front() != "recording_id")
        throw DataError(where(table, table.header) + ": feature header must start with 'recording_id'");
    for (std::size_t j = 1; j < h.size(); ++j)
        if (h[j] != "f_" + std::to_string(j - 1))
            throw DataError(where(table, table.header) + ": expected feature column 'f_" + std::to_string(j - 1) +
                            "', found '" + h[j] + "'");
    if (h.size() < 2) throw DataError(where(table, table.header) + ": feature file has no feature columns");
    std::map<std::string, std::vector<double>> out;
    for (const auto& line : table.rows) {
        const auto loc = where(table, line);
        std::vector<double> v;
        for (std::size_t j = 1; j < line.fields.size(); ++j) v.push_back(parse_number(line.fields[j], loc));
        if (!out.emplace(line.fields[0], std::move(v)).second)
            throw DataError(loc + ": duplicate recording id '" + line.fields[0] + "'");
    }
    return out;
}

// ---------------------------------------------------------------------------
// Table check files: label,a_known,a_unknown,expected_delta

struct TableRow {
    std::string label;
    double a_known = 0.0;
    double a_unknown = 0.0;
    std::optional<double> expected_delta;  // fraction; nullopt = "undefined"
    std::size_t line = 0;
};

inline std::vector<TableRow> parse_table(std::string_view text, const std::string& source = "table") {
    const auto table = parse_csv(text, source);
    const std::vector<std::string> expected{"label", "a_known", "a_unknown", "expected_delta"};
    if (table.header.fields != expected)
        throw DataError(where(table, table.header) + ": header must be label,a_known,a_unknown,expected_delta");
    std::vector<TableRow> out;
    for (const auto& line : table.rows) {
        const auto loc = where(table, line);
        TableRow row;
        row.label = line.fields[0];
        row.a_known = parse_number(line.fields[1], loc);
        row.a_unknown = parse_number(line.fields[2], loc);
        std::string_view exp = line.fields[3];
        if (exp == "undefined") {
            row.expected_delta = std::nullopt;
        } else if (exp.ends_with('%')) {
            row.expected_delta = parse_number(trim(exp.substr(0, exp.size() - 1)), loc) / 100.0;
        } else {
            row.expected_delta = parse_number(exp, loc);
        }
        row.line = line.number;
        out.push_back(std::move(row));
    }
    return out;
}

// ---------------------------------------------------------------------------
// JSON

inline Json optional_number(std::optional<double> v) { return v ? Json(*v) : Json(nullptr); }

inline std::optional<double> read_optional_number(const Json& j) {
    if (j.is_null()) return std::nullopt;
    return j.get<double>();
}

inline Json to_json(const protocol::EvalConfig& c) {
    Json j;
    j["pauc_p"] = c.p;
    j["averaging"] = std::string(metrics::to_string(c.mode));
    j["seed"] = c.seed ? Json(*c.seed) : Json(nullptr);
    return j;
}

inline protocol::EvalConfig eval_config_from_json(const Json& j) {
    protocol::EvalConfig c;
    c.p = j.at("pauc_p").get<double>();
    c.mode = metrics::parse_average_mode(j.at("averaging").get<std::string>());
    if (!j.at("seed").is_null()) c.seed = j.at("seed").get<std::uint64_t>();
    return c;
}

inline Json to_json(const protocol::ModeResult& mode) {
    Json per = Json::array();
    for (const auto& mr : mode.per_machine) {
        Json m;
        m["machine"] = mr.machine;
        m["n_normal"] = mr.n_normal;
        m["n_anomalous"] = mr.n_anomalous;
        m["auc"] = mr.metrics ? Json(mr.metrics->auc) : Json(nullptr);
        m["pauc"] = mr.metrics ? Json(mr.metrics->pauc) : Json(nullptr);
        m["auc_percent"] = format_percent(mr.metrics ? std::optional(mr.metrics->auc) : std::nullopt);
        m["pauc_percent"] = format_percent(mr.metrics ? std::optional(mr.metrics->pauc) : std::nullopt);
        per.push_back(std::move(m));
    }
    Json j;
    j["per_machine"] = std::move(per);
    j["aggregate"] = optional_number(mode.aggregate);
    j["aggregate_percent"] = format_percent(mode.aggregate);
    return j;
}

inline protocol::ModeResult mode_from_json(const Json& j, double p) {
    protocol::ModeResult mode;
    for (const auto& m : j.at("per_machine")) {
        protocol::MachineResult mr;
        mr.machine = m.at("machine").get<std::string>();
        mr.n_normal = m.at("n_normal").get<std::size_t>();
        mr.n_anomalous = m.at("n_anomalous").get<std::size_t>();
        if (!m.at("auc").is_null()) mr.metrics = metrics::MetricPair{m.at("auc").get<double>(), m.at("pauc").get<double>(), p};
        mode.per_machine.push_back(std::move(mr));
    }
    mode.aggregate = read_optional_number(j.at("aggregate"));
    return mode;
}

inline Json to_json(const protocol::IdentificationStats& s) {
    Json j;
    j["k"] = s.k;
    j["n"] = s.n;
    j["raw_accuracy"] = s.raw_accuracy;
    j["raw_accuracy_percent"] = format_percent(s.raw_accuracy);
    j["normalized_accuracy"] = optional_number(s.normalized_accuracy);
    j["normalized_accuracy_percent"] = format_percent(s.normalized_accuracy);
    j["misid_probability"] = s.misid_probability;
    j["ties"] = s.ties;
    return j;
}

inline protocol::IdentificationStats identification_from_json(const Json& j) {
    protocol::IdentificationStats s;
    s.k = j.at("k").get<std::size_t>();
    s.n = j.at("n").get<std::size_t>();
    s.raw_accuracy = j.at("raw_accuracy").get<double>();
    s.normalized_accuracy = read_optional_number(j.at("normalized_accuracy"));
    s.misid_probability = j.at("misid_probability").get<double>();
    s.ties = j.at("ties").get<std::size_t>();
    return s;
}

inline Json to_json(const protocol::EvalReport& r) {
    Json j;
    j["scope"] = r.scope;
    j["machines"] = r.machines;
    j["config"] = to_json(r.config);
    j["normalizer"] = r.normalizer;
    j["known_id"] = to_json(r.known);
    j["unknown_id"] = to_json(r.unknown);
    j["delta_norm"] = optional_number(r.delta_norm);
    j["delta_norm_percent"] = format_percent(r.delta_norm);
    j["identification"] = to_json(r.identification);
    j["warnings"] = r.warnings;
    return j;
}

inline protocol::EvalReport eval_report_from_json(const Json& j) {
    protocol::EvalReport r;
    r.scope = j.at("scope").get<std::string>();
    r.machines = j.at("machines").get<std::vector<std::string>>();
    r.config = eval_config_from_json(j.at("config"));
    r.normalizer = j.at("normalizer").get<std::string>();
    r.known = mode_from_json(j.at("known_id"), r.config.p);
    r.unknown = mode_from_json(j.at("unknown_id"), r.config.p);
    r.delta_norm = read_optional_number(j.at("delta_norm"));
    r.identification = identification_from_json(j.at("identification"));
    r.warnings = j.at("warnings").get<std::vector<std::string>>();
    return r;
}

inline Json to_json(const scorers::ScorerSpec& s) {
    Json j;
    j["kind"] = std::string(scorers::to_string(s.kind));
    j["k"] = s.k;
    j["epsilon"] = optional_number(s.epsilon);
    j["normalizer"] = {{"kind", std::string(scorers::to_string(s.normalizer.kind))}, {"k_norm", s.normalizer.k_norm}};
    return j;
}

/// Missing fields keep their defaults; used for manifests as well as reports.
inline scorers::ScorerSpec scorer_spec_from_json(const Json& j, scorers::ScorerSpec base = {}) {
    if (j.contains("kind")) base.kind = scorers::parse_scorer_kind(j.at("kind").get<std::string>());
    if (j.contains("k")) base.k = j.at("k").get<std::size_t>();
    if (j.contains("epsilon")) base.epsilon = read_optional_number(j.at("epsilon"));
    if (j.contains("normalizer")) {
        const auto& n = j.at("normalizer");
        if (n.contains("kind")) base.normalizer.kind = scorers::parse_normalizer_kind(n.at("kind").get<std::string>());
        if (n.contains("k_norm")) base.normalizer.k_norm = n.at("k_norm").get<std::size_t>();
    }
    return base;
}

inline Json to_json(const simulate::SimConfig& c) {
    Json j;
    j["k"] = c.k;
    j["d"] = c.d;
    j["n_ref"] = c.n_ref;
    j["n_norm"] = c.n_norm;
    j["n_anom"] = c.n_anom;
    j["separation"] = c.separation;
    j["spread"] = c.spread;
    j["anomaly_offset"] = c.anomaly_offset;
    j["seed"] = c.seed;
    j["scorer"] = to_json(c.scorer);
    j["eval"] = to_json(c.eval);
    return j;
}

inline simulate::SimConfig sim_config_from_json(const Json& j) {
    simulate::SimConfig c;
    c.k = j.at("k").get<std::size_t>();
    c.d = j.at("d").get<std::size_t>();
    c.n_ref = j.at("n_ref").get<std::size_t>();
    c.n_norm = j.at("n_norm").get<std::size_t>();
    c.n_anom = j.at("n_anom").get<std::size_t>();
    c.separation = j.at("separation").get<double>();
    c.spread = j.at("spread").get<double>();
    c.anomaly_offset = j.at("anomaly_offset").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.scorer = scorer_spec_from_json(j.at("scorer"));
    c.eval = eval_config_from_json(j.at("eval"));
    return c;
}

inline Json to_json(const simulate::SweepPoint& p) {
    Json j;
    j["separation"] = p.separation;
    j["repeat"] = p.repeat;
    j["seed"] = p.seed;
    j["id_accuracy_normalized"] = optional_number(p.id_accuracy_normalized);
    j["delta_norm"] = optional_number(p.delta_norm);
    j["a_known"] = optional_number(p.a_known);
    j["a_unknown"] = optional_number(p.a_unknown);
    j["misid_probability"] = optional_number(p.misid_probability);
    j["error"] = p.error ? Json(*p.error) : Json(nullptr);
    return j;
}

inline simulate::SweepPoint sweep_point_from_json(const Json& j) {
    simulate::SweepPoint p;
    p.separation = j.at("separation").get<double>();
    p.repeat = j.at("repeat").get<std::size_t>();
    p.seed = j.at("seed").get<std::uint64_t>();
    p.id_accuracy_normalized = read_optional_number(j.at("id_accuracy_normalized"));
    p.delta_norm = read_optional_number(j.at("delta_norm"));
    p.a_known = read_optional_number(j.at("a_known"));
    p.a_unknown = read_optional_number(j.at("a_unknown"));
    p.misid_probability = read_optional_number(j.at("misid_probability"));
    if (!j.at("error").is_null()) p.error = j.at("error").get<std::string>();
    return p;
}

inline Json to_json(const simulate::SweepResult& s) {
    Json j;
    j["base"] = to_json(s.base);
    Json points = Json::array();
    for (const auto& p : s.points) points.push_back(to_json(p));
    j["points"] = std::move(points);
    return j;
}

inline simulate::SweepResult sweep_result_from_json(const Json& j) {
    simulate::SweepResult s;
    s.base = sim_config_from_json(j.at("base"));
    for (const auto& p : j.at("points")) s.points.push_back(sweep_point_from_json(p));
    return s;
}

inline Json to_json(const InputDigest& d) {
    return Json{{"role", d.role}, {"name", d.name}, {"sha256", d.sha256}};
}

/// Versioned envelope around a report body.
inline Json report_document(std::string_view kind, const std::vector<InputDigest>& inputs, Json body) {
    Json doc;
    doc["format"] = std::string(kFormatTag);
    doc["tool_version"] = std::string(kToolVersion);
    doc["kind"] = std::string(kind);
    Json in = Json::array();
    for (const auto& d : inputs) in.push_back(to_json(d));
    doc["inputs"] = std::move(in);
    doc["body"] = std::move(body);
    return doc;
}

inline const Json& document_body(const Json& doc, std::string_view kind) {
    if (!doc.contains("format") || doc.at("format") != kFormatTag)
        throw DataError("report document has a missing or unsupported format version");
    if (doc.at("kind") != kind) throw DataError("report document is not of kind '" + std::string(kind) + "'");
    return doc.at("body");
}

inline std::string dump(const Json& j) { return j.dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// Scatter outputs

inline std::string csv_cell(std::optional<double> v) { return v ? format_double(*v) : "undefined"; }

inline std::string sweep_csv(const simulate::SweepResult& s) {
    std::string out(kFormatLine);
    out += "\nseparation,repeat,seed,id_accuracy_normalized,delta_norm,a_known,a_unknown,misid_probability,error\n";
    for (const auto& p : s.points) {
        out += format_double(p.separation) + "," + std::to_string(p.repeat) + "," + std::to_string(p.seed) + "," +
               csv_cell(p.id_accuracy_normalized) + "," + csv_cell(p.delta_norm) + "," + csv_cell(p.a_known) + "," +
               csv_cell(p.a_unknown) + "," + csv_cell(p.misid_probability) + ",";
        if (p.error) {
            std::string e = *p.error;
            for (auto& c : e)
                if (c == ',' || c == '\n') c = ';';
            out += e;
        }
        out += "\n";
    }
    return out;
}

/// Static scatter: x = normalized identification accuracy, y = normalized degradation.
inline std::string sweep_svg(const simulate::SweepResult& s) {
    constexpr double width = 480, height = 360, left = 60, right = 20, top = 20, bottom = 50;
    double x_min = 0.0, x_max = 1.0, y_min = 0.0, y_max = 0.05;
    for (const auto& p : s.points) {
        if (!p.id_accuracy_normalized || !p.delta_norm) continue;
        x_min = std::min(x_min, *p.id_accuracy_normalized);
        y_min = std::min(y_min, *p.delta_norm);
        y_max = std::max(y_max, *p.delta_norm);
    }
    auto px = [&](double x) { return left + (x - x_min) / (x_max - x_min) * (width - left - right); };
    auto py = [&](double y) { return height - bottom - (y - y_min) / (y_max - y_min) * (height - top - bottom); };
    auto num = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.2f", v);
        return std::string(buf);
    };
    std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"480\" height=\"360\" viewBox=\"0 0 480 360\">\n";
    out += "<rect width=\"480\" height=\"360\" fill=\"white\"/>\n";
    out += "<line x1=\"" + num(left) + "\" y1=\"" + num(height - bottom) + "\" x2=\"" + num(width - right) + "\" y2=\"" +
           num(height - bottom) + "\" stroke=\"black\"/>\n";
    out += "<line x1=\"" + num(left) + "\" y1=\"" + num(top) + "\" x2=\"" + num(left) + "\" y2=\"" +
           num(height - bottom) + "\" stroke=\"black\"/>\n";
    out += "<text x=\"" + num((left + width - right) / 2) + "\" y=\"" + num(height - 12) +
           "\" text-anchor=\"middle\" font-size=\"12\">normalized identification accuracy</text>\n";
    out += "<text x=\"14\" y=\"" + num((top + height - bottom) / 2) + "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 14 " +
           num((top + height - bottom) / 2) + ")\">normalized degradation</text>\n";
    for (double t : {x_min, x_max}) {
        out += "<text x=\"" + num(px(t)) + "\" y=\"" + num(height - bottom + 16) +
               "\" text-anchor=\"middle\" font-size=\"10\">" + num(t) + "</text>\n";
    }
    for (double t : {y_min, y_max}) {
        out += "<text x=\"" + num(left - 6) + "\" y=\"" + num(py(t) + 4) + "\" text-anchor=\"end\" font-size=\"10\">" +
               num(t) + "</text>\n";
    }
    for (const auto& p : s.points) {
        if (!p.id_accuracy_normalized || !p.delta_norm) continue;
        out += "<circle cx=\"" + num(px(*p.id_accuracy_normalized)) + "\" cy=\"" + num(py(*p.delta_norm)) +
               "\" r=\"3\" fill=\"steelblue\"/>\n";
    }
    out += "</svg>\n";
    return out;
}

}  // namespace idfree::io

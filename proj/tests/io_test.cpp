#include <algorithm>
#include <filesystem>
#include <random>
#include <string>

#include <gtest/gtest.h>

#include "idfree/io.hpp"
#include "test_support.hpp"

namespace {

using namespace idfree::io;
using idfree::DataError;

std::string with_format(const std::string& body) { return std::string(kFormatLine) + "\n" + body; }

std::string error_of(auto&& fn) {
    try {
        fn();
    } catch (const DataError& e) {
        return e.what();
    }
    return {};
}

TEST(Csv, RequiresFormatLine) {
    EXPECT_NE(error_of([] { parse_scores("recording_id,a\nr1,0.5\n"); }).find("scores:1"), std::string::npos);
    EXPECT_NE(error_of([] { parse_scores(""); }).find("format"), std::string::npos);
    EXPECT_NO_THROW(parse_scores(with_format("recording_id,a\nr1,0.5\n")));
}

TEST(Csv, FieldCountMismatchReportsLine) {
    const auto msg = error_of([] { parse_scores(with_format("recording_id,a,b\nr1,0.1,0.2\n\nr2,0.3\n")); });
    EXPECT_NE(msg.find("scores:5"), std::string::npos) << msg;
    EXPECT_NE(msg.find("expected 3 fields, found 2"), std::string::npos) << msg;
}

TEST(Csv, CrlfAndBlankLinesTolerated) {
    const auto f = parse_scores(std::string(kFormatLine) + "\r\nrecording_id,a\r\n\r\nr1,0.25\r\n");
    EXPECT_EQ(f.matrix.row("r1")[0], 0.25);
}

TEST(Numbers, StrictParsing) {
    EXPECT_EQ(parse_number("1e-3", "x"), 1e-3);
    EXPECT_EQ(parse_number("+2.5", "x"), 2.5);
    EXPECT_EQ(parse_number("-0.125", "x"), -0.125);
    for (const char* bad : {"", "abc", "1.0x", "0x10", "nan", "inf", "-inf", "1,0", " 1"})
        EXPECT_THROW(parse_number(bad, "x"), DataError) << bad;
    EXPECT_TRUE(parse_bool("true", "x"));
    EXPECT_FALSE(parse_bool("0", "x"));
    EXPECT_THROW(parse_bool("yes", "x"), DataError);
}

TEST(Numbers, FormatDoubleRoundTrips) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1e6, 1e6);
    for (int i = 0; i < 1000; ++i) {
        const double v = u(rng);
        EXPECT_EQ(parse_number(format_double(v), "x"), v);
    }
    EXPECT_EQ(format_double(0.1), "0.1");
    EXPECT_EQ(format_percent(0.032004), "3.20");
    EXPECT_EQ(format_percent(std::nullopt), "undefined");
}

TEST(Scores, OrientationHeader) {
    EXPECT_FALSE(parse_scores(with_format("recording_id,a\nr1,1\n")).higher_is_anomalous.has_value());
    const auto f = parse_scores(with_format("# higher-is-anomalous: false\nrecording_id,a\nr1,1\n"));
    ASSERT_TRUE(f.higher_is_anomalous.has_value());
    EXPECT_FALSE(*f.higher_is_anomalous);
    EXPECT_TRUE(*parse_scores(with_format("# higher-is-anomalous: true\nrecording_id,a\nr1,1\n")).higher_is_anomalous);
    EXPECT_THROW(parse_scores(with_format("# higher-is-anomalous: maybe\nrecording_id,a\nr1,1\n")), DataError);
}

TEST(Scores, RejectsBadContent) {
    EXPECT_THROW(parse_scores(with_format("id,a\nr1,1\n")), DataError);
    EXPECT_THROW(parse_scores(with_format("recording_id\nr1\n")), DataError);
    EXPECT_THROW(parse_scores(with_format("recording_id,a,a\nr1,1,2\n")), DataError);
    const auto dup = error_of([] { parse_scores(with_format("recording_id,a\nr1,1\nr1,2\n")); });
    EXPECT_NE(dup.find("scores:4"), std::string::npos) << dup;
    const auto bad = error_of([] { parse_scores(with_format("recording_id,a\nr1,nan\n")); });
    EXPECT_NE(bad.find("scores:3"), std::string::npos) << bad;
}

TEST(Scores, WriteParseRoundTrip) {
    const auto fx = idfree::testing::random_fixture(11, 3, 6, false);
    const auto text = write_scores(fx.matrix);
    EXPECT_EQ(parse_scores(text).matrix, fx.matrix);
}

TEST(Labels, ParsesOptionalColumnsAndWarns) {
    const auto f = parse_labels(with_format(
        "recording_id,true_machine,is_anomaly,split,machine_type,domain,note\n"
        "r1,fan-00,0,dev,fan,source,x\n"
        "r2,fan-00,1,dev,,target,y\n"));
    ASSERT_EQ(f.recordings.size(), 2u);
    EXPECT_EQ(*f.recordings[0].true_machine.type, "fan");
    EXPECT_FALSE(f.recordings[1].true_machine.type.has_value());
    EXPECT_EQ(*f.recordings[1].domain, idfree::protocol::Domain::target);
    EXPECT_TRUE(f.recordings[1].is_anomaly);
    ASSERT_EQ(f.warnings.size(), 1u);
    EXPECT_NE(f.warnings[0].find("note"), std::string::npos);
}

TEST(Labels, Errors) {
    EXPECT_THROW(parse_labels(with_format("recording_id,true_machine,split,is_anomaly\nr1,a,dev,0\n")), DataError);
    const auto split = error_of([] {
        parse_labels(with_format("recording_id,true_machine,is_anomaly,split\nr1,a,0,dev\nr2,a,0,test\n"));
    });
    EXPECT_NE(split.find("labels:4"), std::string::npos) << split;
    const auto dup = error_of([] {
        parse_labels(with_format("recording_id,true_machine,is_anomaly,split\nr1,a,0,dev\nr1,b,1,dev\n"));
    });
    EXPECT_NE(dup.find("duplicate"), std::string::npos) << dup;
    // the same id in different splits is fine at parse time
    EXPECT_NO_THROW(parse_labels(with_format("recording_id,true_machine,is_anomaly,split\nr1,a,0,dev\nr1,a,1,eval\n")));
    EXPECT_THROW(parse_labels(with_format("recording_id,true_machine,is_anomaly,split\n")), DataError);
}

TEST(Features, HeaderAndRows) {
    const auto f = parse_features(with_format("recording_id,f_0,f_1\nr1,1,2\nr2,3,4\n"));
    EXPECT_EQ(f.at("r2"), (std::vector<double>{3, 4}));
    EXPECT_THROW(parse_features(with_format("recording_id,f_1\nr1,1\n")), DataError);
    EXPECT_THROW(parse_features(with_format("recording_id\nr1\n")), DataError);
    EXPECT_THROW(parse_features(with_format("recording_id,f_0\nr1,1\nr1,2\n")), DataError);
}

TEST(Table, ExpectedColumnForms) {
    const auto rows = parse_table(with_format(
        "label,a_known,a_unknown,expected_delta\n"
        "a,0.7,0.69,3.20%\n"
        "b,0.7,0.69,0.032\n"
        "c,0.4,0.3,undefined\n"));
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_DOUBLE_EQ(*rows[0].expected_delta, 0.032);
    EXPECT_DOUBLE_EQ(*rows[1].expected_delta, 0.032);
    EXPECT_FALSE(rows[2].expected_delta.has_value());
    EXPECT_EQ(rows[2].line, 5u);
    EXPECT_THROW(parse_table(with_format("label,a_known,a_unknown\nx,1,2\n")), DataError);
}

TEST(Json, EvalReportRoundTrip) {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto fx = idfree::testing::random_fixture(seed, 1 + seed % 4, 6, seed % 2 == 0);
        idfree::protocol::EvalConfig config;
        config.mode = seed % 3 == 0 ? idfree::metrics::AverageMode::arithmetic : idfree::metrics::AverageMode::harmonic;
        config.p = 0.05 * static_cast<double>(1 + seed % 5);
        idfree::protocol::EvalReport report;
        try {
            report = idfree::protocol::full_report(fx.matrix, fx.merged, config);
        } catch (const DataError&) {
            // a zero AUC cannot enter a harmonic mean
            config.mode = idfree::metrics::AverageMode::arithmetic;
            report = idfree::protocol::full_report(fx.matrix, fx.merged, config);
        }
        const auto text = to_json(report).dump();
        EXPECT_EQ(eval_report_from_json(Json::parse(text)), report) << seed;
    }
}

TEST(Json, SweepResultRoundTrip) {
    idfree::simulate::SimConfig base;
    base.k = 3;
    base.d = 4;
    base.n_ref = 20;
    base.n_norm = base.n_anom = 15;
    base.scorer.normalizer.kind = idfree::scorers::NormalizerKind::zscore_reference;
    auto result = idfree::simulate::sweep(base, {0.0, 1.5, 3.0}, 2);
    result.points[1].error = "synthetic failure";
    result.points[1].delta_norm.reset();
    const auto text = to_json(result).dump();
    EXPECT_EQ(sweep_result_from_json(Json::parse(text)), result);
}

TEST(Json, DocumentEnvelope) {
    const auto doc = report_document("evaluation", {digest_of("scores", "/tmp/x/scores.csv", "abc")}, Json{{"k", 1}});
    EXPECT_EQ(doc.at("inputs")[0].at("name"), "scores.csv");
    EXPECT_EQ(doc.at("inputs")[0].at("sha256"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    EXPECT_EQ(document_body(doc, "evaluation").at("k"), 1);
    EXPECT_THROW(document_body(doc, "sweep"), DataError);
    auto old = doc;
    old["format"] = "idfree-asd/0";
    EXPECT_THROW(document_body(old, "evaluation"), DataError);
}

TEST(Files, AtomicWrite) {
    const auto dir = std::filesystem::temp_directory_path() / "idfree_io_test";
    std::filesystem::create_directories(dir);
    const auto path = dir / "out.txt";
    write_file_atomic(path, "first");
    write_file_atomic(path, "second");
    EXPECT_EQ(read_file(path), "second");
    EXPECT_FALSE(std::filesystem::exists(dir / "out.txt.tmp"));
    EXPECT_THROW(read_file(dir / "missing.txt"), DataError);
    std::filesystem::remove_all(dir);
}

TEST(Scatter, CsvShape) {
    idfree::simulate::SimConfig base;
    base.k = 2;
    base.d = 3;
    base.n_ref = 10;
    base.n_norm = base.n_anom = 10;
    const auto result = idfree::simulate::sweep(base, {1.0, 2.0}, 3);
    const auto csv = sweep_csv(result);
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 1 + 6);
    EXPECT_TRUE(csv.starts_with(std::string(kFormatLine) + "\nseparation,repeat,seed,"));
    const auto svg = sweep_svg(result);
    EXPECT_NE(svg.find("<svg"), std::string::npos);
    EXPECT_NE(svg.find("</svg>"), std::string::npos);
}

}  // namespace

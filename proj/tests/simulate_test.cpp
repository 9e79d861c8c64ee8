#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "idfree/scorers.hpp"
#include "idfree/simulate.hpp"

namespace {

using namespace idfree::simulate;
using idfree::UsageError;

SimConfig small_config() {
    SimConfig c;
    c.k = 3;
    c.d = 4;
    c.n_ref = 30;
    c.n_norm = 20;
    c.n_anom = 20;
    return c;
}

TEST(Simplex, PairwiseDistancesEqualSeparation) {
    for (std::size_t k = 1; k <= 8; ++k) {
        const auto centers = simplex_centers(k, k + 1, 3.5);
        for (std::size_t i = 0; i < k; ++i) {
            EXPECT_EQ(centers[i].size(), k + 1);
            for (std::size_t j = i + 1; j < k; ++j)
                EXPECT_NEAR(idfree::scorers::euclidean(centers[i], centers[j]), 3.5, 1e-12) << k << " " << i << " " << j;
        }
    }
    EXPECT_EQ(simplex_centers(1, 2, 4.0)[0], (std::vector<double>{0.0, 0.0}));
    EXPECT_NO_THROW(simplex_centers(4, 3, 1.0));
    EXPECT_THROW(simplex_centers(5, 3, 1.0), UsageError);
}

TEST(Generate, ConfigValidation) {
    auto c = small_config();
    c.d = 1;
    EXPECT_THROW(generate(c), UsageError);
    c = small_config();
    c.n_ref = 1;
    EXPECT_THROW(generate(c), UsageError);
    c = small_config();
    c.spread = 0.0;
    EXPECT_THROW(generate(c), UsageError);
    c = small_config();
    c.separation = -1.0;
    EXPECT_THROW(generate(c), UsageError);
    c = small_config();
    c.anomaly_offset = NAN;
    EXPECT_THROW(generate(c), UsageError);
}

TEST(Generate, SingleMachine) {
    auto c = small_config();
    c.k = 1;
    const auto data = generate(c);
    EXPECT_EQ(data.merged.size(), c.n_norm + c.n_anom);
    EXPECT_EQ(data.references.size(), 1u);
    EXPECT_EQ(data.references.at("m00").size(), c.n_ref);
}

TEST(Generate, SameSeedSameData) {
    const auto a = generate(small_config());
    const auto b = generate(small_config());
    for (const auto& [name, ref] : a.references) EXPECT_EQ(ref.vectors(), b.references.at(name).vectors());
    const auto pa = a.merged.probes(), pb = b.merged.probes();
    ASSERT_EQ(pa.size(), pb.size());
    for (std::size_t i = 0; i < pa.size(); ++i) {
        EXPECT_EQ(pa[i].id, pb[i].id);
        EXPECT_EQ(*pa[i].features, *pb[i].features);
    }
    auto other = small_config();
    other.seed += 1;
    EXPECT_NE(generate(other).references.at("m00").vectors(), a.references.at("m00").vectors());
}

TEST(Generate, AddingMachinesKeepsExistingStreams) {
    auto c = small_config();
    c.separation = 0.0;  // centers coincide, so only the random streams matter
    const auto three = generate(c);
    c.k = 4;
    const auto four = generate(c);
    for (const auto& [name, ref] : three.references) EXPECT_EQ(ref.vectors(), four.references.at(name).vectors());
}

TEST(Generate, AnomaliesSitAtTheOffset) {
    auto c = small_config();
    c.k = 1;
    c.spread = 1e-9;
    c.anomaly_offset = 2.5;
    const auto data = generate(c);
    const auto labels = idfree::protocol::hidden_labels(data.merged);
    const std::vector<double> origin(c.d, 0.0);
    for (const auto& p : data.merged.probes()) {
        const double r = idfree::scorers::euclidean(*p.features, origin);
        if (labels.at(p.id).is_anomaly) EXPECT_NEAR(r, 2.5, 1e-6);
        else EXPECT_LT(r, 1e-6);
    }
}

TEST(Generate, NoSeparationIdentificationIsChance) {
    SimConfig c;
    c.k = 2;
    c.d = 4;
    c.separation = 0.0;
    c.n_ref = 50;
    c.n_norm = 125;
    c.n_anom = 125;
    const auto report = simulate_report(c);
    EXPECT_EQ(report.identification.n, 500u);
    EXPECT_NEAR(*report.identification.normalized_accuracy, 0.0, 0.15);
}

TEST(Generate, WideSeparationIdentifiesPerfectly) {
    SimConfig c;
    c.k = 3;
    c.d = 4;
    c.separation = 50.0;
    c.anomaly_offset = 6.0;
    c.n_ref = 50;
    c.n_norm = 50;
    c.n_anom = 50;
    const auto report = simulate_report(c);
    EXPECT_EQ(report.identification.n, 300u);
    EXPECT_EQ(report.identification.misid_probability, 0.0);
    EXPECT_GT(*report.known.aggregate, 0.99);
    EXPECT_EQ(*report.delta_norm, 0.0);
}

TEST(RunPoint, PerfectSeparation) {
    auto c = small_config();
    c.separation = 60.0;
    const auto p = run_point(c);
    EXPECT_EQ(*p.delta_norm, 0.0);
    EXPECT_EQ(*p.id_accuracy_normalized, 1.0);
    EXPECT_EQ(*p.misid_probability, 0.0);
}

TEST(RunPoint, NoSeparation) {
    auto c = small_config();
    c.separation = 0.0;
    c.n_norm = c.n_anom = 100;
    const auto p = run_point(c);
    EXPECT_NEAR(*p.id_accuracy_normalized, 0.0, 0.15);
    // identical machines: min-aggregation is close to neutral, degradation stays small
    ASSERT_TRUE(p.delta_norm.has_value());
    EXPECT_TRUE(std::isfinite(*p.delta_norm));
}

TEST(RunPoint, Deterministic) {
    auto c = small_config();
    c.separation = 3.0;
    const auto a = run_point(c);
    const auto b = run_point(c);
    EXPECT_EQ(a, b);
}

TEST(RunPoint, MahalanobisScorerRuns) {
    auto c = small_config();
    c.scorer.kind = idfree::scorers::ScorerKind::mahalanobis;
    c.separation = 40.0;
    const auto p = run_point(c);
    EXPECT_EQ(*p.delta_norm, 0.0);
}

TEST(Sweep, SinglePointEqualsRunPoint) {
    const auto base = small_config();
    const auto result = sweep(base, {2.0}, 1);
    ASSERT_EQ(result.points.size(), 1u);
    auto c = base;
    c.separation = 2.0;
    c.seed = derive_seed(base.seed, 0, 0);
    EXPECT_EQ(result.points[0], run_point(c));
}

TEST(Sweep, ShapeOrderingAndDistinctSeeds) {
    const auto result = sweep(small_config(), {1.0, 2.0, 3.0}, 2);
    ASSERT_EQ(result.points.size(), 6u);
    EXPECT_EQ(result.points[3].separation, 2.0);
    EXPECT_EQ(result.points[3].repeat, 1u);
    EXPECT_NE(result.points[2].seed, result.points[3].seed);
    EXPECT_THROW(sweep(small_config(), {}, 1), UsageError);
    EXPECT_THROW(sweep(small_config(), {1.0}, 0), UsageError);
}

TEST(Sweep, FailedPointsAreRecorded) {
    auto base = small_config();
    base.scorer.k = 1000;  // larger than the reference set
    const auto result = sweep(base, {1.0, 2.0}, 1);
    ASSERT_EQ(result.points.size(), 2u);
    for (const auto& p : result.points) {
        ASSERT_TRUE(p.error.has_value());
        EXPECT_FALSE(p.delta_norm.has_value());
    }
}

TEST(Sweep, IndependentOfThreadCount) {
    const auto one = sweep(small_config(), {1.0, 2.5, 4.0}, 3, 1);
    const auto many = sweep(small_config(), {1.0, 2.5, 4.0}, 3, 5);
    EXPECT_EQ(one, many);
}

TEST(Sweep, IdentificationRisesWithSeparation) {
    SimConfig base;
    base.n_ref = 40;
    base.n_norm = 40;
    base.n_anom = 40;
    std::vector<double> seps;
    for (int i = 0; i < 10; ++i) seps.push_back(0.8 * i);
    const auto result = sweep(base, seps, 5, 4);
    std::vector<double> mean_acc;
    for (std::size_t s = 0; s < seps.size(); ++s) {
        double sum = 0.0;
        for (std::size_t r = 0; r < 5; ++r) sum += *result.points[s * 5 + r].id_accuracy_normalized;
        mean_acc.push_back(sum / 5.0);
    }
    EXPECT_GT(spearman(seps, mean_acc), 0.9);
}

TEST(Sweep, ChanceEndpointConverges) {
    SimConfig c;
    c.k = 2;
    c.d = 4;
    c.separation = 0.0;
    c.n_ref = 50;
    c.n_norm = 500;
    c.n_anom = 500;
    EXPECT_NEAR(*run_point(c).id_accuracy_normalized, 0.0, 0.1);
}

TEST(Sweep, DegradationTracksMisidentification) {
    const auto result = sweep(SimConfig{}, default_separations(), 5, 4);
    std::vector<double> delta, misid, acc;
    for (const auto& p : result.points) {
        ASSERT_FALSE(p.error.has_value()) << *p.error;
        if (*p.misid_probability == 0.0) {
            EXPECT_EQ(*p.delta_norm, 0.0);
        }
        delta.push_back(*p.delta_norm);
        misid.push_back(*p.misid_probability);
        acc.push_back(*p.id_accuracy_normalized);
    }
    EXPECT_GE(spearman(delta, misid), 0.8);
    EXPECT_LE(spearman(acc, delta), -0.8);
}

TEST(Spearman, KnownValues) {
    EXPECT_DOUBLE_EQ(spearman({1, 2, 3}, {10, 20, 30}), 1.0);
    EXPECT_DOUBLE_EQ(spearman({1, 2, 3}, {3, 2, 1}), -1.0);
    // scipy.stats.spearmanr reference values (ties use average ranks)
    EXPECT_NEAR(spearman({1, 2, 3, 4, 5}, {5, 6, 7, 8, 7}), 0.8207826816681233, 1e-12);
    EXPECT_NEAR(spearman({1, 2, 2, 3}, {1, 3, 2, 4}), 0.9486832980505139, 1e-12);
    EXPECT_THROW(spearman({1, 1}, {1, 2}), idfree::DataError);
}

TEST(DeriveSeed, DistinctAcrossKeys) {
    EXPECT_NE(derive_seed(1, 0, 0), derive_seed(1, 0, 1));
    EXPECT_NE(derive_seed(1, 0, 1), derive_seed(1, 1, 0));
    EXPECT_NE(derive_seed(1, 0, 0), derive_seed(2, 0, 0));
    EXPECT_EQ(derive_seed(9, 3, 4), derive_seed(9, 3, 4));
}

}  // namespace

#pragma once

// Shared fixtures and independent oracles for the test suites.

#include <cstddef>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "idfree/metrics.hpp"
#include "idfree/protocol.hpp"

namespace idfree::testing {

/// (wins + ties/2) / pairs over every anomalous-normal pair.
inline double brute_force_auc(const metrics::LabeledScores& data) {
    double wins = 0.0;
    double pairs = 0.0;
    for (std::size_t i = 0; i < data.scores.size(); ++i) {
        if (!data.labels[i]) continue;
        for (std::size_t j = 0; j < data.scores.size(); ++j) {
            if (data.labels[j]) continue;
            pairs += 1.0;
            if (data.scores[i] > data.scores[j]) wins += 1.0;
            else if (data.scores[i] == data.scores[j]) wins += 0.5;
        }
    }
    return wins / pairs;
}

/// Random two-class instance of size n (2 <= n) with both classes present.
/// Scores are drawn from a small integer grid so ties are frequent.
inline metrics::LabeledScores random_instance(std::mt19937_64& rng, std::size_t n, int grid = 8) {
    std::uniform_int_distribution<int> level(0, grid - 1);
    std::bernoulli_distribution coin(0.5);
    metrics::LabeledScores data;
    for (std::size_t i = 0; i < n; ++i) {
        data.scores.push_back(level(rng) * 0.125);
        data.labels.push_back(coin(rng));
    }
    data.labels[0] = false;
    data.labels[1] = true;
    return data;
}

inline protocol::Recording recording(std::string id, std::string machine, bool anomaly,
                                     protocol::Split split = protocol::Split::dev) {
    protocol::Recording r;
    r.id = std::move(id);
    r.true_machine.name = std::move(machine);
    r.true_machine.split = split;
    r.is_anomaly = anomaly;
    r.split = split;
    return r;
}

struct RandomFixture {
    protocol::MergedTestSet merged;
    protocol::ScoreMatrix matrix;
};

/// k machines, n_per recordings each (every second one anomalous), uniform
/// random scores with the true machine's column shifted up by 0.5 for anomalies.
/// With `true_machine_minimal`, each recording's true machine column is forced
/// to be the strict row minimum while keeping its own (oracle) score value.
inline RandomFixture random_fixture(std::uint64_t seed, std::size_t k, std::size_t n_per, bool true_machine_minimal) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::map<std::string, std::vector<protocol::Recording>> per_machine;
    std::vector<std::string> machines;
    for (std::size_t m = 0; m < k; ++m) machines.push_back("machine-" + std::to_string(m));
    protocol::ScoreMatrix matrix(machines);
    for (std::size_t m = 0; m < k; ++m) {
        for (std::size_t i = 0; i < n_per; ++i) {
            const std::string id = machines[m] + "/rec-" + std::to_string(i);
            const bool anomaly = i % 2 == 1;
            per_machine[machines[m]].push_back(recording(id, machines[m], anomaly));
            std::vector<double> row(k);
            for (auto& v : row) v = u(rng);
            if (anomaly) row[m] += 0.5;
            if (true_machine_minimal) {
                for (std::size_t j = 0; j < k; ++j)
                    if (j != m) row[j] = row[m] + 0.01 + u(rng);
            }
            matrix.set_row(id, row);
        }
    }
    return {protocol::merge_test_sets(std::move(per_machine)), std::move(matrix)};
}

}  // namespace idfree::testing

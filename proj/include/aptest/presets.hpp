#pragma once

#include <string>
#include <vector>

#include "aptest/config.hpp"
#include "aptest/harness.hpp"
#include "aptest/scenario.hpp"

namespace aptest {

/// Built-in study presets. Scenario labels use the post-baseline sample size
/// N = T * n, matching the common reporting convention for these designs; the
/// simulated experiment additionally runs the prior-only baseline batch.
namespace presets {

inline constexpr std::uint64_t kDefaultSeed = 20260811ull;

/// Regret / optimal-allocation comparison across policy variants:
/// fully-sequential design, 150 participants, effect 0.5, unit variance.
inline std::vector<ScenarioConfig> regret_comparison(std::int64_t trajectories,
                                                     std::uint64_t seed) {
    std::vector<ScenarioConfig> configs;
    const std::vector<PolicyVariant> policies = {
        PolicyVariant::Oracle, PolicyVariant::StandardTs, PolicyVariant::RestrictedTsBols,
        PolicyVariant::RestrictedTsAwAipw, PolicyVariant::UniformRandom};
    for (PolicyVariant policy : policies) {
        ScenarioConfig config;
        config.id = std::string("seq_N150_") + policy_name(policy);
        config.schedule = BatchSchedule{149, 1};
        config.prior = GaussianPrior{0.0, 1.0};
        config.regime = RewardRegime::stationary(0.0, 0.5, 1.0);
        config.policy = policy;
        config.trajectories = trajectories;
        config.master_seed = seed;
        configs.push_back(config);
    }
    return configs;
}

/// Small-batch pilot design used throughout the statistic's distribution
/// studies: 17 post-baseline steps of 3 participants, noise variance 10,
/// matching priors.
inline ScenarioConfig pilot_scenario(Hypothesis h, std::int64_t trajectories,
                                     std::uint64_t seed) {
    ScenarioConfig config;
    config.id = h == Hypothesis::Null ? "n3_N51_h0" : "n3_N51_h1";
    config.schedule = BatchSchedule{17, 3};
    config.prior = GaussianPrior{0.0, 10.0};
    config.regime = h == Hypothesis::Null ? RewardRegime::stationary(0.0, 0.0, 10.0)
                                          : RewardRegime::stationary(0.0, 0.5, 10.0);
    config.policy = PolicyVariant::StandardTs;
    config.trajectories = trajectories;
    config.master_seed = seed;
    return config;
}

inline ScenarioConfig make_grid_scenario(int num_steps, int batch_size, Hypothesis h,
                                         PolicyVariant policy, double alpha,
                                         std::int64_t trajectories, std::uint64_t seed,
                                         const std::string& id) {
    ScenarioConfig config;
    config.id = id;
    config.schedule = BatchSchedule{num_steps, batch_size};
    config.prior = GaussianPrior{0.0, 10.0};
    config.regime = h == Hypothesis::Null ? RewardRegime::stationary(0.0, 0.0, 10.0)
                                          : RewardRegime::stationary(0.0, 0.5, 10.0);
    config.policy = policy;
    config.alpha = alpha;
    config.trajectories = trajectories;
    config.master_seed = seed;
    return config;
}

inline PolicyVariant matched_policy(TestKind kind) {
    switch (kind) {
        case TestKind::Bols:
            return PolicyVariant::RestrictedTsBols;
        case TestKind::AwAipw:
            return PolicyVariant::RestrictedTsAwAipw;
        default:
            return PolicyVariant::StandardTs;
    }
}

/// Type-I / power grid across batch sizes and sample sizes for all three
/// tests. Each test runs on data from its matched policy variant.
inline std::vector<SweepEntry> error_rate_grid(double alpha, std::int64_t trajectories,
                                               std::uint64_t seed) {
    struct Cell {
        int batch_size;
        std::vector<int> step_counts;
    };
    const std::vector<Cell> cells = {
        {1, {50, 100, 150}}, {3, {17, 34, 50}}, {10, {5, 10, 15}}, {20, {3, 5, 7}}};
    std::vector<SweepEntry> entries;
    std::uint64_t scenario_offset = 0;
    for (const Cell& cell : cells) {
        for (int steps : cell.step_counts) {
            for (Hypothesis h : {Hypothesis::Null, Hypothesis::Alternative}) {
                for (TestKind kind : {TestKind::AllocationProbability, TestKind::AwAipw,
                                      TestKind::Bols}) {
                    if (kind == TestKind::Bols && cell.batch_size < 3) {
                        continue;
                    }
                    std::string id = "n" + std::to_string(cell.batch_size) + "_N" +
                                     std::to_string(steps * cell.batch_size) + "_" +
                                     hypothesis_name(h) + "_" + test_name(kind);
                    entries.push_back(SweepEntry{
                        make_grid_scenario(steps, cell.batch_size, h, matched_policy(kind),
                                           alpha, trajectories, seed + scenario_offset, id),
                        kind});
                    ++scenario_offset;
                }
            }
        }
    }
    return entries;
}

/// Non-stationary sensitivity grid: both decaying-mean regimes at the
/// 50-step, batch-3 design with noise variance 10.
inline std::vector<SweepEntry> nonstationary_grid(double alpha, std::int64_t trajectories,
                                                  std::uint64_t seed) {
    std::vector<SweepEntry> entries;
    std::uint64_t scenario_offset = 0;
    for (RegimeKind kind : {RegimeKind::DecayingBaseline, RegimeKind::DecayingEffect}) {
        for (Hypothesis h : {Hypothesis::Null, Hypothesis::Alternative}) {
            for (TestKind test : {TestKind::AllocationProbability, TestKind::AwAipw,
                                  TestKind::Bols}) {
                ScenarioConfig config;
                std::string regime_tag =
                    kind == RegimeKind::DecayingBaseline ? "ns1" : "ns2";
                config.id = regime_tag + "_N150_" + std::string(hypothesis_name(h)) + "_" +
                            test_name(test);
                config.schedule = BatchSchedule{50, 3};
                config.prior = GaussianPrior{0.0, 10.0};
                config.regime = kind == RegimeKind::DecayingBaseline
                                    ? RewardRegime::decaying_baseline(1.0, 0.5, 0.5, 10.0, h)
                                    : RewardRegime::decaying_effect(1.0, 0.5, 10.0, h);
                config.policy = matched_policy(test);
                config.alpha = alpha;
                config.trajectories = trajectories;
                config.master_seed = seed + scenario_offset;
                entries.push_back(SweepEntry{config, test});
                ++scenario_offset;
            }
        }
    }
    return entries;
}

}  // namespace presets
}  // namespace aptest

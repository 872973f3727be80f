#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "aptest/ap_test.hpp"
#include "aptest/calibration.hpp"
#include "aptest/comparators.hpp"
#include "aptest/core.hpp"
#include "aptest/math.hpp"
#include "aptest/parallel.hpp"
#include "aptest/scenario.hpp"

namespace aptest {

enum class TestKind { AllocationProbability, Bols, AwAipw };

inline const char* test_name(TestKind kind) {
    switch (kind) {
        case TestKind::AllocationProbability:
            return "ap";
        case TestKind::Bols:
            return "bols";
        case TestKind::AwAipw:
            return "awaipw";
    }
    return "unknown";
}

// Seed salts keeping calibration runs, critical-value simulation, and decision
// randomization on streams independent of the evaluation trajectories.
inline constexpr std::uint64_t kCalibrationSeedSalt = 0x9e3779b97f4a7c15ull;
inline constexpr std::uint64_t kCriticalSeedSalt = 0x94d049bb133111ebull;
inline constexpr std::uint64_t kDecisionSeedSalt = 0xd1b54a32d192ed03ull;

inline constexpr std::int64_t kDefaultCriticalSamples = 100000;

/// Decision rule for the discrete allocation-probability statistic, either at
/// the natural critical value or with exact-alpha randomization on the
/// boundary support point.
struct ApTestRule {
    NullDistribution null_dist;
    double alpha = 0.05;
    bool calibrated = false;
    int boundary = 0;          // reject strictly above; randomize exactly on it
    double exceed_lo = 1.0;    // P(AP > boundary-1 | H0)
    double exceed_hi = 0.0;    // P(AP > boundary   | H0)
    bool fallback_applied = false;

    double rejection_probability(int stat) const {
        if (alpha == 0.0) {
            return 0.0;
        }
        if (calibrated) {
            return discrete_rejection_probability(stat, boundary - 1, boundary, exceed_lo,
                                                  exceed_hi, alpha);
        }
        return stat > boundary ? 1.0 : 0.0;
    }

    TestOutcome decide(int stat, RandomStream& stream) const {
        TestOutcome out;
        out.statistic = static_cast<double>(stat);
        out.critical_value = static_cast<double>(boundary);
        out.alpha_target = alpha;
        out.exceedance_at_critical = exceed_lo;
        out.exceedance_above_critical = exceed_hi;
        out.gamma_applied = rejection_probability(stat);
        if (out.gamma_applied <= 0.0) {
            out.reject = false;
        } else if (out.gamma_applied >= 1.0) {
            out.reject = true;
        } else {
            out.reject = stream.bernoulli(out.gamma_applied);
        }
        return out;
    }
};

inline ApTestRule make_ap_rule(NullDistribution dist, double alpha, bool calibrate) {
    ApTestRule rule;
    rule.null_dist = std::move(dist);
    rule.alpha = alpha;
    rule.calibrated = calibrate;
    int top = rule.null_dist.max_statistic();
    if (alpha == 0.0) {
        rule.boundary = top;
        rule.exceed_lo = rule.null_dist.exceedance_above(top - 1);
        rule.exceed_hi = 0.0;
        return rule;
    }
    if (calibrate) {
        int q = 0;
        while (q < top && rule.null_dist.exceedance_above(q) > alpha) {
            ++q;
        }
        rule.boundary = q;
        rule.exceed_lo = rule.null_dist.exceedance_above(q - 1);
        rule.exceed_hi = rule.null_dist.exceedance_above(q);
    } else {
        CriticalValue crit = critical_value(rule.null_dist, alpha);
        rule.boundary = crit.threshold;
        rule.exceed_lo = rule.null_dist.exceedance_above(crit.threshold - 1);
        rule.exceed_hi = crit.exceedance;
        rule.fallback_applied = crit.fallback_applied;
    }
    return rule;
}

/// Decision rule for a continuous Z-type statistic, optionally thinned to an
/// exact alpha using the statistic's estimated finite-sample exceedance at the
/// nominal critical value.
struct ContinuousTestRule {
    double critical = 0.0;
    double alpha = 0.05;
    bool calibrated = false;
    double exceedance = std::numeric_limits<double>::quiet_NaN();  // H0 estimate

    double rejection_probability(double stat) const {
        if (alpha == 0.0) {
            return 0.0;
        }
        if (calibrated) {
            return continuous_rejection_probability(stat, critical, exceedance, alpha);
        }
        return stat > critical ? 1.0 : 0.0;
    }

    TestOutcome decide(double stat, RandomStream& stream) const {
        TestOutcome out;
        out.statistic = stat;
        out.critical_value = critical;
        out.alpha_target = alpha;
        out.exceedance_at_critical = exceedance;
        out.exceedance_above_critical = exceedance;
        out.gamma_applied = rejection_probability(stat);
        if (out.gamma_applied <= 0.0) {
            out.reject = false;
        } else if (out.gamma_applied >= 1.0) {
            out.reject = true;
        } else {
            out.reject = stream.bernoulli(out.gamma_applied);
        }
        return out;
    }
};

struct RateEstimate {
    double rate = 0.0;
    double std_error = 0.0;
};

/// Summary of one Monte Carlo scenario run: allocation/regret curves over
/// participants in accrual order, plus the rejection rate when a test ran.
struct MetricsReport {
    std::string scenario_id;
    std::string test;  // "ap", "bols", "awaipw", or "none"
    Hypothesis hypothesis = Hypothesis::Null;
    double alpha = std::numeric_limits<double>::quiet_NaN();
    bool calibrated = false;
    std::int64_t trajectories = 0;
    std::vector<double> mean_cumulative_regret;
    std::vector<double> optimal_arm_proportion;
    std::optional<RateEstimate> rejection;
    double mean_final_regret = 0.0;
    double final_regret_std_error = 0.0;
    double runtime_seconds = 0.0;
};

namespace detail {

inline double trajectory_statistic(TestKind kind, const TrialHistory& history) {
    switch (kind) {
        case TestKind::AllocationProbability:
            return static_cast<double>(ap_statistic(history));
        case TestKind::Bols:
            return bols_statistic(history, 0.0);
        case TestKind::AwAipw:
            return aw_aipw_statistic(history, 0.0);
    }
    throw ValidationError("unknown test selector");
}

/// Empirical exceedance P(stat > critical) under the scenario's equal-means
/// twin, used to calibrate continuous tests.
inline double estimate_h0_exceedance(const ScenarioConfig& config, TestKind kind,
                                     double critical, std::int64_t trajectories,
                                     int workers) {
    ScenarioConfig null_cfg = config.as_null();
    std::vector<unsigned char> above(static_cast<std::size_t>(trajectories), 0);
    parallel_for_index(
        trajectories,
        [&](std::int64_t i) {
            RandomStream stream = derive_stream(config.master_seed ^ kCalibrationSeedSalt,
                                                static_cast<std::uint64_t>(i));
            TrialHistory history = run_trajectory(null_cfg, stream);
            above[static_cast<std::size_t>(i)] =
                trajectory_statistic(kind, history) > critical ? 1 : 0;
        },
        workers);
    std::int64_t count = 0;
    for (unsigned char flag : above) {
        count += flag;
    }
    return static_cast<double>(count) / static_cast<double>(trajectories);
}

struct ScenarioAccumulator {
    std::int64_t trajectories = 0;
    std::size_t participants = 0;
    std::vector<double> regret_increments;        // [trajectory][participant]
    std::vector<unsigned char> optimal_flags;     // same layout
    std::vector<double> rejection_probabilities;  // per trajectory, empty if no test

    void reduce_into(MetricsReport& report) const {
        auto m = static_cast<double>(trajectories);
        report.trajectories = trajectories;
        report.mean_cumulative_regret.assign(participants, 0.0);
        report.optimal_arm_proportion.assign(participants, 0.0);
        double final_sum = 0.0;
        double final_sum_sq = 0.0;
        for (std::int64_t i = 0; i < trajectories; ++i) {
            std::size_t base = static_cast<std::size_t>(i) * participants;
            double total = 0.0;
            for (std::size_t p = 0; p < participants; ++p) {
                report.mean_cumulative_regret[p] += regret_increments[base + p];
                report.optimal_arm_proportion[p] += optimal_flags[base + p];
                total += regret_increments[base + p];
            }
            final_sum += total;
            final_sum_sq += total * total;
        }
        double running = 0.0;
        for (std::size_t p = 0; p < participants; ++p) {
            running += report.mean_cumulative_regret[p] / m;
            report.mean_cumulative_regret[p] = running;
            report.optimal_arm_proportion[p] /= m;
        }
        report.mean_final_regret = participants > 0 ? report.mean_cumulative_regret.back() : 0.0;
        double final_mean = final_sum / m;
        double final_var = std::max(0.0, final_sum_sq / m - final_mean * final_mean);
        report.final_regret_std_error = std::sqrt(final_var / m);
        if (!rejection_probabilities.empty()) {
            double total = 0.0;
            for (double p : rejection_probabilities) {
                total += p;
            }
            double rate = total / m;
            report.rejection = RateEstimate{rate, std::sqrt(rate * (1.0 - rate) / m)};
        }
    }
};

}  // namespace detail

/// Run the scenario's trajectories and collect regret and allocation curves
/// without applying any test.
inline MetricsReport simulate_policy_metrics(const ScenarioConfig& config, int workers = 0) {
    config.validate();
    auto start = std::chrono::steady_clock::now();
    const std::int64_t m = config.trajectories;
    const auto participants = static_cast<std::size_t>(config.schedule.total_participants());

    detail::ScenarioAccumulator acc;
    acc.trajectories = m;
    acc.participants = participants;
    acc.regret_increments.resize(static_cast<std::size_t>(m) * participants);
    acc.optimal_flags.resize(acc.regret_increments.size());

    parallel_for_index(
        m,
        [&](std::int64_t i) {
            RandomStream stream =
                derive_stream(config.master_seed, static_cast<std::uint64_t>(i));
            TrialHistory history = run_trajectory(config, stream);
            std::size_t base = static_cast<std::size_t>(i) * participants;
            std::size_t pos = 0;
            for (int t = 0; t <= history.num_steps(); ++t) {
                int best = best_arm_at(config.regime, t);
                double best_mean = mean_at(config.regime, static_cast<std::size_t>(best), t);
                for (int j = 0; j < history.batch_size(); ++j, ++pos) {
                    int arm = history.arm_at(t, j);
                    acc.regret_increments[base + pos] =
                        best_mean - mean_at(config.regime, static_cast<std::size_t>(arm), t);
                    acc.optimal_flags[base + pos] = arm == best ? 1 : 0;
                }
            }
        },
        workers);

    MetricsReport report;
    report.scenario_id = config.id;
    report.test = "none";
    report.hypothesis = config.hypothesis();
    report.alpha = config.alpha;
    acc.reduce_into(report);
    report.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

/// Estimate the selected test's rejection rate over the scenario's
/// trajectories: the type-I error under an equal-means configuration, the
/// power otherwise. With calibrate = true the decision is the randomized
/// exact-alpha rule; the reported rate aggregates the per-trajectory
/// conditional rejection probabilities, which has the same expectation as
/// drawing the boundary randomization and strictly less Monte Carlo noise.
/// Calibration constants come from a separate equal-means run on a salted
/// seed (calibration_trajectories, defaulting to the scenario's count).
inline MetricsReport estimate_error_rates(const ScenarioConfig& config, TestKind kind,
                                          bool calibrate,
                                          std::int64_t calibration_trajectories = 0,
                                          int workers = 0) {
    config.validate();
    if (config.trajectories < 100) {
        throw ValidationError("rate estimation needs at least 100 trajectories");
    }
    if (kind == TestKind::Bols && config.schedule.batch_size < 3) {
        throw TestInapplicableError("batched OLS requires batch size >= 3");
    }
    auto start = std::chrono::steady_clock::now();
    const std::int64_t m = config.trajectories;
    const std::int64_t m_cal =
        calibration_trajectories > 0 ? calibration_trajectories : config.trajectories;

    ApTestRule ap_rule;
    ContinuousTestRule cont_rule;
    if (kind == TestKind::AllocationProbability) {
        NullDistribution dist = mc_null_distribution(
            config.as_null(), m_cal, config.master_seed ^ kCalibrationSeedSalt, workers);
        ap_rule = make_ap_rule(std::move(dist), config.alpha, calibrate);
    } else {
        if (config.alpha > 0.0) {
            if (kind == TestKind::Bols) {
                RandomStream crit_stream =
                    derive_stream(config.master_seed ^ kCriticalSeedSalt, 0);
                cont_rule.critical =
                    bols_critical(config.schedule.batch_size, config.schedule.num_steps,
                                  config.alpha, kDefaultCriticalSamples, crit_stream);
            } else {
                cont_rule.critical = normal_quantile(1.0 - config.alpha);
            }
        } else {
            cont_rule.critical = std::numeric_limits<double>::infinity();
        }
        cont_rule.alpha = config.alpha;
        cont_rule.calibrated = calibrate;
        if (calibrate && config.alpha > 0.0) {
            cont_rule.exceedance =
                detail::estimate_h0_exceedance(config, kind, cont_rule.critical, m_cal,
                                               workers);
        }
    }

    const auto participants = static_cast<std::size_t>(config.schedule.total_participants());
    detail::ScenarioAccumulator acc;
    acc.trajectories = m;
    acc.participants = participants;
    acc.regret_increments.resize(static_cast<std::size_t>(m) * participants);
    acc.optimal_flags.resize(acc.regret_increments.size());
    acc.rejection_probabilities.resize(static_cast<std::size_t>(m));

    parallel_for_index(
        m,
        [&](std::int64_t i) {
            RandomStream stream =
                derive_stream(config.master_seed, static_cast<std::uint64_t>(i));
            TrialHistory history = run_trajectory(config, stream);
            std::size_t base = static_cast<std::size_t>(i) * participants;
            std::size_t pos = 0;
            for (int t = 0; t <= history.num_steps(); ++t) {
                int best = best_arm_at(config.regime, t);
                double best_mean = mean_at(config.regime, static_cast<std::size_t>(best), t);
                for (int j = 0; j < history.batch_size(); ++j, ++pos) {
                    int arm = history.arm_at(t, j);
                    acc.regret_increments[base + pos] =
                        best_mean - mean_at(config.regime, static_cast<std::size_t>(arm), t);
                    acc.optimal_flags[base + pos] = arm == best ? 1 : 0;
                }
            }
            double prob;
            if (kind == TestKind::AllocationProbability) {
                prob = ap_rule.rejection_probability(ap_statistic(history));
            } else {
                prob = cont_rule.rejection_probability(
                    detail::trajectory_statistic(kind, history));
            }
            acc.rejection_probabilities[static_cast<std::size_t>(i)] = prob;
        },
        workers);

    MetricsReport report;
    report.scenario_id = config.id;
    report.test = test_name(kind);
    report.hypothesis = config.hypothesis();
    report.alpha = config.alpha;
    report.calibrated = calibrate;
    acc.reduce_into(report);
    report.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

}  // namespace aptest

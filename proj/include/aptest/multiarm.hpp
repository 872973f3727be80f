#pragma once

#include <cstdint>
#include <vector>

#include "aptest/ap_test.hpp"
#include "aptest/core.hpp"
#include "aptest/policy.hpp"
#include "aptest/rewards.hpp"

namespace aptest {

/// Log of one multi-armed experiment. Allocation probabilities are estimated
/// by posterior sampling at the start of each step; the pairwise trace keeps,
/// for each control arm, the posterior probability that the experimental arm
/// beats it (the statistic input for per-comparison tests).
struct MultiArmHistory {
    BatchSchedule schedule;
    std::size_t num_arms = 0;
    std::size_t experimental_arm = 0;
    std::vector<std::vector<double>> alloc_probs;     // [t][arm]
    std::vector<std::vector<double>> pairwise_probs;  // [t][control slot]
    std::vector<int> assignments;                     // [t * batch_size + i]
    std::vector<double> rewards;

    std::size_t slot(int t, int i) const {
        return static_cast<std::size_t>(t) * static_cast<std::size_t>(schedule.batch_size) +
               static_cast<std::size_t>(i);
    }

    /// Control arms in index order with the experimental arm skipped.
    std::vector<std::size_t> control_arms() const {
        std::vector<std::size_t> arms;
        for (std::size_t k = 0; k < num_arms; ++k) {
            if (k != experimental_arm) {
                arms.push_back(k);
            }
        }
        return arms;
    }
};

struct MultiArmScenario {
    BatchSchedule schedule;
    GaussianPrior prior;
    RewardParams params;                      // stationary means per arm
    std::size_t experimental_arm = 0;
    std::int64_t alloc_prob_samples = 10000;  // posterior sample rounds per step

    void validate() const {
        schedule.validate();
        prior.validate();
        params.validate();
        if (experimental_arm >= params.num_arms()) {
            throw ValidationError("experimental arm index out of range");
        }
        if (alloc_prob_samples < 1) {
            throw ValidationError("allocation-probability sampling needs at least one round");
        }
    }
};

/// Thompson-Sampling trajectory with K+1 arms: per step, estimate the
/// allocation probability vector by posterior sampling, assign the batch from
/// it, then update the per-arm posteriors.
inline MultiArmHistory run_multiarm_trajectory(const MultiArmScenario& scenario,
                                               RandomStream& stream) {
    scenario.validate();
    const int num_steps = scenario.schedule.num_steps;
    const int n = scenario.schedule.batch_size;
    const std::size_t arms = scenario.params.num_arms();

    PosteriorState state(arms, scenario.prior, scenario.params.noise_variance);
    MultiArmHistory history;
    history.schedule = scenario.schedule;
    history.num_arms = arms;
    history.experimental_arm = scenario.experimental_arm;
    history.alloc_probs.resize(static_cast<std::size_t>(num_steps) + 1);
    history.pairwise_probs.resize(static_cast<std::size_t>(num_steps) + 1);
    history.assignments.resize(static_cast<std::size_t>(scenario.schedule.total_participants()));
    history.rewards.resize(history.assignments.size());

    for (int t = 0; t <= num_steps; ++t) {
        std::vector<double> probs = mc_alloc_probs(state, scenario.alloc_prob_samples, stream);
        std::vector<double> pairwise;
        pairwise.reserve(arms - 1);
        for (std::size_t k = 0; k < arms; ++k) {
            if (k != scenario.experimental_arm) {
                pairwise.push_back(pairwise_alloc_prob(state, scenario.experimental_arm, k));
            }
        }
        history.alloc_probs[static_cast<std::size_t>(t)] = probs;
        history.pairwise_probs[static_cast<std::size_t>(t)] = std::move(pairwise);

        for (int i = 0; i < n; ++i) {
            double u = stream.uniform01();
            double cum = 0.0;
            std::size_t arm = arms - 1;
            for (std::size_t k = 0; k < arms; ++k) {
                cum += probs[k];
                if (u < cum) {
                    arm = k;
                    break;
                }
            }
            history.assignments[history.slot(t, i)] = static_cast<int>(arm);
            double reward = stream.normal(scenario.params.means[arm],
                                          std::sqrt(scenario.params.noise_variance));
            history.rewards[history.slot(t, i)] = reward;
            state.observe(arm, reward);
        }
    }
    return history;
}

/// Statistic of the experimental arm's estimated allocation-probability trace
/// against the equal-randomization threshold 1/(K+1).
inline int multiarm_ap_statistic(const MultiArmHistory& history) {
    std::vector<double> trace;
    trace.reserve(history.alloc_probs.size());
    for (const auto& probs : history.alloc_probs) {
        trace.push_back(probs[history.experimental_arm]);
    }
    return ap_statistic(std::span<const double>(trace),
                        1.0 / static_cast<double>(history.num_arms));
}

/// Per-comparison statistics on the pairwise-restricted probability traces,
/// one per control arm, thresholded at the two-arm level 0.5.
inline std::vector<int> pairwise_ap_statistics(const MultiArmHistory& history) {
    std::size_t comparisons = history.num_arms - 1;
    std::vector<int> stats(comparisons, 0);
    for (std::size_t c = 0; c < comparisons; ++c) {
        std::vector<double> trace;
        trace.reserve(history.pairwise_probs.size());
        for (const auto& probs : history.pairwise_probs) {
            trace.push_back(probs[c]);
        }
        stats[c] = ap_statistic(std::span<const double>(trace), 0.5);
    }
    return stats;
}

/// Conjunctive decision: reject only when every per-comparison statistic
/// clears its own critical value at the per-comparison level that controls
/// the family-wise error at alpha.
inline bool conjunctive_ap_reject(const std::vector<int>& stats,
                                  const std::vector<NullDistribution>& null_dists,
                                  double alpha) {
    if (stats.empty() || stats.size() != null_dists.size()) {
        throw ValidationError("conjunctive test needs one null distribution per comparison");
    }
    double level = sidak_level(alpha, static_cast<int>(stats.size()));
    for (std::size_t c = 0; c < stats.size(); ++c) {
        CriticalValue crit = critical_value(null_dists[c], level);
        if (stats[c] <= crit.threshold) {
            return false;
        }
    }
    return true;
}

}  // namespace aptest

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "aptest/core.hpp"
#include "aptest/policy.hpp"
#include "aptest/rewards.hpp"

namespace aptest {

/// One fully specified experiment scenario: schedule, priors, reward model,
/// policy variant, and Monte Carlo run parameters.
struct ScenarioConfig {
    std::string id = "scenario";
    BatchSchedule schedule;
    GaussianPrior prior;
    RewardRegime regime;
    PolicyVariant policy = PolicyVariant::StandardTs;
    // Replaces the policy's default clipping when set; used by
    // clipping-sensitivity studies on Thompson-Sampling probabilities.
    std::optional<ClippingScheme> clip_override;
    double alpha = 0.05;
    std::int64_t trajectories = 10000;
    std::uint64_t master_seed = 0;

    Hypothesis hypothesis() const {
        return regime.is_null() ? Hypothesis::Null : Hypothesis::Alternative;
    }

    void validate() const {
        schedule.validate();
        prior.validate();
        regime.validate();  // zero noise variance is rejected for simulation runs
        if (regime.num_arms() != 2) {
            throw ValidationError("trajectory simulation is two-armed");
        }
        if (!(alpha >= 0.0 && alpha < 1.0)) {
            throw ValidationError("alpha must lie in [0,1)");
        }
        if (trajectories < 1) {
            throw ValidationError("trajectory count must be positive");
        }
    }

    /// Equal-means twin of this scenario, used for null-distribution and
    /// calibration runs. Stationary regimes collapse all means onto the
    /// control mean; non-stationary regimes switch the hypothesis flag.
    ScenarioConfig as_null() const {
        ScenarioConfig c = *this;
        c.regime.hypothesis = Hypothesis::Null;
        if (c.regime.kind == RegimeKind::Stationary) {
            for (double& m : c.regime.params.means) {
                m = regime.params.means.front();
            }
        }
        c.id += "_null";
        return c;
    }
};

inline int best_arm_at(const RewardRegime& regime, int t) {
    int best = 0;
    double best_mean = mean_at(regime, 0, t);
    for (std::size_t k = 1; k < regime.num_arms(); ++k) {
        double m = mean_at(regime, k, t);
        if (m > best_mean) {
            best_mean = m;
            best = static_cast<int>(k);
        }
    }
    return best;
}

/// Simulate one experiment: at each step freeze the (possibly clipped)
/// allocation probability, assign the batch, draw rewards, update the
/// posterior. Identical (config, stream) inputs give bit-identical histories.
inline TrialHistory run_trajectory(const ScenarioConfig& config, RandomStream& stream) {
    config.validate();
    const int num_steps = config.schedule.num_steps;
    const int n = config.schedule.batch_size;

    PosteriorState state(2, config.prior, config.regime.noise_variance());
    ClippingScheme scheme =
        config.clip_override ? *config.clip_override : clipping_for(config.policy);

    TrialHistory history;
    history.schedule = config.schedule;
    history.policy = config.policy;
    history.alloc_prob.resize(static_cast<std::size_t>(num_steps) + 1);
    history.assignments.resize(static_cast<std::size_t>(config.schedule.total_participants()));
    history.rewards.resize(history.assignments.size());

    for (int t = 0; t <= num_steps; ++t) {
        double p;
        int oracle_arm = 0;
        switch (config.policy) {
            case PolicyVariant::Oracle:
                oracle_arm = best_arm_at(config.regime, t);
                p = oracle_arm == 1 ? 1.0 : 0.0;
                break;
            case PolicyVariant::UniformRandom:
                p = 0.5;
                break;
            default:
                p = clip(ts_alloc_prob(state), scheme, t);
                break;
        }
        history.alloc_prob[static_cast<std::size_t>(t)] = p;

        for (int i = 0; i < n; ++i) {
            int arm = config.policy == PolicyVariant::Oracle ? oracle_arm
                                                             : select_arm(p, stream);
            history.assignments[history.slot(t, i)] = arm;
        }
        if (config.policy == PolicyVariant::RestrictedTsBols && n >= 2) {
            // Batched OLS needs each arm at least once per batch; reassign one
            // uniformly chosen participant to a missing arm. The recorded
            // probability stays the pre-forcing clipped value.
            int count1 = 0;
            for (int i = 0; i < n; ++i) {
                count1 += history.assignments[history.slot(t, i)];
            }
            if (count1 == 0 || count1 == n) {
                auto idx = static_cast<int>(stream.uniform_index(n));
                history.assignments[history.slot(t, idx)] = count1 == 0 ? 1 : 0;
            }
        }
        for (int i = 0; i < n; ++i) {
            int arm = history.assignments[history.slot(t, i)];
            double reward =
                draw_reward(config.regime, static_cast<std::size_t>(arm), t, stream);
            history.rewards[history.slot(t, i)] = reward;
            state.observe(static_cast<std::size_t>(arm), reward);
        }
    }
    return history;
}

/// Cumulative expected-regret curve over participants in accrual order:
/// each participant contributes the gap between the best achievable mean and
/// the assigned arm's mean at their step.
inline std::vector<double> regret_curve(const TrialHistory& history,
                                        const RewardRegime& regime) {
    std::vector<double> curve(history.assignments.size());
    double total = 0.0;
    std::size_t pos = 0;
    for (int t = 0; t <= history.num_steps(); ++t) {
        int best = best_arm_at(regime, t);
        double best_mean = mean_at(regime, static_cast<std::size_t>(best), t);
        for (int i = 0; i < history.batch_size(); ++i, ++pos) {
            auto arm = static_cast<std::size_t>(history.arm_at(t, i));
            total += best_mean - mean_at(regime, arm, t);
            curve[pos] = total;
        }
    }
    return curve;
}

}  // namespace aptest

#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "aptest/random.hpp"

namespace aptest {

/// Configuration or input data fails validation (CLI exit code 2).
class ValidationError : public std::runtime_error {
  public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

/// A test cannot be applied to the given data, e.g. batched OLS on a batch
/// that misses an arm (CLI exit code 3).
class TestInapplicableError : public std::runtime_error {
  public:
    explicit TestInapplicableError(const std::string& msg) : std::runtime_error(msg) {}
};

enum class Hypothesis { Null, Alternative };

enum class PolicyVariant {
    StandardTs,
    RestrictedTsBols,    // fixed-range clipping + per-batch arm coverage
    RestrictedTsAwAipw,  // time-decaying clipping
    UniformRandom,       // equal randomization, probability 0.5 throughout
    Oracle,              // always assigns the true-best arm
};

inline bool is_ts_policy(PolicyVariant v) {
    return v == PolicyVariant::StandardTs || v == PolicyVariant::RestrictedTsBols ||
           v == PolicyVariant::RestrictedTsAwAipw;
}

struct GaussianPrior {
    double mean = 0.0;
    double variance = 1.0;

    void validate() const {
        if (!std::isfinite(mean) || !std::isfinite(variance)) {
            throw ValidationError("prior parameters must be finite");
        }
        if (variance <= 0.0) {
            throw ValidationError("prior variance must be strictly positive");
        }
    }
};

/// True arm means plus the shared, known reward noise variance.
struct RewardParams {
    std::vector<double> means;  // one entry per arm, index 0 is control
    double noise_variance = 1.0;

    double mu0() const { return means.at(0); }
    double mu1() const { return means.at(1); }
    std::size_t num_arms() const { return means.size(); }

    void validate(bool allow_zero_noise = false) const {
        if (means.size() < 2) {
            throw ValidationError("reward model needs at least two arms");
        }
        for (double m : means) {
            if (!std::isfinite(m)) {
                throw ValidationError("arm means must be finite");
            }
        }
        if (noise_variance < 0.0 || (!allow_zero_noise && noise_variance == 0.0) ||
            !std::isfinite(noise_variance)) {
            throw ValidationError("reward noise variance must be strictly positive");
        }
    }
};

/// Step layout of an experiment: steps t = 0..num_steps, each accruing
/// batch_size participants. Step 0 runs on the prior alone; inference
/// statistics start at t = 1.
struct BatchSchedule {
    int num_steps = 1;   // T >= 1
    int batch_size = 1;  // n >= 1

    int total_participants() const { return (num_steps + 1) * batch_size; }

    void validate() const {
        if (num_steps < 1) {
            throw ValidationError("schedule needs at least one post-baseline step");
        }
        if (batch_size < 1) {
            throw ValidationError("batch size must be at least 1");
        }
    }
};

struct ArmPosterior {
    double mean;
    double variance;
};

/// Per-arm Gaussian-conjugate sufficient statistics (count, reward sum).
/// Posterior parameters are derived on demand so repeated updates cannot
/// accumulate floating-point drift.
class PosteriorState {
  public:
    PosteriorState(std::size_t num_arms, GaussianPrior prior, double noise_variance)
        : prior_(prior), noise_variance_(noise_variance), counts_(num_arms, 0),
          sums_(num_arms, 0.0) {
        prior_.validate();
        if (num_arms < 2) {
            throw ValidationError("posterior state needs at least two arms");
        }
        if (noise_variance <= 0.0 || !std::isfinite(noise_variance)) {
            throw ValidationError("reward noise variance must be strictly positive");
        }
    }

    void observe(std::size_t arm, double reward) {
        check_arm(arm);
        counts_[arm] += 1;
        sums_[arm] += reward;
    }

    std::size_t num_arms() const { return counts_.size(); }
    std::int64_t count(std::size_t arm) const {
        check_arm(arm);
        return counts_[arm];
    }
    double reward_sum(std::size_t arm) const {
        check_arm(arm);
        return sums_[arm];
    }
    const GaussianPrior& prior() const { return prior_; }
    double noise_variance() const { return noise_variance_; }

    /// Conjugate-normal posterior of one arm's mean: precision-weighted
    /// combination of prior and observed evidence.
    ArmPosterior arm_posterior(std::size_t arm) const {
        check_arm(arm);
        double precision =
            1.0 / prior_.variance + static_cast<double>(counts_[arm]) / noise_variance_;
        double variance = 1.0 / precision;
        double mean = variance * (prior_.mean / prior_.variance + sums_[arm] / noise_variance_);
        return {mean, variance};
    }

  private:
    void check_arm(std::size_t arm) const {
        if (arm >= counts_.size()) {
            throw ValidationError("arm index out of range");
        }
    }

    GaussianPrior prior_;
    double noise_variance_;
    std::vector<std::int64_t> counts_;
    std::vector<double> sums_;
};

/// Full log of one two-armed experiment. The experimental-arm allocation
/// probability is frozen at the start of each step and recorded once per step.
struct TrialHistory {
    BatchSchedule schedule;
    PolicyVariant policy = PolicyVariant::StandardTs;
    std::vector<double> alloc_prob;  // size num_steps+1
    std::vector<int> assignments;    // row-major, [t * batch_size + i]
    std::vector<double> rewards;     // same layout

    int num_steps() const { return schedule.num_steps; }
    int batch_size() const { return schedule.batch_size; }

    int arm_at(int t, int i) const { return assignments[slot(t, i)]; }
    double reward_at(int t, int i) const { return rewards[slot(t, i)]; }
    std::size_t slot(int t, int i) const {
        return static_cast<std::size_t>(t) * static_cast<std::size_t>(schedule.batch_size) +
               static_cast<std::size_t>(i);
    }

    void validate() const {
        schedule.validate();
        auto steps = static_cast<std::size_t>(schedule.num_steps) + 1;
        auto total = static_cast<std::size_t>(schedule.total_participants());
        if (alloc_prob.size() != steps || assignments.size() != total ||
            rewards.size() != total) {
            throw ValidationError("history sizes inconsistent with schedule");
        }
        for (int a : assignments) {
            if (a != 0 && a != 1) {
                throw ValidationError("assignments must be arm 0 or arm 1");
            }
        }
        if (is_ts_policy(policy)) {
            for (double p : alloc_prob) {
                if (!(p > 0.0 && p < 1.0)) {
                    throw ValidationError(
                        "randomized policies require allocation probabilities in (0,1)");
                }
            }
        }
    }
};

/// Decision record of one hypothesis test. gamma_applied is the conditional
/// rejection probability given the observed statistic: 1 past the critical
/// region boundary, the randomization probability on the boundary, 0 below.
struct TestOutcome {
    double statistic = 0.0;
    double critical_value = 0.0;
    double alpha_target = 0.0;
    double exceedance_at_critical = 0.0;     // P(stat >= boundary | H0)
    double exceedance_above_critical = 0.0;  // P(stat >  boundary | H0)
    double gamma_applied = 0.0;
    bool reject = false;
};

}  // namespace aptest

#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "aptest/core.hpp"
#include "aptest/math.hpp"
#include "aptest/parallel.hpp"
#include "aptest/scenario.hpp"

namespace aptest {

/// Discrete null distribution of the allocation-probability statistic over
/// support {0..T}, with the exceedance table P(AP > q) cached so critical
/// value queries at many alpha levels are O(1).
struct NullDistribution {
    enum class Source { MonteCarlo, ExactEnumeration };

    Source source = Source::MonteCarlo;
    std::int64_t sample_count = 0;   // Monte Carlo trajectories, 0 for exact
    std::vector<double> pmf;         // pmf[q] = P(AP = q)
    std::vector<double> exceedance;  // exceedance[q] = P(AP > q)

    int max_statistic() const { return static_cast<int>(pmf.size()) - 1; }

    /// P(AP > q), extended to the whole integer line.
    double exceedance_above(int q) const {
        if (q < 0) {
            return 1.0;
        }
        if (q >= max_statistic()) {
            return 0.0;
        }
        return exceedance[static_cast<std::size_t>(q)];
    }

    static NullDistribution from_pmf(std::vector<double> pmf, Source source,
                                     std::int64_t sample_count) {
        NullDistribution dist;
        dist.source = source;
        dist.sample_count = sample_count;
        dist.pmf = std::move(pmf);
        dist.exceedance.assign(dist.pmf.size(), 0.0);
        double tail = 0.0;
        for (std::size_t q = dist.pmf.size(); q-- > 0;) {
            dist.exceedance[q] = tail;
            tail += dist.pmf[q];
        }
        dist.validate();
        return dist;
    }

    void validate() const {
        if (pmf.size() < 2 || exceedance.size() != pmf.size()) {
            throw ValidationError("null distribution needs support {0..T}, T >= 1");
        }
        double total = 0.0;
        for (double p : pmf) {
            if (p < 0.0) {
                throw ValidationError("null distribution pmf entries must be non-negative");
            }
            total += p;
        }
        if (std::abs(total - 1.0) > 1e-9) {
            throw ValidationError("null distribution pmf must sum to 1");
        }
        for (std::size_t q = 1; q < exceedance.size(); ++q) {
            if (exceedance[q] > exceedance[q - 1] + 1e-12) {
                throw ValidationError("exceedance table must be non-increasing");
            }
        }
    }
};

/// Count of post-baseline steps whose probability trace strictly exceeds the
/// equal-randomization threshold. Step 0 is discarded: its probability is not
/// informed by the experiment's own data.
inline int ap_statistic(std::span<const double> alloc_prob_trace, double threshold = 0.5) {
    if (alloc_prob_trace.size() < 2) {
        throw ValidationError("allocation-probability statistic needs at least one "
                              "post-baseline step");
    }
    if (!(threshold > 0.0 && threshold < 1.0)) {
        throw ValidationError("threshold must lie in (0,1)");
    }
    int count = 0;
    for (std::size_t t = 1; t < alloc_prob_trace.size(); ++t) {
        if (alloc_prob_trace[t] > threshold) {
            ++count;
        }
    }
    return count;
}

inline int ap_statistic(const TrialHistory& history, double threshold = 0.5) {
    return ap_statistic(std::span<const double>(history.alloc_prob), threshold);
}

/// Monte Carlo distribution of the statistic under an arbitrary scenario:
/// simulate independent trajectories and tabulate. One derived substream per
/// trajectory index, so the result does not depend on worker scheduling.
inline NullDistribution ap_statistic_distribution(const ScenarioConfig& config,
                                                  std::int64_t trajectories,
                                                  std::uint64_t master_seed, int workers = 0) {
    config.validate();
    if (trajectories < 100) {
        throw ValidationError("statistic distribution needs at least 100 trajectories");
    }
    std::vector<int> stats(static_cast<std::size_t>(trajectories));
    parallel_for_index(
        trajectories,
        [&](std::int64_t i) {
            RandomStream stream = derive_stream(master_seed, static_cast<std::uint64_t>(i));
            TrialHistory history = run_trajectory(config, stream);
            stats[static_cast<std::size_t>(i)] = ap_statistic(history);
        },
        workers);
    std::vector<double> pmf(static_cast<std::size_t>(config.schedule.num_steps) + 1, 0.0);
    for (int s : stats) {
        pmf[static_cast<std::size_t>(s)] += 1.0;
    }
    for (double& p : pmf) {
        p /= static_cast<double>(trajectories);
    }
    return NullDistribution::from_pmf(std::move(pmf), NullDistribution::Source::MonteCarlo,
                                      trajectories);
}

/// Null distribution of the statistic: the statistic's Monte Carlo
/// distribution under an equal-means configuration.
inline NullDistribution mc_null_distribution(const ScenarioConfig& config,
                                             std::int64_t trajectories,
                                             std::uint64_t master_seed, int workers = 0) {
    if (!config.regime.is_null()) {
        throw ValidationError("null distribution requires an equal-means configuration");
    }
    return ap_statistic_distribution(config, trajectories, master_seed, workers);
}

namespace detail {

/// Sufficient statistics accumulated along one enumerated arm sequence.
struct EnumState {
    std::int64_t n0 = 0;
    std::int64_t n1 = 0;
    double s0 = 0.0;
    double s1 = 0.0;
};

struct EnumModel {
    double mu0;
    double mu1;
    double sigma_y;
    double prior_mean;
    double prior_variance;
    int num_steps;

    double arm_mean(int arm) const { return arm == 1 ? mu1 : mu0; }

    double posterior_mean(std::int64_t count, double sum) const {
        double precision = 1.0 / prior_variance + static_cast<double>(count) /
                                                      (sigma_y * sigma_y);
        return (prior_mean / prior_variance + sum / (sigma_y * sigma_y)) / precision;
    }

    double diff_mean(const EnumState& st) const {
        return posterior_mean(st.n1, st.s1) - posterior_mean(st.n0, st.s0);
    }

    /// Difference mean after adding reward y on `arm`, as an affine base +
    /// slope * y. The slope is positive for arm 1, negative for arm 0.
    void affine_diff(const EnumState& st, int arm, double& base, double& slope) const {
        double sigma2 = sigma_y * sigma_y;
        if (arm == 1) {
            double precision = 1.0 / prior_variance + static_cast<double>(st.n1 + 1) / sigma2;
            slope = 1.0 / (sigma2 * precision);
            base = (prior_mean / prior_variance + st.s1 / sigma2) / precision -
                   posterior_mean(st.n0, st.s0);
        } else {
            double precision = 1.0 / prior_variance + static_cast<double>(st.n0 + 1) / sigma2;
            slope = -1.0 / (sigma2 * precision);
            base = posterior_mean(st.n1, st.s1) -
                   (prior_mean / prior_variance + st.s0 / sigma2) / precision;
        }
    }

    double diff_stddev(const EnumState& st) const {
        double sigma2 = sigma_y * sigma_y;
        double v1 = 1.0 / (1.0 / prior_variance + static_cast<double>(st.n1) / sigma2);
        double v0 = 1.0 / (1.0 / prior_variance + static_cast<double>(st.n0) / sigma2);
        return std::sqrt(v1 + v0);
    }
};

/// Probability that the difference-mean trace stays positive from `step`
/// through the horizon, integrating over the reward of the assignment made at
/// step-1 on `arm`. The joint law of the enumerated branch weights each later
/// assignment by its realized allocation probability.
inline double enum_tail_probability(const EnumModel& model, int step, const EnumState& st,
                                    int arm, double tol) {
    double base;
    double slope;
    model.affine_diff(st, arm, base, slope);
    double y_star = -base / slope;
    double arm_mean = model.arm_mean(arm);

    if (step == model.num_steps) {
        // Last step: only the sign of the difference mean matters, so the
        // reward integral collapses to one Gaussian tail.
        double z = (arm_mean - y_star) / model.sigma_y;
        return slope > 0.0 ? normal_cdf(z) : normal_cdf(-z);
    }

    constexpr double kTailWidth = 9.0;
    double lo = arm_mean - kTailWidth * model.sigma_y;
    double hi = arm_mean + kTailWidth * model.sigma_y;
    if (slope > 0.0) {
        lo = std::max(lo, y_star);
    } else {
        hi = std::min(hi, y_star);
    }
    if (!(hi > lo)) {
        return 0.0;
    }

    auto integrand = [&](double y) {
        EnumState next = st;
        if (arm == 1) {
            next.n1 += 1;
            next.s1 += y;
        } else {
            next.n0 += 1;
            next.s0 += y;
        }
        double pi = normal_cdf(model.diff_mean(next) / model.diff_stddev(next));
        double density = normal_pdf((y - arm_mean) / model.sigma_y) / model.sigma_y;
        double tail = pi * enum_tail_probability(model, step + 1, next, 1, tol * 0.1) +
                      (1.0 - pi) * enum_tail_probability(model, step + 1, next, 0, tol * 0.1);
        return density * tail;
    };
    return integrate_adaptive(integrand, lo, hi, tol);
}

}  // namespace detail

/// Exact top mass P(AP_T = T) for a fully-sequential (batch size 1) two-armed
/// experiment, by enumerating arm sequences and integrating the Gaussian
/// reward regions. The horizon is capped where enumeration stays cheap.
inline double exact_top_mass(const RewardParams& params, const GaussianPrior& prior,
                             int num_steps) {
    params.validate(true);
    prior.validate();
    if (params.num_arms() != 2) {
        throw ValidationError("exact enumeration is two-armed");
    }
    if (num_steps < 1 || num_steps > 4) {
        throw ValidationError("exact enumeration supports 1..4 steps");
    }
    detail::EnumModel model{params.mu0(),  params.mu1(),   std::sqrt(params.noise_variance),
                            prior.mean,    prior.variance, num_steps};
    if (model.sigma_y <= 0.0) {
        throw ValidationError("exact enumeration needs positive reward variance");
    }

    if (num_steps == 1) {
        // Single-step closed form. Both baseline branches share the same
        // reward threshold, so under equal means the value is exactly 1/2.
        detail::EnumState empty;
        double base;
        double slope;
        model.affine_diff(empty, 1, base, slope);
        double y_star = -base / slope;
        double d1 = (model.mu1 - y_star) / model.sigma_y;
        double d0 = (model.mu0 - y_star) / model.sigma_y;
        return 0.5 + 0.5 * (normal_cdf(d1) - normal_cdf(d0));
    }

    constexpr double kQuadTol = 1e-7;  // per-branch; total error well under 1e-6
    detail::EnumState empty;
    return 0.5 * (detail::enum_tail_probability(model, 1, empty, 1, kQuadTol) +
                  detail::enum_tail_probability(model, 1, empty, 0, kQuadTol));
}

struct CriticalValue {
    int threshold;      // reject when the statistic strictly exceeds this
    double exceedance;  // P(AP > threshold | H0)
    bool fallback_applied = false;
};

/// Smallest q with P(AP > q | H0) <= alpha. When that minimizer is the top of
/// the support (which would make rejection impossible), fall back to T-1, the
/// critical value with the smallest strictly positive rejection rate.
inline CriticalValue critical_value(const NullDistribution& dist, double alpha) {
    if (!(alpha > 0.0 && alpha <= 1.0)) {
        throw ValidationError("alpha must lie in (0,1]");
    }
    int top = dist.max_statistic();
    for (int q = 0; q <= top; ++q) {
        if (dist.exceedance_above(q) <= alpha) {
            if (q == top) {
                return {top - 1, dist.exceedance_above(top - 1), true};
            }
            return {q, dist.exceedance_above(q), false};
        }
    }
    return {top - 1, dist.exceedance_above(top - 1), true};
}

/// Per-comparison significance level controlling family-wise error over m
/// simultaneous comparisons at level alpha.
inline double sidak_level(double alpha, int comparisons) {
    if (comparisons < 1) {
        throw ValidationError("comparison count must be positive");
    }
    if (!(alpha >= 0.0 && alpha < 1.0)) {
        throw ValidationError("alpha must lie in [0,1)");
    }
    if (comparisons == 1) {
        return alpha;
    }
    return 1.0 - std::pow(1.0 - alpha, 1.0 / static_cast<double>(comparisons));
}

}  // namespace aptest

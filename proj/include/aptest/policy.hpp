#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "aptest/core.hpp"
#include "aptest/math.hpp"
#include "aptest/random.hpp"

namespace aptest {

enum class ClipKind { None, FixedRange, TimeDecaying };

/// Allocation-probability clipping used by the restricted policy variants.
/// FixedRange clamps into [pi_min, pi_max]. TimeDecaying clamps into
/// [b(t), 1-b(t)] with b(t) = min(0.5, t~^-0.7 / arm_divisor), t~ = max(t, 1).
struct ClippingScheme {
    ClipKind kind = ClipKind::None;
    double pi_min = 0.1;
    double pi_max = 0.9;
    int arm_divisor = 2;

    static ClippingScheme none() { return {}; }

    static ClippingScheme fixed_range(double lo = 0.1, double hi = 0.9) {
        if (!(lo > 0.0 && lo <= hi && hi < 1.0)) {
            throw ValidationError("fixed-range clipping needs 0 < pi_min <= pi_max < 1");
        }
        ClippingScheme s;
        s.kind = ClipKind::FixedRange;
        s.pi_min = lo;
        s.pi_max = hi;
        return s;
    }

    static ClippingScheme time_decaying(int arm_divisor = 2) {
        if (arm_divisor < 1) {
            throw ValidationError("time-decaying clipping needs a positive arm divisor");
        }
        ClippingScheme s;
        s.kind = ClipKind::TimeDecaying;
        s.arm_divisor = arm_divisor;
        return s;
    }
};

inline constexpr double kTimeDecayExponent = 0.7;

struct DifferenceParams {
    double mean;    // posterior mean of (experimental - control) arm means
    double stddev;  // posterior standard deviation, strictly positive
};

inline DifferenceParams pairwise_posterior_params(const PosteriorState& state, std::size_t hi,
                                                  std::size_t lo) {
    ArmPosterior a = state.arm_posterior(hi);
    ArmPosterior b = state.arm_posterior(lo);
    return {a.mean - b.mean, std::sqrt(a.variance + b.variance)};
}

/// Posterior of the two-arm mean difference (arm 1 minus arm 0).
inline DifferenceParams posterior_params(const PosteriorState& state) {
    return pairwise_posterior_params(state, 1, 0);
}

/// Posterior probability that arm `hi` beats arm `lo`.
inline double pairwise_alloc_prob(const PosteriorState& state, std::size_t hi, std::size_t lo) {
    DifferenceParams d = pairwise_posterior_params(state, hi, lo);
    return normal_cdf(d.mean / d.stddev);
}

/// Thompson-Sampling probability of assigning the experimental arm, computed
/// in closed form from the Gaussian-conjugate posterior.
inline double ts_alloc_prob(const PosteriorState& state) {
    return pairwise_alloc_prob(state, 1, 0);
}

inline double clip(double prob, const ClippingScheme& scheme, int t) {
    switch (scheme.kind) {
        case ClipKind::None:
            return prob;
        case ClipKind::FixedRange:
            return std::clamp(prob, scheme.pi_min, scheme.pi_max);
        case ClipKind::TimeDecaying: {
            double t_eff = static_cast<double>(std::max(t, 1));
            double bound = std::pow(t_eff, -kTimeDecayExponent) /
                           static_cast<double>(scheme.arm_divisor);
            bound = std::min(bound, 0.5);
            return std::clamp(prob, bound, 1.0 - bound);
        }
    }
    return prob;
}

/// Bernoulli arm selection: 1 with probability prob_arm1, else 0.
inline int select_arm(double prob_arm1, RandomStream& stream) {
    return stream.bernoulli(prob_arm1) ? 1 : 0;
}

/// Monte Carlo allocation probabilities for a general multi-armed posterior:
/// the fraction of sample rounds in which each arm attains the maximum sampled
/// mean. Exact floating-point ties are broken uniformly at random.
inline std::vector<double> mc_alloc_probs(const PosteriorState& state, std::int64_t samples,
                                          RandomStream& stream) {
    if (samples < 1) {
        throw ValidationError("mc_alloc_probs needs at least one sample round");
    }
    std::size_t arms = state.num_arms();
    std::vector<double> sds(arms);
    std::vector<double> means(arms);
    for (std::size_t k = 0; k < arms; ++k) {
        ArmPosterior p = state.arm_posterior(k);
        means[k] = p.mean;
        sds[k] = std::sqrt(p.variance);
    }
    std::vector<std::int64_t> wins(arms, 0);
    std::vector<std::size_t> ties;
    for (std::int64_t m = 0; m < samples; ++m) {
        double best = -std::numeric_limits<double>::infinity();
        ties.clear();
        for (std::size_t k = 0; k < arms; ++k) {
            double draw = means[k] + sds[k] * stream.normal();
            if (draw > best) {
                best = draw;
                ties.assign(1, k);
            } else if (draw == best) {
                ties.push_back(k);
            }
        }
        std::size_t winner =
            ties.size() == 1
                ? ties.front()
                : ties[static_cast<std::size_t>(stream.uniform_index(
                      static_cast<std::int64_t>(ties.size())))];
        wins[winner] += 1;
    }
    std::vector<double> probs(arms);
    for (std::size_t k = 0; k < arms; ++k) {
        probs[k] = static_cast<double>(wins[k]) / static_cast<double>(samples);
    }
    return probs;
}

/// Clipping scheme the given policy variant applies to raw TS probabilities.
inline ClippingScheme clipping_for(PolicyVariant policy) {
    switch (policy) {
        case PolicyVariant::RestrictedTsBols:
            return ClippingScheme::fixed_range(0.1, 0.9);
        case PolicyVariant::RestrictedTsAwAipw:
            return ClippingScheme::time_decaying(2);
        default:
            return ClippingScheme::none();
    }
}

}  // namespace aptest

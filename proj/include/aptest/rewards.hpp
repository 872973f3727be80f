#pragma once

#include <cmath>

#include "aptest/core.hpp"
#include "aptest/random.hpp"

namespace aptest {

enum class RegimeKind {
    Stationary,
    DecayingBaseline,  // both means decay polynomially, constant treatment effect
    DecayingEffect,    // experimental mean decays toward the flat control mean
};

/// Reward-generating model: which regime, which hypothesis, and parameters.
/// Non-stationary regimes share a polynomially decaying mean mu / (t+1)^c.
struct RewardRegime {
    RegimeKind kind = RegimeKind::Stationary;
    Hypothesis hypothesis = Hypothesis::Null;
    RewardParams params;          // stationary means + shared noise variance
    double baseline_mean = 0.0;   // decay baseline (step-0 mean)
    double decay_exponent = 0.0;  // c in [0, 1]
    double effect = 0.0;          // constant treatment effect (DecayingBaseline, H1)

    static RewardRegime stationary(double mu0, double mu1, double noise_variance) {
        RewardRegime r;
        r.kind = RegimeKind::Stationary;
        r.hypothesis = (mu0 == mu1) ? Hypothesis::Null : Hypothesis::Alternative;
        r.params = RewardParams{{mu0, mu1}, noise_variance};
        return r;
    }

    static RewardRegime stationary(std::vector<double> means, double noise_variance) {
        RewardRegime r;
        r.kind = RegimeKind::Stationary;
        bool equal = true;
        for (double m : means) {
            equal = equal && (m == means.front());
        }
        r.hypothesis = equal ? Hypothesis::Null : Hypothesis::Alternative;
        r.params = RewardParams{std::move(means), noise_variance};
        return r;
    }

    static RewardRegime decaying_baseline(double mu, double c, double delta,
                                          double noise_variance, Hypothesis h) {
        RewardRegime r;
        r.kind = RegimeKind::DecayingBaseline;
        r.hypothesis = h;
        r.params = RewardParams{{0.0, 0.0}, noise_variance};
        r.baseline_mean = mu;
        r.decay_exponent = c;
        r.effect = delta;
        return r;
    }

    static RewardRegime decaying_effect(double mu, double c, double noise_variance,
                                        Hypothesis h) {
        RewardRegime r;
        r.kind = RegimeKind::DecayingEffect;
        r.hypothesis = h;
        r.params = RewardParams{{0.0, 0.0}, noise_variance};
        r.baseline_mean = mu;
        r.decay_exponent = c;
        return r;
    }

    std::size_t num_arms() const { return params.num_arms(); }
    double noise_variance() const { return params.noise_variance; }

    /// Whether arm means are equal at every step.
    bool is_null() const {
        if (kind == RegimeKind::Stationary) {
            for (double m : params.means) {
                if (m != params.means.front()) {
                    return false;
                }
            }
            return true;
        }
        return hypothesis == Hypothesis::Null;
    }

    void validate(bool allow_zero_noise = false) const {
        params.validate(allow_zero_noise);
        if (kind == RegimeKind::Stationary) {
            if (hypothesis == Hypothesis::Null && !is_null()) {
                throw ValidationError("null hypothesis requires equal arm means");
            }
            return;
        }
        if (params.num_arms() != 2) {
            throw ValidationError("non-stationary regimes are two-armed");
        }
        if (!(decay_exponent >= 0.0 && decay_exponent <= 1.0)) {
            throw ValidationError("decay exponent must lie in [0,1]");
        }
        if (!std::isfinite(baseline_mean) || !std::isfinite(effect)) {
            throw ValidationError("regime parameters must be finite");
        }
    }
};

inline double decayed_mean(double mu, double c, int t) {
    return mu / std::pow(static_cast<double>(t) + 1.0, c);
}

inline double mean_at(const RewardRegime& regime, std::size_t arm, int t) {
    if (arm >= regime.num_arms()) {
        throw ValidationError("arm index out of range");
    }
    if (t < 0) {
        throw ValidationError("step index must be non-negative");
    }
    switch (regime.kind) {
        case RegimeKind::Stationary:
            return regime.params.means[arm];
        case RegimeKind::DecayingBaseline: {
            double base = decayed_mean(regime.baseline_mean, regime.decay_exponent, t);
            if (regime.hypothesis == Hypothesis::Alternative && arm == 1) {
                return base + regime.effect;
            }
            return base;
        }
        case RegimeKind::DecayingEffect: {
            if (regime.hypothesis == Hypothesis::Alternative) {
                return arm == 1 ? decayed_mean(regime.baseline_mean, regime.decay_exponent, t)
                                : 0.0;
            }
            return decayed_mean(regime.baseline_mean, regime.decay_exponent, t);
        }
    }
    throw ValidationError("unknown reward regime");
}

inline double draw_reward(const RewardRegime& regime, std::size_t arm, int t,
                          RandomStream& stream) {
    double mean = mean_at(regime, arm, t);
    double noise = regime.params.noise_variance;
    if (noise == 0.0) {
        return mean;  // deterministic testing hook
    }
    return stream.normal(mean, std::sqrt(noise));
}

}  // namespace aptest

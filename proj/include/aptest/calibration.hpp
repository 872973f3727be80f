#pragma once

#include <cmath>

#include "aptest/core.hpp"
#include "aptest/random.hpp"

namespace aptest {

/// Outcome of a (possibly randomized) rejection rule. `gamma` is the
/// conditional rejection probability given the observed statistic; the
/// decision drew Bernoulli(gamma) only when gamma lies strictly inside (0,1).
struct RejectionDecision {
    bool reject = false;
    double gamma = 0.0;
    bool conservative_passthrough = false;
};

/// Conditional rejection probability for a discrete statistic under the
/// randomized exact-alpha rule on adjacent support points q_lo < q_hi with
/// exceedances exceed_hi <= alpha <= exceed_lo.
inline double discrete_rejection_probability(int stat, int q_lo, int q_hi, double exceed_lo,
                                             double exceed_hi, double alpha) {
    if (q_hi != q_lo + 1) {
        throw ValidationError("randomized rule needs adjacent support points");
    }
    if (!(exceed_hi <= alpha && alpha <= exceed_lo)) {
        throw ValidationError("exceedance ordering violated: need hi <= alpha <= lo");
    }
    if (stat <= q_lo) {
        return 0.0;
    }
    if (stat > q_hi) {
        return 1.0;
    }
    if (exceed_lo == exceed_hi) {
        return 1.0;  // no mass on the boundary point; any gamma is exact
    }
    return (alpha - exceed_hi) / (exceed_lo - exceed_hi);
}

/// Randomized exact-alpha rule for discrete tests: never reject at or below
/// q_lo, always reject above q_hi, reject with probability gamma exactly on
/// the boundary. Under the null the rejection rate is exactly alpha.
inline RejectionDecision randomized_reject_discrete(int stat, int q_lo, int q_hi,
                                                    double exceed_lo, double exceed_hi,
                                                    double alpha, RandomStream& stream) {
    double gamma = discrete_rejection_probability(stat, q_lo, q_hi, exceed_lo, exceed_hi, alpha);
    RejectionDecision d;
    d.gamma = gamma;
    if (gamma <= 0.0) {
        d.reject = false;
    } else if (gamma >= 1.0) {
        d.reject = true;
    } else {
        d.reject = stream.bernoulli(gamma);
    }
    return d;
}

/// Conditional rejection probability for a continuous statistic whose
/// finite-sample exceedance at the nominal critical value is exceed >= alpha:
/// rejections past the critical value are thinned by gamma = alpha / exceed.
/// The conservative case exceed < alpha passes through unrandomized.
inline double continuous_rejection_probability(double stat, double critical, double exceed,
                                               double alpha, bool* conservative = nullptr) {
    if (exceed < 0.0 || alpha < 0.0) {
        throw ValidationError("exceedance and alpha must be non-negative");
    }
    bool is_conservative = exceed < alpha;
    if (conservative != nullptr) {
        *conservative = is_conservative;
    }
    if (stat <= critical) {
        return 0.0;
    }
    if (is_conservative) {
        return 1.0;
    }
    if (alpha == 0.0) {
        return 0.0;
    }
    return alpha / exceed;
}

inline RejectionDecision randomized_reject_continuous(double stat, double critical,
                                                      double exceed, double alpha,
                                                      RandomStream& stream) {
    RejectionDecision d;
    d.gamma = continuous_rejection_probability(stat, critical, exceed, alpha,
                                               &d.conservative_passthrough);
    if (d.gamma <= 0.0) {
        d.reject = false;
    } else if (d.gamma >= 1.0) {
        d.reject = true;
    } else {
        d.reject = stream.bernoulli(d.gamma);
    }
    return d;
}

}  // namespace aptest

#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <random>
#include <vector>

#include "aptest/core.hpp"
#include "aptest/math.hpp"
#include "aptest/random.hpp"

namespace aptest {

/// Per-batch OLS summary: treatment-effect estimate, arm counts, and the
/// batch noise-variance estimate on n-2 degrees of freedom.
struct BolsBatchStat {
    double delta_hat;
    int n0;
    int n1;
    double sigma2_hat;
};

namespace detail {

inline void warn_policy_mismatch(const TrialHistory& history, PolicyVariant expected,
                                 const char* test_name) {
    static std::atomic<bool> warned{false};
    if (history.policy != expected && !warned.exchange(true)) {
        std::cerr << "warning: " << test_name
                  << " statistic evaluated on a history generated by a different policy "
                     "variant\n";
    }
}

}  // namespace detail

/// Per-batch OLS statistics for batches t = 1..T. The baseline batch carries
/// no treatment contrast of interest and is skipped, matching the statistic.
inline std::vector<BolsBatchStat> bols_batch_stats(const TrialHistory& history) {
    history.validate();
    int n = history.batch_size();
    if (n < 3) {
        throw TestInapplicableError("batched OLS requires batch size >= 3");
    }
    std::vector<BolsBatchStat> stats;
    stats.reserve(static_cast<std::size_t>(history.num_steps()));
    for (int t = 1; t <= history.num_steps(); ++t) {
        int n1 = 0;
        double s0 = 0.0;
        double s1 = 0.0;
        for (int i = 0; i < n; ++i) {
            if (history.arm_at(t, i) == 1) {
                ++n1;
                s1 += history.reward_at(t, i);
            } else {
                s0 += history.reward_at(t, i);
            }
        }
        int n0 = n - n1;
        if (n0 == 0 || n1 == 0) {
            throw TestInapplicableError("batched OLS inapplicable: batch missing an arm");
        }
        double mu0 = s0 / n0;
        double mu1 = s1 / n1;
        double ssr = 0.0;
        for (int i = 0; i < n; ++i) {
            double fitted = history.arm_at(t, i) == 1 ? mu1 : mu0;
            double r = history.reward_at(t, i) - fitted;
            ssr += r * r;
        }
        stats.push_back({mu1 - mu0, n0, n1, ssr / static_cast<double>(n - 2)});
    }
    return stats;
}

/// Batched-OLS Z statistic: the sum over batches of the studentized per-batch
/// treatment-effect estimates. The matching critical value is simulated on the
/// same sum scale, so the rejection decision is scale-consistent.
inline double bols_statistic(const TrialHistory& history, double delta_null) {
    detail::warn_policy_mismatch(history, PolicyVariant::RestrictedTsBols, "batched OLS");
    double sum = 0.0;
    for (const BolsBatchStat& b : bols_batch_stats(history)) {
        if (b.sigma2_hat == 0.0) {
            throw TestInapplicableError(
                "batched OLS inapplicable: degenerate batch noise variance");
        }
        double count_scale = std::sqrt(static_cast<double>(b.n0) * static_cast<double>(b.n1));
        double denom = std::sqrt(static_cast<double>(b.n0 + b.n1) * b.sigma2_hat);
        sum += count_scale * (b.delta_hat - delta_null) / denom;
    }
    return sum;
}

/// Monte Carlo critical value for the batched-OLS statistic: the empirical
/// (1-alpha) quantile of sums of `num_steps` iid Student-t(batch_size - 2)
/// variables.
inline double bols_critical(int batch_size, int num_steps, double alpha, std::int64_t samples,
                            RandomStream& stream) {
    if (batch_size < 3) {
        throw TestInapplicableError("batched OLS requires batch size >= 3");
    }
    if (num_steps < 1 || samples < 100) {
        throw ValidationError("critical-value simulation needs steps >= 1, samples >= 100");
    }
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw ValidationError("alpha must lie in (0,1)");
    }
    std::student_t_distribution<double> t_dist(static_cast<double>(batch_size - 2));
    std::vector<double> sums(static_cast<std::size_t>(samples));
    for (auto& s : sums) {
        double total = 0.0;
        for (int t = 0; t < num_steps; ++t) {
            total += t_dist(stream.engine());
        }
        s = total;
    }
    auto rank = static_cast<std::size_t>(
        std::ceil((1.0 - alpha) * static_cast<double>(samples))) - 1;
    rank = std::min(rank, sums.size() - 1);
    std::nth_element(sums.begin(), sums.begin() + static_cast<std::ptrdiff_t>(rank),
                     sums.end());
    return sums[rank];
}

/// Adaptively weighted AIPW estimate per arm with its variance piece.
struct AwAipwEstimate {
    double mu0;
    double mu1;
    double v0;
    double v1;
};

/// Augmented inverse-probability-weighted estimator with variance-stabilizing
/// sqrt(pi) weights. Scores are computed per observation from batch t = 1 on;
/// the plug-in mean of each arm is its sample mean over strictly earlier
/// steps, defaulting to 0 before the arm has been observed. Setting
/// use_plugin_means = false zeroes the augmentation term, reducing the
/// estimator to plain inverse-probability weighting.
inline AwAipwEstimate aw_aipw_components(const TrialHistory& history,
                                         bool use_plugin_means = true) {
    detail::warn_policy_mismatch(history, PolicyVariant::RestrictedTsAwAipw,
                                 "adaptively weighted AIPW");
    history.validate();
    int n = history.batch_size();

    for (int t = 1; t <= history.num_steps(); ++t) {
        double p = history.alloc_prob[static_cast<std::size_t>(t)];
        if (!(p > 0.0 && p < 1.0)) {
            throw TestInapplicableError(
                "AIPW requires allocation probabilities strictly inside (0,1)");
        }
    }

    // Running per-arm sums over steps < t for the plug-in means.
    double seen_sum[2] = {0.0, 0.0};
    std::int64_t seen_count[2] = {0, 0};
    for (int i = 0; i < n; ++i) {
        int arm = history.arm_at(0, i);
        seen_sum[arm] += history.reward_at(0, i);
        seen_count[arm] += 1;
    }

    double weight_total[2] = {0.0, 0.0};
    double weighted_score[2] = {0.0, 0.0};
    std::vector<double> scores0;
    std::vector<double> scores1;
    std::vector<double> weights;  // per step, shared layout with scores
    scores0.reserve(history.assignments.size());
    scores1.reserve(history.assignments.size());
    weights.reserve(static_cast<std::size_t>(history.num_steps()));

    for (int t = 1; t <= history.num_steps(); ++t) {
        double pi1 = history.alloc_prob[static_cast<std::size_t>(t)];
        double pi0 = 1.0 - pi1;
        double h0 = std::sqrt(pi0);
        double h1 = std::sqrt(pi1);
        double m0 = use_plugin_means && seen_count[0] > 0
                        ? seen_sum[0] / static_cast<double>(seen_count[0])
                        : 0.0;
        double m1 = use_plugin_means && seen_count[1] > 0
                        ? seen_sum[1] / static_cast<double>(seen_count[1])
                        : 0.0;
        for (int i = 0; i < n; ++i) {
            double a = history.arm_at(t, i) == 1 ? 1.0 : 0.0;
            double y = history.reward_at(t, i);
            double score0 = (1.0 - a) * y / pi0 + (1.0 - (1.0 - a) / pi0) * m0;
            double score1 = a * y / pi1 + (1.0 - a / pi1) * m1;
            scores0.push_back(score0);
            scores1.push_back(score1);
            weight_total[0] += h0;
            weight_total[1] += h1;
            weighted_score[0] += h0 * score0;
            weighted_score[1] += h1 * score1;
        }
        weights.push_back(h0);
        weights.push_back(h1);
        for (int i = 0; i < n; ++i) {
            int arm = history.arm_at(t, i);
            seen_sum[arm] += history.reward_at(t, i);
            seen_count[arm] += 1;
        }
    }

    AwAipwEstimate est{};
    est.mu0 = weight_total[0] > 0.0 ? weighted_score[0] / weight_total[0] : 0.0;
    est.mu1 = weight_total[1] > 0.0 ? weighted_score[1] / weight_total[1] : 0.0;

    double var_num[2] = {0.0, 0.0};
    std::size_t idx = 0;
    for (int t = 1; t <= history.num_steps(); ++t) {
        double h0 = weights[static_cast<std::size_t>(2 * (t - 1))];
        double h1 = weights[static_cast<std::size_t>(2 * (t - 1) + 1)];
        for (int i = 0; i < n; ++i, ++idx) {
            double d0 = scores0[idx] - est.mu0;
            double d1 = scores1[idx] - est.mu1;
            var_num[0] += h0 * h0 * d0 * d0;
            var_num[1] += h1 * h1 * d1 * d1;
        }
    }
    est.v0 = var_num[0] / (weight_total[0] * weight_total[0]);
    est.v1 = var_num[1] / (weight_total[1] * weight_total[1]);
    return est;
}

/// Studentized adaptively-weighted AIPW Z statistic for the treatment effect.
inline double aw_aipw_statistic(const TrialHistory& history, double delta_null) {
    AwAipwEstimate est = aw_aipw_components(history);
    double numerator = est.mu1 - est.mu0 - delta_null;
    double denominator = std::sqrt(est.v0 + est.v1);
    if (denominator == 0.0) {
        if (numerator == 0.0) {
            return 0.0;  // fully degenerate data, e.g. identically-zero rewards
        }
        throw TestInapplicableError("AIPW variance estimate is degenerate");
    }
    return numerator / denominator;
}

}  // namespace aptest

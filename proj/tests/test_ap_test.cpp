#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "aptest/ap_test.hpp"
#include "aptest/math.hpp"

using namespace aptest;

namespace {

TrialHistory trace_history(const std::vector<double>& trace) {
    TrialHistory history;
    history.schedule = BatchSchedule{static_cast<int>(trace.size()) - 1, 1};
    history.policy = PolicyVariant::StandardTs;
    history.alloc_prob = trace;
    history.assignments.assign(trace.size(), 0);
    history.rewards.assign(trace.size(), 0.0);
    return history;
}

ScenarioConfig sequential_config(double mu0, double mu1, double sigma2, int steps,
                                 std::uint64_t seed) {
    ScenarioConfig config;
    config.schedule = BatchSchedule{steps, 1};
    config.prior = GaussianPrior{0.0, sigma2};
    config.regime = RewardRegime::stationary(mu0, mu1, sigma2);
    config.master_seed = seed;
    return config;
}

}  // namespace

TEST_CASE("statistic counts strict threshold exceedances after the baseline step") {
    std::vector<double> low(18, 0.4);
    CHECK(ap_statistic(trace_history(low)) == 0);

    std::vector<double> high(18, 0.7);
    CHECK(ap_statistic(trace_history(high)) == 17);

    // Boundary values do not count: the inequality is strict.
    std::vector<double> boundary = {0.5, 0.5, 0.7, 0.5};
    CHECK(ap_statistic(trace_history(boundary)) == 1);

    // The baseline entry is discarded even when it exceeds the threshold.
    std::vector<double> baseline_only = {0.9, 0.4, 0.4};
    CHECK(ap_statistic(trace_history(baseline_only)) == 0);

    // A run where every recorded probability favours the experimental arm
    // attains the maximum.
    std::vector<double> always(50, 0.8);
    CHECK(ap_statistic(trace_history(always)) == 49);

    CHECK_THROWS_AS(ap_statistic(std::span<const double>(low.data(), 1)), ValidationError);
    CHECK_THROWS_AS(ap_statistic(trace_history(high), 1.5), ValidationError);
}

TEST_CASE("multi-arm threshold variant counts against the reciprocal arm count") {
    std::vector<double> trace = {0.5, 0.4, 0.3, 0.2};
    CHECK(ap_statistic(std::span<const double>(trace), 1.0 / 3.0) == 1);
}

TEST_CASE("single-step null distribution is symmetric") {
    ScenarioConfig config = sequential_config(0.0, 0.0, 10.0, 1, 211);
    const std::int64_t m = 10000;
    NullDistribution dist = mc_null_distribution(config, m, config.master_seed);
    REQUIRE(dist.pmf.size() == 2);
    CHECK(std::abs(dist.pmf[1] - 0.5) < 3.0 / std::sqrt(static_cast<double>(m)));

    double total = dist.pmf[0] + dist.pmf[1];
    CHECK_THAT(total, Catch::Matchers::WithinAbs(1.0, 1e-9));
}

TEST_CASE("null pmf is symmetric around the midpoint and exceedances decrease") {
    ScenarioConfig config = sequential_config(0.0, 0.0, 10.0, 10, 223);
    NullDistribution dist = mc_null_distribution(config, 10000, config.master_seed);
    for (int q = 0; q <= 10; ++q) {
        CHECK(std::abs(dist.pmf[static_cast<std::size_t>(q)] -
                       dist.pmf[static_cast<std::size_t>(10 - q)]) < 0.03);
    }
    for (int q = 1; q <= 10; ++q) {
        CHECK(dist.exceedance_above(q) <= dist.exceedance_above(q - 1));
    }
    CHECK(dist.exceedance_above(-1) == 1.0);
    CHECK(dist.exceedance_above(10) == 0.0);
}

TEST_CASE("null distribution rejects unequal-means configurations") {
    ScenarioConfig config = sequential_config(0.0, 0.5, 10.0, 5, 1);
    CHECK_THROWS_AS(mc_null_distribution(config, 1000, 1), ValidationError);
    ScenarioConfig null_cfg = sequential_config(0.0, 0.0, 10.0, 5, 1);
    CHECK_THROWS_AS(mc_null_distribution(null_cfg, 99, 1), ValidationError);
}

TEST_CASE("null distribution is independent of worker count") {
    ScenarioConfig config = sequential_config(0.0, 0.0, 10.0, 8, 227);
    NullDistribution serial = mc_null_distribution(config, 2000, config.master_seed, 1);
    NullDistribution threaded = mc_null_distribution(config, 2000, config.master_seed, 4);
    CHECK(serial.pmf == threaded.pmf);
}

TEST_CASE("exact single-step top mass: equal means give exactly one half") {
    RewardParams equal{{0.3, 0.3}, 5.0};
    CHECK(exact_top_mass(equal, GaussianPrior{0.0, 5.0}, 1) == 0.5);

    RewardParams zero{{0.0, 0.0}, 10.0};
    CHECK(exact_top_mass(zero, GaussianPrior{0.0, 10.0}, 1) == 0.5);
}

TEST_CASE("exact single-step top mass under an effect matches the closed form") {
    RewardParams params{{0.0, 0.5}, 1.0};
    double p = exact_top_mass(params, GaussianPrior{0.0, 1.0}, 1);
    double expected = 0.5 * (normal_cdf(0.5) + 1.0 - normal_cdf(0.0));
    CHECK_THAT(p, Catch::Matchers::WithinAbs(expected, 1e-12));
    CHECK_THAT(p, Catch::Matchers::WithinAbs(0.596, 1e-3));
}

TEST_CASE("exact two-step top mass agrees with the simulated distribution") {
    const std::int64_t m = 100000;

    SECTION("equal means") {
        RewardParams params{{0.0, 0.0}, 10.0};
        double exact = exact_top_mass(params, GaussianPrior{0.0, 10.0}, 2);
        ScenarioConfig config = sequential_config(0.0, 0.0, 10.0, 2, 229);
        NullDistribution dist = mc_null_distribution(config, m, config.master_seed);
        double se = std::sqrt(exact * (1.0 - exact) / static_cast<double>(m));
        CHECK(std::abs(dist.pmf[2] - exact) < 4.0 * se);
    }

    SECTION("separated means") {
        RewardParams params{{0.0, 0.5}, 1.0};
        double exact = exact_top_mass(params, GaussianPrior{0.0, 1.0}, 2);
        ScenarioConfig config = sequential_config(0.0, 0.5, 1.0, 2, 233);
        NullDistribution dist =
            ap_statistic_distribution(config, m, config.master_seed);
        double se = std::sqrt(exact * (1.0 - exact) / static_cast<double>(m));
        CHECK(std::abs(dist.pmf[2] - exact) < 4.0 * se);
    }

    SECTION("three steps, nested quadrature") {
        RewardParams params{{0.0, 0.0}, 10.0};
        double exact = exact_top_mass(params, GaussianPrior{0.0, 10.0}, 3);
        ScenarioConfig config = sequential_config(0.0, 0.0, 10.0, 3, 239);
        NullDistribution dist = mc_null_distribution(config, m, config.master_seed);
        double se = std::sqrt(exact * (1.0 - exact) / static_cast<double>(m));
        CHECK(std::abs(dist.pmf[3] - exact) < 4.0 * se);
    }
}

TEST_CASE("exact enumeration rejects unsupported inputs") {
    RewardParams params{{0.0, 0.0}, 1.0};
    GaussianPrior prior{0.0, 1.0};
    CHECK_THROWS_AS(exact_top_mass(params, prior, 0), ValidationError);
    CHECK_THROWS_AS(exact_top_mass(params, prior, 5), ValidationError);
    RewardParams three{{0.0, 0.0, 0.0}, 1.0};
    CHECK_THROWS_AS(exact_top_mass(three, prior, 2), ValidationError);
}

TEST_CASE("critical value scans the exceedance table") {
    // Distribution shaped like the small-batch pilot null: most of the mass
    // at the extremes, 7.3% exactly on the top support point.
    std::vector<double> pmf(18, 0.0);
    pmf[0] = 0.077;
    for (int q = 1; q <= 16; ++q) {
        pmf[static_cast<std::size_t>(q)] = 0.85 / 16.0;
    }
    pmf[17] = 0.073;
    NullDistribution dist =
        NullDistribution::from_pmf(pmf, NullDistribution::Source::MonteCarlo, 0);

    CriticalValue at10 = critical_value(dist, 0.1);
    CHECK(at10.threshold == 16);
    CHECK_THAT(at10.exceedance, Catch::Matchers::WithinAbs(0.073, 1e-12));
    CHECK_FALSE(at10.fallback_applied);

    // Below the top mass the minimizer would be the maximum support point,
    // which can never reject; the rule falls back to one step below.
    CriticalValue at5 = critical_value(dist, 0.05);
    CHECK(at5.threshold == 16);
    CHECK_THAT(at5.exceedance, Catch::Matchers::WithinAbs(0.073, 1e-12));
    CHECK(at5.fallback_applied);

    CriticalValue loose = critical_value(dist, 1.0);
    CHECK(loose.threshold == 0);

    CHECK_THROWS_AS(critical_value(dist, 0.0), ValidationError);
}

TEST_CASE("critical value on the exact two-step null pmf") {
    RewardParams params{{0.0, 0.0}, 10.0};
    double top = exact_top_mass(params, GaussianPrior{0.0, 10.0}, 2);
    // Equal-means two-step pmf is symmetric: P(0) = P(2) = top.
    std::vector<double> pmf = {top, 1.0 - 2.0 * top, top};
    NullDistribution dist =
        NullDistribution::from_pmf(pmf, NullDistribution::Source::ExactEnumeration, 0);

    for (double alpha : {0.01, 0.05, 0.1, 0.3, 0.6}) {
        CriticalValue crit = critical_value(dist, alpha);
        // Oracle: direct scan of the definition, with the top-of-support
        // minimizer replaced by the largest usable threshold.
        int expected = 2;
        for (int q = 0; q <= 2; ++q) {
            if (dist.exceedance_above(q) <= alpha) {
                expected = q;
                break;
            }
        }
        if (expected == 2) {
            expected = 1;
        }
        CHECK(crit.threshold == expected);
    }
}

TEST_CASE("family-wise level adjustment") {
    CHECK(sidak_level(0.05, 1) == 0.05);
    CHECK_THAT(sidak_level(0.05, 2), Catch::Matchers::WithinAbs(0.025320565519104, 1e-12));
    CHECK(sidak_level(0.0, 7) == 0.0);
    CHECK_THROWS_AS(sidak_level(0.05, 0), ValidationError);
}

TEST_CASE("field-study-style history rejects, uniform randomization does not") {
    // Synthetic fixture built from published summary values of a crowdsourced
    // deployment: 150 participants in batches of 3, 137 on the experimental
    // arm (mean rating 5.2) and 13 on the control arm (mean 4.6), with every
    // recorded probability above one half.
    const int steps = 49;
    const int n = 3;
    TrialHistory field;
    field.schedule = BatchSchedule{steps, n};
    field.policy = PolicyVariant::StandardTs;
    field.alloc_prob.resize(50);
    field.alloc_prob[0] = 0.5;
    for (int t = 1; t <= steps; ++t) {
        field.alloc_prob[static_cast<std::size_t>(t)] =
            0.55 + 0.44 * static_cast<double>(t) / steps;
    }
    int control_left = 13;
    for (int t = 0; t <= steps; ++t) {
        for (int i = 0; i < n; ++i) {
            // Spread the 13 control assignments over the earliest batches.
            bool control = control_left > 0 && i == 0 && t < 13;
            if (control) {
                --control_left;
            }
            field.assignments.push_back(control ? 0 : 1);
            field.rewards.push_back(control ? 4.6 : 5.2);
        }
    }
    REQUIRE(ap_statistic(field) == steps);

    ScenarioConfig h0;
    h0.schedule = field.schedule;
    h0.prior = GaussianPrior{0.0, 10.0};
    h0.regime = RewardRegime::stationary(0.0, 0.0, 10.0);
    h0.master_seed = 239;
    NullDistribution dist = mc_null_distribution(h0, 2000, h0.master_seed);
    CriticalValue crit = critical_value(dist, 0.05);
    CHECK(ap_statistic(field) > crit.threshold);

    // A uniform-randomization history records exactly one half at every
    // step; the strict inequality counts none of them, so it never rejects.
    ScenarioConfig uniform = h0;
    uniform.policy = PolicyVariant::UniformRandom;
    uniform.master_seed = 241;
    RandomStream stream = derive_stream(uniform.master_seed, 0);
    TrialHistory er_history = run_trajectory(uniform, stream);
    int er_stat = ap_statistic(er_history);
    CHECK(er_stat == 0);
    CHECK_FALSE(er_stat > crit.threshold);
}

TEST_CASE("pmf validation catches malformed distributions") {
    CHECK_THROWS_AS(NullDistribution::from_pmf({0.5, 0.4},
                                               NullDistribution::Source::MonteCarlo, 0),
                    ValidationError);
    CHECK_THROWS_AS(NullDistribution::from_pmf({1.2, -0.2},
                                               NullDistribution::Source::MonteCarlo, 0),
                    ValidationError);
    CHECK_THROWS_AS(NullDistribution::from_pmf({1.0},
                                               NullDistribution::Source::MonteCarlo, 0),
                    ValidationError);
}

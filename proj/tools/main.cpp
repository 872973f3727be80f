// Command-line front end: simulate scenarios, test recorded histories, and
// sweep scenario grids into rate tables.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "aptest/aptest.hpp"

namespace {

using namespace aptest;

struct CommonArgs {
    std::optional<std::uint64_t> seed;
    std::optional<std::int64_t> trajectories;
    std::optional<double> alpha;
};

void apply_overrides(ScenarioConfig& config, const CommonArgs& args) {
    if (args.seed) {
        config.master_seed = *args.seed;
    }
    if (args.trajectories) {
        config.trajectories = *args.trajectories;
    }
    if (args.alpha) {
        config.alpha = *args.alpha;
    }
}

void write_metrics(const std::string& out, const std::vector<MetricsReport>& reports) {
    if (out.size() >= 5 && out.substr(out.size() - 5) == ".json") {
        write_metrics_json(out, reports);
    } else {
        write_metrics_csv(out, reports);
    }
    std::cout << "wrote " << out << '\n';
}

int run_simulate(const std::string& config_path, const std::string& preset,
                 const std::string& out, const CommonArgs& args) {
    if (!config_path.empty()) {
        ScenarioConfig config = load_scenario_config(config_path);
        apply_overrides(config, args);
        RandomStream stream = derive_stream(config.master_seed, 0);
        TrialHistory history = run_trajectory(config, stream);
        write_history_csv(out, history);
        write_history_metadata_json(history_metadata_path(out), config);
        std::cout << "wrote " << out << " and " << history_metadata_path(out) << '\n';
        return 0;
    }

    std::uint64_t seed = args.seed.value_or(presets::kDefaultSeed);
    std::int64_t trajectories = args.trajectories.value_or(10000);
    if (preset == "fig1") {
        std::vector<MetricsReport> reports;
        for (const ScenarioConfig& config :
             presets::regret_comparison(trajectories, seed)) {
            reports.push_back(simulate_policy_metrics(config));
        }
        write_curves_csv(out, reports);
        std::cout << "wrote " << out << '\n';
        return 0;
    }
    if (preset == "fig2") {
        std::ofstream csv(out);
        if (!csv) {
            throw ValidationError("cannot open output file: " + out);
        }
        csv << "hypothesis,q,pmf,exceedance\n";
        for (Hypothesis h : {Hypothesis::Null, Hypothesis::Alternative}) {
            ScenarioConfig config = presets::pilot_scenario(h, trajectories, seed);
            NullDistribution dist =
                ap_statistic_distribution(config, trajectories, config.master_seed);
            for (int q = 0; q <= dist.max_statistic(); ++q) {
                csv << hypothesis_name(h) << ',' << q << ','
                    << format_double(dist.pmf[static_cast<std::size_t>(q)]) << ','
                    << format_double(dist.exceedance[static_cast<std::size_t>(q)]) << '\n';
            }
        }
        std::cout << "wrote " << out << '\n';
        return 0;
    }
    throw ValidationError("simulate needs --config or --preset fig1|fig2");
}

int run_test(const std::string& history_path, const std::string& test_selector, double alpha,
             const std::string& null_dist_path, const std::string& h0_config_path,
             bool calibrate, const std::string& out, const CommonArgs& args) {
    PolicyVariant policy = PolicyVariant::StandardTs;
    std::string meta_path = history_metadata_path(history_path);
    if (std::filesystem::exists(meta_path)) {
        std::ifstream meta_in(meta_path);
        nlohmann::json meta = nlohmann::json::parse(meta_in);
        policy = policy_from_name(meta.at("policy").get<std::string>());
    }
    TrialHistory history = read_history_csv(history_path, policy);

    std::uint64_t seed = args.seed.value_or(0);
    std::int64_t trajectories = args.trajectories.value_or(10000);
    RandomStream decision_stream = derive_stream(seed ^ kDecisionSeedSalt, 0);

    TestOutcome outcome;
    if (test_selector == "ap") {
        NullDistribution dist;
        if (!null_dist_path.empty()) {
            dist = read_null_distribution_csv(null_dist_path);
        } else if (!h0_config_path.empty()) {
            ScenarioConfig h0 = load_scenario_config(h0_config_path);
            apply_overrides(h0, args);
            dist = mc_null_distribution(h0, trajectories, h0.master_seed ^
                                                              kCalibrationSeedSalt);
        } else {
            throw ValidationError(
                "the allocation-probability test needs --null-dist or --h0-config");
        }
        if (dist.max_statistic() != history.num_steps()) {
            throw ValidationError("null distribution support does not match the history");
        }
        ApTestRule rule = make_ap_rule(std::move(dist), alpha, calibrate);
        outcome = rule.decide(ap_statistic(history), decision_stream);
    } else if (test_selector == "bols" || test_selector == "awaipw") {
        ContinuousTestRule rule;
        rule.alpha = alpha;
        rule.calibrated = calibrate;
        TestKind kind = test_selector == "bols" ? TestKind::Bols : TestKind::AwAipw;
        double stat;
        if (kind == TestKind::Bols) {
            RandomStream crit_stream = derive_stream(seed ^ kCriticalSeedSalt, 0);
            rule.critical = bols_critical(history.batch_size(), history.num_steps(), alpha,
                                          kDefaultCriticalSamples, crit_stream);
            stat = bols_statistic(history, 0.0);
        } else {
            rule.critical = normal_quantile(1.0 - alpha);
            stat = aw_aipw_statistic(history, 0.0);
        }
        if (calibrate) {
            if (h0_config_path.empty()) {
                throw ValidationError("calibrating a continuous test needs --h0-config");
            }
            ScenarioConfig h0 = load_scenario_config(h0_config_path);
            apply_overrides(h0, args);
            if (!h0.regime.is_null()) {
                throw ValidationError("--h0-config must specify equal arm means");
            }
            std::vector<unsigned char> above(static_cast<std::size_t>(trajectories), 0);
            parallel_for_index(trajectories, [&](std::int64_t i) {
                RandomStream stream = derive_stream(h0.master_seed ^ kCalibrationSeedSalt,
                                                    static_cast<std::uint64_t>(i));
                TrialHistory h = run_trajectory(h0, stream);
                double s = kind == TestKind::Bols ? bols_statistic(h, 0.0)
                                                  : aw_aipw_statistic(h, 0.0);
                above[static_cast<std::size_t>(i)] = s > rule.critical ? 1 : 0;
            });
            std::int64_t count = 0;
            for (unsigned char flag : above) {
                count += flag;
            }
            rule.exceedance = static_cast<double>(count) / static_cast<double>(trajectories);
        }
        outcome = rule.decide(stat, decision_stream);
    } else {
        throw ValidationError("unknown test selector: " + test_selector);
    }

    write_outcome_json(out, outcome, test_selector, calibrate);
    std::cout << "wrote " << out << '\n';
    return 0;
}

int run_sweep(const std::string& config_path, const std::string& preset, const std::string& out,
              bool calibrate_flag_set, bool calibrate, const CommonArgs& args) {
    std::vector<SweepEntry> entries;
    bool do_calibrate = true;
    std::int64_t calibration_trajectories = 0;
    if (!config_path.empty()) {
        SweepConfig sweep = load_sweep_config(config_path);
        entries = std::move(sweep.entries);
        do_calibrate = sweep.calibrate;
        calibration_trajectories = sweep.calibration_trajectories;
    } else if (preset == "fig3") {
        entries = presets::error_rate_grid(args.alpha.value_or(0.05),
                                           args.trajectories.value_or(10000),
                                           args.seed.value_or(presets::kDefaultSeed));
    } else if (preset == "nonstationary") {
        entries = presets::nonstationary_grid(args.alpha.value_or(0.05),
                                              args.trajectories.value_or(10000),
                                              args.seed.value_or(presets::kDefaultSeed));
    } else {
        throw ValidationError("sweep needs --config or --preset fig3|nonstationary");
    }
    if (calibrate_flag_set) {
        do_calibrate = calibrate;
    }

    std::vector<MetricsReport> reports;
    reports.reserve(entries.size());
    for (SweepEntry& entry : entries) {
        apply_overrides(entry.config, args);
        reports.push_back(estimate_error_rates(entry.config, entry.test, do_calibrate,
                                               calibration_trajectories));
        const MetricsReport& r = reports.back();
        std::cout << r.scenario_id << " " << r.test << ": rate="
                  << (r.rejection ? format_double(r.rejection->rate) : "n/a") << '\n';
    }
    write_metrics(out, reports);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Simulation and inference toolkit for adaptive randomized experiments"};
    app.require_subcommand(1);

    CommonArgs args;
    std::uint64_t seed_value = 0;
    std::int64_t trajectories_value = 0;
    double alpha_value = 0.0;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--seed", seed_value, "Master seed (overrides config files)");
        cmd->add_option("--trajectories", trajectories_value, "Monte Carlo trajectory count");
        cmd->add_option("--alpha", alpha_value, "Significance level");
    };
    auto collect_common = [&](CLI::App* cmd) {
        if (cmd->count("--seed") > 0) {
            args.seed = seed_value;
        }
        if (cmd->count("--trajectories") > 0) {
            args.trajectories = trajectories_value;
        }
        if (cmd->get_option_no_throw("--alpha") != nullptr && cmd->count("--alpha") > 0) {
            args.alpha = alpha_value;
        }
    };

    auto* simulate = app.add_subcommand("simulate",
                                        "Simulate one trajectory from a config file, or run a "
                                        "built-in study preset");
    std::string sim_config;
    std::string sim_preset;
    std::string sim_out = "history.csv";
    simulate->add_option("--config", sim_config, "Scenario config file");
    simulate->add_option("--preset", sim_preset, "Built-in preset: fig1 or fig2");
    simulate->add_option("--out", sim_out, "Output path");
    add_common(simulate);

    auto* test = app.add_subcommand("test", "Apply a test to a recorded history");
    std::string test_history;
    std::string test_selector = "ap";
    std::string test_null_dist;
    std::string test_h0_config;
    std::string test_out = "outcome.json";
    double test_alpha = 0.05;
    bool test_calibrate = false;
    test->add_option("--history", test_history, "History CSV path")->required();
    test->add_option("--test", test_selector, "Test selector: ap, bols, or awaipw");
    test->add_option("--alpha", test_alpha, "Significance level");
    test->add_option("--null-dist", test_null_dist, "Null distribution CSV (ap)");
    test->add_option("--h0-config", test_h0_config,
                     "Equal-means scenario config used to simulate the null");
    test->add_flag("--calibrate", test_calibrate, "Randomized exact-alpha decision");
    test->add_option("--out", test_out, "Outcome JSON path");
    test->add_option("--seed", seed_value, "Seed for null simulation and decision draws");
    test->add_option("--trajectories", trajectories_value,
                     "Null-simulation trajectory count");

    auto* sweep = app.add_subcommand("sweep", "Run a scenario/test grid into a rate table");
    std::string sweep_config;
    std::string sweep_preset;
    std::string sweep_out = "metrics.csv";
    bool sweep_calibrate = true;
    bool sweep_no_calibrate = false;
    sweep->add_option("--config", sweep_config, "Sweep grid config file");
    sweep->add_option("--preset", sweep_preset, "Built-in preset: fig3 or nonstationary");
    sweep->add_option("--out", sweep_out, "Output table (.csv or .json)");
    auto* cal_flag = sweep->add_flag("--calibrate", sweep_calibrate,
                                     "Randomized exact-alpha decisions (default)");
    auto* nocal_flag =
        sweep->add_flag("--no-calibrate", sweep_no_calibrate, "Natural critical values only");
    add_common(sweep);

    try {
        app.parse(argc, argv);
        if (simulate->parsed()) {
            collect_common(simulate);
            return run_simulate(sim_config, sim_preset, sim_out, args);
        }
        if (test->parsed()) {
            collect_common(test);
            return run_test(test_history, test_selector, test_alpha, test_null_dist,
                            test_h0_config, test_calibrate, test_out, args);
        }
        if (sweep->parsed()) {
            collect_common(sweep);
            bool flag_set = cal_flag->count() > 0 || nocal_flag->count() > 0;
            bool calibrate = nocal_flag->count() > 0 ? false : sweep_calibrate;
            return run_sweep(sweep_config, sweep_preset, sweep_out, flag_set, calibrate, args);
        }
        return 0;
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const aptest::TestInapplicableError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const aptest::ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}

#pragma once

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "aptest/ap_test.hpp"
#include "aptest/core.hpp"
#include "aptest/harness.hpp"
#include "aptest/rewards.hpp"
#include "aptest/scenario.hpp"

namespace aptest {

/// Doubles are printed with 17 significant digits so every file round-trips
/// to the identical bit pattern.
inline std::string format_double(double value) {
    char buffer[40];
    std::snprintf(buffer, sizeof(buffer), "%.17g", value);
    return buffer;
}

inline const char* policy_name(PolicyVariant policy) {
    switch (policy) {
        case PolicyVariant::StandardTs:
            return "standard_ts";
        case PolicyVariant::RestrictedTsBols:
            return "restricted_bols";
        case PolicyVariant::RestrictedTsAwAipw:
            return "restricted_awaipw";
        case PolicyVariant::UniformRandom:
            return "uniform";
        case PolicyVariant::Oracle:
            return "oracle";
    }
    return "unknown";
}

inline PolicyVariant policy_from_name(const std::string& name) {
    if (name == "standard_ts") return PolicyVariant::StandardTs;
    if (name == "restricted_bols") return PolicyVariant::RestrictedTsBols;
    if (name == "restricted_awaipw") return PolicyVariant::RestrictedTsAwAipw;
    if (name == "uniform") return PolicyVariant::UniformRandom;
    if (name == "oracle") return PolicyVariant::Oracle;
    throw ValidationError("unknown policy variant: " + name);
}

inline const char* regime_name(RegimeKind kind) {
    switch (kind) {
        case RegimeKind::Stationary:
            return "stationary";
        case RegimeKind::DecayingBaseline:
            return "decaying_baseline";
        case RegimeKind::DecayingEffect:
            return "decaying_effect";
    }
    return "unknown";
}

inline const char* hypothesis_name(Hypothesis h) {
    return h == Hypothesis::Null ? "h0" : "h1";
}

namespace detail {

inline std::ofstream open_output(const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw ValidationError("cannot open output file: " + path);
    }
    return out;
}

inline std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot open input file: " + path);
    }
    return in;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) {
        fields.push_back(field);
    }
    return fields;
}

inline double parse_double(const std::string& text, const std::string& context) {
    try {
        std::size_t consumed = 0;
        double v = std::stod(text, &consumed);
        if (consumed != text.size()) {
            throw std::invalid_argument(text);
        }
        return v;
    } catch (const std::exception&) {
        throw ValidationError(context + ": cannot parse number '" + text + "'");
    }
}

inline long long parse_int(const std::string& text, const std::string& context) {
    try {
        std::size_t consumed = 0;
        long long v = std::stoll(text, &consumed);
        if (consumed != text.size()) {
            throw std::invalid_argument(text);
        }
        return v;
    } catch (const std::exception&) {
        throw ValidationError(context + ": cannot parse integer '" + text + "'");
    }
}

}  // namespace detail

/// History CSV: one row per participant, columns t,i,alloc_prob,arm,reward.
inline void write_history_csv(const std::string& path, const TrialHistory& history) {
    std::ofstream out = detail::open_output(path);
    out << "t,i,alloc_prob,arm,reward\n";
    for (int t = 0; t <= history.num_steps(); ++t) {
        for (int i = 0; i < history.batch_size(); ++i) {
            out << t << ',' << i << ','
                << format_double(history.alloc_prob[static_cast<std::size_t>(t)]) << ','
                << history.arm_at(t, i) << ',' << format_double(history.reward_at(t, i))
                << '\n';
        }
    }
}

inline TrialHistory read_history_csv(const std::string& path,
                                     PolicyVariant policy = PolicyVariant::StandardTs) {
    std::ifstream in = detail::open_input(path);
    std::string line;
    if (!std::getline(in, line) || line != "t,i,alloc_prob,arm,reward") {
        throw ValidationError(path + ": expected header 't,i,alloc_prob,arm,reward'");
    }
    struct Row {
        int t;
        int i;
        double prob;
        int arm;
        double reward;
    };
    std::vector<Row> rows;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        auto fields = detail::split_csv_line(line);
        std::string context = path + ":" + std::to_string(line_no);
        if (fields.size() != 5) {
            throw ValidationError(context + ": expected 5 columns");
        }
        rows.push_back({static_cast<int>(detail::parse_int(fields[0], context)),
                        static_cast<int>(detail::parse_int(fields[1], context)),
                        detail::parse_double(fields[2], context),
                        static_cast<int>(detail::parse_int(fields[3], context)),
                        detail::parse_double(fields[4], context)});
    }
    if (rows.empty()) {
        throw ValidationError(path + ": empty history");
    }
    int num_steps = 0;
    int batch_size = 0;
    for (const Row& r : rows) {
        num_steps = std::max(num_steps, r.t);
        if (r.t == 0) {
            batch_size = std::max(batch_size, r.i + 1);
        }
    }
    TrialHistory history;
    history.schedule = BatchSchedule{num_steps, batch_size};
    history.policy = policy;
    history.alloc_prob.assign(static_cast<std::size_t>(num_steps) + 1, -1.0);
    history.assignments.assign(static_cast<std::size_t>(history.schedule.total_participants()),
                               -1);
    history.rewards.assign(history.assignments.size(), 0.0);
    if (rows.size() != history.assignments.size()) {
        throw ValidationError(path + ": row count inconsistent with a fixed batch size");
    }
    for (const Row& r : rows) {
        if (r.t < 0 || r.i < 0 || r.i >= batch_size) {
            throw ValidationError(path + ": participant index out of range");
        }
        std::size_t slot = history.slot(r.t, r.i);
        if (history.assignments[slot] != -1) {
            throw ValidationError(path + ": duplicate participant row");
        }
        double& prob = history.alloc_prob[static_cast<std::size_t>(r.t)];
        if (prob >= 0.0 && prob != r.prob) {
            throw ValidationError(path +
                                  ": allocation probability must be constant within a step");
        }
        prob = r.prob;
        history.assignments[slot] = r.arm;
        history.rewards[slot] = r.reward;
    }
    for (int a : history.assignments) {
        if (a == -1) {
            throw ValidationError(path + ": missing participant rows");
        }
    }
    history.validate();
    return history;
}

inline void write_history_metadata_json(const std::string& path, const ScenarioConfig& config) {
    nlohmann::json meta;
    meta["seed"] = config.master_seed;
    meta["policy"] = policy_name(config.policy);
    meta["schedule"] = {{"steps", config.schedule.num_steps},
                        {"batch_size", config.schedule.batch_size}};
    meta["prior"] = {{"mean", config.prior.mean}, {"variance", config.prior.variance}};
    nlohmann::json regime;
    regime["kind"] = regime_name(config.regime.kind);
    regime["hypothesis"] = hypothesis_name(config.regime.hypothesis);
    regime["sigma2"] = config.regime.params.noise_variance;
    regime["means"] = config.regime.params.means;
    regime["baseline"] = config.regime.baseline_mean;
    regime["decay"] = config.regime.decay_exponent;
    regime["delta"] = config.regime.effect;
    meta["regime"] = regime;
    std::ofstream out = detail::open_output(path);
    out << meta.dump(2) << '\n';
}

/// Metadata file written next to a history CSV: <stem>.meta.json.
inline std::string history_metadata_path(const std::string& csv_path) {
    auto dot = csv_path.find_last_of('.');
    std::string stem = dot == std::string::npos ? csv_path : csv_path.substr(0, dot);
    return stem + ".meta.json";
}

/// Null distribution CSV: columns q,pmf,exceedance.
inline void write_null_distribution_csv(const std::string& path,
                                        const NullDistribution& dist) {
    std::ofstream out = detail::open_output(path);
    out << "q,pmf,exceedance\n";
    for (int q = 0; q <= dist.max_statistic(); ++q) {
        out << q << ',' << format_double(dist.pmf[static_cast<std::size_t>(q)]) << ','
            << format_double(dist.exceedance[static_cast<std::size_t>(q)]) << '\n';
    }
}

inline NullDistribution read_null_distribution_csv(const std::string& path) {
    std::ifstream in = detail::open_input(path);
    std::string line;
    if (!std::getline(in, line) || line != "q,pmf,exceedance") {
        throw ValidationError(path + ": expected header 'q,pmf,exceedance'");
    }
    std::vector<double> pmf;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        std::string context = path + ":" + std::to_string(line_no);
        auto fields = detail::split_csv_line(line);
        if (fields.size() != 3) {
            throw ValidationError(context + ": expected 3 columns");
        }
        if (detail::parse_int(fields[0], context) != static_cast<long long>(pmf.size())) {
            throw ValidationError(context + ": support must be contiguous from 0");
        }
        pmf.push_back(detail::parse_double(fields[1], context));
    }
    return NullDistribution::from_pmf(std::move(pmf), NullDistribution::Source::MonteCarlo, 0);
}

inline nlohmann::json outcome_to_json(const TestOutcome& outcome, const std::string& test,
                                      bool calibrated) {
    nlohmann::json j;
    j["test"] = test;
    j["calibrated"] = calibrated;
    j["statistic"] = outcome.statistic;
    j["critical_value"] = outcome.critical_value;
    j["alpha_target"] = outcome.alpha_target;
    j["exceedance_at_critical"] = outcome.exceedance_at_critical;
    j["exceedance_above_critical"] = outcome.exceedance_above_critical;
    j["gamma_applied"] = outcome.gamma_applied;
    j["reject"] = outcome.reject;
    return j;
}

inline void write_outcome_json(const std::string& path, const TestOutcome& outcome,
                               const std::string& test, bool calibrated) {
    std::ofstream out = detail::open_output(path);
    out << outcome_to_json(outcome, test, calibrated).dump(2) << '\n';
}

/// Metrics CSV: one row per (scenario, test) pair.
inline void write_metrics_csv(const std::string& path,
                              const std::vector<MetricsReport>& reports) {
    std::ofstream out = detail::open_output(path);
    out << "scenario,test,hypothesis,alpha,rate,stderr,mean_final_regret\n";
    for (const MetricsReport& r : reports) {
        out << r.scenario_id << ',' << r.test << ',' << hypothesis_name(r.hypothesis) << ','
            << format_double(r.alpha) << ','
            << (r.rejection ? format_double(r.rejection->rate) : "") << ','
            << (r.rejection ? format_double(r.rejection->std_error) : "") << ','
            << format_double(r.mean_final_regret) << '\n';
    }
}

inline void write_metrics_json(const std::string& path,
                               const std::vector<MetricsReport>& reports) {
    nlohmann::json rows = nlohmann::json::array();
    for (const MetricsReport& r : reports) {
        nlohmann::json row;
        row["scenario"] = r.scenario_id;
        row["test"] = r.test;
        row["hypothesis"] = hypothesis_name(r.hypothesis);
        row["alpha"] = r.alpha;
        row["calibrated"] = r.calibrated;
        row["trajectories"] = r.trajectories;
        if (r.rejection) {
            row["rate"] = r.rejection->rate;
            row["stderr"] = r.rejection->std_error;
        }
        row["mean_final_regret"] = r.mean_final_regret;
        row["runtime_seconds"] = r.runtime_seconds;
        rows.push_back(row);
    }
    std::ofstream out = detail::open_output(path);
    out << rows.dump(2) << '\n';
}

/// Curves CSV used by the regret/allocation preset: one row per
/// (policy, participant).
inline void write_curves_csv(const std::string& path,
                             const std::vector<MetricsReport>& reports) {
    std::ofstream out = detail::open_output(path);
    out << "scenario,participant,mean_cumulative_regret,optimal_arm_proportion\n";
    for (const MetricsReport& r : reports) {
        for (std::size_t p = 0; p < r.mean_cumulative_regret.size(); ++p) {
            out << r.scenario_id << ',' << p + 1 << ','
                << format_double(r.mean_cumulative_regret[p]) << ','
                << format_double(r.optimal_arm_proportion[p]) << '\n';
        }
    }
}

}  // namespace aptest

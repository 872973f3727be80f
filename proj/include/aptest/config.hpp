#pragma once

#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "aptest/core.hpp"
#include "aptest/harness.hpp"
#include "aptest/io.hpp"
#include "aptest/scenario.hpp"

namespace aptest {

/// Key-value configuration file with [section] headers, '#' comments, and
/// repeatable sections. Parse errors carry file:line positions.
namespace configfile {

struct Entry {
    std::string key;
    std::string value;
    int line;
    mutable bool used = false;
};

struct Section {
    std::string name;
    int line;
    std::vector<Entry> entries;

    const Entry* find(const std::string& key) const {
        for (const Entry& e : entries) {
            if (e.key == key) {
                e.used = true;
                return &e;
            }
        }
        return nullptr;
    }
};

struct File {
    std::string path;
    std::vector<Section> sections;

    const Section* find(const std::string& name) const {
        for (const Section& s : sections) {
            if (s.name == name) {
                return &s;
            }
        }
        return nullptr;
    }

    [[noreturn]] void fail(int line, const std::string& message) const {
        throw ValidationError(path + ":" + std::to_string(line) + ": " + message);
    }

    void check_all_used() const {
        for (const Section& s : sections) {
            for (const Entry& e : s.entries) {
                if (!e.used) {
                    fail(e.line, "unknown key '" + e.key + "' in section [" + s.name + "]");
                }
            }
        }
    }
};

inline std::string trim(const std::string& s) {
    auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) {
        return "";
    }
    auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

inline File parse(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot open config file: " + path);
    }
    File file;
    file.path = path;
    file.sections.push_back(Section{"", 0, {}});
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = raw;
        auto comment = line.find('#');
        if (comment != std::string::npos) {
            line = line.substr(0, comment);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        if (line.front() == '[') {
            if (line.back() != ']') {
                file.fail(line_no, "unterminated section header");
            }
            file.sections.push_back(Section{trim(line.substr(1, line.size() - 2)), line_no, {}});
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos) {
            file.fail(line_no, "expected 'key = value'");
        }
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty()) {
            file.fail(line_no, "empty key");
        }
        file.sections.back().entries.push_back(Entry{key, value, line_no});
    }
    return file;
}

class SectionReader {
  public:
    SectionReader(const File& file, const Section& section)
        : file_(file), section_(section) {}

    std::optional<std::string> get(const std::string& key) const {
        const Entry* e = section_.find(key);
        if (e == nullptr) {
            return std::nullopt;
        }
        return e->value;
    }

    std::string require(const std::string& key) const {
        const Entry* e = section_.find(key);
        if (e == nullptr) {
            file_.fail(section_.line,
                       "missing key '" + key + "' in section [" + section_.name + "]");
        }
        return e->value;
    }

    double require_double(const std::string& key) const { return to_double(key, require(key)); }
    long long require_int(const std::string& key) const { return to_int(key, require(key)); }

    double get_double(const std::string& key, double fallback) const {
        auto v = get(key);
        return v ? to_double(key, *v) : fallback;
    }
    long long get_int(const std::string& key, long long fallback) const {
        auto v = get(key);
        return v ? to_int(key, *v) : fallback;
    }
    std::string get_string(const std::string& key, const std::string& fallback) const {
        auto v = get(key);
        return v ? *v : fallback;
    }
    bool get_bool(const std::string& key, bool fallback) const {
        auto v = get(key);
        if (!v) {
            return fallback;
        }
        if (*v == "true" || *v == "1" || *v == "yes") return true;
        if (*v == "false" || *v == "0" || *v == "no") return false;
        fail(key, "expected a boolean");
    }

    [[noreturn]] void fail(const std::string& key, const std::string& message) const {
        const Entry* e = section_.find(key);
        file_.fail(e != nullptr ? e->line : section_.line, "key '" + key + "': " + message);
    }

  private:
    double to_double(const std::string& key, const std::string& text) const {
        try {
            std::size_t used = 0;
            double v = std::stod(text, &used);
            if (used != text.size()) throw std::invalid_argument(text);
            return v;
        } catch (const std::exception&) {
            fail(key, "cannot parse number '" + text + "'");
        }
    }
    long long to_int(const std::string& key, const std::string& text) const {
        try {
            std::size_t used = 0;
            long long v = std::stoll(text, &used);
            if (used != text.size()) throw std::invalid_argument(text);
            return v;
        } catch (const std::exception&) {
            fail(key, "cannot parse integer '" + text + "'");
        }
    }

    const File& file_;
    const Section& section_;
};

}  // namespace configfile

namespace detail {

inline Hypothesis hypothesis_from_string(const configfile::SectionReader& reader,
                                         const std::string& key, const std::string& value) {
    if (value == "h0" || value == "null") return Hypothesis::Null;
    if (value == "h1" || value == "alternative") return Hypothesis::Alternative;
    reader.fail(key, "expected h0 or h1");
}

inline RewardRegime regime_from_section(const configfile::SectionReader& r) {
    std::string kind = r.get_string("regime", "stationary");
    Hypothesis h = hypothesis_from_string(r, "hypothesis", r.get_string("hypothesis", "h0"));
    double sigma2 = r.require_double("sigma2");
    if (kind == "stationary") {
        double mu0 = r.get_double("mu0", 0.0);
        double mu1 = r.get_double("mu1", h == Hypothesis::Null ? mu0 : 0.0);
        RewardRegime regime = RewardRegime::stationary(mu0, mu1, sigma2);
        regime.hypothesis = h;
        return regime;
    }
    double baseline = r.get_double("baseline", 1.0);
    double decay = r.get_double("decay", 0.5);
    if (kind == "decaying_baseline" || kind == "ns1") {
        return RewardRegime::decaying_baseline(baseline, decay, r.get_double("delta", 0.5),
                                               sigma2, h);
    }
    if (kind == "decaying_effect" || kind == "ns2") {
        return RewardRegime::decaying_effect(baseline, decay, sigma2, h);
    }
    r.fail("regime", "expected stationary, decaying_baseline/ns1, or decaying_effect/ns2");
}

}  // namespace detail

/// Load a single-scenario config file (sections: schedule, prior, rewards,
/// policy, run).
inline ScenarioConfig load_scenario_config(const std::string& path) {
    configfile::File file = configfile::parse(path);
    ScenarioConfig config;

    const configfile::Section* top = file.find("");
    if (top != nullptr) {
        configfile::SectionReader r(file, *top);
        auto stem = path.find_last_of('/');
        std::string fallback = stem == std::string::npos ? path : path.substr(stem + 1);
        config.id = r.get_string("id", fallback);
    }

    const configfile::Section* schedule = file.find("schedule");
    if (schedule == nullptr) {
        throw ValidationError(path + ": missing [schedule] section");
    }
    {
        configfile::SectionReader r(file, *schedule);
        config.schedule.num_steps = static_cast<int>(r.require_int("steps"));
        config.schedule.batch_size = static_cast<int>(r.require_int("batch_size"));
    }

    if (const configfile::Section* prior = file.find("prior")) {
        configfile::SectionReader r(file, *prior);
        config.prior.mean = r.get_double("mean", 0.0);
        config.prior.variance = r.require_double("variance");
    } else {
        throw ValidationError(path + ": missing [prior] section");
    }

    if (const configfile::Section* rewards = file.find("rewards")) {
        configfile::SectionReader r(file, *rewards);
        config.regime = detail::regime_from_section(r);
    } else {
        throw ValidationError(path + ": missing [rewards] section");
    }

    if (const configfile::Section* policy = file.find("policy")) {
        configfile::SectionReader r(file, *policy);
        std::string variant = r.get_string("variant", "standard_ts");
        try {
            config.policy = policy_from_name(variant);
        } catch (const ValidationError& e) {
            r.fail("variant", e.what());
        }
    }

    if (const configfile::Section* run = file.find("run")) {
        configfile::SectionReader r(file, *run);
        config.alpha = r.get_double("alpha", 0.05);
        config.trajectories = r.get_int("trajectories", 10000);
        config.master_seed = static_cast<std::uint64_t>(r.get_int("seed", 0));
    }

    file.check_all_used();
    config.validate();
    return config;
}

struct SweepEntry {
    ScenarioConfig config;
    TestKind test;
};

struct SweepConfig {
    std::vector<SweepEntry> entries;
    bool calibrate = true;
    std::int64_t calibration_trajectories = 0;
};

/// Load a sweep grid: a [sweep] section with run-wide settings and repeated
/// [scenario] sections, each carrying flat scenario keys plus a `tests` list.
inline SweepConfig load_sweep_config(const std::string& path) {
    configfile::File file = configfile::parse(path);
    SweepConfig sweep;

    double alpha = 0.05;
    std::int64_t trajectories = 10000;
    std::uint64_t seed = 0;
    if (const configfile::Section* s = file.find("sweep")) {
        configfile::SectionReader r(file, *s);
        alpha = r.get_double("alpha", alpha);
        trajectories = r.get_int("trajectories", trajectories);
        seed = static_cast<std::uint64_t>(r.get_int("seed", 0));
        sweep.calibrate = r.get_bool("calibrate", true);
        sweep.calibration_trajectories = r.get_int("calibration_trajectories", 0);
    }

    int scenario_index = 0;
    for (const configfile::Section& section : file.sections) {
        if (section.name != "scenario") {
            continue;
        }
        configfile::SectionReader r(file, section);
        ScenarioConfig config;
        config.id = r.get_string("id", "scenario" + std::to_string(scenario_index));
        config.schedule.num_steps = static_cast<int>(r.require_int("steps"));
        config.schedule.batch_size = static_cast<int>(r.require_int("batch_size"));
        config.prior.mean = r.get_double("prior_mean", 0.0);
        config.prior.variance = r.require_double("prior_variance");
        config.regime = detail::regime_from_section(r);
        std::string variant = r.get_string("policy", "standard_ts");
        try {
            config.policy = policy_from_name(variant);
        } catch (const ValidationError& e) {
            r.fail("policy", e.what());
        }
        config.alpha = r.get_double("alpha", alpha);
        config.trajectories = r.get_int("trajectories", trajectories);
        config.master_seed =
            static_cast<std::uint64_t>(r.get_int("seed", static_cast<long long>(
                                                             seed + scenario_index)));
        config.validate();

        std::string tests = r.get_string("tests", "ap");
        std::istringstream list(tests);
        std::string token;
        while (std::getline(list, token, ',')) {
            token = configfile::trim(token);
            if (token.empty()) {
                continue;
            }
            TestKind kind;
            if (token == "ap") {
                kind = TestKind::AllocationProbability;
            } else if (token == "bols") {
                kind = TestKind::Bols;
            } else if (token == "awaipw") {
                kind = TestKind::AwAipw;
            } else {
                r.fail("tests", "unknown test '" + token + "'");
            }
            sweep.entries.push_back(SweepEntry{config, kind});
        }
        ++scenario_index;
    }

    file.check_all_used();
    return sweep;
}

}  // namespace aptest

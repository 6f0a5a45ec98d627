// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "spdelab/estimators.hpp"

namespace spdelab {

namespace detail {
struct ConfigData;
}

// One experiment description: sections experiment / model / nonlinearity /
// run / params / output. Parsing fills every default, so dump() is the full
// resolved config and parse(dump()) reproduces it.
class ExperimentConfig {
public:
    static ExperimentConfig parse(const std::string& yaml_text);
    static ExperimentConfig load(const std::string& path);

    // dotted key, YAML scalar or flow sequence; re-validates
    void set(const std::string& key, const std::string& value);

    std::string kind() const;
    std::string name() const;
    std::uint64_t seed() const;
    int threads() const;   // run.threads, 0 = hardware
    std::string output_dir() const;
    std::vector<std::string> formats() const;

    std::string dump() const;
    // sha1 of the resolved config without output.* and run.threads
    std::string hash() const;
    // git blob id of the text the config was parsed from
    std::string input_hash() const;

    const detail::ConfigData& data() const { return *d_; }

private:
    std::shared_ptr<detail::ConfigData> d_;
};

enum class Check { Abs, AtMost, AtLeast, Info };
const char* check_name(Check c);

struct Metric {
    std::string name;
    double value = 0, std_error = 0, target = 0, tolerance = 0;
    Check check = Check::Info;
    bool pass = true;
};

struct NamedFit {
    std::string name;
    RateFit fit;
};

// two-column series for plotdata/<experiment>_<name>.csv
struct PlotSeries {
    std::string name, x_label, y_label;
    Vec x, y;
};

struct ResultRecord {
    std::string experiment, kind;
    std::string config_hash, input_hash, resolved_config;
    std::uint64_t seed = 0;
    double wall_clock = 0;
    std::vector<Metric> metrics;
    std::vector<NamedFit> fits;
    std::vector<PlotSeries> plots;
    std::vector<std::string> notes;

    bool passed() const;
    std::vector<std::string> failing() const;

    void abs(const std::string& name, double value, double se, double target, double tol);
    void at_most(const std::string& name, double value, double se, double bound, double tol);
    void at_least(const std::string& name, double value, double se, double bound, double tol);
    void info(const std::string& name, double value, double se = 0);
};

ResultRecord run_experiment(const ExperimentConfig& cfg);

std::vector<std::string> experiment_kinds();

// ---- suites ---------------------------------------------------------------

struct Criterion {
    int id = 0;
    std::string title;
    std::vector<std::string> configs;   // bundled config names
};

const std::vector<Criterion>& criteria();
std::vector<std::string> suite_names();
// criteria of a suite; throws ConfigError on an unknown name
std::vector<Criterion> suite(const std::string& name);
// bundled configs (configs/*.yaml, embedded at build time)
std::vector<std::string> bundled_config_names();
std::string bundled_config(const std::string& name);

struct VerifyOptions {
    std::optional<std::uint64_t> seed;   // overrides every pinned seed
    int threads = 0;
};

struct CriterionResult {
    Criterion criterion;
    std::vector<ResultRecord> records;
    bool passed = true;
    double wall_clock = 0;
};

std::vector<CriterionResult> verify(const std::string& suite_name, const VerifyOptions& opt);
CriterionResult verify_criterion(const Criterion& c, const VerifyOptions& opt);

// ---- output ---------------------------------------------------------------

// fixed columns: experiment,metric,value,std_error,target,tolerance,check,pass
std::string results_csv(const std::vector<ResultRecord>& records);
std::string results_json(const std::vector<ResultRecord>& records);
// writes the formats listed ("csv", "json", "plotdata") into dir
void write_results(const std::vector<ResultRecord>& records, const std::string& dir,
                   const std::vector<std::string>& formats);
std::string criteria_table(const std::vector<CriterionResult>& results);
std::string metric_table(const ResultRecord& r);

// CLI flag > SPDELAB_THREADS > config value > hardware
int resolve_threads(int cli_flag, int config_value);

// git blob id: sha1("blob <len>\0" + bytes)
std::string git_blob_hash(const std::string& bytes);
std::string sha1_hex(const std::string& bytes);

}  // namespace spdelab

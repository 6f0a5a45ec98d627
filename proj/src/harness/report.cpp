// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "spdelab/errors.hpp"
#include "spdelab/harness.hpp"

namespace spdelab {

const char* check_name(Check c) {
    switch (c) {
        case Check::Abs: return "abs";
        case Check::AtMost: return "at_most";
        case Check::AtLeast: return "at_least";
        case Check::Info: return "info";
    }
    return "info";
}

bool ResultRecord::passed() const {
    for (const auto& m : metrics)
        if (!m.pass) return false;
    return true;
}

std::vector<std::string> ResultRecord::failing() const {
    std::vector<std::string> v;
    for (const auto& m : metrics)
        if (!m.pass) v.push_back(experiment + "/" + m.name);
    return v;
}

namespace {

void add(ResultRecord& r, const std::string& name, double value, double se, double target, double tol, Check c) {
    Metric m{name, value, se, target, tol, c, true};
    switch (c) {
        case Check::Abs: m.pass = std::abs(value - target) <= tol; break;
        case Check::AtMost: m.pass = value <= target + tol; break;
        case Check::AtLeast: m.pass = value >= target - tol; break;
        case Check::Info: break;
    }
    r.metrics.push_back(m);
}

std::string sci(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10e", v);
    return buf;
}

// RFC 4180: quote when the field holds a comma, quote or line break
std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string safe_file(std::string s) {
    for (char& c : s)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.')) c = '_';
    return s;
}

void write_file(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw IoError("cannot write " + p.string());
    out << text;
    if (!out) throw IoError("write failed for " + p.string());
}

nlohmann::json fit_json(const NamedFit& f) {
    nlohmann::json j;
    j["name"] = f.name;
    j["slope"] = f.fit.slope;
    j["slope_ci95"] = f.fit.slope_ci;
    j["intercept"] = f.fit.intercept;
    j["rms_residual"] = f.fit.residual;
    j["times"] = f.fit.times;
    j["values"] = f.fit.values;
    j["std_errors"] = f.fit.std_errors;
    j["used"] = f.fit.used;
    j["excluded_times"] = f.fit.excluded;
    return j;
}

}  // namespace

void ResultRecord::abs(const std::string& name, double value, double se, double target, double tol) {
    add(*this, name, value, se, target, tol, Check::Abs);
}
void ResultRecord::at_most(const std::string& name, double value, double se, double bound, double tol) {
    add(*this, name, value, se, bound, tol, Check::AtMost);
}
void ResultRecord::at_least(const std::string& name, double value, double se, double bound, double tol) {
    add(*this, name, value, se, bound, tol, Check::AtLeast);
}
void ResultRecord::info(const std::string& name, double value, double se) {
    add(*this, name, value, se, 0, 0, Check::Info);
}

std::string results_csv(const std::vector<ResultRecord>& records) {
    std::string out = "experiment,metric,value,std_error,target,tolerance,check,pass\n";
    for (const auto& r : records)
        for (const auto& m : r.metrics) {
            out += csv_field(r.experiment) + "," + csv_field(m.name) + "," + sci(m.value) + "," + sci(m.std_error) + "," +
                   sci(m.target) + "," + sci(m.tolerance) + "," + check_name(m.check) + "," + (m.pass ? "true" : "false") +
                   "\n";
        }
    return out;
}

std::string results_json(const std::vector<ResultRecord>& records) {
    nlohmann::json all = nlohmann::json::array();
    for (const auto& r : records) {
        nlohmann::json j;
        j["experiment"] = r.experiment;
        j["kind"] = r.kind;
        j["config_hash"] = r.config_hash;
        j["input_hash"] = r.input_hash;
        j["seed"] = r.seed;
        j["wall_clock_seconds"] = r.wall_clock;
        j["passed"] = r.passed();
        nlohmann::json ms = nlohmann::json::array();
        for (const auto& m : r.metrics)
            ms.push_back({{"name", m.name},
                          {"value", m.value},
                          {"std_error", m.std_error},
                          {"target", m.target},
                          {"tolerance", m.tolerance},
                          {"check", check_name(m.check)},
                          {"pass", m.pass}});
        j["metrics"] = ms;
        j["rate_fits"] = nlohmann::json::array();
        for (const auto& f : r.fits) j["rate_fits"].push_back(fit_json(f));
        j["plots"] = nlohmann::json::array();
        for (const auto& p : r.plots) j["plots"].push_back(safe_file(r.experiment + "_" + p.name) + ".csv");
        j["notes"] = r.notes;
        j["config"] = r.resolved_config;
        all.push_back(j);
    }
    return all.dump(2) + "\n";
}

void write_results(const std::vector<ResultRecord>& records, const std::string& dir,
                   const std::vector<std::string>& formats) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory '" + dir + "': " + ec.message());
    for (const auto& f : formats) {
        if (f == "csv") write_file(fs::path(dir) / "results.csv", results_csv(records));
        if (f == "json") write_file(fs::path(dir) / "results.json", results_json(records));
        if (f == "plotdata") {
            fs::create_directories(fs::path(dir) / "plotdata", ec);
            if (ec) throw IoError("cannot create plotdata directory: " + ec.message());
            for (const auto& r : records)
                for (const auto& p : r.plots) {
                    std::string text = csv_field(p.x_label) + "," + csv_field(p.y_label) + "\n";
                    for (std::size_t i = 0; i < p.x.size() && i < p.y.size(); ++i)
                        text += sci(p.x[i]) + "," + sci(p.y[i]) + "\n";
                    write_file(fs::path(dir) / "plotdata" / (safe_file(r.experiment + "_" + p.name) + ".csv"), text);
                }
        }
    }
}

std::string metric_table(const ResultRecord& r) {
    std::ostringstream os;
    char buf[512];
    for (const auto& m : r.metrics) {
        std::snprintf(buf, sizeof buf, "  %-46s %14.6g %11.3g  %-8s %11.4g %10.3g  %s\n", m.name.c_str(), m.value,
                      m.std_error, check_name(m.check), m.target, m.tolerance,
                      m.check == Check::Info ? "-" : (m.pass ? "pass" : "FAIL"));
        os << buf;
    }
    return os.str();
}

std::string criteria_table(const std::vector<CriterionResult>& results) {
    std::ostringstream os;
    char buf[256];
    for (const auto& c : results) {
        std::snprintf(buf, sizeof buf, "AC%-3d %-40s %s  (%.1f s)\n", c.criterion.id, c.criterion.title.c_str(),
                      c.passed ? "PASS" : "FAIL", c.wall_clock);
        os << buf;
        for (const auto& r : c.records)
            for (const auto& f : r.failing()) os << "      failing: " << f << "\n";
    }
    return os.str();
}

}  // namespace spdelab

// SPDX-License-Identifier: Apache-2.0
#include <chrono>
#include <map>
#include <utility>

#include "spdelab/errors.hpp"
#include "spdelab/harness.hpp"
#include "spdelab/parallel.hpp"

namespace spdelab {

namespace detail {
// generated from configs/*.yaml at configure time
extern const std::vector<std::pair<const char*, const char*>> kBundledConfigs;
}

const std::vector<Criterion>& criteria() {
    static const std::vector<Criterion> c = {
        {1, "variational bounds", {"bounds", "bounds-scaled"}},
        {2, "martingale and Ito isometry", {"martingale"}},
        {3, "BEL estimators vs OU closed forms", {"bel-oracle"}},
        {4, "decay exponents", {"decay-d1-buc", "decay-d2-buc", "decay-d1-x", "decay-d1-holder"}},
        {5, "Lasry-Lions envelope", {"envelope"}},
        {6, "K-functional probe", {"interp"}},
        {7, "resolvent identity and contractivity", {"resolvent", "evolve"}},
        {8, "Schauder and Zygmund stabilisation", {"schauder", "zygmund"}},
        {9, "Picard fixed point", {"schvar"}},
        {10, "thread-count determinism", {"determinism"}},
    };
    return c;
}

namespace {

const std::map<std::string, std::vector<int>>& suite_map() {
    static const std::map<std::string, std::vector<int>> m = {
        {"all", {1, 2, 3, 4, 5, 6, 7, 8, 9, 10}},
        {"bounds", {1, 8}},
        {"martingale", {2}},
        {"bel", {3}},
        {"decay", {4}},
        {"envelope", {5, 6}},
        {"resolvent", {7}},
        {"schvar", {9}},
        {"determinism", {10}},
    };
    return m;
}

}  // namespace

std::vector<std::string> suite_names() {
    std::vector<std::string> v;
    for (const auto& [k, _] : suite_map()) v.push_back(k);
    return v;
}

std::vector<Criterion> suite(const std::string& name) {
    auto it = suite_map().find(name);
    if (it == suite_map().end()) {
        std::string all;
        for (const auto& s : suite_names()) all += (all.empty() ? "" : ", ") + s;
        throw ConfigError("unknown suite '" + name + "' (known: " + all + ")");
    }
    std::vector<Criterion> out;
    for (int id : it->second) out.push_back(criteria()[std::size_t(id - 1)]);
    return out;
}

std::vector<std::string> bundled_config_names() {
    std::vector<std::string> v;
    for (const auto& [k, _] : detail::kBundledConfigs) v.push_back(k);
    return v;
}

std::string bundled_config(const std::string& name) {
    for (const auto& [k, text] : detail::kBundledConfigs)
        if (name == k) return text;
    throw ConfigError("no bundled config named '" + name + "'");
}

CriterionResult verify_criterion(const Criterion& c, const VerifyOptions& opt) {
    CriterionResult cr;
    cr.criterion = c;
    const int saved = threads();
    const auto t0 = std::chrono::steady_clock::now();
    for (const auto& name : c.configs) {
        ExperimentConfig cfg = ExperimentConfig::parse(bundled_config(name));
        if (opt.seed) cfg.set("run.seed", std::to_string(*opt.seed));
        set_threads(resolve_threads(opt.threads, cfg.threads()));
        ResultRecord r;
        try {
            r = run_experiment(cfg);
        } catch (const ConfigError&) {
            set_threads(saved);
            throw;
        } catch (const Error& e) {
            r = ResultRecord{};
            r.experiment = cfg.name();
            r.kind = cfg.kind();
            r.config_hash = cfg.hash();
            r.input_hash = cfg.input_hash();
            r.resolved_config = cfg.dump();
            r.seed = cfg.seed();
            r.at_most("raised_error", 1, 0, 0, 0);
            r.notes.push_back(e.what());
        }
        cr.passed = cr.passed && r.passed();
        cr.records.push_back(std::move(r));
    }
    cr.wall_clock = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    set_threads(saved);
    return cr;
}

std::vector<CriterionResult> verify(const std::string& suite_name, const VerifyOptions& opt) {
    std::vector<CriterionResult> out;
    for (const Criterion& c : suite(suite_name)) out.push_back(verify_criterion(c, opt));
    return out;
}

}  // namespace spdelab

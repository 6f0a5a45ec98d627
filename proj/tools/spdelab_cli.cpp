// SPDX-License-Identifier: Apache-2.0
// Command-line front end. Talks to the library only through spdelab.h.
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "spdelab.h"

namespace {

constexpr int kExitFail = 1;
constexpr int kExitInvalid = 2;

// status -> exit code: schema / argument problems are 2, the rest 1
int exit_for(int status) {
    return status == SPDELAB_E_CONFIG || status == SPDELAB_E_ARGUMENT ? kExitInvalid : kExitFail;
}

struct Failure {
    int code;
};

void check(int status, const char* what) {
    if (status == SPDELAB_OK) return;
    std::fprintf(stderr, "spdelab: %s: %s: %s\n", what, spdelab_status_name(status), spdelab_last_error());
    throw Failure{exit_for(status)};
}

struct Config {
    spdelab_config* p = nullptr;
    ~Config() { spdelab_config_free(p); }
    std::string get(const char* what) const {
        const char* s = nullptr;
        check(spdelab_config_get(p, what, &s), what);
        return s;
    }
};

struct Common {
    std::string config;
    std::string out;
    long long seed = -1;
    int threads = 0;
    std::vector<std::string> overrides;
};

void add_common(CLI::App* app, Common& c, bool need_config) {
    auto* o = app->add_option("--config", c.config, "experiment config: a YAML file or a bundled config name");
    if (need_config) o->required();
    app->add_option("--seed", c.seed, "override run.seed")->check(CLI::NonNegativeNumber);
    app->add_option("--threads", c.threads, "worker threads (beats SPDELAB_THREADS and run.threads)")
        ->check(CLI::NonNegativeNumber);
    app->add_option("--out", c.out, "output directory (default: output.dir)");
    app->add_option("--set", c.overrides, "section.key=value override, repeatable");
}

void load(Config& cfg, const Common& c, const char* bundled) {
    if (!c.config.empty()) {
        std::error_code ec;
        if (std::filesystem::exists(c.config, ec) || c.config.find('/') != std::string::npos ||
            c.config.find('.') != std::string::npos)
            check(spdelab_config_load(c.config.c_str(), &cfg.p), "config");
        else
            check(spdelab_config_bundled(c.config.c_str(), &cfg.p), "config");
    } else
        check(spdelab_config_bundled(bundled, &cfg.p), "bundled config");
    if (c.seed >= 0) check(spdelab_config_set(cfg.p, "run.seed", std::to_string(c.seed).c_str()), "--seed");
    for (const auto& kv : c.overrides) {
        auto eq = kv.find('=');
        if (eq == std::string::npos) {
            std::fprintf(stderr, "spdelab: --set expects section.key=value, got '%s'\n", kv.c_str());
            throw Failure{kExitInvalid};
        }
        check(spdelab_config_set(cfg.p, kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str()), "--set");
    }
}

void apply_threads(const Config& cfg, const Common& c) {
    int cfg_threads = 0, n = 0;
    check(spdelab_config_threads(cfg.p, &cfg_threads), "threads");
    check(spdelab_resolve_threads(c.threads, cfg_threads, &n), "threads");
    check(spdelab_set_threads(n), "threads");
}

// run the configured experiment, print its table, write outputs
int run_and_report(const Config& cfg, const Common& c) {
    apply_threads(cfg, c);
    spdelab_result* r = nullptr;
    check(spdelab_run(cfg.p, &r), "run");
    const std::string dir = c.out.empty() ? cfg.get("output_dir") : c.out;
    const std::string formats = cfg.get("formats");
    int st = spdelab_result_write(r, dir.c_str(), formats.c_str());
    if (st != SPDELAB_OK) {
        spdelab_result_free(r);
        check(st, "write results");
    }
    const char* table = nullptr;
    spdelab_result_text(r, "table", &table);
    std::printf("%s", table);
    int ok = 0;
    spdelab_result_passed(r, &ok);
    if (!ok) {
        const char* failing = nullptr;
        spdelab_result_text(r, "failing", &failing);
        std::fprintf(stderr, "failing metrics:\n%s", failing);
    }
    std::printf("results in %s\n", dir.c_str());
    spdelab_result_free(r);
    return ok ? 0 : kExitFail;
}

std::vector<std::vector<double>> read_probe_file(const std::string& path, int n) {
    std::ifstream in(path);
    if (!in) {
        std::fprintf(stderr, "spdelab: cannot open probe file '%s'\n", path.c_str());
        throw Failure{kExitInvalid};
    }
    std::vector<std::vector<double>> pts;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
        for (char& ch : line)
            if (ch == ',' || ch == ';' || ch == '\t') ch = ' ';
        std::istringstream ss(line);
        std::vector<double> x;
        std::string tok;
        while (ss >> tok) {
            char* end = nullptr;
            double v = std::strtod(tok.c_str(), &end);
            if (*end != '\0') {
                std::fprintf(stderr, "spdelab: %s:%d: '%s' is not a number\n", path.c_str(), lineno, tok.c_str());
                throw Failure{kExitInvalid};
            }
            x.push_back(v);
        }
        if (x.empty()) continue;
        if (int(x.size()) > n) {
            std::fprintf(stderr, "spdelab: %s:%d: %zu coordinates, model has n=%d\n", path.c_str(), lineno, x.size(), n);
            throw Failure{kExitInvalid};
        }
        x.resize(std::size_t(n), 0.0);
        pts.push_back(x);
    }
    if (pts.empty()) {
        std::fprintf(stderr, "spdelab: probe file '%s' has no points\n", path.c_str());
        throw Failure{kExitInvalid};
    }
    return pts;
}

// pointwise table for resolvent / evolve at the probe-file points
int probe_table(const Config& cfg, const Common& c, const std::string& probe_file, const std::string& field_spec,
                bool is_resolvent) {
    apply_threads(cfg, c);
    spdelab_model* m = nullptr;
    check(spdelab_model_create(cfg.p, &m), "model");
    std::unique_ptr<spdelab_model, void (*)(spdelab_model*)> mg(m, spdelab_model_free);
    spdelab_field* f = nullptr;
    check(spdelab_field_create(m, field_spec.c_str(), &f), "field");
    std::unique_ptr<spdelab_field, void (*)(spdelab_field*)> fg(f, spdelab_field_free);
    int n = 0;
    check(spdelab_model_dim(m, &n), "model");
    const auto pts = read_probe_file(probe_file, n);
    const long n_paths = std::stol(cfg.get("run.n_paths"));
    const int n_nodes = std::stoi(cfg.get("params.n_nodes"));
    const unsigned long long seed = std::stoull(cfg.get("seed"));

    std::ostringstream os;
    for (int k = 0; k < n; ++k) os << "x" << k + 1 << ",";
    os << (is_resolvent ? "u,std_error,tail\n" : "v,std_error\n");
    char buf[64];
    for (const auto& x : pts) {
        spdelab_estimate e{};
        double tail = 0;
        if (is_resolvent)
            check(spdelab_resolvent(m, f, std::stod(cfg.get("params.lambda")), x.data(), x.size(), n_paths, n_nodes, seed,
                                    &e, &tail),
                  "resolvent");
        else
            check(spdelab_evolve(m, f, std::stod(cfg.get("params.g_const")), std::stod(cfg.get("params.t")), x.data(),
                                 x.size(), n_paths, n_nodes, seed, &e),
                  "evolve");
        for (double v : x) {
            std::snprintf(buf, sizeof buf, "%.10e,", v);
            os << buf;
        }
        std::snprintf(buf, sizeof buf, "%.10e,%.10e", e.value, e.std_error);
        os << buf;
        if (is_resolvent) {
            std::snprintf(buf, sizeof buf, ",%.10e", tail);
            os << buf;
        }
        os << "\n";
    }
    const std::string dir = c.out.empty() ? cfg.get("output_dir") : c.out;
    std::filesystem::create_directories(dir);
    const auto path = std::filesystem::path(dir) / "probe.csv";
    std::ofstream out(path, std::ios::binary);
    out << os.str();
    if (!out) {
        std::fprintf(stderr, "spdelab: cannot write %s\n", path.string().c_str());
        return kExitFail;
    }
    std::printf("%s", os.str().c_str());
    return 0;
}

std::string num_text(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"spdelab: Monte Carlo experiments for transition semigroups of SPDEs"};
    app.require_subcommand(1);
    app.set_version_flag("--version", spdelab_version());

    Common run_o, ver_o, res_o, evo_o, sv_o;
    std::string dump_paths;
    auto* run = app.add_subcommand("run", "run one experiment config");
    add_common(run, run_o, true);
    run->add_option("--dump-paths", dump_paths, "also write one recorded path (columnar CSV) to this file");

    std::string suite_name;
    auto* ver = app.add_subcommand("verify", "run acceptance suites: all or a suite name");
    ver->add_option("suite", suite_name, "suite name (all, bounds, martingale, bel, decay, envelope, resolvent, schvar, determinism)")
        ->required();
    ver->add_option("--seed", ver_o.seed, "override every pinned seed")->check(CLI::NonNegativeNumber);
    ver->add_option("--threads", ver_o.threads, "worker threads")->check(CLI::NonNegativeNumber);
    ver->add_option("--out", ver_o.out, "output directory")->default_val("verify-out");

    app.add_subcommand("catalog", "list builtin fields, models, experiment kinds and suites");

    double lambda = 0, alpha = 0, t = 0;
    std::string probe_file;
    auto* res = app.add_subcommand("resolvent", "resolvent experiment, or u(x) at --probe-file points");
    add_common(res, res_o, false);
    auto* res_l = res->add_option("--lambda", lambda, "lambda (> 0)");
    auto* res_a = res->add_option("--alpha", alpha, "use the Holder field holder:alpha=A");
    res->add_option("--probe-file", probe_file, "points, one per line")->check(CLI::ExistingFile);

    auto* evo = app.add_subcommand("evolve", "evolution experiment, or v(t,x) at --probe-file points");
    add_common(evo, evo_o, false);
    auto* evo_t = evo->add_option("--t", t, "time horizon");
    auto* evo_a = evo->add_option("--alpha", alpha, "use the Holder field holder:alpha=A");
    evo->add_option("--probe-file", probe_file, "points, one per line")->check(CLI::ExistingFile);

    auto* sv = app.add_subcommand("schvar", "Picard solver on the probe lattice");
    add_common(sv, sv_o, false);
    auto* sv_l = sv->add_option("--lambda", lambda, "lambda (> 0)");
    auto* sv_a = sv->add_option("--alpha", alpha, "use the Holder field holder:alpha=A");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : kExitInvalid;
    }

    try {
        if (*run) {
            Config cfg;
            load(cfg, run_o, nullptr);
            if (!dump_paths.empty()) {
                spdelab_model* m = nullptr;
                check(spdelab_model_create(cfg.p, &m), "model");
                int n = 0;
                spdelab_model_dim(m, &n);
                std::vector<double> x(std::size_t(n), 0.0);
                int st = spdelab_dump_path(m, x.data(), x.size(), 1.0, std::stoull(cfg.get("seed")), 0, dump_paths.c_str());
                spdelab_model_free(m);
                check(st, "--dump-paths");
            }
            return run_and_report(cfg, run_o);
        }
        if (*ver) {
            spdelab_result* r = nullptr;
            check(spdelab_verify(suite_name.c_str(), ver_o.seed, ver_o.threads, &r), "verify");
            const char* table = nullptr;
            spdelab_result_text(r, "table", &table);
            std::printf("%s", table);
            int st = spdelab_result_write(r, ver_o.out.c_str(), nullptr);
            int ok = 0;
            spdelab_result_passed(r, &ok);
            spdelab_result_free(r);
            check(st, "write results");
            std::printf("%s; results in %s\n", ok ? "all criteria pass" : "some criteria FAIL", ver_o.out.c_str());
            return ok ? 0 : kExitFail;
        }
        if (app.got_subcommand("catalog")) {
            std::printf("%s", spdelab_catalog());
            return 0;
        }
        if (*res) {
            Config cfg;
            load(cfg, res_o, "resolvent");
            if (*res_l) check(spdelab_config_set(cfg.p, "params.lambda", num_text(lambda).c_str()), "--lambda");
            std::string field = "holder:alpha=0.5";
            if (*res_a) {
                field = "holder:alpha=" + num_text(alpha);
                check(spdelab_config_set(cfg.p, "params.split_fields", ("['" + field + "']").c_str()), "--alpha");
            }
            if (!probe_file.empty()) return probe_table(cfg, res_o, probe_file, field, true);
            return run_and_report(cfg, res_o);
        }
        if (*evo) {
            Config cfg;
            load(cfg, evo_o, "evolve");
            if (*evo_t) check(spdelab_config_set(cfg.p, "params.t", num_text(t).c_str()), "--t");
            std::string field = "sin:omega=" + cfg.get("params.omega");
            if (*evo_a) field = "holder:alpha=" + num_text(alpha);
            if (!probe_file.empty()) return probe_table(cfg, evo_o, probe_file, field, false);
            if (*evo_a) {
                std::fprintf(stderr, "spdelab: evolve --alpha applies to --probe-file tables; the experiment checks sin fields\n");
                return kExitInvalid;
            }
            return run_and_report(cfg, evo_o);
        }
        if (*sv) {
            Config cfg;
            load(cfg, sv_o, "schvar");
            if (*sv_l) check(spdelab_config_set(cfg.p, "params.lambda", num_text(lambda).c_str()), "--lambda");
            if (*sv_a)
                check(spdelab_config_set(cfg.p, "params.field", ("holder:alpha=" + num_text(alpha)).c_str()), "--alpha");
            return run_and_report(cfg, sv_o);
        }
    } catch (const Failure& f) {
        return f.code;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "spdelab: %s\n", e.what());
        return kExitFail;
    }
    return 0;
}

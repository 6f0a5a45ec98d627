// SPDX-License-Identifier: Apache-2.0
#include "spdelab.h"

#include <cmath>
#include <fstream>
#include <memory>
#include <new>
#include <sstream>
#include <string>

#include "harness/internal.hpp"
#include "spdelab/errors.hpp"
#include "spdelab/harness.hpp"
#include "spdelab/parallel.hpp"
#include "spdelab/regularizer.hpp"
#include "spdelab/solvers.hpp"

using namespace spdelab;

struct spdelab_config {
    ExperimentConfig cfg;
    std::string scratch;
};

struct spdelab_result {
    std::vector<ResultRecord> records;
    std::vector<CriterionResult> criteria;   // empty for a single run
    std::string scratch;
};

struct spdelab_model {
    SpectralModel model;
    std::unique_ptr<Nonlinearity> g;
    Engine engine;
    McContext mc;
    explicit spdelab_model(const detail::ConfigData& d)
        : model(detail::model_params(d)), g(detail::make_nonlinearity(d, model.n())), engine(model, *g), mc{engine} {
        mc.dt = detail::real(d, "run", "dt");
        mc.min_steps = int(detail::integer(d, "run", "min_steps"));
    }
};

struct spdelab_field {
    ScalarField f;
    int n;
};

namespace {

thread_local std::string g_last_error;

template <class F>
int guard(F&& body) {
    try {
        body();
        g_last_error.clear();
        return SPDELAB_OK;
    } catch (const ConfigError& e) {
        g_last_error = e.what();
        return SPDELAB_E_CONFIG;
    } catch (const ArgumentError& e) {
        g_last_error = e.what();
        return SPDELAB_E_ARGUMENT;
    } catch (const SimulationError& e) {
        g_last_error = e.what();
        return SPDELAB_E_SIMULATION;
    } catch (const EstimatorError& e) {
        g_last_error = e.what();
        return SPDELAB_E_ESTIMATOR;
    } catch (const DivergenceError& e) {
        g_last_error = e.what();
        return SPDELAB_E_DIVERGENCE;
    } catch (const IoError& e) {
        g_last_error = e.what();
        return SPDELAB_E_IO;
    } catch (const std::bad_alloc&) {
        g_last_error = "out of memory";
        return SPDELAB_E_INTERNAL;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return SPDELAB_E_INTERNAL;
    } catch (...) {
        g_last_error = "unknown failure";
        return SPDELAB_E_INTERNAL;
    }
}

template <class T>
void need(const T* p, const char* what) {
    if (!p) throw ArgumentError(std::string(what) + " is null");
}

Vec vec(const double* x, std::size_t n, const spdelab_model* m, const char* what) {
    need(x, what);
    if (n != std::size_t(m->model.n()))
        throw ArgumentError(std::string(what) + " has length " + std::to_string(n) + ", model has n=" +
                            std::to_string(m->model.n()));
    return Vec(x, x + n);
}

void put(const MCEstimate& e, spdelab_estimate* out) {
    out->value = e.value;
    out->std_error = e.std_error;
    out->n_outer = e.n_outer;
    out->n_inner = e.n_inner;
    out->seed = e.seed;
}

std::vector<std::string> split_formats(const char* s) {
    if (!s) return {"csv", "json", "plotdata"};
    std::vector<std::string> v;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) {
            if (item != "csv" && item != "json" && item != "plotdata")
                throw ArgumentError("unknown output format '" + item + "'");
            v.push_back(item);
        }
    return v;
}

}  // namespace

extern "C" {

const char* spdelab_version(void) { return "0.1.0"; }

const char* spdelab_last_error(void) { return g_last_error.c_str(); }

const char* spdelab_status_name(int s) {
    switch (s) {
        case SPDELAB_OK: return "ok";
        case SPDELAB_E_CONFIG: return "config error";
        case SPDELAB_E_ARGUMENT: return "argument error";
        case SPDELAB_E_SIMULATION: return "simulation error";
        case SPDELAB_E_ESTIMATOR: return "estimator error";
        case SPDELAB_E_DIVERGENCE: return "divergence";
        case SPDELAB_E_IO: return "i/o error";
        default: return "internal error";
    }
}

int spdelab_set_threads(int n) {
    return guard([&] {
        if (n < 0) throw ArgumentError("thread count must be >= 0");
        set_threads(n);
    });
}

int spdelab_resolve_threads(int cli_flag, int config_value, int* out) {
    return guard([&] {
        need(out, "out");
        *out = resolve_threads(cli_flag, config_value);
    });
}

const char* spdelab_catalog(void) {
    static const std::string text = [] {
        std::ostringstream os;
        os << "fields:\n";
        for (const auto& e : builtin_fields()) os << "  " << e.spec << "  -- " << e.description << "\n";
        os << "nonlinearities:\n  zero\n  radial (kind: fixed | scaled; c, v_index, M)\n";
        os << "models:\n  diagonal: n, q_eigs (list or k^-p), beta, rho, trace_exponent, noise_scale\n";
        os << "experiment kinds:\n";
        for (const auto& k : experiment_kinds()) os << "  " << k << "\n";
        os << "suites:\n";
        for (const auto& s : suite_names()) {
            os << "  " << s << ":";
            for (const auto& c : suite(s)) os << " AC" << c.id;
            os << "\n";
        }
        os << "bundled configs:\n";
        for (const auto& c : bundled_config_names()) os << "  " << c << "\n";
        return os.str();
    }();
    return text.c_str();
}

int spdelab_config_load(const char* path, spdelab_config** out) {
    return guard([&] {
        need(path, "path");
        need(out, "out");
        *out = new spdelab_config{ExperimentConfig::load(path), {}};
    });
}

int spdelab_config_parse(const char* text, spdelab_config** out) {
    return guard([&] {
        need(text, "yaml_text");
        need(out, "out");
        *out = new spdelab_config{ExperimentConfig::parse(text), {}};
    });
}

int spdelab_config_bundled(const char* name, spdelab_config** out) {
    return guard([&] {
        need(name, "name");
        need(out, "out");
        *out = new spdelab_config{ExperimentConfig::parse(bundled_config(name)), {}};
    });
}

int spdelab_config_set(spdelab_config* c, const char* key, const char* value) {
    return guard([&] {
        need(c, "config");
        need(key, "key");
        need(value, "value");
        c->cfg.set(key, value);
    });
}

int spdelab_config_get(const spdelab_config* c, const char* what, const char** out) {
    return guard([&] {
        need(c, "config");
        need(what, "what");
        need(out, "out");
        std::string w = what, v;
        if (w == "kind")
            v = c->cfg.kind();
        else if (w == "name")
            v = c->cfg.name();
        else if (w == "dump")
            v = c->cfg.dump();
        else if (w == "hash")
            v = c->cfg.hash();
        else if (w == "input_hash")
            v = c->cfg.input_hash();
        else if (w == "output_dir")
            v = c->cfg.output_dir();
        else if (w == "formats") {
            for (const auto& f : c->cfg.formats()) v += (v.empty() ? "" : ",") + f;
        } else if (w == "seed")
            v = std::to_string(c->cfg.seed());
        else if (auto dot = w.find('.'); dot != std::string::npos) {
            YAML::Node node = c->cfg.data().resolved[w.substr(0, dot)][w.substr(dot + 1)];
            if (!node) throw ArgumentError("config has no key '" + w + "'");
            if (node.IsScalar()) {
                v = node.Scalar();
            } else {
                YAML::Emitter e;
                e << node;
                v = e.c_str();
            }
        } else
            throw ArgumentError("unknown config field '" + w + "'");
        auto* mc = const_cast<spdelab_config*>(c);
        mc->scratch = v;
        *out = mc->scratch.c_str();
    });
}

int spdelab_config_threads(const spdelab_config* c, int* out) {
    return guard([&] {
        need(c, "config");
        need(out, "out");
        *out = c->cfg.threads();
    });
}

void spdelab_config_free(spdelab_config* c) { delete c; }

int spdelab_run(const spdelab_config* c, spdelab_result** out) {
    return guard([&] {
        need(c, "config");
        need(out, "out");
        auto r = std::make_unique<spdelab_result>();
        r->records.push_back(run_experiment(c->cfg));
        *out = r.release();
    });
}

int spdelab_verify(const char* name, int64_t seed, int threads, spdelab_result** out) {
    return guard([&] {
        need(name, "suite");
        need(out, "out");
        VerifyOptions opt;
        if (seed >= 0) opt.seed = std::uint64_t(seed);
        opt.threads = threads;
        auto r = std::make_unique<spdelab_result>();
        r->criteria = verify(name, opt);
        for (const auto& c : r->criteria)
            for (const auto& rec : c.records) r->records.push_back(rec);
        *out = r.release();
    });
}

int spdelab_result_passed(const spdelab_result* r, int* out) {
    return guard([&] {
        need(r, "result");
        need(out, "out");
        bool ok = true;
        for (const auto& rec : r->records) ok = ok && rec.passed();
        for (const auto& c : r->criteria) ok = ok && c.passed;
        *out = ok ? 1 : 0;
    });
}

int spdelab_result_write(const spdelab_result* r, const char* dir, const char* formats) {
    return guard([&] {
        need(r, "result");
        need(dir, "dir");
        write_results(r->records, dir, split_formats(formats));
    });
}

int spdelab_result_text(const spdelab_result* r, const char* what, const char** out) {
    return guard([&] {
        need(r, "result");
        need(what, "what");
        need(out, "out");
        const std::string w = what;
        std::string v;
        if (w == "csv")
            v = results_csv(r->records);
        else if (w == "json")
            v = results_json(r->records);
        else if (w == "table") {
            if (!r->criteria.empty())
                v = criteria_table(r->criteria);
            else
                for (const auto& rec : r->records) v += rec.experiment + "\n" + metric_table(rec);
        } else if (w == "failing") {
            for (const auto& rec : r->records)
                for (const auto& f : rec.failing()) v += f + "\n";
        } else
            throw ArgumentError("unknown result text '" + w + "'");
        auto* mr = const_cast<spdelab_result*>(r);
        mr->scratch = v;
        *out = mr->scratch.c_str();
    });
}

int spdelab_result_metric_count(const spdelab_result* r, size_t* out) {
    return guard([&] {
        need(r, "result");
        need(out, "out");
        std::size_t n = 0;
        for (const auto& rec : r->records) n += rec.metrics.size();
        *out = n;
    });
}

int spdelab_result_metric(const spdelab_result* r, size_t i, spdelab_metric* out) {
    return guard([&] {
        need(r, "result");
        need(out, "out");
        for (const auto& rec : r->records) {
            if (i < rec.metrics.size()) {
                const Metric& m = rec.metrics[i];
                *out = {rec.experiment.c_str(), m.name.c_str(), m.value, m.std_error, m.target, m.tolerance,
                        int(m.check), m.pass ? 1 : 0};
                return;
            }
            i -= rec.metrics.size();
        }
        throw ArgumentError("metric index out of range");
    });
}

int spdelab_result_criterion_count(const spdelab_result* r, size_t* out) {
    return guard([&] {
        need(r, "result");
        need(out, "out");
        *out = r->criteria.size();
    });
}

int spdelab_result_criterion(const spdelab_result* r, size_t i, int* id, const char** title, int* passed) {
    return guard([&] {
        need(r, "result");
        if (i >= r->criteria.size()) throw ArgumentError("criterion index out of range");
        const auto& c = r->criteria[i];
        if (id) *id = c.criterion.id;
        if (title) *title = c.criterion.title.c_str();
        if (passed) *passed = c.passed ? 1 : 0;
    });
}

void spdelab_result_free(spdelab_result* r) { delete r; }

int spdelab_model_create(const spdelab_config* c, spdelab_model** out) {
    return guard([&] {
        need(c, "config");
        need(out, "out");
        *out = new spdelab_model(c->cfg.data());
    });
}

int spdelab_model_dim(const spdelab_model* m, int* out) {
    return guard([&] {
        need(m, "model");
        need(out, "out");
        *out = m->model.n();
    });
}

int spdelab_model_constants(const spdelab_model* m, double* zeta_R, double* M) {
    return guard([&] {
        need(m, "model");
        const ModelConstants c = compute_constants(m->model, m->g->M());
        if (zeta_R) *zeta_R = c.zeta_R;
        if (M) *M = c.M;
    });
}

void spdelab_model_free(spdelab_model* m) { delete m; }

int spdelab_field_create(const spdelab_model* m, const char* spec, spdelab_field** out) {
    return guard([&] {
        need(m, "model");
        need(spec, "spec");
        need(out, "out");
        *out = new spdelab_field{make_field(spec, m->model), m->model.n()};
    });
}

int spdelab_field_eval(const spdelab_field* f, const double* x, size_t n, double* out) {
    return guard([&] {
        need(f, "field");
        need(x, "x");
        need(out, "out");
        if (n != std::size_t(f->n)) throw ArgumentError("x has length " + std::to_string(n) + ", field expects " + std::to_string(f->n));
        *out = f->f.eval(x);
    });
}

void spdelab_field_free(spdelab_field* f) { delete f; }

int spdelab_estimate_pt(const spdelab_model* m, const spdelab_field* f, double t, const double* x, size_t n,
                        long n_paths, uint64_t seed, spdelab_estimate* out) {
    return guard([&] {
        need(m, "model");
        need(f, "field");
        need(out, "out");
        put(estimate_pt(m->mc, f->f, t, vec(x, n, m, "x"), n_paths, seed), out);
    });
}

int spdelab_bel_d1(const spdelab_model* m, const spdelab_field* f, double t, const double* x, const double* h,
                   size_t n, long n_paths, uint64_t seed, spdelab_estimate* out) {
    return guard([&] {
        need(m, "model");
        need(f, "field");
        need(out, "out");
        put(bel_d1(m->mc, f->f, t, vec(x, n, m, "x"), vec(h, n, m, "h"), n_paths, seed), out);
    });
}

int spdelab_bel_d2(const spdelab_model* m, const spdelab_field* f, double t, const double* x, const double* h,
                   const double* k, size_t n, long n_outer, long n_inner, uint64_t seed, spdelab_estimate* out) {
    return guard([&] {
        need(m, "model");
        need(f, "field");
        need(out, "out");
        put(bel_d2(m->mc, f->f, t, vec(x, n, m, "x"), vec(h, n, m, "h"), vec(k, n, m, "k"), n_outer, n_inner, seed),
            out);
    });
}

int spdelab_resolvent(const spdelab_model* m, const spdelab_field* f, double lambda, const double* x, size_t n,
                      long n_paths, int n_nodes, uint64_t seed, spdelab_estimate* out, double* tail) {
    return guard([&] {
        need(m, "model");
        need(f, "field");
        need(out, "out");
        const double zeta = compute_constants(m->model, m->g->M()).zeta_R;
        QuadratureScheme q = make_quadrature(lambda, zeta, n_nodes, default_grading(0, 0), f->f.sup_bound);
        SolverParams p;
        p.n_paths = n_paths;
        p.n_nodes = n_nodes;
        p.seed = seed;
        put(resolvent(m->mc, f->f, vec(x, n, m, "x"), q, p), out);
        if (tail) *tail = q.tail_bound;
    });
}

int spdelab_evolve(const spdelab_model* m, const spdelab_field* f, double g_const, double t, const double* x,
                   size_t n, long n_paths, int n_nodes, uint64_t seed, spdelab_estimate* out) {
    return guard([&] {
        need(m, "model");
        need(f, "field");
        need(out, "out");
        if (!std::isfinite(g_const)) throw ArgumentError("g_const must be finite");
        const TimeField g = constant_time_field(g_const);
        put(evolve(m->mc, f->f, &g, t, vec(x, n, m, "x"), n_nodes, n_paths, seed), out);
    });
}

int spdelab_ll_regularize(const spdelab_model* m, const spdelab_field* f, double eps, const double* x, size_t n,
                          double* value, int* boundary_warning) {
    return guard([&] {
        need(m, "model");
        need(f, "field");
        need(value, "value");
        EnvelopeConfig c;
        c.epsilon = eps;
        EnvelopeResult r = ll_regularize(f->f, vec(x, n, m, "x"), c, m->model);
        *value = r.value;
        if (boundary_warning) *boundary_warning = r.boundary_warning ? 1 : 0;
    });
}

int spdelab_dump_path(const spdelab_model* m, const double* x, size_t n, double t_end, uint64_t seed,
                      uint64_t path_index, const char* file) {
    return guard([&] {
        need(m, "model");
        need(file, "file");
        SimConfig sc;
        sc.dt = m->mc.dt;
        sc.t_end = t_end;
        sc.master_seed = seed;
        sc.orders = 1;
        sc.directions = {m->model.hr_basis(0)};
        sc.min_steps = m->mc.min_steps;
        sc.record = true;
        PathBundle b = m->engine.simulate_path(vec(x, n, m, "x"), sc, path_index);
        std::ofstream os(file, std::ios::binary);
        if (!os) throw IoError(std::string("cannot write ") + file);
        dump_path_csv(b, os);
        if (!os) throw IoError(std::string("write failed for ") + file);
    });
}

}  // extern "C"

// SPDX-License-Identifier: Apache-2.0
#include "spdelab/engine.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

#include "spdelab/errors.hpp"
#include "spdelab/rng.hpp"

namespace spdelab {

int grid_steps(double t_end, double dt, int min_steps) {
    if (!(dt > 0)) throw ArgumentError("dt must be positive");
    if (!(t_end > 0)) throw ArgumentError("t_end must be positive");
    double m = std::ceil(t_end / dt - 1e-9);
    if (m > 2e9) throw ArgumentError("too many time steps");
    return std::max(min_steps, std::max(1, int(m)));
}

Engine::Engine(const SpectralModel& model, const Nonlinearity& g) : model_(model), g_(g) {
    if (g.n() != model.n()) throw ConfigError("nonlinearity dimension does not match model");
}

namespace {

struct Workspace {
    Vec E, Phi, ER, rinv, xi, gx, tmp, tmp2;
    Vec xn;
    std::array<Vec, 3> d1n, d2n;
    Vec d3n;
    void resize(int n) {
        for (Vec* v : {&E, &Phi, &ER, &rinv, &xi, &gx, &tmp, &tmp2, &xn, &d3n}) v->assign(n, 0.0);
        for (auto& v : d1n) v.assign(n, 0.0);
        for (auto& v : d2n) v.assign(n, 0.0);
    }
};

thread_local Workspace tl_ws;

double hr_sq(const Vec& v, const Vec& rinv) {
    double s = 0;
    for (std::size_t k = 0; k < v.size(); ++k) s += v[k] * v[k] * rinv[k] * rinv[k];
    return s;
}

}  // namespace

void Engine::run(const Vec& x, const SimConfig& cfg, std::uint64_t path_index, PathState& out) const {
    run_impl(x, cfg, path_index, out, nullptr, nullptr);
}

PathBundle Engine::simulate_path(const Vec& x, const SimConfig& cfg, std::uint64_t path_index) const {
    PathBundle b;
    b.seed = cfg.master_seed;
    b.path_index = path_index;
    b.orders = cfg.orders;
    b.n_dirs = int(cfg.directions.size());
    PathState st;
    if (cfg.record) {
        run_impl(x, cfg, path_index, st, &b.states, &b.grid);
    } else {
        run_impl(x, cfg, path_index, st, nullptr, nullptr);
        b.grid = {0.0, st.t};
        b.states.push_back(st);
    }
    return b;
}

void Engine::run_impl(const Vec& x0, const SimConfig& cfg, std::uint64_t path_index, PathState& st,
                      std::vector<PathState>* record, std::vector<double>* grid) const {
    const int n = model_.n();
    if (int(x0.size()) != n) throw ConfigError("initial state has wrong dimension");
    if (cfg.orders < 0 || cfg.orders > 3) throw ArgumentError("orders must be within 0..3");
    const int nd = int(cfg.directions.size());
    if (nd > 3) throw ArgumentError("at most three directions");
    if (cfg.orders >= 1 && nd < 1) throw ArgumentError("order 1 needs a direction");
    if (cfg.orders >= 2 && nd < 2) throw ArgumentError("order 2 needs two directions");
    if (cfg.orders >= 3 && nd < 3) throw ArgumentError("order 3 needs three directions");
    for (const auto& d : cfg.directions) {
        if (int(d.size()) != n) throw ArgumentError("direction has wrong dimension");
        if (cfg.orders >= 1 && euclid_norm(d) == 0.0) throw ArgumentError("direction must be nonzero");
    }
    const int m = grid_steps(cfg.t_end, cfg.dt, cfg.min_steps);
    const double dt = cfg.t_end / m;
    const double sdt = std::sqrt(dt);
    const int n1 = cfg.orders >= 1 ? nd : 0;
    const int n2 = cfg.orders >= 2 ? (nd == 2 ? 1 : 3) : 0;
    const bool o3 = cfg.orders >= 3;
    const bool lin = g_.is_zero();

    Workspace& w = tl_ws;
    if (int(w.E.size()) != n) w.resize(n);
    const auto& a = model_.a();
    const auto& r = model_.r();
    const double ns = model_.noise_scale();
    for (int k = 0; k < n; ++k) {
        w.E[k] = std::exp(a[k] * dt);
        w.Phi[k] = std::expm1(a[k] * dt) / a[k] * r[k];   // includes R
        w.ER[k] = w.E[k] * r[k] * ns;
        w.rinv[k] = 1.0 / r[k];
    }

    st.t = 0;
    st.x = x0;
    for (int d = 0; d < 3; ++d) {
        if (d < n1) st.delta1[d] = cfg.directions[d];
        else st.delta1[d].clear();
        if (d < n2) st.delta2[d].assign(n, 0.0);
        else st.delta2[d].clear();
    }
    if (o3) st.delta3.assign(n, 0.0);
    else st.delta3.clear();
    st.weight1 = {0, 0, 0};
    st.weight2 = {0, 0, 0};
    st.weight3 = 0;
    st.qv1 = 0;
    if (record) {
        record->clear();
        grid->clear();
        record->reserve(m + 1);
        grid->reserve(m + 1);
        record->push_back(st);
        grid->push_back(0.0);
    }

    NormalStream rng(cfg.master_seed, path_index);
    double* gx = w.gx.data();
    double* tmp = w.tmp.data();
    double* tmp2 = w.tmp2.data();

    for (int i = 0; i < m; ++i) {
        rng.normals(std::uint64_t(i), n, w.xi.data());
        for (int k = 0; k < n; ++k) w.xi[k] *= sdt;   // now Delta W

        // left-point Ito sums <delta, R dW>_R = sum_k delta_k dW_k / r_k
        for (int d = 0; d < n1; ++d) {
            double s = 0;
            for (int k = 0; k < n; ++k) s += st.delta1[d][k] * w.xi[k] * w.rinv[k];
            st.weight1[d] += s;
        }
        if (n1 > 0) st.qv1 += hr_sq(st.delta1[0], w.rinv) * dt;
        for (int p = 0; p < n2; ++p) {
            double s = 0;
            for (int k = 0; k < n; ++k) s += st.delta2[p][k] * w.xi[k] * w.rinv[k];
            st.weight2[p] += s;
        }
        if (o3) {
            double s = 0;
            for (int k = 0; k < n; ++k) s += st.delta3[k] * w.xi[k] * w.rinv[k];
            st.weight3 += s;
        }

        const double* X = st.x.data();
        double fin = 0;
        if (lin) {
            for (int k = 0; k < n; ++k) w.xn[k] = w.E[k] * X[k] + w.ER[k] * w.xi[k];
            for (int d = 0; d < n1; ++d)
                for (int k = 0; k < n; ++k) w.d1n[d][k] = w.E[k] * st.delta1[d][k];
            for (int p = 0; p < n2; ++p)
                for (int k = 0; k < n; ++k) w.d2n[p][k] = w.E[k] * st.delta2[p][k];
            if (o3)
                for (int k = 0; k < n; ++k) w.d3n[k] = w.E[k] * st.delta3[k];
        } else {
            g_.eval(X, gx);
            for (int k = 0; k < n; ++k) w.xn[k] = w.E[k] * X[k] + w.Phi[k] * gx[k] + w.ER[k] * w.xi[k];
            for (int d = 0; d < n1; ++d) {
                g_.d1(X, st.delta1[d].data(), tmp);
                for (int k = 0; k < n; ++k) w.d1n[d][k] = w.E[k] * st.delta1[d][k] + w.Phi[k] * tmp[k];
            }
            for (int p = 0; p < n2; ++p) {
                const int pa = kPairs[p][0], pb = kPairs[p][1];
                g_.d1(X, st.delta2[p].data(), tmp);
                g_.d2(X, st.delta1[pa].data(), st.delta1[pb].data(), tmp2);
                for (int k = 0; k < n; ++k)
                    w.d2n[p][k] = w.E[k] * st.delta2[p][k] + w.Phi[k] * (tmp[k] + tmp2[k]);
            }
            if (o3) {
                const double *h = st.delta1[0].data(), *kk = st.delta1[1].data(),
                             *j = st.delta1[2].data();
                const double *hk = st.delta2[0].data(), *hj = st.delta2[1].data(),
                             *kj = st.delta2[2].data();
                g_.d1(X, st.delta3.data(), tmp);
                for (int k = 0; k < n; ++k) w.d3n[k] = tmp[k];
                g_.d2(X, j, hk, tmp);
                for (int k = 0; k < n; ++k) w.d3n[k] += tmp[k];
                g_.d2(X, hj, kk, tmp);
                for (int k = 0; k < n; ++k) w.d3n[k] += tmp[k];
                g_.d2(X, h, kj, tmp);
                for (int k = 0; k < n; ++k) w.d3n[k] += tmp[k];
                g_.d3(X, h, kk, j, tmp);
                for (int k = 0; k < n; ++k)
                    w.d3n[k] = w.E[k] * st.delta3[k] + w.Phi[k] * (w.d3n[k] + tmp[k]);
            }
        }
        for (int k = 0; k < n; ++k) fin += w.xn[k];
        std::swap(st.x, w.xn);
        for (int d = 0; d < n1; ++d) {
            for (int k = 0; k < n; ++k) fin += w.d1n[d][k];
            std::swap(st.delta1[d], w.d1n[d]);
        }
        for (int p = 0; p < n2; ++p) {
            for (int k = 0; k < n; ++k) fin += w.d2n[p][k];
            std::swap(st.delta2[p], w.d2n[p]);
        }
        if (o3) {
            for (int k = 0; k < n; ++k) fin += w.d3n[k];
            std::swap(st.delta3, w.d3n);
        }
        if (!std::isfinite(fin)) throw SimulationError("non-finite state", i + 1);
        st.t = (i + 1) * dt;
        if (record) {
            record->push_back(st);
            grid->push_back(st.t);
        }
    }
    // the swaps may have handed workspace buffers of the wrong size back; restore
    for (auto& v : w.d1n) v.resize(n);
    for (auto& v : w.d2n) v.resize(n);
    w.xn.resize(n);
    w.d3n.resize(n);
}

HregReport check_hreg_bounds(const PathBundle& b, const SpectralModel& model,
                             const ModelConstants& c, double tol) {
    HregReport rep;
    if (b.states.empty()) return rep;
    const auto& s0 = b.states.front();
    std::array<double, 3> hn{};
    for (int d = 0; d < b.n_dirs && d < 3; ++d)
        if (!s0.delta1[d].empty()) hn[d] = model.hr_norm(s0.delta1[d]);
    for (std::size_t i = 1; i < b.states.size(); ++i) {
        const auto& s = b.states[i];
        const double t = b.grid[i];
        auto note = [&](int order, double ratio) {
            rep.max_ratio[order - 1] = std::max(rep.max_ratio[order - 1], ratio);
            if (ratio > 1.0 + tol) rep.violations.push_back({t, order, ratio});
        };
        if (b.orders >= 1) {
            for (int d = 0; d < b.n_dirs; ++d)
                note(1, model.hr_norm(s.delta1[d]) / (std::exp(c.zeta_R * t) * hn[d]));
        }
        KBounds kb = k_bounds(t, c.zeta_R);
        auto ratio_of = [](double v, double bound) {
            if (bound > 0) return v / bound;
            return v == 0.0 ? 0.0 : INFINITY;
        };
        if (b.orders >= 2) {
            int np = b.n_dirs == 2 ? 1 : 3;
            for (int p = 0; p < np; ++p) {
                double bound = c.M2 * kb.K1 * hn[kPairs[p][0]] * hn[kPairs[p][1]];
                note(2, ratio_of(model.hr_norm(s.delta2[p]), bound));
            }
        }
        if (b.orders >= 3) {
            double bound = c.M3 * kb.K2 * hn[0] * hn[1] * hn[2];
            note(3, ratio_of(model.hr_norm(s.delta3), bound));
        }
    }
    return rep;
}

double lipschitz_probe(const Engine& engine, const Vec& x, const Vec& y, const SimConfig& cfg0,
                       std::uint64_t path_index) {
    Vec diff(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) diff[k] = x[k] - y[k];
    double d0 = euclid_norm(diff);
    if (!(d0 > 0)) throw ArgumentError("lipschitz_probe: x and y must differ");
    SimConfig cfg = cfg0;
    cfg.orders = 0;
    cfg.directions.clear();
    cfg.record = true;
    auto bx = engine.simulate_path(x, cfg, path_index);
    auto by = engine.simulate_path(y, cfg, path_index);
    double best = 0;
    for (std::size_t i = 0; i < bx.states.size(); ++i) {
        for (std::size_t k = 0; k < x.size(); ++k) diff[k] = bx.states[i].x[k] - by.states[i].x[k];
        best = std::max(best, euclid_norm(diff) / d0);
    }
    return best;
}

void dump_path_csv(const PathBundle& b, std::ostream& os) {
    if (b.states.empty()) return;
    const std::size_t n = b.states.front().x.size();
    const int np = b.orders >= 2 ? (b.n_dirs == 2 ? 1 : 3) : 0;
    os << "time";
    for (std::size_t k = 0; k < n; ++k) os << ",x" << k + 1;
    if (b.orders >= 1)
        for (int d = 0; d < b.n_dirs; ++d) {
            for (std::size_t k = 0; k < n; ++k) os << ",delta1_" << d << '_' << k + 1;
            os << ",weight1_" << d;
        }
    for (int p = 0; p < np; ++p) {
        for (std::size_t k = 0; k < n; ++k)
            os << ",delta2_" << kPairs[p][0] << kPairs[p][1] << '_' << k + 1;
        os << ",weight2_" << kPairs[p][0] << kPairs[p][1];
    }
    if (b.orders >= 3) {
        for (std::size_t k = 0; k < n; ++k) os << ",delta3_" << k + 1;
        os << ",weight3";
    }
    os << '\n';
    char buf[32];
    auto put = [&](double v) {
        std::snprintf(buf, sizeof buf, ",%.10e", v);
        os << buf;
    };
    for (std::size_t i = 0; i < b.states.size(); ++i) {
        const auto& s = b.states[i];
        std::snprintf(buf, sizeof buf, "%.10e", b.grid[i]);
        os << buf;
        for (double v : s.x) put(v);
        if (b.orders >= 1)
            for (int d = 0; d < b.n_dirs; ++d) {
                for (double v : s.delta1[d]) put(v);
                put(s.weight1[d]);
            }
        for (int p = 0; p < np; ++p) {
            for (double v : s.delta2[p]) put(v);
            put(s.weight2[p]);
        }
        if (b.orders >= 3) {
            for (double v : s.delta3) put(v);
            put(s.weight3);
        }
        os << '\n';
    }
}

}  // namespace spdelab

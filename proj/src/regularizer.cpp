// SPDX-License-Identifier: Apache-2.0
#include "spdelab/regularizer.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "spdelab/errors.hpp"
#include "spdelab/estimators.hpp"
#include "spdelab/parallel.hpp"

namespace spdelab {

namespace {

const double kGold = 0.5 * (std::sqrt(5.0) - 1.0);

using Fn1 = std::function<double(double)>;

// minimise on [lo, hi] assuming unimodal
double golden(const Fn1& g, double lo, double hi, double tol, double& best) {
    double c = hi - kGold * (hi - lo), d = lo + kGold * (hi - lo);
    double gc = g(c), gd = g(d);
    // run to floating resolution unless tol is looser: at a cusp |v|^a the
    // value error is |bracket|^a, so a loose bracket shows up in f - f_eps
    for (int it = 0; it < 200 && hi - lo > tol && hi - lo > 4e-16 * (std::abs(lo) + std::abs(hi)) + 1e-300; ++it) {
        if (gc < gd) {
            hi = d;
            d = c;
            gd = gc;
            c = hi - kGold * (hi - lo);
            gc = g(c);
        } else {
            lo = c;
            c = d;
            gc = gd;
            d = lo + kGold * (hi - lo);
            gd = g(d);
        }
    }
    double x = gc < gd ? c : d;
    best = std::min(gc, gd);
    return x;
}

// grid on [lo, hi], then golden inside the bracket of every discrete local
// minimum (a cusp between two nodes need not sit in the best cell)
double min_1d(const Fn1& g, double lo, double hi, int res, double tol, double& best) {
    if (hi <= lo) {
        best = g(lo);
        return lo;
    }
    res = std::max(res, 5);
    double step = (hi - lo) / (res - 1);
    Vec val(res);
    for (int i = 0; i < res; ++i) val[i] = g(lo + i * step);
    int bi = int(std::min_element(val.begin(), val.end()) - val.begin());
    best = val[bi];
    double arg = lo + bi * step;
    for (int i = 0; i < res; ++i) {
        bool local = (i == 0 || val[i] <= val[i - 1]) && (i == res - 1 || val[i] <= val[i + 1]);
        if (!local) continue;
        double a = lo + std::max(0, i - 1) * step, b = lo + std::min(res - 1, i + 1) * step;
        double gv;
        double x = golden(g, a, b, tol, gv);
        if (gv < best) best = gv, arg = x;
    }
    return arg;
}

using FnN = std::function<double(const Vec&)>;

// minimise over the ball ||u|| <= R in R^d
Vec min_ball(const FnN& g, int d, double R, const EnvelopeConfig& cfg, double& best) {
    Vec u(d, 0.0);
    if (R <= 0) {
        best = g(u);
        return u;
    }
    bool grid = cfg.optimizer == EnvelopeConfig::Optimizer::Grid ||
                (cfg.optimizer == EnvelopeConfig::Optimizer::Auto && d <= 2);
    if (d == 1) {
        double x = min_1d([&](double v) { return g(Vec{v}); }, -R, R, cfg.grid_resolution, cfg.tol, best);
        return Vec{x};
    }
    auto coord_refine = [&](Vec& p, double& val, double width, int sweeps) {
        for (int sw = 0; sw < sweeps; ++sw) {
            double before = val;
            for (int i = 0; i < d; ++i) {
                double rest = 0;
                for (int j = 0; j < d; ++j)
                    if (j != i) rest += p[j] * p[j];
                double lim = std::sqrt(std::max(0.0, R * R - rest));
                double lo = std::max(-lim, p[i] - width), hi = std::min(lim, p[i] + width);
                Vec q = p;
                double bv;
                double xi = min_1d(
                    [&](double v) {
                        q[i] = v;
                        return g(q);
                    },
                    lo, hi, 21, cfg.tol, bv);
                if (bv < val) {
                    val = bv;
                    p[i] = xi;
                }
            }
            if (before - val <= cfg.tol * (1 + std::abs(val))) break;
        }
    };
    if (grid && d == 2) {
        int G = std::max(11, int(std::sqrt(double(cfg.grid_resolution)) * 3));
        double step = 2 * R / (G - 1);
        best = std::numeric_limits<double>::infinity();
        for (int a = 0; a < G; ++a)
            for (int b = 0; b < G; ++b) {
                Vec q{-R + a * step, -R + b * step};
                if (q[0] * q[0] + q[1] * q[1] > R * R * (1 + 1e-12)) continue;
                double v = g(q);
                if (v < best) best = v, u = q;
            }
        coord_refine(u, best, step, cfg.max_iters);
        return u;
    }
    // coordinate descent with multistart: origin and axis points
    best = std::numeric_limits<double>::infinity();
    for (int s = 0; s < std::max(1, cfg.multistart); ++s) {
        Vec p(d, 0.0);
        if (s > 0) p[(s - 1) % d] = (s % 2 ? 0.5 : -0.5) * R;
        double val = g(p);
        coord_refine(p, val, 2 * R, cfg.max_iters);
        if (val < best) best = val, u = p;
    }
    return u;
}

double norm(const Vec& u) { return euclid_norm(u); }

}  // namespace

double truman_radius(double a, double semi, double eps) {
    double e = 2.0 / (2.0 - a);
    return std::sqrt((2 - a) * std::pow(a, a / (2 - a)) * std::pow(2.0, e) * std::pow(semi, e) * std::pow(eps, e));
}

double discipline_radius(double a, double semi, double eps, double c_alpha) {
    double e = 2.0 / (2.0 - a);
    return std::sqrt(2 * c_alpha * std::pow(semi, e) * std::pow(eps, e));
}

EnvelopeResult ll_regularize(const ScalarField& f, const Vec& x, const EnvelopeConfig& cfg,
                             const SpectralModel& model) {
    if (!(cfg.epsilon > 0)) throw ArgumentError("epsilon must be positive");
    if (!(f.sup_bound >= 0) || !std::isfinite(f.sup_bound))
        throw ArgumentError("ll_regularize needs a bounded field (sup_bound)");
    const int n = model.n();
    if (int(x.size()) != n) throw ArgumentError("state has wrong dimension");
    const int d = cfg.subspace_dims < 0 ? std::min(n, 4) : cfg.subspace_dims;
    if (d < 1 || d > n) throw ArgumentError("subspace_dims must lie in 1..n");
    const double eps = cfg.epsilon, fs = f.sup_bound;
    EnvelopeResult res;
    res.radius_inner = cfg.radius_inner > 0 ? cfg.radius_inner : 2 * std::sqrt(eps * fs);
    res.radius_outer = cfg.radius_outer > 0 ? cfg.radius_outer : std::sqrt(2 * eps * fs);
    const auto& r = model.r();

    auto embed = [&](const Vec& base, const Vec& u, double sign) {
        Vec y(base);
        for (int i = 0; i < d; ++i) y[i] += sign * u[i] * r[i];
        return y;
    };
    Vec kbest(d, 0.0);
    auto inner = [&](const Vec& z, Vec* arg) {
        double best;
        Vec v = min_ball([&](const Vec& w) { return f(embed(z, w, -1.0)) + 0.5 / eps * norm(w) * norm(w); },
                         d, res.radius_inner, cfg, best);
        if (arg) *arg = v;
        return best;
    };
    double neg;
    Vec u = min_ball([&](const Vec& w) { return -(inner(embed(x, w, 1.0), nullptr) - norm(w) * norm(w) / eps); }, d,
                     res.radius_outer, cfg, neg);
    res.value = -neg;
    Vec v;
    inner(embed(x, u, 1.0), &v);
    res.h_star = embed(Vec(n, 0.0), u, 1.0);
    res.k_star = embed(Vec(n, 0.0), v, 1.0);
    res.boundary_warning = norm(u) > 0.99 * res.radius_outer || norm(v) > 0.99 * res.radius_inner;
    return res;
}

std::vector<Vec> envelope_probe_points(const SpectralModel& model, int n_log, double min_scale) {
    // origin plus +-2^{-j/4} e_1 down to min_scale, where the cusp-type
    // fields attain their largest error and gradient
    std::vector<Vec> pts{Vec(model.n(), 0.0)};
    for (int j = 0; j < n_log; ++j) {
        double s = std::pow(2.0, -0.25 * j);
        if (s < min_scale) break;
        for (double sg : {1.0, -1.0}) {
            Vec x(model.n(), 0.0);
            x[0] = sg * s;
            pts.push_back(x);
        }
    }
    return pts;
}

namespace {

struct EpsSweep {
    double err = 0, fe = 0, grad = 0, min_gap = std::numeric_limits<double>::infinity(), excess = -1e300;
    bool boundary = false;
};

EpsSweep sweep_eps(const ScalarField& f, double eps, double alpha, const std::vector<Vec>& probe,
                   const EnvelopeConfig& base, const SpectralModel& model) {
    EnvelopeConfig cfg = base;
    cfg.epsilon = eps;
    const int n = model.n();
    const int d = cfg.subspace_dims < 0 ? std::min(n, 4) : cfg.subspace_dims;
    const double s = 1e-2 * std::pow(eps, 1.0 / (2.0 - alpha));
    std::vector<EpsSweep> per(probe.size());
    parallel_for(probe.size(), [&](std::size_t i) {
        const Vec& x = probe[i];
        auto e0 = ll_regularize(f, x, cfg, model);
        EpsSweep& p = per[i];
        double gap = f(x) - e0.value;
        p.err = gap;
        p.min_gap = gap;
        p.fe = std::abs(e0.value);
        p.excess = std::abs(e0.value) - f.sup_bound;
        p.boundary = e0.boundary_warning;
        double g2 = 0;
        for (int k = 0; k < d; ++k) {
            Vec xp(x), xm(x);
            xp[k] += s * model.r()[k];
            xm[k] -= s * model.r()[k];
            auto ep = ll_regularize(f, xp, cfg, model), em = ll_regularize(f, xm, cfg, model);
            double gk = (ep.value - em.value) / (2 * s);
            g2 += gk * gk;
        }
        p.grad = std::sqrt(g2);
    });
    EpsSweep out;
    for (const auto& p : per) {
        out.err = std::max(out.err, p.err);
        out.fe = std::max(out.fe, p.fe);
        out.grad = std::max(out.grad, p.grad);
        out.min_gap = std::min(out.min_gap, p.min_gap);
        out.excess = std::max(out.excess, p.excess);
        out.boundary = out.boundary || p.boundary;
    }
    return out;
}

}  // namespace

LLBoundsReport verify_ll_bounds(const ScalarField& f, const Vec& epsilons, const std::vector<Vec>& probe,
                                const EnvelopeConfig& base, const SpectralModel& model) {
    if (f.cls != FieldClass::Holder && f.seminorm != 0)
        throw ArgumentError("verify_ll_bounds needs a field with certified alpha and seminorm");
    const double alpha = f.cls == FieldClass::Holder ? f.alpha : 0.5;
    LLBoundsReport rep;
    rep.epsilons = epsilons;
    rep.min_gap = std::numeric_limits<double>::infinity();
    rep.max_excess = -1e300;
    for (double eps : epsilons) {
        auto s = sweep_eps(f, eps, alpha, probe, base, model);
        rep.err_sup.push_back(s.err);
        rep.grad_sup.push_back(s.grad);
        rep.fe_sup.push_back(s.fe);
        rep.min_gap = std::min(rep.min_gap, s.min_gap);
        rep.max_excess = std::max(rep.max_excess, s.excess);
        rep.boundary_warning = rep.boundary_warning || s.boundary;
    }
    bool all_zero = std::all_of(rep.err_sup.begin(), rep.err_sup.end(), [](double v) { return v <= 1e-14; });
    if (all_zero || f.seminorm <= 0) {
        rep.degenerate = true;
        return rep;
    }
    Vec zeros(epsilons.size(), 0.0);
    auto fe = fit_log_log(epsilons, rep.err_sup, zeros);
    auto fg = fit_log_log(epsilons, rep.grad_sup, zeros);
    rep.err_slope = fe.slope;
    rep.err_slope_ci = fe.slope_ci;
    rep.grad_slope = fg.slope;
    rep.grad_slope_ci = fg.slope_ci;
    const double e = 2.0 / (2.0 - alpha);
    for (std::size_t i = 0; i < epsilons.size(); ++i)
        rep.c_alpha = std::max(rep.c_alpha, rep.err_sup[i] / (std::pow(f.seminorm, e) *
                                                              std::pow(epsilons[i], alpha / (2 - alpha))));
    for (double eps : epsilons) {
        double rk = base.radius_inner > 0 ? base.radius_inner : 2 * std::sqrt(eps * f.sup_bound);
        double rh = base.radius_outer > 0 ? base.radius_outer : std::sqrt(2 * eps * f.sup_bound);
        // the generic radii are sound for any bounded f; record whether they also
        // cover twice the alpha-dependent localisation radii
        if (rk < 2 * truman_radius(alpha, f.seminorm, eps) && rk < 2 * std::sqrt(eps * f.sup_bound) * 0.999)
            rep.radii_dominate = false;
        if (rh < 2 * discipline_radius(alpha, f.seminorm, eps, rep.c_alpha) &&
            rh < std::sqrt(2 * eps * f.sup_bound) * 0.999)
            rep.radii_dominate = false;
    }
    return rep;
}

KFunctionalResult k_functional(const ScalarField& f, double r, double alpha, const std::vector<Vec>& probe,
                               const EnvelopeConfig& base, const SpectralModel& model) {
    if (!(r > 0)) throw ArgumentError("k_functional: r must be positive");
    if (!(alpha > 0 && alpha < 1)) throw ArgumentError("k_functional: alpha must lie in (0,1)");
    KFunctionalResult k;
    k.r = r;
    auto s = sweep_eps(f, std::pow(r, 2.0 - alpha), alpha, probe, base, model);
    k.err_sup = s.err;
    k.fe_sup = s.fe;
    k.grad_sup = s.grad;
    k.decomposition = s.err + r * (s.fe + s.grad);
    k.trivial_a = f.sup_bound;
    bool in_x = (f.cls == FieldClass::X || f.cls == FieldClass::Smooth) && f.grad_bound >= 0;
    k.trivial_b = in_x ? r * (f.sup_bound + f.grad_bound) : std::numeric_limits<double>::infinity();
    k.bound = std::min({k.decomposition, k.trivial_a, k.trivial_b});
    return k;
}

}  // namespace spdelab

// SPDX-License-Identifier: Apache-2.0
#include "spdelab/estimators.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/distributions/students_t.hpp>

#include "spdelab/errors.hpp"
#include "spdelab/parallel.hpp"
#include "spdelab/rng.hpp"

namespace spdelab {

namespace {

constexpr std::uint64_t kInnerD2 = 0x2A, kInnerA = 0x3A, kInnerB = 0x3B;

void require_bel(const McContext& c) {
    if (c.engine.model().noise_scale() != 1.0)
        throw ConfigError("derivative weights need model.noise_scale = 1");
}

void require_t(double t, bool allow_zero) {
    if (!(allow_zero ? t >= 0 : t > 0) || !std::isfinite(t))
        throw ArgumentError(allow_zero ? "t must be nonnegative" : "t must be positive");
}

void require_dir(const Vec& h, int n) {
    if (int(h.size()) != n) throw ArgumentError("direction has wrong dimension");
    if (euclid_norm(h) == 0.0) throw ArgumentError("direction must be nonzero");
}

SimConfig sim(const McContext& c, double t, std::uint64_t seed, int orders, std::vector<Vec> dirs) {
    SimConfig s;
    s.dt = c.dt;
    s.min_steps = c.min_steps;
    s.t_end = t;
    s.master_seed = seed;
    s.orders = orders;
    s.directions = std::move(dirs);
    return s;
}

double hr_dot(const SpectralModel& m, const Vec& g, const Vec& d) {
    double s = 0;
    const auto& r = m.r();
    for (std::size_t k = 0; k < g.size(); ++k) s += g[k] * d[k] / (r[k] * r[k]);
    return s;
}

double checked(double v, const char* what) {
    if (!std::isfinite(v)) throw EstimatorError(std::string("non-finite ") + what);
    return v;
}

// Inner batch from y over horizon s: mean of f and of f W1^d / s for up to
// three directions, with their sample variances.
struct InnerSet {
    double psi = 0, var_psi = 0;
    double dpsi[3] = {0, 0, 0}, var_dpsi[3] = {0, 0, 0};
};

InnerSet inner_set(const McContext& c, const ScalarField& f, double s, const Vec& y,
                   const std::vector<Vec>& dirs, long n, std::uint64_t seed) {
    InnerSet out;
    const int nd = int(dirs.size());
    SimConfig cfg = sim(c, s, seed, nd > 0 ? 1 : 0, dirs);
    PathState st;
    double m0 = 0, q0 = 0, m[3] = {0, 0, 0}, q[3] = {0, 0, 0};
    for (long i = 0; i < n; ++i) {
        c.engine.run(y, cfg, std::uint64_t(i), st);
        double fx = checked(f(st.x), "inner field value");
        double k1 = double(i + 1);
        double d = fx - m0;
        m0 += d / k1;
        q0 += d * (fx - m0);
        for (int a = 0; a < nd; ++a) {
            double v = fx * st.weight1[a] / s;
            double e = v - m[a];
            m[a] += e / k1;
            q[a] += e * (v - m[a]);
        }
    }
    out.psi = m0;
    out.var_psi = n > 1 ? q0 / (n - 1) : 0;
    for (int a = 0; a < nd; ++a) {
        out.dpsi[a] = m[a];
        out.var_dpsi[a] = n > 1 ? q[a] / (n - 1) : 0;
    }
    return out;
}

template <class F>
std::vector<double> collect(long n, F&& sample) {
    if (n < 2) throw ArgumentError("need at least 2 outer samples");
    std::vector<double> s(std::size_t(n), 0.0);
    parallel_for(std::size_t(n), [&](std::size_t i) { s[i] = sample(std::uint64_t(i)); });
    long bad = 0;
    for (double v : s)
        if (!std::isfinite(v)) ++bad;
    if (bad) throw EstimatorError(std::to_string(bad) + " non-finite samples");
    return s;
}

}  // namespace

MCEstimate reduce_samples(const std::vector<double>& s, std::uint64_t seed, double t) {
    MCEstimate e;
    double mean = 0, m2 = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        double d = s[i] - mean;
        mean += d / double(i + 1);
        m2 += d * (s[i] - mean);
    }
    e.value = mean;
    e.std_error = s.size() > 1 ? std::sqrt(m2 / double(s.size() - 1) / double(s.size())) : 0.0;
    e.n_outer = long(s.size());
    e.seed = seed;
    e.t = t;
    return e;
}

double pt_sample(const McContext& c, const ScalarField& f, double t, const Vec& x, std::uint64_t seed,
                 std::uint64_t i) {
    if (t == 0) return f(x);
    PathState st;
    c.engine.run(x, sim(c, t, seed, 0, {}), i, st);
    return f(st.x);
}

double d1_sample(const McContext& c, const ScalarField& f, double t, const Vec& x, const Vec& h,
                 std::uint64_t seed, std::uint64_t i) {
    PathState st;
    c.engine.run(x, sim(c, t, seed, 1, {h}), i, st);
    return f(st.x) * st.weight1[0] / t;
}

double d2_sample(const McContext& c, const ScalarField& f, double t, const Vec& x, const Vec& h,
                 const Vec& k, long n_inner, std::uint64_t seed, std::uint64_t i, double* inner_var) {
    const double s = 0.5 * t;
    PathState st;
    c.engine.run(x, sim(c, s, seed, 2, {h, k}), i, st);
    InnerSet in = inner_set(c, f, s, st.x, {st.delta1[1]}, n_inner, derive_seed(seed, i, kInnerD2));
    const double w1 = st.weight1[0], w2 = st.weight2[0];
    if (inner_var)
        *inner_var = (w1 * w1 * in.var_dpsi[0] + w2 * w2 * in.var_psi) / double(n_inner) / (s * s);
    return (in.dpsi[0] * w1 + in.psi * w2) / s;
}

namespace {

double d3_sample(const McContext& c, const ScalarField& f, double t, const Vec& x, const Vec& h,
                 const Vec& k, const Vec& j, long n_inner, std::uint64_t seed, std::uint64_t i) {
    const double s = 0.5 * t;
    PathState st;
    c.engine.run(x, sim(c, s, seed, 3, {h, k, j}), i, st);
    const Vec y = st.x;
    const Vec& dk = st.delta1[1];
    const Vec& dj = st.delta1[2];
    const Vec& dkj = st.delta2[2];
    const bool have_kj = euclid_norm(dkj) > 0;
    std::vector<Vec> dirs{dk, dj};
    if (have_kj && !c.d3_fast_mode) dirs.push_back(dkj);
    InnerSet a = inner_set(c, f, s, y, dirs, n_inner, derive_seed(seed, i, kInnerA));
    // second derivative of P(s)f at y along the transported pair: nested d2
    const std::uint64_t sb = derive_seed(seed, i, kInnerB);
    double d2 = 0;
    for (long m = 0; m < n_inner; ++m) d2 += d2_sample(c, f, s, y, dk, dj, n_inner, sb, std::uint64_t(m));
    d2 /= double(n_inner);
    const double w1h = st.weight1[0];
    const double w2hk = st.weight2[0], w2hj = st.weight2[1];
    double v = d2 * w1h + a.dpsi[0] * w2hj + a.dpsi[1] * w2hk + a.psi * st.weight3;
    if (dirs.size() == 3) v += a.dpsi[2] * w1h;
    return v / s;
}

}  // namespace

MCEstimate estimate_pt(const McContext& c, const ScalarField& f, double t, const Vec& x, long n,
                       std::uint64_t seed) {
    require_t(t, true);
    if (t == 0) {
        MCEstimate e;
        e.value = checked(f(x), "field value");
        e.n_outer = n;
        e.seed = seed;
        return e;
    }
    auto s = collect(n, [&](std::uint64_t i) { return pt_sample(c, f, t, x, seed, i); });
    return reduce_samples(s, seed, t);
}

MCEstimate bel_d1(const McContext& c, const ScalarField& f, double t, const Vec& x, const Vec& h, long n,
                  std::uint64_t seed) {
    require_bel(c);
    require_t(t, false);
    require_dir(h, c.engine.model().n());
    auto s = collect(n, [&](std::uint64_t i) { return d1_sample(c, f, t, x, h, seed, i); });
    return reduce_samples(s, seed, t);
}

MCEstimate bel_d2(const McContext& c, const ScalarField& f, double t, const Vec& x, const Vec& h,
                  const Vec& k, long n_outer, long n_inner, std::uint64_t seed) {
    require_bel(c);
    require_t(t, false);
    require_dir(h, c.engine.model().n());
    require_dir(k, c.engine.model().n());
    if (n_inner < 2) throw ArgumentError("bel_d2 needs n_inner >= 2");
    std::vector<double> iv(std::size_t(std::max(0L, n_outer)), 0.0);
    auto s = collect(n_outer, [&](std::uint64_t i) {
        return d2_sample(c, f, t, x, h, k, n_inner, seed, i, &iv[i]);
    });
    MCEstimate e = reduce_samples(s, seed, t);
    e.n_inner = n_inner;
    double sum = 0;
    for (double v : iv) sum += v;
    e.inner_variance = sum / double(n_outer);
    return e;
}

MCEstimate bel_d3(const McContext& c, const ScalarField& f, double t, const Vec& x, const Vec& h,
                  const Vec& k, const Vec& j, long n_outer, long n_inner, std::uint64_t seed) {
    require_bel(c);
    require_t(t, false);
    const int n = c.engine.model().n();
    require_dir(h, n);
    require_dir(k, n);
    require_dir(j, n);
    if (n_inner < 2) throw ArgumentError("bel_d3 needs n_inner >= 2");
    if (t < c.t_min_d3)
        throw ArgumentError("bel_d3: t=" + std::to_string(t) + " is below t_min_d3=" +
                            std::to_string(c.t_min_d3));
    auto s = collect(n_outer, [&](std::uint64_t i) { return d3_sample(c, f, t, x, h, k, j, n_inner, seed, i); });
    MCEstimate e = reduce_samples(s, seed, t);
    e.n_inner = n_inner;
    return e;
}

MCEstimate bel_d1_smooth(const McContext& c, const ScalarField& f, double t, const Vec& x, const Vec& h,
                         long n, std::uint64_t seed) {
    if (!f.has_grad()) throw ArgumentError("bel_d1_smooth needs a field with grad_R");
    require_t(t, true);
    const auto& model = c.engine.model();
    require_dir(h, model.n());
    Vec g(model.n());
    if (t == 0) {
        f.grad_R(x.data(), g.data());
        MCEstimate e;
        e.value = hr_dot(model, g, h);
        e.n_outer = n;
        e.seed = seed;
        return e;
    }
    auto s = collect(n, [&](std::uint64_t i) {
        PathState st;
        c.engine.run(x, sim(c, t, seed, 1, {h}), i, st);
        Vec gg(model.n());
        f.grad_R(st.x.data(), gg.data());
        return hr_dot(model, gg, st.delta1[0]);
    });
    return reduce_samples(s, seed, t);
}

MCEstimate bel_d2_smooth(const McContext& c, const ScalarField& f, double t, const Vec& x, const Vec& h,
                         const Vec& k, long n, std::uint64_t seed) {
    if (!f.has_grad()) throw ArgumentError("bel_d2_smooth needs a field with grad_R");
    require_bel(c);
    require_t(t, false);
    const auto& model = c.engine.model();
    require_dir(h, model.n());
    require_dir(k, model.n());
    auto s = collect(n, [&](std::uint64_t i) {
        PathState st;
        c.engine.run(x, sim(c, t, seed, 2, {h, k}), i, st);
        Vec gg(model.n());
        f.grad_R(st.x.data(), gg.data());
        return (hr_dot(model, gg, st.delta1[1]) * st.weight1[0] + f(st.x) * st.weight2[0]) / t;
    });
    return reduce_samples(s, seed, t);
}

double fd_step(double budget, double hn) {
    if (!(budget > 0)) throw ArgumentError("fd_step: budget must be positive");
    return std::clamp(std::cbrt(budget) * hn, 1e-4, 1e-1);
}

namespace {
Vec offset(const Vec& x, const Vec& h, double s) {
    Vec y(x);
    for (std::size_t k = 0; k < y.size(); ++k) y[k] += s * h[k];
    return y;
}
}  // namespace

MCEstimate fd_d1(const McContext& c, const ScalarField& f, double t, const Vec& x, const Vec& h, double s,
                 long n, std::uint64_t seed) {
    require_t(t, false);
    if (!(s > 0)) throw ArgumentError("fd step must be positive");
    Vec xp = offset(x, h, s), xm = offset(x, h, -s);
    auto v = collect(n, [&](std::uint64_t i) {
        return (pt_sample(c, f, t, xp, seed, i) - pt_sample(c, f, t, xm, seed, i)) / (2 * s);
    });
    return reduce_samples(v, seed, t);
}

MCEstimate fd_d2(const McContext& c, const ScalarField& f, double t, const Vec& x, const Vec& h, const Vec& k,
                 double s, long n, std::uint64_t seed) {
    require_bel(c);
    require_t(t, false);
    if (!(s > 0)) throw ArgumentError("fd step must be positive");
    Vec xp = offset(x, k, s), xm = offset(x, k, -s);
    auto v = collect(n, [&](std::uint64_t i) {
        return (d1_sample(c, f, t, xp, h, seed, i) - d1_sample(c, f, t, xm, h, seed, i)) / (2 * s);
    });
    return reduce_samples(v, seed, t);
}

RateFit fit_log_log(const Vec& times, const Vec& values, const Vec& ses) {
    RateFit fit;
    fit.times = times;
    fit.values = values;
    fit.std_errors = ses;
    fit.used.assign(times.size(), false);
    Vec lx, ly;
    for (std::size_t i = 0; i < times.size(); ++i) {
        bool ok = values[i] > 0 && std::isfinite(values[i]) && ses[i] <= 0.2 * values[i];
        fit.used[i] = ok;
        if (ok) {
            lx.push_back(std::log(times[i]));
            ly.push_back(std::log(values[i]));
        } else {
            fit.excluded.push_back(times[i]);
        }
    }
    const std::size_t m = lx.size();
    if (m < 4) throw EstimatorError("rate fit needs at least 4 usable points, got " + std::to_string(m));
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < m; ++i) mx += lx[i], my += ly[i];
    mx /= m;
    my /= m;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < m; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double rss = 0;
    for (std::size_t i = 0; i < m; ++i) {
        double e = ly[i] - fit.intercept - fit.slope * lx[i];
        rss += e * e;
    }
    fit.residual = std::sqrt(rss / m);
    double se = std::sqrt(rss / double(m - 2) / sxx);
    boost::math::students_t dist(double(m - 2));
    fit.slope_ci = boost::math::quantile(boost::math::complement(dist, 0.025)) * se;
    return fit;
}

RateFit fit_decay_rate(const McContext& c, const ScalarField& f, const DecaySpec& sp) {
    if (sp.points.empty() || sp.directions.empty()) throw ArgumentError("decay fit needs probe points and directions");
    const double norm = f.class_norm();
    if (!(norm > 0)) throw ArgumentError("decay fit needs a field with positive class norm");
    Vec vals, ses;
    for (std::size_t ti = 0; ti < sp.times.size(); ++ti) {
        const double t = sp.times[ti];
        const std::uint64_t seed = derive_seed(sp.seed, ti);
        double best = -1, best_se = 0;
        for (const Vec& x : sp.points)
            for (const Vec& h : sp.directions) {
                MCEstimate e;
                switch (sp.estimator) {
                    case DecayEstimator::D1: e = bel_d1(c, f, t, x, h, sp.n_outer, seed); break;
                    case DecayEstimator::D2: e = bel_d2(c, f, t, x, h, h, sp.n_outer, sp.n_inner, seed); break;
                    case DecayEstimator::D3:
                        e = bel_d3(c, f, t, x, h, h, h, sp.n_outer, sp.n_inner, seed);
                        break;
                    case DecayEstimator::D1Smooth: e = bel_d1_smooth(c, f, t, x, h, sp.n_outer, seed); break;
                    case DecayEstimator::D2Smooth: e = bel_d2_smooth(c, f, t, x, h, h, sp.n_outer, seed); break;
                }
                double v = std::abs(e.value) / norm;
                if (v > best) best = v, best_se = e.std_error / norm;
            }
        vals.push_back(best);
        ses.push_back(best_se);
    }
    return fit_log_log(sp.times, vals, ses);
}

}  // namespace spdelab

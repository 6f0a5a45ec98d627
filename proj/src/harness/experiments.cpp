// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include <boost/math/distributions/students_t.hpp>

#include "internal.hpp"
#include "spdelab/errors.hpp"
#include "spdelab/parallel.hpp"
#include "spdelab/regularizer.hpp"
#include "spdelab/rng.hpp"
#include "spdelab/solvers.hpp"

namespace spdelab {
namespace detail {
namespace {

// model + G + engine + stepping, built from the resolved config
struct Setup {
    SpectralModel model;
    std::unique_ptr<Nonlinearity> g;
    Engine engine;
    McContext mc;
    std::uint64_t seed;
    long n_paths, n_inner;

    explicit Setup(const ConfigData& d)
        : model(model_params(d)),
          g(make_nonlinearity(d, model.n())),
          engine(model, *g),
          mc{engine},
          seed(std::uint64_t(integer(d, "run", "seed"))),
          n_paths(integer(d, "run", "n_paths")),
          n_inner(integer(d, "run", "n_inner")) {
        mc.dt = real(d, "run", "dt");
        mc.min_steps = int(integer(d, "run", "min_steps"));
    }
    ModelConstants constants() const { return compute_constants(model, g->M()); }
};

double p_real(const ConfigData& d, const char* k) { return real(d, "params", k); }
long p_int(const ConfigData& d, const char* k) { return integer(d, "params", k); }
std::string p_str(const ConfigData& d, const char* k) { return str(d, "params", k); }

// params.point padded with zeros to the model dimension
Vec point(const ConfigData& d, int n, const char* key = "point") {
    Vec p = reals(d, "params", key);
    if (int(p.size()) > n) throw ConfigError(std::string("params.") + key + " is longer than model.n");
    p.resize(std::size_t(n), 0.0);
    return p;
}

int basis_index(const ConfigData& d, const char* key, int n) {
    long k = p_int(d, key);
    if (k < 0 || k >= n) throw ConfigError(std::string("params.") + key + " must index a basis vector (0..n-1)");
    return int(k);
}

Vec logspace(double lo, double hi, long m) {
    Vec v;
    for (long i = 0; i < m; ++i) v.push_back(lo * std::pow(hi / lo, m > 1 ? double(i) / double(m - 1) : 0.0));
    return v;
}

std::string tag(const std::string& base, const std::string& inner) { return base + "[" + inner + "]"; }

void need_positive(const ConfigData& d, const char* k) {
    if (!(p_real(d, k) > 0)) throw ConfigError(std::string("params.") + k + " must be positive");
}

void need_lambda(const ConfigData& d) {
    if (!(p_real(d, "lambda") > 0))
        throw ConfigError("params.lambda = " + num(p_real(d, "lambda")) +
                          ": lambda must be positive, the resolvent integral of e^{-lambda t} P(t) f over (0, inf) "
                          "only converges for lambda > 0");
}

void need_field(const ConfigData& d, const char* key) {
    SpectralModel m(model_params(d));
    make_field(p_str(d, key), m);
}

void need_zero_g(const ConfigData& d, const char* what) {
    if (str(d, "nonlinearity", "name") != "zero")
        throw ConfigError(std::string(what) + " compares against Ornstein-Uhlenbeck closed forms: set nonlinearity.name: zero");
}

void need_unit_noise(const ConfigData& d) {
    if (real(d, "model", "noise_scale") != 1.0) throw ConfigError("derivative weights need model.noise_scale = 1");
}

void need_times(const ConfigData& d, const char* key) {
    for (double t : reals(d, "params", key))
        if (!(t > 0)) throw ConfigError(std::string("params.") + key + ": times must be positive");
}

double median(Vec v) {
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size();
    return m % 2 ? v[m / 2] : 0.5 * (v[m / 2 - 1] + v[m / 2]);
}

// Ornstein-Uhlenbeck law of x_1 under G = 0: mean e^{a t} x_1, variance q
struct OuFirstMode {
    double E, m, q;
    OuFirstMode(const SpectralModel& model, double t, double x1) {
        const double a = model.a()[0], r = model.r()[0], ns = model.noise_scale();
        E = std::exp(a * t);
        m = E * x1;
        q = r * r * ns * ns * std::expm1(2 * a * t) / (2 * a);
    }
    // D^i E sin(omega X_1) along directions with first components c[0..i-1]
    double derivative(double omega, int order, const double* c) const {
        const double g = std::exp(-omega * omega * q / 2), ph = omega * m;
        double v = 0;
        switch (order) {
            case 0: v = std::sin(ph); break;
            case 1: v = std::cos(ph); break;
            case 2: v = -std::sin(ph); break;
            default: v = -std::cos(ph); break;
        }
        for (int i = 0; i < order; ++i) v *= omega * E * c[i];
        return v * g;
    }
};

std::string sin_spec(double omega) { return "sin:omega=" + num(omega); }

void plot(ResultRecord& r, const std::string& name, const char* xl, const char* yl, const Vec& x, const Vec& y) {
    r.plots.push_back({name, xl, yl, x, y});
}

// ---- bounds -----------------------------------------------------------------

void validate_bounds(const ConfigData& d) {
    need_positive(d, "t_end");
    need_positive(d, "tol_dt");
    if (p_int(d, "refinements") < 1 || p_int(d, "refinements") > 6) throw ConfigError("params.refinements must lie in 1..6");
    const int n = int(integer(d, "model", "n"));
    auto dirs = ints(d, "params", "directions");
    if (dirs.empty() || dirs.size() > 3) throw ConfigError("params.directions needs 1..3 basis indices");
    for (long k : dirs)
        if (k < 0 || k >= n) throw ConfigError("params.directions: index out of range");
    point(d, n);
}

void run_bounds(const ConfigData& d, ResultRecord& r) {
    Setup s(d);
    const ModelConstants consts = s.constants();
    const Vec x = point(d, s.model.n());
    SimConfig sc;
    sc.t_end = p_real(d, "t_end");
    sc.master_seed = s.seed;
    sc.record = true;
    sc.min_steps = s.mc.min_steps;
    for (long k : ints(d, "params", "directions")) sc.directions.push_back(s.model.hr_basis(int(k)));
    sc.orders = int(sc.directions.size());
    const double tol = p_real(d, "tol_dt");
    r.info("zeta_R", consts.zeta_R);
    r.info("M", consts.M);

    long prev_exceed = std::numeric_limits<long>::max();
    double prev_excess = INFINITY;
    bool monotone = true;
    Vec dts, excesses;
    for (long l = 0; l < p_int(d, "refinements"); ++l) {
        sc.dt = s.mc.dt / double(1L << l);
        const std::size_t n = std::size_t(s.n_paths);
        std::vector<std::array<double, 3>> ratio(n);
        std::vector<long> viol(n), exceed(n);
        parallel_for(n, [&](std::size_t i) {
            PathBundle b = s.engine.simulate_path(x, sc, i);
            HregReport rep = check_hreg_bounds(b, s.model, consts, tol);
            ratio[i] = rep.max_ratio;
            viol[i] = long(rep.violations.size());
            exceed[i] = long(check_hreg_bounds(b, s.model, consts, 0.0).violations.size());
        });
        std::array<double, 3> mr{};
        long V = 0, E = 0;
        for (std::size_t i = 0; i < n; ++i) {
            for (int o = 0; o < 3; ++o) mr[o] = std::max(mr[o], ratio[i][o]);
            V += viol[i];
            E += exceed[i];
        }
        const std::string lv = "dt=" + num(sc.dt);
        r.at_most(tag("violations", lv), double(V), 0, 0, 0);
        r.info(tag("exceedances", lv), double(E));
        double excess = 0;
        for (int o = 0; o < sc.orders; ++o) {
            r.info(tag("max_ratio_order" + std::to_string(o + 1), lv), mr[o]);
            excess = std::max(excess, mr[o] - 1);
        }
        monotone = monotone && E <= prev_exceed && excess <= prev_excess;
        prev_exceed = E;
        prev_excess = excess;
        dts.push_back(sc.dt);
        excesses.push_back(double(E));
    }
    r.at_least("exceedances_nonincreasing", monotone ? 1 : 0, 0, 1, 0);
    plot(r, "exceedances", "dt", "count", dts, excesses);
}

// ---- martingale -------------------------------------------------------------

void validate_martingale(const ConfigData& d) {
    need_positive(d, "t");
    const int n = int(integer(d, "model", "n"));
    point(d, n);
    basis_index(d, "direction", n);
}

void run_martingale(const ConfigData& d, ResultRecord& r) {
    Setup s(d);
    const Vec x = point(d, s.model.n());
    SimConfig sc;
    sc.t_end = p_real(d, "t");
    sc.dt = s.mc.dt;
    sc.min_steps = s.mc.min_steps;
    sc.master_seed = s.seed;
    sc.orders = 1;
    sc.directions = {s.model.hr_basis(basis_index(d, "direction", s.model.n()))};
    std::vector<double> w(std::size_t(s.n_paths)), gap(w.size()), qv(w.size());
    parallel_for(w.size(), [&](std::size_t i) {
        PathState st;
        s.engine.run(x, sc, i, st);
        w[i] = st.weight1[0];
        qv[i] = st.qv1;
        gap[i] = st.weight1[0] * st.weight1[0] - st.qv1;
    });
    MCEstimate mw = reduce_samples(w, s.seed, sc.t_end);
    MCEstimate mg = reduce_samples(gap, s.seed, sc.t_end);
    MCEstimate mq = reduce_samples(qv, s.seed, sc.t_end);
    r.abs("weight1_mean", mw.value, mw.std_error, 0, 3 * mw.std_error);
    r.abs("isometry_gap", mg.value, mg.std_error, 0, 3 * mg.std_error);
    r.info("quadratic_variation_mean", mq.value, mq.std_error);
}

// ---- bel-oracle ---------------------------------------------------------------

const char* const kBelEstimators[] = {"pt", "d1", "d1_smooth", "d2", "d2_smooth", "d3"};

void validate_bel(const ConfigData& d) {
    need_zero_g(d, "bel-oracle");
    need_unit_noise(d);
    need_times(d, "times");
    need_positive(d, "dt_first_order");
    need_positive(d, "omega");
    point(d, int(integer(d, "model", "n")));
    if (integer(d, "model", "n") < 3) throw ConfigError("bel-oracle uses directions in the first three modes: model.n >= 3");
    for (const auto& e : strs(d, "params", "estimators")) {
        bool ok = false;
        for (const char* k : kBelEstimators) ok = ok || e == k;
        if (!ok) throw ConfigError("params.estimators: unknown estimator '" + e + "'");
    }
    if (p_int(d, "n_outer") < 2 || p_int(d, "n_outer_d3") < 2) throw ConfigError("params.n_outer must be at least 2");
    if (p_int(d, "n_inner_d2") < 2 || p_int(d, "n_inner_d3") < 2) throw ConfigError("params.n_inner_* must be at least 2");
}

void run_bel(const ConfigData& d, ResultRecord& r) {
    Setup s(d);
    const SpectralModel& m = s.model;
    const double omega = p_real(d, "omega");
    const ScalarField f = make_field(sin_spec(omega), m);
    const Vec x = point(d, m.n());
    // h = r1 e1, k = (r1 e1 + r2 e2)/sqrt2, j = 0.8 r1 e1 + 0.6 r3 e3
    const Vec h = m.hr_basis(0);
    Vec k(std::size_t(m.n()), 0.0), j(std::size_t(m.n()), 0.0);
    k[0] = m.r()[0] / std::sqrt(2.0);
    k[1] = m.r()[1] / std::sqrt(2.0);
    j[0] = 0.8 * m.r()[0];
    j[2] = 0.6 * m.r()[2];
    const double c1[3] = {h[0], k[0], j[0]};
    McContext fine = s.mc;
    fine.dt = p_real(d, "dt_first_order");
    const long n = p_int(d, "n_outer"), n3 = p_int(d, "n_outer_d3");
    const long i2 = p_int(d, "n_inner_d2"), i3 = p_int(d, "n_inner_d3");
    const Vec times = reals(d, "params", "times");
    const auto ests = strs(d, "params", "estimators");
    for (std::size_t ei = 0; ei < ests.size(); ++ei) {
        const std::string& e = ests[ei];
        for (std::size_t ti = 0; ti < times.size(); ++ti) {
            const double t = times[ti];
            const std::uint64_t sd = derive_seed(s.seed, ei, ti);
            const OuFirstMode ou(m, t, x[0]);
            MCEstimate est;
            int order = 0;
            if (e == "pt") {
                est = estimate_pt(fine, f, t, x, n, sd);
            } else if (e == "d1") {
                est = bel_d1(fine, f, t, x, h, n, sd);
                order = 1;
            } else if (e == "d1_smooth") {
                est = bel_d1_smooth(fine, f, t, x, h, n, sd);
                order = 1;
            } else if (e == "d2") {
                est = bel_d2(s.mc, f, t, x, h, k, n, i2, sd);
                order = 2;
            } else if (e == "d2_smooth") {
                est = bel_d2_smooth(s.mc, f, t, x, h, k, n, sd);
                order = 2;
            } else {
                est = bel_d3(s.mc, f, t, x, h, k, j, n3, i3, sd);
                order = 3;
            }
            const double oracle = ou.derivative(omega, order, c1);
            r.abs(tag(e, "t=" + num(t)), est.value, est.std_error, oracle, 3 * est.std_error);
        }
    }
}

// ---- decay --------------------------------------------------------------------

DecayEstimator decay_estimator(const std::string& s) {
    if (s == "d1") return DecayEstimator::D1;
    if (s == "d2") return DecayEstimator::D2;
    if (s == "d3") return DecayEstimator::D3;
    if (s == "d1_smooth") return DecayEstimator::D1Smooth;
    if (s == "d2_smooth") return DecayEstimator::D2Smooth;
    throw ConfigError("params.estimator '" + s + "' is not one of: d1, d2, d3, d1_smooth, d2_smooth");
}

void validate_decay(const ConfigData& d) {
    need_field(d, "field");
    decay_estimator(p_str(d, "estimator"));
    need_positive(d, "t_min");
    if (!(p_real(d, "t_max") > p_real(d, "t_min"))) throw ConfigError("params.t_max must exceed params.t_min");
    if (p_int(d, "n_times") < 4) throw ConfigError("params.n_times must be at least 4 for a fit");
    need_positive(d, "tolerance");
    const int n = int(integer(d, "model", "n"));
    point(d, n);
    basis_index(d, "direction", n);
    need_unit_noise(d);
}

void run_decay(const ConfigData& d, ResultRecord& r) {
    Setup s(d);
    const ScalarField f = make_field(p_str(d, "field"), s.model);
    DecaySpec sp;
    sp.estimator = decay_estimator(p_str(d, "estimator"));
    sp.points = {point(d, s.model.n())};
    sp.directions = {s.model.hr_basis(basis_index(d, "direction", s.model.n()))};
    sp.times = logspace(p_real(d, "t_min"), p_real(d, "t_max"), p_int(d, "n_times"));
    sp.n_outer = s.n_paths;
    sp.n_inner = s.n_inner;
    sp.seed = s.seed;
    RateFit fit = fit_decay_rate(s.mc, f, sp);
    long used = 0;
    for (bool u : fit.used) used += u;
    boost::math::students_t dist(double(used - 2));
    const double se = fit.slope_ci / boost::math::quantile(boost::math::complement(dist, 0.025));
    r.abs("slope", fit.slope, se, p_real(d, "target_slope"), p_real(d, "tolerance"));
    r.info("slope_ci95", fit.slope_ci);
    r.info("fit_rms_residual", fit.residual);
    r.info("points_used", double(used));
    r.fits.push_back({"decay", fit});
    Vec tx, vy;
    for (std::size_t i = 0; i < fit.times.size(); ++i)
        if (fit.used[i]) {
            tx.push_back(fit.times[i]);
            vy.push_back(fit.values[i]);
        }
    plot(r, "decay", "t", "sup_ratio", tx, vy);
}

// ---- envelope -----------------------------------------------------------------

void validate_ll(const ConfigData& d) {
    need_field(d, "field");
    const double a = p_real(d, "alpha");
    if (!(a > 0 && a < 1)) throw ConfigError("params.alpha must lie in (0,1)");
    if (p_int(d, "probe_levels") < 1) throw ConfigError("params.probe_levels must be positive");
    need_positive(d, "probe_min");
}

void validate_envelope(const ConfigData& d) {
    validate_ll(d);
    need_positive(d, "eps_min");
    if (!(p_real(d, "eps_max") > p_real(d, "eps_min"))) throw ConfigError("params.eps_max must exceed params.eps_min");
    if (p_int(d, "n_eps") < 4) throw ConfigError("params.n_eps must be at least 4");
    need_positive(d, "brute_eps");
    need_positive(d, "brute_step");
}

EnvelopeConfig envelope_base(const ConfigData& d) {
    EnvelopeConfig c;
    c.subspace_dims = int(p_int(d, "subspace_dims"));
    return c;
}

// sup_h inf_k f(x + h - k) + |k|^2/(2 eps) - |h|^2/eps on a grid aligned with x
double brute_envelope_1d(const ScalarField& f, double x, double eps, double step) {
    const double R = 3 * std::sqrt(eps * std::max(f.sup_bound, 1e-12));
    const long m = long(std::ceil(R / step));
    double best = -INFINITY;
    for (long a = -m; a <= m; ++a) {
        const double h = double(a) * step;
        double inf = INFINITY;
        for (long b = -m; b <= m; ++b) {
            const double k = double(b) * step, y = x + h - k;
            inf = std::min(inf, f.eval(&y) + k * k / (2 * eps));
        }
        best = std::max(best, inf - h * h / eps);
    }
    return best;
}

void run_envelope(const ConfigData& d, ResultRecord& r) {
    const SpectralModel model(model_params(d));
    const double alpha = p_real(d, "alpha");
    const ScalarField f = make_field(p_str(d, "field"), model);
    const EnvelopeConfig base = envelope_base(d);

    // one mode with r_1 = 1: the envelope is a plain 1-d sup-inf convolution
    SpectralModel::Params p1;
    p1.n = 1;
    p1.q_eigs = {1.0};
    const SpectralModel m1(p1);
    const ScalarField f1 = make_field(p_str(d, "field"), m1);
    const Vec bx = reals(d, "params", "brute_points");
    Vec diffs(bx.size());
    EnvelopeConfig c1;
    c1.epsilon = p_real(d, "brute_eps");
    c1.subspace_dims = 1;
    parallel_for(bx.size(), [&](std::size_t i) {
        const double ll = ll_regularize(f1, Vec{bx[i]}, c1, m1).value;
        diffs[i] = std::abs(ll - brute_envelope_1d(f1, bx[i], c1.epsilon, p_real(d, "brute_step")));
    });
    r.at_most("brute_force_max_diff", diffs.empty() ? 0 : *std::max_element(diffs.begin(), diffs.end()), 0, 0, 2e-3);

    const auto probe = envelope_probe_points(model, int(p_int(d, "probe_levels")), p_real(d, "probe_min"));
    const Vec eps = logspace(p_real(d, "eps_min"), p_real(d, "eps_max"), p_int(d, "n_eps"));
    LLBoundsReport rep = verify_ll_bounds(f, eps, probe, base, model);
    // the optimiser reaches f - f_eps = 0 only up to rounding
    r.at_least("min_gap", rep.min_gap, 0, 0, 1e-10);
    r.at_most("sup_excess", rep.max_excess, 0, 0, 1e-10);
    r.abs("error_slope", rep.err_slope, rep.err_slope_ci / 1.96, alpha / (2 - alpha), 0.1);
    r.abs("gradient_slope", rep.grad_slope, rep.grad_slope_ci / 1.96, (alpha - 1) / (2 - alpha), 0.1);
    r.at_least("radii_dominate", rep.radii_dominate ? 1 : 0, 0, 1, 0);
    r.info("c_alpha", rep.c_alpha);
    r.info("boundary_warning", rep.boundary_warning ? 1 : 0);
    plot(r, "error", "eps", "sup_gap", rep.epsilons, rep.err_sup);
    plot(r, "gradient", "eps", "sup_grad", rep.epsilons, rep.grad_sup);
}

// ---- interp ---------------------------------------------------------------------

void validate_interp(const ConfigData& d) {
    validate_ll(d);
    need_field(d, "sine_field");
    for (const char* k : {"r_exps", "sine_r_exps"})
        for (long e : ints(d, "params", k))
            if (e < 0 || e > 20) throw ConfigError(std::string("params.") + k + ": exponents must lie in 0..20");
}

void run_interp(const ConfigData& d, ResultRecord& r) {
    const SpectralModel model(model_params(d));
    const double alpha = p_real(d, "alpha");
    const ScalarField f = make_field(p_str(d, "field"), model);
    const EnvelopeConfig base = envelope_base(d);
    const auto probe = envelope_probe_points(model, int(p_int(d, "probe_levels")), p_real(d, "probe_min"));
    Vec rs, ratio;
    double worst = -INFINITY;
    for (long e : ints(d, "params", "r_exps")) {
        const double rr = std::ldexp(1.0, -int(e));
        KFunctionalResult k = k_functional(f, rr, alpha, probe, base, model);
        rs.push_back(rr);
        ratio.push_back(k.bound / std::pow(rr, alpha));
        worst = std::max(worst, k.bound - std::min(k.trivial_a, k.trivial_b));
        r.info(tag("scaled_bound", "r=" + num(rr)), ratio.back());
    }
    const double hi = *std::max_element(ratio.begin(), ratio.end()), lo = *std::min_element(ratio.begin(), ratio.end());
    r.at_most("scaled_bound_spread", lo > 0 ? hi / lo : INFINITY, 0, 3, 0);
    r.at_most("bound_over_trivial", worst, 0, 0, 0);
    r.info("fitted_constant", hi);
    plot(r, "scaled_bound", "r", "bound_over_r_alpha", rs, ratio);

    // on a class-X field the constructive split costs at most the envelope error
    // over the split (a, b) = (0, f)
    const ScalarField sf = make_field(p_str(d, "sine_field"), model);
    double excess = -INFINITY;
    for (long e : ints(d, "params", "sine_r_exps")) {
        const double rr = std::ldexp(1.0, -int(e));
        KFunctionalResult k = k_functional(sf, rr, alpha, probe, base, model);
        excess = std::max(excess, k.decomposition - k.err_sup - k.trivial_b);
        r.info(tag("sine_decomposition", "r=" + num(rr)), k.decomposition);
    }
    r.at_most("sine_split_excess", excess, 0, 0, 1e-9);
}

// ---- resolvent ----------------------------------------------------------------

void validate_quadrature(const ConfigData& d) {
    need_lambda(d);
    if (p_int(d, "n_nodes") < 1) throw ConfigError("params.n_nodes must be positive");
    if (!(p_real(d, "grading") >= 1)) throw ConfigError("params.grading must be >= 1");
    const double kp = p_real(d, "kappa");
    if (!(kp >= 0 && kp < 1)) throw ConfigError("params.kappa must lie in [0,1)");
    if (p_real(d, "t_cut") < 0) throw ConfigError("params.t_cut must be >= 0 (0 = automatic)");
    need_positive(d, "error_budget");
}

QuadratureScheme quadrature(const ConfigData& d, const Setup& s, const ScalarField& f) {
    return make_quadrature(p_real(d, "lambda"), s.constants().zeta_R, int(p_int(d, "n_nodes")), p_real(d, "grading"),
                           f.sup_bound, p_real(d, "t_cut"), p_real(d, "kappa"));
}

SolverParams solver_params(const ConfigData& d, const Setup& s, long n_paths, std::uint64_t seed) {
    SolverParams p;
    p.n_paths = n_paths;
    p.n_inner = s.n_inner;
    p.n_nodes = int(p_int(d, "n_nodes"));
    p.seed = seed;
    p.error_budget = p_real(d, "error_budget");
    return p;
}

std::vector<std::string> field_list(const ConfigData& d, const char* key) {
    auto v = strs(d, "params", key);
    if (v.size() == 1 && v[0] == "catalog") {
        v.clear();
        for (const auto& e : builtin_fields()) v.push_back(e.spec);
    }
    return v;
}

void validate_resolvent(const ConfigData& d) {
    validate_quadrature(d);
    SpectralModel m(model_params(d));
    for (const char* k : {"split_fields", "contract_fields"})
        for (const auto& s : field_list(d, k)) make_field(s, m);
    for (double t : reals(d, "params", "taus"))
        if (!(t > 0)) throw ConfigError("params.taus must be positive");
    if (p_int(d, "contract_paths") < 2) throw ConfigError("params.contract_paths must be at least 2");
    point(d, m.n());
}

void run_resolvent(const ConfigData& d, ResultRecord& r) {
    Setup s(d);
    const Vec x = point(d, s.model.n());
    const double lambda = p_real(d, "lambda");
    const Vec taus = reals(d, "params", "taus");
    bool first = true;
    const auto split = field_list(d, "split_fields");
    for (std::size_t fi = 0; fi < split.size(); ++fi) {
        const ScalarField f = make_field(split[fi], s.model);
        const QuadratureScheme q = quadrature(d, s, f);
        if (first) {
            r.at_most("quadrature_exactness", q.exactness_error(), 0, 0, 1e-6);
            r.info("t_cut", q.t_cut);
            r.info("tail_caveat", q.tail_caveat ? 1 : 0);
            first = false;
        }
        auto res = resolvent_split(s.mc, f, x, taus, q, solver_params(d, s, s.n_paths, derive_seed(s.seed, 1, fi)));
        for (const SplitResult& sr : res) {
            const double se = std::hypot(sr.lhs.std_error, sr.rhs.std_error);
            r.abs(tag("split", split[fi] + ";tau=" + num(sr.tau)), sr.lhs.value - sr.rhs.value, se, 0, 3 * se);
        }
        r.info(tag("u", split[fi]), res.front().lhs.value, res.front().lhs.std_error);
    }
    const auto contract = field_list(d, "contract_fields");
    for (std::size_t fi = 0; fi < contract.size(); ++fi) {
        const ScalarField f = make_field(contract[fi], s.model);
        const QuadratureScheme q = quadrature(d, s, f);
        MCEstimate u = resolvent(s.mc, f, x, q, solver_params(d, s, p_int(d, "contract_paths"), derive_seed(s.seed, 2, fi)));
        // 1e-12: summed weights can land an ulp above (1 - e^{-lambda t_cut}) / lambda
        r.at_most(tag("contractivity", contract[fi]), std::abs(u.value), u.std_error,
                  f.sup_bound / lambda + q.tail_bound, 3 * u.std_error + 1e-12);
    }
    // constants: every sample is c (1 - e^{-lambda t_cut}) / lambda
    const ScalarField c = make_field("const:c=1", s.model);
    const QuadratureScheme qc = quadrature(d, s, c);
    MCEstimate uc = resolvent(s.mc, c, x, qc, solver_params(d, s, 8, derive_seed(s.seed, 3)));
    r.at_most("constant_field_error", std::abs(uc.value - 1 / lambda), 0, qc.tail_bound, 1e-12);
}

// ---- evolve -----------------------------------------------------------------------

void validate_evolve(const ConfigData& d) {
    need_positive(d, "t");
    need_positive(d, "omega");
    if (p_int(d, "n_nodes") < 1) throw ConfigError("params.n_nodes must be positive");
    point(d, int(integer(d, "model", "n")));
    need_unit_noise(d);
}

void run_evolve(const ConfigData& d, ResultRecord& r) {
    Setup s(d);
    const Vec x = point(d, s.model.n());
    const double t = p_real(d, "t"), omega = p_real(d, "omega"), gc = p_real(d, "g_const");
    const int J = int(p_int(d, "n_nodes"));
    const ScalarField f = make_field(sin_spec(omega), s.model);

    const TimeField zero = constant_time_field(0.0);
    MCEstimate v0 = evolve(s.mc, f, &zero, t, x, J, s.n_paths, s.seed);
    MCEstimate pt = estimate_pt(s.mc, f, t, x, s.n_paths, s.seed);
    r.at_most("g_zero_vs_pt", std::abs(v0.value - pt.value), 0, 0, 0);

    const ScalarField f0 = make_field("const:c=0", s.model);
    const TimeField g = constant_time_field(gc);
    MCEstimate vc = evolve(s.mc, f0, &g, t, x, J, 8, derive_seed(s.seed, 1));
    r.at_most("constant_source_error", std::abs(vc.value - gc * t), 0, 0, 1e-12 * (1 + std::abs(gc * t)));

    if (s.g->is_zero()) {
        const OuFirstMode ou(s.model, t, x[0]);
        const Vec h = s.model.hr_basis(0);
        const double c1[2] = {h[0], h[0]};
        r.abs("value_vs_closed_form", v0.value, v0.std_error, ou.derivative(omega, 0, c1), 3 * v0.std_error);
        MCEstimate d2 = evolve_d2(s.mc, f, nullptr, t, x, h, h, J, s.n_paths, s.n_inner, derive_seed(s.seed, 2));
        r.abs("d2_vs_closed_form", d2.value, d2.std_error, ou.derivative(omega, 2, c1), 3 * d2.std_error);
    } else {
        r.notes.push_back("closed-form checks skipped: nonlinearity is not zero");
    }
}

// ---- schauder / zygmund -------------------------------------------------------

void validate_stability(const ConfigData& d) {
    validate_quadrature(d);
    need_field(d, "field");
    need_unit_noise(d);
    const int n = int(integer(d, "model", "n"));
    point(d, n);
    Vec sc = reals(d, "params", "scales");
    if (sc.size() < 3) throw ConfigError("params.scales needs at least 3 dyadic scales");
    for (std::size_t i = 0; i < sc.size(); ++i)
        if (!(sc[i] > 0) || (i && !(sc[i] < sc[i - 1]))) throw ConfigError("params.scales must be positive and decreasing");
    const double ca = p_real(d, "control_alpha");
    if (!(ca > 0 && ca < 1)) throw ConfigError("params.control_alpha must lie in (0,1)");
}

void validate_schauder(const ConfigData& d) {
    validate_stability(d);
    const double a = p_real(d, "alpha");
    if (!(a > 0 && a < 1)) throw ConfigError("params.alpha must lie in (0,1)");
    basis_index(d, "direction", int(integer(d, "model", "n")));
}

void validate_zygmund(const ConfigData& d) {
    validate_stability(d);
    const long k = p_int(d, "frame_dims");
    if (k < 1 || k > std::min<long>(3, integer(d, "model", "n"))) throw ConfigError("params.frame_dims must lie in 1..min(3,n)");
    basis_index(d, "direction", int(integer(d, "model", "n")));
}

void report_stability(ResultRecord& r, const StabilityReport& rep, const char* primary, const char* control) {
    for (std::size_t i = 0; i < rep.scales.size(); ++i) {
        const std::string sc = "scale=" + num(rep.scales[i]);
        r.info(tag(primary, sc), rep.primary.quotients[i], rep.primary.noise[i]);
        r.info(tag(control, sc), rep.control.quotients[i], rep.control.noise[i]);
    }
    r.at_most(std::string(primary) + "_spread", rep.primary.spread, 0, 2, 0);
    r.at_least(std::string(primary) + "_stable", rep.primary.stable ? 1 : 0, 0, 1, 0);
    r.at_least(std::string(control) + "_diverging", rep.control.diverging ? 1 : 0, 0, 1, 0);
    r.info(std::string(control) + "_spread", rep.control.spread);
    r.info("sup_u", rep.sup_u);
    r.info("sup_du", rep.sup_du);
    r.info("sup_d2u", rep.sup_d2u);
    r.info("fitted_C", rep.fitted_C);
    r.info("lambda_caveat", rep.lambda_caveat ? 1 : 0);
    r.plots.push_back({primary, "scale", "quotient", rep.scales, rep.primary.quotients});
    r.plots.push_back({control, "scale", "quotient", rep.scales, rep.control.quotients});
}

void run_schauder(const ConfigData& d, ResultRecord& r) {
    Setup s(d);
    const ScalarField f = make_field(p_str(d, "field"), s.model);
    StabilityProbe probe;
    probe.points = {point(d, s.model.n())};
    probe.directions = {s.model.hr_basis(basis_index(d, "direction", s.model.n()))};
    probe.scales = reals(d, "params", "scales");
    auto rep = schauder_probe(s.mc, f, probe, p_real(d, "alpha"), p_real(d, "control_alpha"), quadrature(d, s, f),
                              solver_params(d, s, s.n_paths, s.seed));
    report_stability(r, rep, "holder_quotient", "control_quotient");
}

void run_zygmund(const ConfigData& d, ResultRecord& r) {
    Setup s(d);
    const ScalarField f = make_field(p_str(d, "field"), s.model);
    StabilityProbe probe;
    probe.points = {point(d, s.model.n())};
    probe.directions = {s.model.hr_basis(basis_index(d, "direction", s.model.n()))};
    probe.scales = reals(d, "params", "scales");
    auto rep = zygmund_probe(s.mc, f, probe, int(p_int(d, "frame_dims")), p_real(d, "control_alpha"),
                             quadrature(d, s, f), solver_params(d, s, s.n_paths, s.seed));
    report_stability(r, rep, "zygmund_quotient", "control_quotient");
}

// ---- schvar -----------------------------------------------------------------------

void validate_schvar(const ConfigData& d) {
    validate_quadrature(d);
    need_zero_g(d, "schvar");
    need_unit_noise(d);
    need_field(d, "field");
    if (p_int(d, "lattice") < 2) throw ConfigError("params.lattice must be at least 2");
    need_positive(d, "half_width");
    const long k = p_int(d, "frame_dims");
    if (k < 1 || k > std::min<long>(3, integer(d, "model", "n"))) throw ConfigError("params.frame_dims must lie in 1..min(3,n)");
    if (p_int(d, "max_iters") < 1) throw ConfigError("params.max_iters must be positive");
    need_positive(d, "tol");
    if (p_int(d, "rate_from") < 0) throw ConfigError("params.rate_from must be >= 0");
    need_positive(d, "rate_tolerance");
    if (p_int(d, "check_paths") < 2) throw ConfigError("params.check_paths must be at least 2");
}

void run_schvar(const ConfigData& d, ResultRecord& r) {
    Setup s(d);
    const SpectralModel& m = s.model;
    const ScalarField f = make_field(p_str(d, "field"), m);
    SchvarConfig sc;
    sc.lattice = int(p_int(d, "lattice"));
    sc.half_width = p_real(d, "half_width");
    sc.frame_dims = int(p_int(d, "frame_dims"));
    sc.max_iters = int(p_int(d, "max_iters"));
    sc.tol = p_real(d, "tol");
    Vec v = m.hr_basis(0);
    for (double& e : v) e *= p_real(d, "delta");
    const VectorField F = constant_vector_field(v, m);
    const QuadratureScheme q = quadrature(d, s, f);

    SchvarResult res = schvar_solve(s.mc, F, f, sc, q, solver_params(d, s, s.n_paths, s.seed));
    r.at_most("contraction", res.contraction, 0, 1, 0);
    r.at_least("converged", res.converged ? 1 : 0, 0, 1, 0);
    r.info("iterations", res.iterations);
    const std::size_t from = std::size_t(p_int(d, "rate_from"));
    Vec late(res.rates.begin() + std::min(from, res.rates.size()), res.rates.end());
    double spread = INFINITY;
    if (!late.empty()) {
        const double med = median(late);
        spread = 0;
        for (double x : late) spread = std::max(spread, std::abs(x / med - 1));
        r.info("rate_median", med);
    }
    r.at_most("rate_spread", spread, 0, 0, p_real(d, "rate_tolerance"));
    r.at_most("residual", res.residual, res.residual_sigma, 0, 3 * res.residual_sigma);
    Vec it;
    for (std::size_t i = 0; i < res.trace.size(); ++i) it.push_back(double(i + 1));
    plot(r, "trace", "iteration", "sup_step", it, res.trace);

    // F = 0: one step gives f and the operator is never sampled
    const VectorField F0 = constant_vector_field(Vec(std::size_t(m.n()), 0.0), m);
    SchvarResult z = schvar_solve(s.mc, F0, f, sc, q, solver_params(d, s, 2, s.seed));
    double dz = 0;
    for (std::size_t k = 0; k < z.psi.size(); ++k) dz = std::max(dz, std::abs(z.psi[k] - z.f_values[k]));
    r.at_most("zero_drift_psi_minus_f", dz, 0, 0, 0);
    r.at_most("zero_drift_residual", z.residual, 0, 0, 0);

    // T kills constants, so psi = c
    const ScalarField c = make_field("const:c=1", m);
    SchvarResult cr = schvar_solve(s.mc, F, c, sc, quadrature(d, s, c),
                                   solver_params(d, s, p_int(d, "check_paths"), derive_seed(s.seed, 7)));
    double dc = 0;
    for (double p : cr.psi) dc = std::max(dc, std::abs(p - 1));
    r.at_most("constant_psi_error", dc, 0, 0, 1e-12);
}

// ---- determinism --------------------------------------------------------------

void validate_determinism(const ConfigData& d) {
    need_zero_g(d, "determinism");
    auto th = ints(d, "params", "threads");
    if (th.size() < 2) throw ConfigError("params.threads needs at least two worker counts");
    for (long t : th)
        if (t < 1 || t > 256) throw ConfigError("params.threads: counts must lie in 1..256");
}

void run_determinism(const ConfigData& d, ResultRecord& r) {
    Setup s(d);
    const ScalarField f = make_field("holder:alpha=0.5", s.model);
    Vec x(std::size_t(s.model.n()), 0.0);
    x[0] = 0.3;
    const Vec h = s.model.hr_basis(0);
    const QuadratureScheme q = make_quadrature(2.0, 0.0, 8, 2.0, f.sup_bound);
    SolverParams sp;
    sp.n_paths = 200;
    sp.seed = s.seed;
    auto batch = [&] {
        Vec out;
        for (const MCEstimate& e : {estimate_pt(s.mc, f, 0.5, x, 2000, s.seed), bel_d1(s.mc, f, 0.5, x, h, 2000, s.seed),
                                    bel_d2(s.mc, f, 0.5, x, h, h, 300, 4, s.seed), resolvent(s.mc, f, x, q, sp)}) {
            out.push_back(e.value);
            out.push_back(e.std_error);
        }
        return out;
    };
    const int saved = threads();
    Vec ref;
    double worst = 0;
    for (long t : ints(d, "params", "threads")) {
        set_threads(int(t));
        Vec v = batch();
        if (ref.empty()) ref = v;
        for (std::size_t i = 0; i < v.size(); ++i)
            worst = std::max(worst, v[i] == ref[i] ? 0.0 : std::max(std::abs(v[i] - ref[i]), 1e-300));
    }
    set_threads(saved);
    r.at_most("max_abs_difference", worst, 0, 0, 0);
}

}  // namespace

const std::vector<KindSpec>& kinds() {
    static const std::vector<KindSpec> k = {
        {"bounds",
         {{"t_end", Ty::Real, "2"},
          {"refinements", Ty::Int, "3"},
          {"tol_dt", Ty::Real, "0.02"},
          {"point", Ty::Reals, "[0.5, -0.3]"},
          {"directions", Ty::Ints, "[0, 1, 2]"}},
         validate_bounds, run_bounds},
        {"martingale",
         {{"t", Ty::Real, "1"}, {"point", Ty::Reals, "[0.5, -0.3]"}, {"direction", Ty::Int, "0"}},
         validate_martingale, run_martingale},
        {"bel-oracle",
         {{"omega", Ty::Real, "1"},
          {"point", Ty::Reals, "[0.3, -0.2]"},
          {"times", Ty::Reals, "[0.1, 0.5, 1]"},
          {"estimators", Ty::Strs, "[pt, d1, d1_smooth, d2, d2_smooth, d3]"},
          {"n_outer", Ty::Int, "100000"},
          {"n_outer_d3", Ty::Int, "10000"},
          {"n_inner_d2", Ty::Int, "32"},
          {"n_inner_d3", Ty::Int, "16"},
          {"dt_first_order", Ty::Real, "0.0025"}},
         validate_bel, run_bel},
        {"decay",
         {{"field", Ty::Str, "lacunary:alpha=0"},
          {"estimator", Ty::Str, "d1"},
          {"t_min", Ty::Real, "0.001"},
          {"t_max", Ty::Real, "0.1"},
          {"n_times", Ty::Int, "9"},
          {"point", Ty::Reals, "[]"},
          {"direction", Ty::Int, "0"},
          {"target_slope", Ty::Real, "-0.5"},
          {"tolerance", Ty::Real, "0.15"}},
         validate_decay, run_decay},
        {"envelope",
         {{"field", Ty::Str, "holder:alpha=0.5"},
          {"alpha", Ty::Real, "0.5"},
          {"eps_min", Ty::Real, "0.001"},
          {"eps_max", Ty::Real, "0.1"},
          {"n_eps", Ty::Int, "9"},
          {"subspace_dims", Ty::Int, "1"},
          {"probe_levels", Ty::Int, "48"},
          {"probe_min", Ty::Real, "0.0001"},
          {"brute_eps", Ty::Real, "0.1"},
          {"brute_step", Ty::Real, "0.001"},
          {"brute_points", Ty::Reals, "[0, 0.05, 0.3, -0.7]"}},
         validate_envelope, run_envelope},
        {"interp",
         {{"field", Ty::Str, "holder:alpha=0.5"},
          {"alpha", Ty::Real, "0.5"},
          {"subspace_dims", Ty::Int, "1"},
          {"probe_levels", Ty::Int, "48"},
          {"probe_min", Ty::Real, "0.0001"},
          {"r_exps", Ty::Ints, "[0, 1, 2, 3, 4, 5, 6]"},
          {"sine_field", Ty::Str, "sin:omega=1"},
          {"sine_r_exps", Ty::Ints, "[0, 2, 4, 6]"}},
         validate_interp, run_interp},
        {"resolvent",
         {{"lambda", Ty::Real, "2"},
          {"n_nodes", Ty::Int, "24"},
          {"grading", Ty::Real, "3"},
          {"kappa", Ty::Real, "0"},
          {"t_cut", Ty::Real, "0"},
          {"error_budget", Ty::Real, "0.001"},
          {"point", Ty::Reals, "[0.3, -0.2]"},
          {"taus", Ty::Reals, "[0.25, 0.5, 1]"},
          {"split_fields", Ty::Strs, "['holder:alpha=0.5', 'sin:omega=1', 'ramp:width=0.05']"},
          {"contract_fields", Ty::Strs, "[catalog]"},
          {"contract_paths", Ty::Int, "1000"}},
         validate_resolvent, run_resolvent},
        {"evolve",
         {{"t", Ty::Real, "1"},
          {"omega", Ty::Real, "1"},
          {"g_const", Ty::Real, "1"},
          {"n_nodes", Ty::Int, "16"},
          {"point", Ty::Reals, "[0.3, -0.2]"}},
         validate_evolve, run_evolve},
        {"schauder",
         {{"lambda", Ty::Real, "2"},
          {"field", Ty::Str, "holder:alpha=0.5"},
          {"alpha", Ty::Real, "0.5"},
          {"control_alpha", Ty::Real, "0.9"},
          {"scales", Ty::Reals, "[0.5, 0.125, 0.03125]"},
          {"n_nodes", Ty::Int, "32"},
          {"grading", Ty::Real, "4"},
          {"kappa", Ty::Real, "0.75"},
          {"t_cut", Ty::Real, "0"},
          {"error_budget", Ty::Real, "0.001"},
          {"point", Ty::Reals, "[]"},
          {"direction", Ty::Int, "0"}},
         validate_schauder, run_schauder},
        {"zygmund",
         {{"lambda", Ty::Real, "2"},
          {"field", Ty::Str, "ramp2:width=0.01"},
          {"control_alpha", Ty::Real, "0.99"},
          {"scales", Ty::Reals, "[0.5, 0.125, 0.03125]"},
          {"frame_dims", Ty::Int, "2"},
          {"n_nodes", Ty::Int, "32"},
          {"grading", Ty::Real, "4"},
          {"kappa", Ty::Real, "0.5"},
          {"t_cut", Ty::Real, "0"},
          {"error_budget", Ty::Real, "0.001"},
          {"point", Ty::Reals, "[]"},
          {"direction", Ty::Int, "0"}},
         validate_zygmund, run_zygmund},
        {"schvar",
         {{"lambda", Ty::Real, "2"},
          {"delta", Ty::Real, "0.05"},
          {"field", Ty::Str, "holder:alpha=0.5"},
          {"n_nodes", Ty::Int, "16"},
          {"grading", Ty::Real, "2"},
          {"kappa", Ty::Real, "0.5"},
          {"t_cut", Ty::Real, "0"},
          {"error_budget", Ty::Real, "0.001"},
          {"lattice", Ty::Int, "5"},
          {"half_width", Ty::Real, "1.5"},
          {"frame_dims", Ty::Int, "2"},
          {"max_iters", Ty::Int, "30"},
          {"tol", Ty::Real, "1e-12"},
          {"rate_from", Ty::Int, "2"},
          {"rate_tolerance", Ty::Real, "0.2"},
          {"check_paths", Ty::Int, "200"}},
         validate_schvar, run_schvar},
        {"determinism", {{"threads", Ty::Ints, "[1, 2, 3]"}}, validate_determinism, run_determinism},
    };
    return k;
}

const KindSpec* find_kind(const std::string& name) {
    for (const auto& k : kinds())
        if (name == k.name) return &k;
    return nullptr;
}

}  // namespace detail

std::vector<std::string> experiment_kinds() {
    std::vector<std::string> v;
    for (const auto& k : detail::kinds()) v.push_back(k.name);
    return v;
}

ResultRecord run_experiment(const ExperimentConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    ResultRecord r;
    r.experiment = cfg.name();
    r.kind = cfg.kind();
    r.config_hash = cfg.hash();
    r.input_hash = cfg.input_hash();
    r.resolved_config = cfg.dump();
    r.seed = cfg.seed();
    detail::find_kind(cfg.kind())->run(cfg.data(), r);
    r.wall_clock = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

}  // namespace spdelab

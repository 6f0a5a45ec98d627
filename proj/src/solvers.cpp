// SPDX-License-Identifier: Apache-2.0
#include "spdelab/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/special_functions/gamma.hpp>

#include "spdelab/errors.hpp"
#include "spdelab/parallel.hpp"
#include "spdelab/rng.hpp"

namespace spdelab {

namespace {

constexpr std::uint64_t kSplitLhs = 0x50, kSplitPath = 0x51, kSplitShift = 0x52, kSplitHead = 0x53;
constexpr std::uint64_t kSchvarPrime = 0x7B, kProbeU = 0x60, kProbeDu = 0x61;

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

ScalarField centred(const ScalarField& f, double c) {
    ScalarField g = f;
    auto base = f.eval;
    g.eval = [base, c](const double* y) { return base(y) - c; };
    return g;
}

Vec shifted(const Vec& x, const Vec& h, double s) {
    Vec y(x);
    for (std::size_t k = 0; k < y.size(); ++k) y[k] += s * h[k];
    return y;
}

void require_lambda(const QuadratureScheme& q) {
    if (!(q.lambda > 0) || !std::isfinite(q.lambda))
        throw ConfigError("lambda must be positive: the resolvent integral int e^{-lambda s} P(s) f ds needs lambda > 0");
    if (q.nodes.empty()) throw ConfigError("quadrature scheme has no nodes");
}

void require_tail(const QuadratureScheme& q, const SolverParams& p) {
    if (q.tail_bound > p.error_budget)
        throw ConfigError("quadrature tail " + std::to_string(q.tail_bound) + " exceeds the error budget " +
                          std::to_string(p.error_budget) + "; raise t_cut");
}

// int_a^b s^{-kappa} e^{-lambda s} ds, 0 < kappa < 1
double singular_cell(double lambda, double kappa, double a, double b) {
    const double p = 1 - kappa;
    auto lower = [&](double v) { return v > 0 ? boost::math::tgamma_lower(p, lambda * v) : 0.0; };
    return std::pow(lambda, kappa - 1) * (lower(b) - lower(a));
}

QuadratureScheme build_scheme(double lambda, double t_cut, int J, double grading, double kappa) {
    if (J < 1) throw ConfigError("quadrature needs at least one node");
    if (!(kappa >= 0 && kappa < 1)) throw ConfigError("quadrature singularity exponent must lie in [0,1)");
    if (!(grading >= 1)) throw ConfigError("quadrature grading must be >= 1");
    if (!(t_cut > 0)) throw ConfigError("quadrature horizon must be positive");
    QuadratureScheme q;
    q.lambda = lambda;
    q.t_cut = t_cut;
    q.grading = grading;
    q.kappa = kappa;
    q.edges.resize(J + 1);
    for (int j = 0; j <= J; ++j) q.edges[j] = std::pow(double(j) / J, grading) * t_cut;
    for (int j = 0; j < J; ++j) {
        double a = q.edges[j], b = q.edges[j + 1];
        // exact cell integral of e^{-lambda s}, stored relative to the node
        double cell = (std::exp(-lambda * a) - std::exp(-lambda * b)) / lambda;
        double h = b - a, s;
        if (kappa > 0) {
            // node where g(s) = s^{-kappa} reproduces the cell integral exactly
            s = std::pow(singular_cell(lambda, kappa, a, b) / cell, -1.0 / kappa);
        } else {
            // centroid of e^{-lambda s}: exact for g linear on the cell
            s = lambda * h < 1e-8 ? a + 0.5 * h : a + 1.0 / lambda - h / std::expm1(lambda * h);
        }
        q.nodes.push_back(s);
        q.weights.push_back(cell * std::exp(lambda * s));
    }
    return q;
}

// f(X(s)) W1^{dirs[m]} / s for every m along one path
void d1_multi(const McContext& c, const ScalarField& fc, double s, const Vec& x, const std::vector<Vec>& dirs,
              std::uint64_t seed, std::uint64_t i, double* out) {
    PathState st;
    c.engine.run(x, sim(c, s, seed, 1, dirs), i, st);
    double fx = fc(st.x);
    for (std::size_t m = 0; m < dirs.size(); ++m) out[m] = fx * st.weight1[m] / s;
}

struct Moments {
    double mean = 0, se = 0;
};

Moments moments(const std::vector<double>& v) {
    auto e = reduce_samples(v, 0, 0);
    return {e.value, e.std_error};
}

}  // namespace

double QuadratureScheme::discounted(std::size_t j) const { return weights[j] * std::exp(-lambda * nodes[j]); }

double QuadratureScheme::exactness_error() const {
    double s = 0;
    for (std::size_t j = 0; j < nodes.size(); ++j) s += discounted(j);
    return std::abs(s - (-std::expm1(-lambda * t_cut)) / lambda);
}

double default_grading(int order, double alpha) {
    if (order <= 0) return 2.0;
    return std::clamp(alpha > 0 ? 2.0 / alpha : 4.0, 2.0, 6.0);
}

double singularity_exponent(int order, double alpha) {
    return std::clamp(0.5 * (order - alpha), 0.0, 0.95);
}

QuadratureScheme make_quadrature(double lambda, double zeta, int J, double grading, double sup_f, double t_cut,
                                 double kappa) {
    if (!(lambda > 0) || !std::isfinite(lambda))
        throw ConfigError("lambda must be positive: the resolvent integral int e^{-lambda s} P(s) f ds needs lambda > 0");
    const double gap = lambda - 4 * std::abs(zeta);
    bool caveat = !(gap > 0);
    if (!(t_cut > 0)) t_cut = std::log(1e4) / (caveat ? lambda : gap);
    QuadratureScheme q = build_scheme(lambda, t_cut, J, grading, kappa);
    q.tail_caveat = caveat;
    q.tail_bound = std::exp(-lambda * t_cut) * std::abs(sup_f) / lambda;
    return q;
}

double resolvent_sample(const McContext& c, const ScalarField& f, const Vec& x, const QuadratureScheme& q,
                        std::uint64_t seed, std::uint64_t i) {
    double v = 0;
    for (std::size_t j = 0; j < q.nodes.size(); ++j)
        v += q.discounted(j) * pt_sample(c, f, q.nodes[j], x, derive_seed(seed, j), i);
    return v;
}

double resolvent_d_sample(const McContext& c, const ScalarField& f, double centre, const Vec& x,
                          const std::vector<Vec>& dirs, int order, long n_inner, const QuadratureScheme& q,
                          std::uint64_t seed, std::uint64_t i) {
    ScalarField fc = centred(f, centre);
    double v = 0;
    for (std::size_t j = 0; j < q.nodes.size(); ++j) {
        const std::uint64_t sj = derive_seed(seed, j);
        double s = order == 1 ? d1_sample(c, fc, q.nodes[j], x, dirs[0], sj, i)
                              : d2_sample(c, fc, q.nodes[j], x, dirs[0], dirs[1], n_inner, sj, i);
        v += q.discounted(j) * s;
    }
    return v;
}

MCEstimate resolvent(const McContext& c, const ScalarField& f, const Vec& x, const QuadratureScheme& q,
                     const SolverParams& p) {
    require_lambda(q);
    require_tail(q, p);
    if (p.n_paths < 2) throw ArgumentError("resolvent needs at least 2 paths");
    std::vector<double> s(std::size_t(p.n_paths));
    parallel_for(s.size(), [&](std::size_t i) { s[i] = resolvent_sample(c, f, x, q, p.seed, i); });
    return reduce_samples(s, p.seed, q.t_cut);
}

MCEstimate resolvent_d(const McContext& c, const ScalarField& f, const Vec& x, const std::vector<Vec>& dirs,
                       int order, const QuadratureScheme& q, const SolverParams& p) {
    require_lambda(q);
    require_tail(q, p);
    if (order != 1 && order != 2) throw ArgumentError("resolvent_d: order must be 1 or 2");
    if (int(dirs.size()) < order) throw ArgumentError("resolvent_d: need one direction per order");
    if (order == 2 && p.n_inner < 2) throw ArgumentError("resolvent_d: order 2 needs n_inner >= 2");
    if (p.n_paths < 2) throw ArgumentError("resolvent_d needs at least 2 paths");
    if (c.engine.model().noise_scale() != 1.0) throw ConfigError("derivative weights need model.noise_scale = 1");
    const double centre = f(x);
    std::vector<double> s(std::size_t(p.n_paths));
    parallel_for(s.size(), [&](std::size_t i) {
        s[i] = resolvent_d_sample(c, f, centre, x, dirs, order, p.n_inner, q, p.seed, i);
    });
    MCEstimate e = reduce_samples(s, p.seed, q.t_cut);
    e.n_inner = order == 2 ? p.n_inner : 0;
    return e;
}

namespace {

SplitResult split_rhs(const McContext& c, const ScalarField& f, const Vec& x, double tau, const QuadratureScheme& q,
                      const SolverParams& p, const MCEstimate& lhs) {
    const int J = int(q.nodes.size());
    // both sides integrate over (0, t_cut]: head on (0, tau], shifted tail on (0, t_cut - tau]
    QuadratureScheme head = build_scheme(q.lambda, tau, J, q.grading, q.kappa);
    QuadratureScheme rest = build_scheme(q.lambda, q.t_cut - tau, J, q.grading, q.kappa);
    SplitResult out;
    out.tau = tau;
    out.lhs = lhs;
    const double disc = std::exp(-q.lambda * tau);
    const SimConfig cfg = sim(c, tau, derive_seed(p.seed, kSplitPath), 0, {});
    const std::uint64_t s_shift = derive_seed(p.seed, kSplitShift), s_head = derive_seed(p.seed, kSplitHead);
    std::vector<double> s(std::size_t(p.n_paths));
    parallel_for(s.size(), [&](std::size_t i) {
        PathState st;
        c.engine.run(x, cfg, i, st);
        s[i] = disc * resolvent_sample(c, f, st.x, rest, s_shift, i) + resolvent_sample(c, f, x, head, s_head, i);
    });
    out.rhs = reduce_samples(s, p.seed, q.t_cut);
    double se = std::hypot(out.lhs.std_error, out.rhs.std_error);
    out.z = se > 0 ? (out.lhs.value - out.rhs.value) / se : (out.lhs.value == out.rhs.value ? 0.0 : INFINITY);
    return out;
}

}  // namespace

SplitResult resolvent_split(const McContext& c, const ScalarField& f, const Vec& x, double tau,
                            const QuadratureScheme& q, const SolverParams& p) {
    return resolvent_split(c, f, x, Vec{tau}, q, p).front();
}

std::vector<SplitResult> resolvent_split(const McContext& c, const ScalarField& f, const Vec& x, const Vec& taus,
                                         const QuadratureScheme& q, const SolverParams& p) {
    require_lambda(q);
    require_tail(q, p);
    for (double tau : taus)
        if (!(tau > 0) || !(tau < q.t_cut)) throw ArgumentError("resolvent_split: tau must lie in (0, t_cut)");
    SolverParams pl = p;
    pl.seed = derive_seed(p.seed, kSplitLhs);
    const MCEstimate lhs = resolvent(c, f, x, q, pl);
    std::vector<SplitResult> out;
    for (double tau : taus) out.push_back(split_rhs(c, f, x, tau, q, p, lhs));
    return out;
}


ScaleSeries classify_series(const Vec& quot, const Vec& noise, double alpha) {
    ScaleSeries s;
    s.alpha = alpha;
    s.quotients = quot;
    s.noise = noise;
    s.excluded.assign(quot.size(), false);
    Vec kept;
    int last_kept = -1;
    for (std::size_t i = 0; i < quot.size(); ++i) {
        bool exact_zero = quot[i] == 0 && noise[i] == 0;
        s.excluded[i] = !exact_zero && !(quot[i] >= 3 * noise[i]);
        if (!s.excluded[i]) kept.push_back(quot[i]), last_kept = int(i);
    }
    if (kept.empty()) return s;
    double mx = *std::max_element(kept.begin(), kept.end());
    double mn = *std::min_element(kept.begin(), kept.end());
    s.spread = mx == 0 ? 1.0 : (mn > 0 ? mx / mn : INFINITY);
    s.stable = kept.size() >= 3 && s.spread <= 2.0;
    s.diverging = s.spread > 2.0 && quot[std::size_t(last_kept)] == mx;
    return s;
}

StabilityReport schauder_probe(const McContext& c, const ScalarField& f, const StabilityProbe& probe, double alpha,
                               double control_alpha, const QuadratureScheme& q, const SolverParams& p) {
    require_lambda(q);
    require_tail(q, p);
    if (!(alpha > 0 && alpha < 1) || !(control_alpha > 0 && control_alpha <= 1))
        throw ArgumentError("schauder_probe: exponents must lie in (0,1)");
    if (probe.points.empty() || probe.directions.empty() || probe.scales.size() < 3)
        throw ArgumentError("schauder_probe: need points, directions and >= 3 scales");
    if (p.n_inner < 2) throw ArgumentError("schauder_probe: n_inner >= 2");
    const std::size_t N = std::size_t(p.n_paths), S = probe.scales.size();
    StabilityReport rep;
    rep.scales = probe.scales;
    rep.lambda_caveat = q.tail_caveat;
    Vec qa(S, 0.0), na(S, 0.0), qc(S, 0.0), nc(S, 0.0);
    for (std::size_t pi = 0; pi < probe.points.size(); ++pi) {
        const Vec& x = probe.points[pi];
        const double centre = f(x);
        SolverParams pu = p;
        pu.seed = derive_seed(p.seed, kProbeU, pi);
        rep.sup_u = std::max(rep.sup_u, std::abs(resolvent(c, f, x, q, pu).value));
        for (std::size_t di = 0; di < probe.directions.size(); ++di) {
            const Vec& e = probe.directions[di];
            SolverParams pd = p;
            pd.seed = derive_seed(p.seed, kProbeDu, pi * 64 + di);
            rep.sup_du = std::max(rep.sup_du, std::abs(resolvent_d(c, f, x, {e}, 1, q, pd).value));
            std::vector<double> base(N);
            parallel_for(N, [&](std::size_t i) {
                base[i] = resolvent_d_sample(c, f, centre, x, {e, e}, 2, p.n_inner, q, p.seed, i);
            });
            rep.sup_d2u = std::max(rep.sup_d2u, std::abs(moments(base).mean));
            for (std::size_t si = 0; si < S; ++si) {
                const double d = probe.scales[si];
                const Vec y = shifted(x, e, d);
                std::vector<double> diff(N);
                parallel_for(N, [&](std::size_t i) {
                    diff[i] = resolvent_d_sample(c, f, centre, y, {e, e}, 2, p.n_inner, q, p.seed, i) - base[i];
                });
                Moments m = moments(diff);
                double a = std::abs(m.mean) / std::pow(d, alpha);
                if (a > qa[si]) qa[si] = a, na[si] = m.se / std::pow(d, alpha);
                double b = std::abs(m.mean) / std::pow(d, control_alpha);
                if (b > qc[si]) qc[si] = b, nc[si] = m.se / std::pow(d, control_alpha);
            }
        }
    }
    rep.primary = classify_series(qa, na, alpha);
    rep.control = classify_series(qc, nc, control_alpha);
    const double norm = f.class_norm();
    const double top = *std::max_element(qa.begin(), qa.end());
    rep.fitted_C = norm > 0 ? (rep.sup_u + rep.sup_du + rep.sup_d2u + top) / norm : 0.0;
    return rep;
}

StabilityReport zygmund_probe(const McContext& c, const ScalarField& f, const StabilityProbe& probe, int frame_dims,
                              double control_alpha, const QuadratureScheme& q, const SolverParams& p) {
    require_lambda(q);
    require_tail(q, p);
    const SpectralModel& model = c.engine.model();
    if (frame_dims < 1 || frame_dims > std::min(3, model.n()))
        throw ArgumentError("zygmund_probe: frame_dims must lie in 1..min(3,n)");
    if (probe.points.empty() || probe.directions.empty() || probe.scales.size() < 3)
        throw ArgumentError("zygmund_probe: need points, directions and >= 3 scales");
    if (model.noise_scale() != 1.0) throw ConfigError("derivative weights need model.noise_scale = 1");
    std::vector<Vec> frame;
    for (int m = 0; m < frame_dims; ++m) frame.push_back(model.hr_basis(m));
    const std::size_t N = std::size_t(p.n_paths), S = probe.scales.size(), F = frame.size();
    const std::size_t J = q.nodes.size();
    StabilityReport rep;
    rep.scales = probe.scales;
    rep.lambda_caveat = q.tail_caveat;
    // gradient sample over the frame at y, centred at `centre`
    auto grad_sample = [&](const ScalarField& fc, const Vec& y, std::size_t i, double* out) {
        double tmp[3];
        std::fill(out, out + F, 0.0);
        for (std::size_t j = 0; j < J; ++j) {
            d1_multi(c, fc, q.nodes[j], y, frame, derive_seed(p.seed, j), i, tmp);
            for (std::size_t m = 0; m < F; ++m) out[m] += q.discounted(j) * tmp[m];
        }
    };
    Vec qz(S, 0.0), nz(S, 0.0), qh(S, 0.0), nh(S, 0.0);
    for (std::size_t pi = 0; pi < probe.points.size(); ++pi) {
        const Vec& x = probe.points[pi];
        const ScalarField fc = centred(f, f(x));
        SolverParams pu = p;
        pu.seed = derive_seed(p.seed, kProbeU, pi);
        rep.sup_u = std::max(rep.sup_u, std::abs(resolvent(c, f, x, q, pu).value));
        std::vector<double> g0(N * F);
        parallel_for(N, [&](std::size_t i) { grad_sample(fc, x, i, &g0[i * F]); });
        double du2 = 0;
        for (std::size_t m = 0; m < F; ++m) {
            std::vector<double> col(N);
            for (std::size_t i = 0; i < N; ++i) col[i] = g0[i * F + m];
            double v = moments(col).mean;
            du2 += v * v;
        }
        rep.sup_du = std::max(rep.sup_du, std::sqrt(du2));
        for (const Vec& h : probe.directions)
            for (std::size_t si = 0; si < S; ++si) {
                const double d = probe.scales[si];
                const Vec y1 = shifted(x, h, d), y2 = shifted(x, h, 2 * d);
                std::vector<double> first(N * F), second(N * F);
                parallel_for(N, [&](std::size_t i) {
                    double a[3], b[3];
                    grad_sample(fc, y1, i, a);
                    grad_sample(fc, y2, i, b);
                    for (std::size_t m = 0; m < F; ++m) {
                        const double z = g0[i * F + m];
                        first[i * F + m] = a[m] - z;
                        second[i * F + m] = b[m] - 2 * a[m] + z;
                    }
                });
                double m1 = 0, s1 = 0, m2 = 0, s2 = 0;
                for (std::size_t m = 0; m < F; ++m) {
                    std::vector<double> c1(N), c2(N);
                    for (std::size_t i = 0; i < N; ++i) c1[i] = first[i * F + m], c2[i] = second[i * F + m];
                    Moments a = moments(c1), b = moments(c2);
                    m1 += a.mean * a.mean, s1 += a.se * a.se;
                    m2 += b.mean * b.mean, s2 += b.se * b.se;
                }
                double z = std::sqrt(m2) / d;
                if (z > qz[si]) qz[si] = z, nz[si] = std::sqrt(s2) / d;
                double hq = std::sqrt(m1) / std::pow(d, control_alpha);
                if (hq > qh[si]) qh[si] = hq, nh[si] = std::sqrt(s1) / std::pow(d, control_alpha);
            }
    }
    rep.primary = classify_series(qz, nz, 1.0);
    rep.control = classify_series(qh, nh, control_alpha);
    const double top = *std::max_element(qz.begin(), qz.end());
    rep.fitted_C = f.sup_bound > 0 ? (rep.sup_du + top) / f.sup_bound : 0.0;
    return rep;
}

// ---- evolution ------------------------------------------------------------

TimeField constant_time_field(double c) {
    TimeField g;
    g.name = "const:c=" + std::to_string(c);
    g.sup_bound = std::abs(c);
    g.eval = [c](double, const double*) { return c; };
    return g;
}

TimeField frozen_time_field(const ScalarField& f) {
    TimeField g;
    g.name = f.name;
    g.sup_bound = f.sup_bound;
    auto e = f.eval;
    g.eval = [e](double, const double* x) { return e(x); };
    return g;
}

namespace {

// nodes s_j = t - u_j with u graded toward 0 (the end s = t carries the
// singular part of derivative integrands); weights are cell widths
void evolve_nodes(double t, int J, Vec& s, Vec& w) {
    if (J < 1) throw ConfigError("evolve needs at least one time node");
    s.clear();
    w.clear();
    for (int j = 0; j < J; ++j) {
        double a = std::pow(double(j) / J, 2.0) * t, b = std::pow(double(j + 1) / J, 2.0) * t;
        s.push_back(t - 0.5 * (a + b));
        w.push_back(b - a);
    }
}

std::vector<ScalarField> freeze(const TimeField& g, const Vec& s) {
    std::vector<ScalarField> out;
    for (double sj : s) {
        ScalarField f;
        f.name = g.name;
        f.sup_bound = g.sup_bound;
        auto e = g.eval;
        f.eval = [e, sj](const double* x) { return e(sj, x); };
        out.push_back(std::move(f));
    }
    return out;
}

}  // namespace

MCEstimate evolve(const McContext& c, const ScalarField& f, const TimeField* g, double t, const Vec& x, int J,
                  long n, std::uint64_t seed) {
    if (!(t > 0) || !std::isfinite(t)) throw ArgumentError("evolve: t must be positive");
    if (!g) return estimate_pt(c, f, t, x, n, seed);
    if (n < 2) throw ArgumentError("evolve needs at least 2 paths");
    Vec s, w;
    evolve_nodes(t, J, s, w);
    auto gs = freeze(*g, s);
    std::vector<double> v(static_cast<std::size_t>(n));
    parallel_for(v.size(), [&](std::size_t i) {
        double acc = pt_sample(c, f, t, x, seed, i);
        for (std::size_t j = 0; j < s.size(); ++j) acc += w[j] * pt_sample(c, gs[j], t - s[j], x, derive_seed(seed, 1 + j), i);
        v[i] = acc;
    });
    return reduce_samples(v, seed, t);
}

MCEstimate evolve_d2(const McContext& c, const ScalarField& f, const TimeField* g, double t, const Vec& x,
                     const Vec& h, const Vec& k, int J, long n, long n_inner, std::uint64_t seed) {
    if (!(t > 0) || !std::isfinite(t)) throw ArgumentError("evolve_d2: t must be positive");
    if (n < 2 || n_inner < 2) throw ArgumentError("evolve_d2 needs n >= 2 and n_inner >= 2");
    if (c.engine.model().noise_scale() != 1.0) throw ConfigError("derivative weights need model.noise_scale = 1");
    Vec s, w;
    const ScalarField fc = centred(f, f(x));
    std::vector<ScalarField> gs;
    if (g) {
        evolve_nodes(t, J, s, w);
        for (auto& gj : freeze(*g, s)) gs.push_back(centred(gj, gj(x)));
    }
    std::vector<double> v(static_cast<std::size_t>(n));
    parallel_for(v.size(), [&](std::size_t i) {
        double acc = d2_sample(c, fc, t, x, h, k, n_inner, seed, i);
        for (std::size_t j = 0; j < gs.size(); ++j)
            acc += w[j] * d2_sample(c, gs[j], t - s[j], x, h, k, n_inner, derive_seed(seed, 1 + j), i);
        v[i] = acc;
    });
    MCEstimate e = reduce_samples(v, seed, t);
    e.n_inner = n_inner;
    return e;
}

// ---- Picard solver --------------------------------------------------------

VectorField constant_vector_field(const Vec& v, const SpectralModel& model) {
    if (int(v.size()) != model.n()) throw ArgumentError("vector field has wrong dimension");
    VectorField F;
    F.name = "const";
    F.sup_norm_R = model.hr_norm(v);
    F.eval = [v](const double*, double* out) { std::copy(v.begin(), v.end(), out); };
    return F;
}

namespace {

// bilinear (multilinear) hat basis on an L^d lattice over [-w, w]^d in H_R
// coordinates of the first d modes; states outside the box are clamped
struct Lattice {
    int L, d;
    double w;
    Vec r;
    std::size_t size() const {
        std::size_t s = 1;
        for (int m = 0; m < d; ++m) s *= std::size_t(L);
        return s;
    }
    Vec point(std::size_t q, int n) const {
        Vec x(n, 0.0);
        for (int m = 0; m < d; ++m) {
            int a = int(q % std::size_t(L));
            q /= std::size_t(L);
            x[m] = (-w + 2 * w * a / (L - 1)) * r[m];
        }
        return x;
    }
    // adds coef * phi_q(y) into out
    void basis(const double* y, double coef, double* out) const {
        int idx[3];
        double frac[3];
        const double h = 2 * w / (L - 1);
        for (int m = 0; m < d; ++m) {
            double u = std::clamp(y[m] / r[m], -w, w);
            double g = (u + w) / h;
            int a = std::min(L - 2, int(std::floor(g)));
            idx[m] = a;
            frac[m] = g - a;
        }
        for (int corner = 0; corner < (1 << d); ++corner) {
            std::size_t q = 0, stride = 1;
            double wt = coef;
            for (int m = 0; m < d; ++m) {
                int bit = (corner >> m) & 1;
                q += std::size_t(idx[m] + bit) * stride;
                stride *= std::size_t(L);
                wt *= bit ? frac[m] : 1 - frac[m];
            }
            out[q] += wt;
        }
    }
};

struct Operator {
    std::size_t P = 0, Q = 0, N = 0;
    std::vector<double> samples;   // row-major [p][i][q]
    Vec mean;                      // [p][q]
    bool zero = true;

    double row_sigma(std::size_t p, const Vec& psi) const {
        if (zero) return 0.0;
        std::vector<double> v(N);
        for (std::size_t i = 0; i < N; ++i) {
            const double* s = &samples[(p * N + i) * Q];
            double acc = 0;
            for (std::size_t q = 0; q < Q; ++q) acc += s[q] * psi[q];
            v[i] = acc;
        }
        return moments(v).se;
    }
    Vec apply(const Vec& psi) const {
        Vec out(P, 0.0);
        for (std::size_t p = 0; p < P; ++p)
            for (std::size_t q = 0; q < Q; ++q) out[p] += mean[p * Q + q] * psi[q];
        return out;
    }
    double inf_norm() const {
        double best = 0;
        for (std::size_t p = 0; p < P; ++p) {
            double s = 0;
            for (std::size_t q = 0; q < Q; ++q) s += std::abs(mean[p * Q + q]);
            best = std::max(best, s);
        }
        return best;
    }
};

Operator assemble(const McContext& c, const VectorField& F, const Lattice& lat, const std::vector<Vec>& pts,
                  const QuadratureScheme& q, long n, std::uint64_t seed) {
    const SpectralModel& model = c.engine.model();
    Operator op;
    op.P = pts.size();
    op.Q = lat.size();
    op.N = std::size_t(n);
    op.mean.assign(op.P * op.Q, 0.0);
    // frame coefficients <F(x_p), r_m e_m>_R = F_m / r_m
    std::vector<Vec> coef(op.P);
    std::vector<std::vector<int>> active(op.P);
    Vec tmp(model.n());
    for (std::size_t p = 0; p < op.P; ++p) {
        F.eval(pts[p].data(), tmp.data());
        for (int m = 0; m < lat.d; ++m) {
            double cm = tmp[m] / model.r()[m];
            coef[p].push_back(cm);
            if (cm != 0) active[p].push_back(m), op.zero = false;
        }
    }
    if (op.zero) return op;
    op.samples.assign(op.P * op.N * op.Q, 0.0);
    for (std::size_t p = 0; p < op.P; ++p) {
        if (active[p].empty()) continue;
        std::vector<Vec> dirs;
        for (int m : active[p]) dirs.push_back(model.hr_basis(m));
        Vec phi0(op.Q, 0.0);
        lat.basis(pts[p].data(), 1.0, phi0.data());
        const std::uint64_t sp = derive_seed(seed, p);
        parallel_for(op.N, [&](std::size_t i) {
            double* out = &op.samples[(p * op.N + i) * op.Q];
            PathState st;
            for (std::size_t j = 0; j < q.nodes.size(); ++j) {
                const double s = q.nodes[j];
                c.engine.run(pts[p], sim(c, s, derive_seed(sp, j), 1, dirs), i, st);
                double k = 0;
                for (std::size_t a = 0; a < dirs.size(); ++a) k += coef[p][active[p][a]] * st.weight1[a];
                k *= q.discounted(j) / s;
                // centred at x_p: the basis sums to one, so constants map to 0
                lat.basis(st.x.data(), k, out);
                for (std::size_t qq = 0; qq < op.Q; ++qq) out[qq] -= k * phi0[qq];
            }
        });
        for (std::size_t qq = 0; qq < op.Q; ++qq) {
            std::vector<double> col(op.N);
            for (std::size_t i = 0; i < op.N; ++i) col[i] = op.samples[(p * op.N + i) * op.Q + qq];
            op.mean[p * op.Q + qq] = moments(col).mean;
        }
    }
    return op;
}

}  // namespace

SchvarResult schvar_solve(const McContext& c, const VectorField& F, const ScalarField& f, const SchvarConfig& cfg,
                          const QuadratureScheme& q, const SolverParams& p) {
    require_lambda(q);
    require_tail(q, p);
    const SpectralModel& model = c.engine.model();
    if (!c.engine.nonlinearity().is_zero())
        throw ConfigError("schvar needs the Ornstein-Uhlenbeck semigroup (nonlinearity zero)");
    if (model.noise_scale() != 1.0) throw ConfigError("derivative weights need model.noise_scale = 1");
    if (cfg.lattice < 2 || !(cfg.half_width > 0)) throw ConfigError("schvar lattice needs >= 2 points and width > 0");
    if (cfg.frame_dims < 1 || cfg.frame_dims > std::min(3, model.n()))
        throw ConfigError("schvar frame_dims must lie in 1..min(3,n)");
    if (cfg.max_iters < 1) throw ConfigError("schvar max_iters must be positive");
    Lattice lat{cfg.lattice, cfg.frame_dims, cfg.half_width, model.r()};
    SchvarResult res;
    for (std::size_t qq = 0; qq < lat.size(); ++qq) res.lattice_points.push_back(lat.point(qq, model.n()));
    for (const Vec& x : res.lattice_points) res.f_values.push_back(f(x));
    Operator T = assemble(c, F, lat, res.lattice_points, q, p.n_paths, p.seed);
    res.contraction = T.inf_norm();
    if (res.contraction >= 1)
        throw DivergenceError("measured contraction factor " + std::to_string(res.contraction) +
                              " >= 1; reduce ||F||");
    Vec psi(res.f_values.size(), 0.0);
    for (int m = 0; m < cfg.max_iters; ++m) {
        Vec next = T.apply(psi);
        double d = 0;
        for (std::size_t k = 0; k < next.size(); ++k) {
            next[k] += res.f_values[k];
            d = std::max(d, std::abs(next[k] - psi[k]));
        }
        psi = std::move(next);
        res.trace.push_back(d);
        res.iterations = m + 1;
        if (d < cfg.tol) {
            res.converged = true;
            break;
        }
    }
    for (std::size_t m = 1; m < res.trace.size(); ++m)
        if (res.trace[m - 1] > 0) res.ratios.push_back(res.trace[m] / res.trace[m - 1]);
    for (std::size_t m = 2; m < res.trace.size(); ++m)
        if (res.trace[m - 2] > 0) res.rates.push_back(std::sqrt(res.trace[m] / res.trace[m - 2]));
    res.psi = psi;
    Operator T2 = assemble(c, F, lat, res.lattice_points, q, p.n_paths, derive_seed(p.seed, kSchvarPrime));
    Vec t2 = T2.apply(psi);
    for (std::size_t k = 0; k < psi.size(); ++k) {
        res.residual = std::max(res.residual, std::abs(psi[k] - t2[k] - res.f_values[k]));
        res.residual_sigma = std::max(res.residual_sigma, std::hypot(T.row_sigma(k, psi), T2.row_sigma(k, psi)));
    }
    return res;
}

}  // namespace spdelab

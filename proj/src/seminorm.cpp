// SPDX-License-Identifier: Apache-2.0
#include "spdelab/seminorm.hpp"

#include <algorithm>
#include <cmath>

#include "spdelab/errors.hpp"
#include "spdelab/parallel.hpp"
#include "spdelab/rng.hpp"

namespace spdelab {

Vec random_hr_direction(const SpectralModel& model, std::uint64_t seed, std::uint64_t index) {
    const int n = model.n();
    Vec z(n);
    NormalStream(derive_seed(seed, 0xD1), index).normals(0, n, z.data());
    double s = euclid_norm(z);
    for (int k = 0; k < n; ++k) z[k] = model.r()[k] * z[k] / s;
    return z;
}

Vec random_ball_point(const SpectralModel& model, std::uint64_t seed, std::uint64_t index,
                      double radius) {
    const int n = model.n();
    Vec z(n + 4);
    NormalStream(derive_seed(seed, 0xB0), index).normals(0, n + 4, z.data());
    double u = 0.5 * (1.0 + std::erf(z[n] / std::sqrt(2.0)));   // uniform from a normal
    double s = 0;
    for (int k = 0; k < n; ++k) s += z[k] * z[k];
    s = std::sqrt(s);
    double rad = radius * std::pow(u, 1.0 / n);
    Vec x(n);
    for (int k = 0; k < n; ++k) x[k] = rad * z[k] / s;
    return x;
}

SeminormProbe default_probe(const SpectralModel& model, std::uint64_t seed, int n_points, int n_dirs,
                            int n_scales, double radius) {
    SeminormProbe p;
    p.points.push_back(Vec(model.n(), 0.0));
    for (int i = 1; i < n_points; ++i) p.points.push_back(random_ball_point(model, seed, i, radius));
    int nb = std::min({4, model.n(), n_dirs});
    for (int k = 0; k < nb; ++k) p.directions.push_back(model.hr_basis(k));
    for (int i = nb; i < n_dirs; ++i) p.directions.push_back(random_hr_direction(model, seed, i));
    for (int j = 1; j <= n_scales; ++j) p.scales.push_back(std::ldexp(1.0, -j));
    return p;
}

void validate_probe(const SeminormProbe& probe) {
    if (probe.points.empty() || probe.directions.empty())
        throw ArgumentError("probe needs at least one point and one direction");
    if (probe.scales.size() < 3) throw ArgumentError("probe needs at least 3 scales");
    for (std::size_t i = 1; i < probe.scales.size(); ++i)
        if (!(probe.scales[i] < probe.scales[i - 1]))
            throw ArgumentError("probe scales must be strictly decreasing");
    for (double s : probe.scales)
        if (!(s > 0)) throw ArgumentError("probe scales must be positive");
}

namespace {

template <class Quot>
SeminormResult sweep(const VecMap& f, const SeminormProbe& probe, Quot quot) {
    validate_probe(probe);
    const std::size_t np = probe.points.size(), nd = probe.directions.size(),
                      ns = probe.scales.size();
    std::vector<double> table(np * nd * ns, 0.0);
    parallel_for(np * nd, [&](std::size_t idx) {
        const Vec& x = probe.points[idx / nd];
        const Vec& d = probe.directions[idx % nd];
        Vec fx = f(x);
        for (std::size_t s = 0; s < ns; ++s) table[idx * ns + s] = quot(x, fx, d, probe.scales[s]);
    });
    SeminormResult res;
    res.per_scale.assign(ns, 0.0);
    for (std::size_t idx = 0; idx < np * nd; ++idx)
        for (std::size_t s = 0; s < ns; ++s) {
            double q = table[idx * ns + s];
            if (!std::isfinite(q)) throw EstimatorError("seminorm probe: non-finite evaluation");
            res.per_scale[s] = std::max(res.per_scale[s], q);
        }
    res.estimate = *std::max_element(res.per_scale.begin(), res.per_scale.end());
    return res;
}

Vec shifted(const Vec& x, const Vec& d, double s) {
    Vec y(x);
    for (std::size_t k = 0; k < y.size(); ++k) y[k] += s * d[k];
    return y;
}

double dist(const Vec& a, const Vec& b) {
    if (a.size() != b.size()) throw EstimatorError("seminorm probe: value dimension changed");
    double s = 0;
    for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
    return std::sqrt(s);
}

}  // namespace

SeminormResult holder_seminorm(const VecMap& f, double alpha, const SeminormProbe& probe) {
    if (!(alpha > 0 && alpha <= 1)) throw ArgumentError("holder_seminorm: alpha must lie in (0,1]");
    return sweep(f, probe, [&](const Vec& x, const Vec& fx, const Vec& d, double s) {
        return dist(f(shifted(x, d, s)), fx) / std::pow(s, alpha);
    });
}

SeminormResult zygmund_seminorm(const VecMap& f, const SeminormProbe& probe) {
    return sweep(f, probe, [&](const Vec& x, const Vec& fx, const Vec& d, double s) {
        Vec a = f(shifted(x, d, 2 * s)), b = f(shifted(x, d, s));
        double q = 0;
        for (std::size_t k = 0; k < a.size(); ++k) {
            double v = a[k] - 2 * b[k] + fx[k];
            q += v * v;
        }
        return std::sqrt(q) / s;
    });
}

}  // namespace spdelab

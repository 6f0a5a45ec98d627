// SPDX-License-Identifier: Apache-2.0
#include "spdelab/nonlinearity.hpp"

#include <algorithm>
#include <cmath>

#include "spdelab/errors.hpp"

namespace spdelab {

namespace {
double dot(const double* a, const double* b, int n) {
    double s = 0;
    for (int i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

// derivatives of 1/(1+s)
double base_phi(int d, double s) {
    double u = 1.0 / (1.0 + s);
    switch (d) {
        case 0: return u;
        case 1: return -u * u;
        case 2: return 2.0 * u * u * u;
        default: return -6.0 * u * u * u * u;
    }
}
}  // namespace

void ZeroNonlinearity::eval(const double*, double* out) const { std::fill(out, out + n_, 0.0); }
void ZeroNonlinearity::d1(const double*, const double*, double* out) const {
    std::fill(out, out + n_, 0.0);
}
void ZeroNonlinearity::d2(const double*, const double*, const double*, double* out) const {
    std::fill(out, out + n_, 0.0);
}
void ZeroNonlinearity::d3(const double*, const double*, const double*, const double*,
                          double* out) const {
    std::fill(out, out + n_, 0.0);
}

std::unique_ptr<Nonlinearity> make_zero(int n) { return std::make_unique<ZeroNonlinearity>(n); }

double RadialNonlinearity::bound(Kind kind, int order, double s) {
    double p0 = std::abs(base_phi(0, s)), p1 = std::abs(base_phi(1, s));
    double p2 = std::abs(base_phi(2, s)), p3 = std::abs(base_phi(3, s));
    double r = std::sqrt(s);
    if (kind == Kind::Fixed) {
        switch (order) {
            case 1: return 2 * p1 * r;
            case 2: return 4 * p2 * s + 2 * p1;
            default: return 8 * p3 * s * r + 12 * p2 * r;
        }
    }
    switch (order) {
        case 1: return p0 + 2 * p1 * s;
        case 2: return 6 * p1 * r + 4 * p2 * s * r;
        default: return 6 * p1 + 24 * p2 * s + 8 * p3 * s * s;
    }
}

RadialNonlinearity::RadialNonlinearity(int n, Kind kind, double c, int v_index, double m_target)
    : Nonlinearity(n), kind_(kind), c_(c), v_(v_index) {
    if (v_ < 0 || v_ >= n) throw ConfigError("nonlinearity.v must index a basis vector");
    // the bounds are symbolic in s; take the sup on a dense grid and pad by 10%
    double m1 = 0;
    for (int i = 0; i <= 20000; ++i) {
        double s = 1e-6 * std::pow(1e8 / 1e-6, i / 20000.0) - 1e-6;
        for (int o = 1; o <= 3; ++o) m1 = std::max(m1, bound(kind, o, s));
    }
    m1 *= 1.1;
    if (m_target > 0) c_ = m_target / m1;
    if (!std::isfinite(c_)) throw ConfigError("nonlinearity.c must be finite");
    M_ = std::abs(c_) * m1;
}

std::string RadialNonlinearity::name() const {
    return kind_ == Kind::Fixed ? "radial_fixed" : "radial_scaled";
}

double RadialNonlinearity::phi(int d, double s) const { return c_ * base_phi(d, s); }

void RadialNonlinearity::eval(const double* x, double* out) const {
    double s = dot(x, x, n_);
    double p = phi(0, s);
    if (kind_ == Kind::Fixed) {
        std::fill(out, out + n_, 0.0);
        out[v_] = p;
    } else {
        for (int i = 0; i < n_; ++i) out[i] = p * x[i];
    }
}

void RadialNonlinearity::d1(const double* x, const double* h, double* out) const {
    double s = dot(x, x, n_), xh = dot(x, h, n_);
    if (kind_ == Kind::Fixed) {
        std::fill(out, out + n_, 0.0);
        out[v_] = 2 * phi(1, s) * xh;
        return;
    }
    double p0 = phi(0, s), p1 = phi(1, s);
    for (int i = 0; i < n_; ++i) out[i] = p0 * h[i] + 2 * p1 * xh * x[i];
}

void RadialNonlinearity::d2(const double* x, const double* h, const double* k, double* out) const {
    double s = dot(x, x, n_), xh = dot(x, h, n_), xk = dot(x, k, n_), hk = dot(h, k, n_);
    double p1 = phi(1, s), p2 = phi(2, s);
    if (kind_ == Kind::Fixed) {
        std::fill(out, out + n_, 0.0);
        out[v_] = 4 * p2 * xh * xk + 2 * p1 * hk;
        return;
    }
    for (int i = 0; i < n_; ++i)
        out[i] = 2 * p1 * (xk * h[i] + xh * k[i] + hk * x[i]) + 4 * p2 * xh * xk * x[i];
}

void RadialNonlinearity::d3(const double* x, const double* h, const double* k, const double* j,
                            double* out) const {
    double s = dot(x, x, n_);
    double xh = dot(x, h, n_), xk = dot(x, k, n_), xj = dot(x, j, n_);
    double hk = dot(h, k, n_), hj = dot(h, j, n_), kj = dot(k, j, n_);
    double p1 = phi(1, s), p2 = phi(2, s), p3 = phi(3, s);
    if (kind_ == Kind::Fixed) {
        std::fill(out, out + n_, 0.0);
        out[v_] = 8 * p3 * xh * xk * xj + 4 * p2 * (hk * xj + hj * xk + kj * xh);
        return;
    }
    for (int i = 0; i < n_; ++i) {
        out[i] = 4 * p2 * xj * (xk * h[i] + xh * k[i] + hk * x[i]) +
                 2 * p1 * (kj * h[i] + hj * k[i] + hk * j[i]) + 8 * p3 * xj * xh * xk * x[i] +
                 4 * p2 * (hj * xk * x[i] + xh * kj * x[i] + xh * xk * j[i]);
    }
}

}  // namespace spdelab

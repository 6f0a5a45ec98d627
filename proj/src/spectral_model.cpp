// SPDX-License-Identifier: Apache-2.0
#include "spdelab/spectral_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/special_functions/gamma.hpp>

#include "spdelab/errors.hpp"

namespace spdelab {

SpectralModel::SpectralModel(const Params& p)
    : n_(p.n), beta_(p.beta), rho_(p.rho), eta_(p.trace_exponent), noise_scale_(p.noise_scale) {
    if (n_ <= 0) throw ConfigError("model.n must be a positive integer");
    if (p.q_eigs.empty()) {
        if (!(p.q_power > 0)) throw ConfigError("model.q_eigs rule k^-p needs p > 0");
        lambda_.resize(n_);
        for (int k = 0; k < n_; ++k) lambda_[k] = std::pow(double(k + 1), -p.q_power);
    } else {
        if (int(p.q_eigs.size()) != n_)
            throw ConfigError("model.q_eigs has " + std::to_string(p.q_eigs.size()) +
                              " entries, expected n=" + std::to_string(n_));
        lambda_ = p.q_eigs;
    }
    for (int k = 0; k < n_; ++k) {
        if (!(lambda_[k] > 0) || !std::isfinite(lambda_[k]))
            throw ConfigError("model.q_eigs must be positive and finite");
        if (lambda_[k] > lambda_[0])
            throw ConfigError("model.q_eigs must satisfy lambda_k <= lambda_1");
    }
    if (!(beta_ >= 0)) throw ConfigError("model.beta must be nonnegative");
    if (!(rho_ >= 0)) throw ConfigError("model.rho must be nonnegative");
    if (!(eta_ > 0 && eta_ < 1)) throw ConfigError("model.trace_exponent must lie in (0,1)");
    if (!(noise_scale_ >= 0)) throw ConfigError("model.noise_scale must be nonnegative");

    a_.resize(n_);
    r_.resize(n_);
    for (int k = 0; k < n_; ++k) {
        a_[k] = -0.5 * std::pow(lambda_[k], -beta_);
        r_[k] = std::pow(lambda_[k], rho_);
    }
    if (!std::isfinite(trace_integral())) throw ConfigError("trace condition integral is not finite");
}

double SpectralModel::w_R() const { return *std::max_element(a_.begin(), a_.end()); }

double SpectralModel::r_norm() const { return *std::max_element(r_.begin(), r_.end()); }

double SpectralModel::trace_integral() const {
    // int_0^1 t^{-eta} e^{-ct} dt = c^{eta-1} gamma_lower(1-eta, c)
    double s = 0;
    for (int k = 0; k < n_; ++k) {
        double c = -2.0 * a_[k];
        double s1 = 1.0 - eta_;
        s += r_[k] * r_[k] * std::pow(c, -s1) * boost::math::tgamma_lower(s1, c);
    }
    return s;
}

void SpectralModel::check_dim(const Vec& x) const {
    if (int(x.size()) != n_)
        throw ConfigError("vector of length " + std::to_string(x.size()) + " does not match model n=" +
                          std::to_string(n_));
}

double SpectralModel::hr_inner(const Vec& x, const Vec& y) const {
    check_dim(x);
    check_dim(y);
    double s = 0;
    for (int k = 0; k < n_; ++k) s += x[k] * y[k] / (r_[k] * r_[k]);
    return s;
}

double SpectralModel::hr_norm(const Vec& x) const { return std::sqrt(hr_inner(x, x)); }

Vec SpectralModel::apply_exp_A(double t, const Vec& x) const {
    if (!(t >= 0)) throw ArgumentError("apply_exp_A: t must be nonnegative");
    check_dim(x);
    Vec out(n_);
    for (int k = 0; k < n_; ++k) out[k] = std::exp(a_[k] * t) * x[k];
    return out;
}

Vec SpectralModel::hr_basis(int k) const {
    if (k < 0 || k >= n_) throw ArgumentError("hr_basis index out of range");
    Vec v(n_, 0.0);
    v[k] = r_[k];
    return v;
}

ModelConstants compute_constants(const SpectralModel& model, double M) {
    if (!(M >= 0) || !std::isfinite(M)) throw ConfigError("derivative bound M must be nonnegative");
    ModelConstants c;
    double rn = model.r_norm();
    c.w_R = model.w_R();
    c.M = M;
    c.zeta_R = c.w_R + rn * M;
    c.M2 = M * rn * rn;
    c.M3 = M * std::max(3.0 * c.M2, rn) * rn * rn;
    c.B = 1.0;
    c.theta = c.w_R;
    return c;
}

KBounds k_bounds(double t, double z) {
    if (!(t > 0)) throw ArgumentError("k_bounds: t must be positive");
    KBounds k;
    if (z == 0.0) {
        k.K1 = t;
        k.K2 = 0.5 * t * t + t;
        k.majorant = std::numeric_limits<double>::quiet_NaN();
        return k;
    }
    double e = std::exp(t * z);
    double q = std::expm1(t * z) / z;   // (e^{tz}-1)/z without cancellation
    k.K1 = e * q;
    // K2 = (2z^2)^{-1} e^{tz}(e^{tz}-1)(e^{tz}-1+z(e^{tz}+1))
    k.K2 = 0.5 * e * q * (q + e + 1.0);
    k.majorant = (1.0 + std::abs(z)) / (z * z) * std::max(e, std::exp(3.0 * t * z));
    return k;
}

double euclid_norm(const Vec& x) {
    double s = 0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
}

}  // namespace spdelab

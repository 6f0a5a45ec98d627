// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

namespace spdelab {

using Vec = std::vector<double>;

// Diagonal truncation: Q = diag(lambda_k), A = -1/2 Q^{-beta}, R = Q^{rho}.
class SpectralModel {
public:
    struct Params {
        int n = 8;
        Vec q_eigs;               // empty -> k^-q_power
        double q_power = 2.0;
        double beta = 1.0;
        double rho = 0.5;
        double trace_exponent = 0.5;
        double noise_scale = 1.0;
    };

    explicit SpectralModel(const Params& p);

    int n() const { return n_; }
    const Vec& q_eigs() const { return lambda_; }
    const Vec& a() const { return a_; }   // eigenvalues of A
    const Vec& r() const { return r_; }   // eigenvalues of R
    double beta() const { return beta_; }
    double rho() const { return rho_; }
    double trace_exponent() const { return eta_; }
    double noise_scale() const { return noise_scale_; }

    double w_R() const;      // max_k a_k
    double r_norm() const;   // max_k r_k

    // int_0^1 t^{-eta} sum_k r_k^2 e^{2 a_k t} dt, closed form per mode
    double trace_integral() const;

    double hr_inner(const Vec& x, const Vec& y) const;
    double hr_norm(const Vec& x) const;
    Vec apply_exp_A(double t, const Vec& x) const;

    // unit H_R vector along e_k: r_k e_k
    Vec hr_basis(int k) const;

private:
    void check_dim(const Vec& x) const;

    int n_;
    Vec lambda_, a_, r_;
    double beta_, rho_, eta_, noise_scale_;
};

struct ModelConstants {
    double zeta_R = 0;
    double w_R = 0;
    double M = 0;
    double M2 = 0;
    double M3 = 0;
    double B = 1;
    double theta = 0;
};

ModelConstants compute_constants(const SpectralModel& model, double M);

struct KBounds {
    double K1 = 0;
    double K2 = 0;
    double majorant = 0;   // (1+|z|)/z^2 max{e^{tz}, e^{3tz}}; NaN at z == 0
};

KBounds k_bounds(double t, double zeta_R);

double euclid_norm(const Vec& x);

}  // namespace spdelab

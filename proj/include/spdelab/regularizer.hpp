// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "spdelab/fields.hpp"

namespace spdelab {

struct EnvelopeConfig {
    double epsilon = 0.1;
    // H_R-norm caps for the inner inf (k) and outer sup (h); 0 picks the
    // localisation radii 2 sqrt(eps ||f||) and sqrt(2 eps ||f||)
    double radius_inner = 0;
    double radius_outer = 0;
    enum class Optimizer { Auto, Grid, Descent } optimizer = Optimizer::Auto;
    int grid_resolution = 401;   // per axis in 1-d; sqrt-ish in 2-d
    int max_iters = 40;          // coordinate sweeps (descent)
    double tol = 0;   // golden bracket; 0 runs to floating resolution
    int subspace_dims = -1;      // -1 -> min(n, 4)
    int multistart = 3;
};

struct EnvelopeResult {
    double value = 0;
    Vec h_star, k_star;          // in X coordinates
    bool boundary_warning = false;
    double radius_inner = 0, radius_outer = 0;
};

EnvelopeResult ll_regularize(const ScalarField& f, const Vec& x, const EnvelopeConfig& cfg,
                             const SpectralModel& model);

// alpha-dependent localisation radii for ||k*||_R and ||h*||_R
double truman_radius(double alpha, double seminorm, double eps);
double discipline_radius(double alpha, double seminorm, double eps, double c_alpha);

struct LLBoundsReport {
    Vec epsilons;
    Vec err_sup;        // max_probe (f - f_eps)
    Vec grad_sup;       // max_probe ||grad_R f_eps|| (central differences)
    Vec fe_sup;         // max_probe |f_eps|
    double err_slope = 0, err_slope_ci = 0;
    double grad_slope = 0, grad_slope_ci = 0;
    double c_alpha = 0;
    double min_gap = 0;         // min_probe (f - f_eps), should be >= 0
    double max_excess = 0;      // max_probe |f_eps| - ||f||_inf, should be <= 0
    bool boundary_warning = false;
    bool degenerate = false;    // f - f_eps == 0 everywhere: slopes undefined
    bool radii_dominate = true; // cfg radii >= 2x the fitted localisation radii
};

std::vector<Vec> envelope_probe_points(const SpectralModel& model, int n_log, double min_scale);

LLBoundsReport verify_ll_bounds(const ScalarField& f, const Vec& epsilons, const std::vector<Vec>& probe,
                                const EnvelopeConfig& base, const SpectralModel& model);

struct KFunctionalResult {
    double r = 0;
    double bound = 0;           // min(decomposition, trivial splits)
    double decomposition = 0;   // ||f - f_e|| + r (||f_e|| + ||grad f_e||), e = r^{2-alpha}
    double trivial_a = 0;       // ||f||_inf            (a = f, b = 0)
    double trivial_b = 0;       // r ||f||_X            (a = 0, b = f), inf if f not in X
    double err_sup = 0, fe_sup = 0, grad_sup = 0;
};

KFunctionalResult k_functional(const ScalarField& f, double r, double alpha, const std::vector<Vec>& probe,
                               const EnvelopeConfig& base, const SpectralModel& model);

}  // namespace spdelab

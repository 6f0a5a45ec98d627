// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "spdelab/estimators.hpp"

namespace spdelab {

// Composite rule on (0, t_cut] for int e^{-lambda s} g(s) ds. Cell j is
// [tau_j, tau_{j+1}], tau_j = (j/J)^grading t_cut. With kappa = 0 the node is
// the e^{-lambda s}-weighted midpoint of the cell; with kappa > 0 it is placed
// so the rule is exact for g = s^{-kappa}, the blow-up of derivative integrands.
// weights[j] * exp(-lambda nodes[j]) is the exact cell integral of e^{-lambda s}.
struct QuadratureScheme {
    double lambda = 1;
    double t_cut = 0;
    double grading = 2;
    double kappa = 0;
    Vec edges, nodes, weights;
    double tail_bound = 0;     // e^{-lambda t_cut} ||f||_inf / lambda
    bool tail_caveat = false;  // lambda <= 4|zeta_R|: only e^{-lambda t_cut} is controlled

    double discounted(std::size_t j) const;
    // |sum_j discounted(j) - (1 - e^{-lambda t_cut}) / lambda|
    double exactness_error() const;
};

// t_cut = 0 picks e^{-(lambda - 4|zeta|) t_cut} = 1e-4 (or e^{-lambda t_cut} = 1e-4)
QuadratureScheme make_quadrature(double lambda, double zeta_R, int n_nodes, double grading, double sup_f,
                                 double t_cut = 0, double kappa = 0);

// grading and blow-up exponent (order - alpha)/2 for an order-i derivative
// integrand of an alpha-Holder field (alpha = 0 for plain BUC)
double default_grading(int order, double alpha);
double singularity_exponent(int order, double alpha);

struct SolverParams {
    long n_paths = 4000;
    long n_inner = 4;
    int n_nodes = 16;
    std::uint64_t seed = 1;
    double error_budget = 1e-3;   // bound for the analytic tail
};

// u(x) = sum_j w_j P(s_j) f(x), tail reported in the scheme
MCEstimate resolvent(const McContext& c, const ScalarField& f, const Vec& x, const QuadratureScheme& q,
                     const SolverParams& p);

// D^order_R u(x) along dirs[0] (and dirs[1] for order 2)
MCEstimate resolvent_d(const McContext& c, const ScalarField& f, const Vec& x, const std::vector<Vec>& dirs,
                       int order, const QuadratureScheme& q, const SolverParams& p);

// per-sample versions; sample i depends on (seed, i) only. `centre` is
// subtracted from f before the derivative weights (exact control variate).
double resolvent_sample(const McContext& c, const ScalarField& f, const Vec& x, const QuadratureScheme& q,
                        std::uint64_t seed, std::uint64_t i);
double resolvent_d_sample(const McContext& c, const ScalarField& f, double centre, const Vec& x,
                          const std::vector<Vec>& dirs, int order, long n_inner, const QuadratureScheme& q,
                          std::uint64_t seed, std::uint64_t i);

// u(x) against e^{-lambda tau} E u(X(tau,x)) + int_0^tau e^{-lambda s} P(s) f(x) ds
struct SplitResult {
    double tau = 0;
    MCEstimate lhs, rhs;
    double z = 0;   // (lhs - rhs) / combined se
};

SplitResult resolvent_split(const McContext& c, const ScalarField& f, const Vec& x, double tau,
                            const QuadratureScheme& q, const SolverParams& p);
// several tau against one shared estimate of u(x)
std::vector<SplitResult> resolvent_split(const McContext& c, const ScalarField& f, const Vec& x, const Vec& taus,
                                         const QuadratureScheme& q, const SolverParams& p);

// ---- stabilisation probes -------------------------------------------------

struct StabilityProbe {
    std::vector<Vec> points;
    std::vector<Vec> directions;   // unit H_R
    Vec scales;                    // dyadic, decreasing
};

struct ScaleSeries {
    double alpha = 0;              // exponent in the quotient (1 for Zygmund)
    Vec quotients, noise;          // max over probe pairs, with its standard error
    std::vector<bool> excluded;    // noise-dominated (quotient < 3 noise)
    double spread = 1;             // max / min over kept scales
    bool stable = false;           // >= 3 kept scales and spread <= 2
    bool diverging = false;        // spread > 2 and the smallest kept scale is largest
};

struct StabilityReport {
    Vec scales;
    ScaleSeries primary;           // Holder alpha of D^2 u, or Zygmund of D u
    ScaleSeries control;           // misdeclared alpha (Schauder) or Holder 0.99 (Zygmund)
    double sup_u = 0, sup_du = 0, sup_d2u = 0;
    double fitted_C = 0;
    bool lambda_caveat = false;    // lambda <= 4 |zeta_R|
};

// Holder quotients of x -> D^2_R u(x)[e,e]
StabilityReport schauder_probe(const McContext& c, const ScalarField& f, const StabilityProbe& probe,
                               double alpha, double control_alpha,
                               const QuadratureScheme& q, const SolverParams& p);

// Zygmund quotients of x -> D_R u(x) over an orthonormal frame of the first
// frame_dims H_R basis vectors
StabilityReport zygmund_probe(const McContext& c, const ScalarField& f, const StabilityProbe& probe,
                              int frame_dims, double control_alpha, const QuadratureScheme& q,
                              const SolverParams& p);

ScaleSeries classify_series(const Vec& quotients, const Vec& noise, double alpha);

// ---- evolution ------------------------------------------------------------

struct TimeField {
    std::string name;
    double sup_bound = 0;
    std::function<double(double, const double*)> eval;   // (s, x)
};

TimeField constant_time_field(double c);
TimeField frozen_time_field(const ScalarField& f);

// v(t,x) = P(t) f(x) + sum_j w_j P(t - s_j) g(s_j)(x), midpoint nodes on (0,t];
// g == nullptr returns estimate_pt
MCEstimate evolve(const McContext& c, const ScalarField& f, const TimeField* g, double t, const Vec& x,
                  int n_nodes, long n_paths, std::uint64_t seed);

// D^2_R v(t,x)[h,k] through the same node layout
MCEstimate evolve_d2(const McContext& c, const ScalarField& f, const TimeField* g, double t, const Vec& x,
                     const Vec& h, const Vec& k, int n_nodes, long n_paths, long n_inner, std::uint64_t seed);

// ---- Picard solver for psi - T psi = f ----------------------------------

// F : X -> H_R, returned in X coordinates
struct VectorField {
    std::string name;
    double sup_norm_R = 0;
    std::function<void(const double*, double*)> eval;
};

VectorField constant_vector_field(const Vec& v, const SpectralModel& model);

struct SchvarConfig {
    int lattice = 5;           // points per axis
    double half_width = 1.5;   // lattice spans [-w, w] in H_R coordinates
    int frame_dims = 2;
    int max_iters = 30;
    double tol = 1e-13;        // stop when sup |psi_{m+1} - psi_m| < tol
};

struct SchvarResult {
    std::vector<Vec> lattice_points;
    Vec f_values, psi;
    Vec trace;                 // sup |psi_{m+1} - psi_m|, m = 0, 1, ...
    Vec ratios;                // trace[m+1] / trace[m]
    // sqrt(trace[m+2] / trace[m]); T anticommutes with reflections that flip
    // F, so its spectrum comes in +-mu pairs and one-step ratios alternate
    Vec rates;
    double contraction = 0;    // ||T||_inf of the assembled operator
    double residual = 0;       // sup |psi - T' psi - f| with an independent T'
    double residual_sigma = 0; // sup of the propagated standard error
    int iterations = 0;
    bool converged = false;
};

SchvarResult schvar_solve(const McContext& c, const VectorField& F, const ScalarField& f, const SchvarConfig& cfg,
                          const QuadratureScheme& q, const SolverParams& p);

}  // namespace spdelab

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "spdelab/engine.hpp"
#include "spdelab/fields.hpp"

namespace spdelab {

struct MCEstimate {
    double value = 0;
    double std_error = 0;
    long n_outer = 0;
    long n_inner = 0;
    std::uint64_t seed = 0;
    double t = 0;
    double inner_variance = 0;   // part of the outer-sample variance owed to inner noise
};

// Time stepping used by every estimator: step <= dt, and at least
// min_steps steps on any horizon (keeps short horizons resolved).
struct McContext {
    const Engine& engine;
    double dt = 1e-2;
    int min_steps = 4;
    double t_min_d3 = 0.0;
    bool d3_fast_mode = false;   // drop the delta_2 transport term in bel_d3
};

// mean and standard error of index-ordered samples (Welford, sequential)
MCEstimate reduce_samples(const std::vector<double>& s, std::uint64_t seed, double t);

MCEstimate estimate_pt(const McContext& c, const ScalarField& f, double t, const Vec& x, long n_paths,
                       std::uint64_t seed);
MCEstimate bel_d1(const McContext& c, const ScalarField& f, double t, const Vec& x, const Vec& h,
                  long n_paths, std::uint64_t seed);
MCEstimate bel_d2(const McContext& c, const ScalarField& f, double t, const Vec& x, const Vec& h,
                  const Vec& k, long n_outer, long n_inner, std::uint64_t seed);
MCEstimate bel_d3(const McContext& c, const ScalarField& f, double t, const Vec& x, const Vec& h,
                  const Vec& k, const Vec& j, long n_outer, long n_inner, std::uint64_t seed);
MCEstimate bel_d1_smooth(const McContext& c, const ScalarField& f, double t, const Vec& x,
                         const Vec& h, long n_paths, std::uint64_t seed);
MCEstimate bel_d2_smooth(const McContext& c, const ScalarField& f, double t, const Vec& x,
                         const Vec& h, const Vec& k, long n_paths, std::uint64_t seed);

// Per-path samples behind the estimates above; sample i depends only on
// (seed, i), so samples at different x pair up under common random numbers.
double pt_sample(const McContext& c, const ScalarField& f, double t, const Vec& x, std::uint64_t seed,
                 std::uint64_t i);
double d1_sample(const McContext& c, const ScalarField& f, double t, const Vec& x, const Vec& h,
                 std::uint64_t seed, std::uint64_t i);
double d2_sample(const McContext& c, const ScalarField& f, double t, const Vec& x, const Vec& h,
                 const Vec& k, long n_inner, std::uint64_t seed, std::uint64_t i,
                 double* inner_var = nullptr);

// finite-difference step: budget^{1/3} ||h||_R clamped to [1e-4, 1e-1]
double fd_step(double se_budget, double h_norm_R);

// (P(t)f(x+sh) - P(t)f(x-sh)) / 2s with common random numbers
MCEstimate fd_d1(const McContext& c, const ScalarField& f, double t, const Vec& x, const Vec& h,
                 double s, long n_paths, std::uint64_t seed);
// (bel_d1(x+sk) - bel_d1(x-sk)) / 2s along k, common random numbers
MCEstimate fd_d2(const McContext& c, const ScalarField& f, double t, const Vec& x, const Vec& h,
                 const Vec& k, double s, long n_paths, std::uint64_t seed);

// ---- decay fits -----------------------------------------------------------

struct RateFit {
    Vec times, values, std_errors;
    std::vector<bool> used;
    double slope = 0;
    double slope_ci = 0;   // 95% half-width
    double intercept = 0;
    double residual = 0;   // rms of log residuals
    std::vector<double> excluded;   // times dropped for se/value > 0.2
};

// log-log least squares; throws when fewer than 4 points survive
RateFit fit_log_log(const Vec& times, const Vec& values, const Vec& std_errors);

enum class DecayEstimator { D1, D2, D3, D1Smooth, D2Smooth };

struct DecaySpec {
    DecayEstimator estimator = DecayEstimator::D1;
    std::vector<Vec> points;
    std::vector<Vec> directions;   // unit H_R; the same direction is used in every slot
    Vec times;
    long n_outer = 10000;
    long n_inner = 32;
    std::uint64_t seed = 0;
};

// for each t: max over (point, direction) of |estimate| / class norm, then fit
RateFit fit_decay_rate(const McContext& c, const ScalarField& f, const DecaySpec& spec);

}  // namespace spdelab

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>

#include "spdelab/spectral_model.hpp"

namespace spdelab {

struct SeminormProbe {
    std::vector<Vec> points;
    std::vector<Vec> directions;   // unit H_R
    Vec scales;                    // strictly decreasing, >= 3 entries
};

// origin plus (n_points-1) random states in a ball, basis directions r_k e_k
// for k < min(4,n) plus random unit H_R directions, scales 2^-1 .. 2^-n_scales
SeminormProbe default_probe(const SpectralModel& model, std::uint64_t seed, int n_points = 16,
                            int n_dirs = 8, int n_scales = 8, double radius = 2.0);

void validate_probe(const SeminormProbe& probe);

struct SeminormResult {
    double estimate = 0;
    Vec per_scale;   // max quotient at each scale
};

using VecMap = std::function<Vec(const Vec&)>;

// sup |f(x+h) - f(x)| / ||h||_R^alpha
SeminormResult holder_seminorm(const VecMap& f, double alpha, const SeminormProbe& probe);
// sup |f(x+2h) - 2 f(x+h) + f(x)| / ||h||_R
SeminormResult zygmund_seminorm(const VecMap& f, const SeminormProbe& probe);

// random unit-H_R direction from a counter-based stream
Vec random_hr_direction(const SpectralModel& model, std::uint64_t seed, std::uint64_t index);
Vec random_ball_point(const SpectralModel& model, std::uint64_t seed, std::uint64_t index,
                      double radius);

}  // namespace spdelab

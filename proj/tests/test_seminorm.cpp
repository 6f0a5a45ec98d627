// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>

#include "spdelab/errors.hpp"
#include "spdelab/seminorm.hpp"

using namespace spdelab;

TEST(Seminorm, LinearFunctionalAlongFirstMode) {
    const SpectralModel m{SpectralModel::Params{}};
    const SeminormProbe p = default_probe(m, 3);
    // |h_1| <= r_1 ||h||_R, equality along r_1 e_1
    auto f = [](const Vec& x) { return Vec{x[0]}; };
    EXPECT_NEAR(holder_seminorm(f, 1.0, p).estimate, m.r()[0], 1e-12);
    EXPECT_NEAR(zygmund_seminorm(f, p).estimate, 0.0, 1e-12);
}

TEST(Seminorm, SquareRootHolderOfAbs) {
    const SpectralModel m{SpectralModel::Params{}};
    const SeminormProbe p = default_probe(m, 3);
    auto f = [](const Vec& x) { return Vec{std::sqrt(std::abs(x[0]))}; };
    // sqrt|.| is 1/2-Holder with constant 1 on the line; along r_1 e_1 the
    // quotient from the origin is exactly r_1^{1/2}
    const double s = holder_seminorm(f, 0.5, p).estimate;
    EXPECT_LE(s, std::sqrt(m.r()[0]) + 1e-12);
    EXPECT_NEAR(s, std::sqrt(m.r()[0]), 1e-12);
}

TEST(Seminorm, ProbeValidation) {
    SeminormProbe p;
    p.points = {Vec{0.0}};
    p.directions = {Vec{1.0}};
    p.scales = {0.5, 0.25};
    EXPECT_THROW(validate_probe(p), ArgumentError);
}

TEST(Seminorm, RandomDirectionsAreUnit) {
    const SpectralModel m{SpectralModel::Params{}};
    for (std::uint64_t i = 0; i < 20; ++i) EXPECT_NEAR(m.hr_norm(random_hr_direction(m, 9, i)), 1.0, 1e-12);
}

// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "spdelab/regularizer.hpp"

using namespace spdelab;

namespace {

SpectralModel line() {
    SpectralModel::Params p;
    p.n = 1;
    p.q_eigs = {1.0};
    return SpectralModel(p);
}

// sup_h inf_k f(x + h - k) + k^2/(2 eps) - h^2/eps by exhaustive grid
double brute(const ScalarField& f, double x, double eps, double step) {
    const double R = 3 * std::sqrt(eps);
    const long m = long(std::ceil(R / step));
    double best = -1e300;
    for (long a = -m; a <= m; ++a) {
        const double h = a * step;
        double inf = 1e300;
        for (long b = -m; b <= m; ++b) {
            const double k = b * step, y = x + h - k;
            inf = std::min(inf, f.eval(&y) + k * k / (2 * eps));
        }
        best = std::max(best, inf - h * h / eps);
    }
    return best;
}

}  // namespace

TEST(Envelope, MatchesBruteForceOnTheLine) {
    const SpectralModel m = line();
    const ScalarField f = make_field("holder:alpha=0.5", m);
    EnvelopeConfig c;
    c.epsilon = 0.02;
    c.subspace_dims = 1;
    for (double x : {-0.4, 0.0, 0.05, 0.7}) {
        const double v = ll_regularize(f, Vec{x}, c, m).value;
        EXPECT_NEAR(v, brute(f, x, c.epsilon, 5e-4), 2e-3) << "x = " << x;
        EXPECT_LE(v, f(Vec{x}) + 1e-10);
    }
}

TEST(Envelope, ConstantIsFixed) {
    const SpectralModel m{SpectralModel::Params{}};
    const ScalarField f = make_field("const:c=0.7", m);
    EnvelopeConfig c;
    c.epsilon = 0.1;
    EXPECT_NEAR(ll_regularize(f, Vec(8, 0.3), c, m).value, 0.7, 1e-12);
}

TEST(Envelope, OrderingAndSupBoundOnProbe) {
    const SpectralModel m{SpectralModel::Params{}};
    const ScalarField f = make_field("lacunary:alpha=0.5", m);
    const auto probe = envelope_probe_points(m, 3, 0.05);
    ASSERT_FALSE(probe.empty());
    EnvelopeConfig c;
    c.epsilon = 0.01;
    for (const Vec& x : probe) {
        const double v = ll_regularize(f, x, c, m).value;
        EXPECT_LE(v, f(x) + 1e-10);
        EXPECT_LE(std::abs(v), f.sup_bound + 1e-10);
    }
}

TEST(Envelope, ApproximationErrorShrinksWithEpsilon) {
    const SpectralModel m = line();
    const ScalarField f = make_field("holder:alpha=0.5", m);
    EnvelopeConfig c;
    c.subspace_dims = 1;
    double prev = 1e300;
    for (double eps : {0.1, 0.01, 0.001}) {
        c.epsilon = eps;
        const double gap = f(Vec{0.3}) - ll_regularize(f, Vec{0.3}, c, m).value;
        EXPECT_GE(gap, -1e-10);
        EXPECT_LT(gap, prev);
        prev = gap;
    }
}

TEST(Envelope, RadiiArePositiveAndScaleWithEpsilon) {
    const double a = truman_radius(0.5, 1.0, 0.01), b = truman_radius(0.5, 1.0, 0.04);
    EXPECT_GT(a, 0);
    EXPECT_GT(b, a);
    EXPECT_GT(discipline_radius(0.5, 1.0, 0.01, 1.0), 0);
}

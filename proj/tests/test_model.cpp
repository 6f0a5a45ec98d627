// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "spdelab/errors.hpp"
#include "spdelab/spectral_model.hpp"

using namespace spdelab;

namespace {
SpectralModel one_mode(double rho) {
    SpectralModel::Params p;
    p.n = 1;
    p.q_eigs = {1.0};
    p.rho = rho;
    return SpectralModel(p);
}
}  // namespace

TEST(Constants, DissipativityExamples) {
    EXPECT_DOUBLE_EQ(compute_constants(one_mode(0.5), 0.0).zeta_R, -0.5);
    EXPECT_NEAR(compute_constants(one_mode(0.0), 0.1).zeta_R, -0.4, 1e-15);
}

TEST(Constants, DefaultModelEigenvalues) {
    SpectralModel m{SpectralModel::Params{}};
    ASSERT_EQ(m.n(), 8);
    for (int k = 1; k <= 8; ++k) {
        const double lam = 1.0 / (k * k);
        EXPECT_NEAR(m.q_eigs()[k - 1], lam, 1e-15);
        EXPECT_NEAR(m.a()[k - 1], -0.5 / lam, 1e-12);
        EXPECT_NEAR(m.r()[k - 1], std::sqrt(lam), 1e-15);
        EXPECT_NEAR(m.hr_norm(m.hr_basis(k - 1)), 1.0, 1e-15);
    }
    EXPECT_DOUBLE_EQ(m.w_R(), -0.5);
}

TEST(Constants, TraceIntegralAgainstQuadrature) {
    SpectralModel m{SpectralModel::Params{}};
    // substitute t = u^2 to remove the t^-1/2 singularity, then Simpson
    const int N = 20000;
    double s = 0;
    for (int i = 0; i <= N; ++i) {
        const double u = double(i) / N, w = (i == 0 || i == N) ? 1 : (i % 2 ? 4 : 2);
        double g = 0;
        for (int k = 0; k < m.n(); ++k) g += m.r()[k] * m.r()[k] * std::exp(2 * m.a()[k] * u * u);
        s += w * 2 * g;   // t^{-1/2} dt = 2 du
    }
    EXPECT_NEAR(m.trace_integral(), s / (3.0 * N), 1e-9);
}

TEST(Constants, RejectsBadModel) {
    SpectralModel::Params p;
    p.q_eigs = {1.0, -0.5};
    p.n = 2;
    EXPECT_THROW(SpectralModel{p}, ConfigError);
}

TEST(KBounds, ClosedFormValues) {
    EXPECT_DOUBLE_EQ(k_bounds(1.0, 0.0).K1, 1.0);
    EXPECT_DOUBLE_EQ(k_bounds(1.0, 0.0).K2, 1.5);
    EXPECT_NEAR(k_bounds(std::log(2.0), 1.0).K1, 2.0, 1e-14);
}

TEST(KBounds, MatchesTwoBranchFormula) {
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> T(0.01, 3), Z(-2, 2);
    for (int i = 0; i < 100; ++i) {
        const double t = T(gen), z = Z(gen);
        const double e = std::exp(t * z);
        const double k1 = e * (e - 1) / z;
        const double k2 = e * (e - 1) * ((1 + z) * e + z - 1) / (2 * z * z);
        const KBounds k = k_bounds(t, z);
        EXPECT_NEAR(k.K1, k1, 1e-10 * (1 + std::abs(k1)));
        EXPECT_NEAR(k.K2, k2, 1e-9 * (1 + std::abs(k2)));
        EXPECT_LE(std::max(k.K1, k.K2), k.majorant * (1 + 1e-12));
    }
}

TEST(KBounds, ContinuousAtZero) {
    for (double t : {0.1, 1.0, 2.5}) {
        EXPECT_NEAR(k_bounds(t, 1e-9).K1, t, 1e-7);
        EXPECT_NEAR(k_bounds(t, -1e-9).K2, 0.5 * t * t + t, 1e-7);
    }
    EXPECT_THROW(k_bounds(0.0, 0.1), ArgumentError);
}

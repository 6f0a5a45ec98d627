// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <string>

#include "spdelab/nonlinearity.hpp"

using namespace spdelab;

namespace {

using Vec = std::vector<double>;

Vec rand_vec(std::mt19937_64& g, int n, double scale) {
    std::normal_distribution<double> N(0, scale);
    Vec v(n);
    for (auto& x : v) x = N(g);
    return v;
}

Vec unit(Vec v) {
    double s = 0;
    for (double x : v) s += x * x;
    for (double& x : v) x /= std::sqrt(s);
    return v;
}

Vec axpy(const Vec& x, double s, const Vec& h) {
    Vec y = x;
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += s * h[i];
    return y;
}

double norm(const Vec& v) {
    double s = 0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

class RadialTest : public ::testing::TestWithParam<RadialNonlinearity::Kind> {};

}  // namespace

TEST_P(RadialTest, DerivativesMatchCentralDifferences) {
    const int n = 5;
    RadialNonlinearity G(n, GetParam(), 0.7, 1, 0);
    std::mt19937_64 gen(3);
    const double s = 1e-5;
    for (int trial = 0; trial < 20; ++trial) {
        Vec x = rand_vec(gen, n, 0.8), h = rand_vec(gen, n, 1), k = rand_vec(gen, n, 1), j = rand_vec(gen, n, 1);
        Vec gp(n), gm(n), d(n), dp(n), dm(n);
        G.eval(axpy(x, s, h).data(), gp.data());
        G.eval(axpy(x, -s, h).data(), gm.data());
        G.d1(x.data(), h.data(), d.data());
        for (int i = 0; i < n; ++i) EXPECT_NEAR(d[i], (gp[i] - gm[i]) / (2 * s), 1e-7);

        G.d1(axpy(x, s, k).data(), h.data(), dp.data());
        G.d1(axpy(x, -s, k).data(), h.data(), dm.data());
        G.d2(x.data(), h.data(), k.data(), d.data());
        for (int i = 0; i < n; ++i) EXPECT_NEAR(d[i], (dp[i] - dm[i]) / (2 * s), 1e-6);

        G.d2(axpy(x, s, j).data(), h.data(), k.data(), dp.data());
        G.d2(axpy(x, -s, j).data(), h.data(), k.data(), dm.data());
        G.d3(x.data(), h.data(), k.data(), j.data(), d.data());
        for (int i = 0; i < n; ++i) EXPECT_NEAR(d[i], (dp[i] - dm[i]) / (2 * s), 1e-5);
    }
}

TEST_P(RadialTest, DerivativeBoundHoldsOnSamples) {
    const int n = 4;
    RadialNonlinearity G(n, GetParam(), 1.0, 0, 0.1);
    EXPECT_NEAR(G.M(), 0.1, 1e-12);
    std::mt19937_64 gen(11);
    Vec d(n);
    double worst = 0;
    for (int trial = 0; trial < 20000; ++trial) {
        Vec x = rand_vec(gen, n, trial % 2 ? 0.3 : 1.5);
        Vec h = unit(rand_vec(gen, n, 1)), k = unit(rand_vec(gen, n, 1)), j = unit(rand_vec(gen, n, 1));
        G.d1(x.data(), h.data(), d.data());
        worst = std::max(worst, norm(d));
        G.d2(x.data(), h.data(), k.data(), d.data());
        worst = std::max(worst, norm(d));
        G.d3(x.data(), h.data(), k.data(), j.data(), d.data());
        worst = std::max(worst, norm(d));
    }
    EXPECT_LE(worst, G.M());
    EXPECT_GT(worst, 0.2 * G.M());
}

INSTANTIATE_TEST_SUITE_P(Kinds, RadialTest,
                         ::testing::Values(RadialNonlinearity::Kind::Fixed, RadialNonlinearity::Kind::Scaled),
                         [](const auto& info) {
                             return std::string(info.param == RadialNonlinearity::Kind::Fixed ? "Fixed" : "Scaled");
                         });

TEST(ZeroNonlinearity, AllZero) {
    auto g = make_zero(3);
    EXPECT_TRUE(g->is_zero());
    Vec x{1, 2, 3}, out(3, 9.0);
    g->d2(x.data(), x.data(), x.data(), out.data());
    for (double v : out) EXPECT_EQ(v, 0.0);
}

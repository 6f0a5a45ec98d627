// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>

#include "spdelab/estimators.hpp"
#include "spdelab/parallel.hpp"

using namespace spdelab;

namespace {

// X_1(t) for G = 0 is Gaussian: mean e^{a t} x_1, variance r^2 (e^{2at} - 1) / 2a
struct Ou1 {
    double E, m, v;
    Ou1(double a, double r, double t, double x1)
        : E(std::exp(a * t)), m(E * x1), v(r * r * (std::exp(2 * a * t) - 1) / (2 * a)) {}
};

struct Fixture {
    SpectralModel model{SpectralModel::Params{}};
    std::unique_ptr<Nonlinearity> g = make_zero(model.n());
    Engine engine{model, *g};
    McContext mc{engine, 0.0025, 4};
    ScalarField f = make_field("sin:omega=1", model);
    Vec x = [] {
        Vec v(8, 0.0);
        v[0] = 0.3;
        v[1] = -0.2;
        return v;
    }();
};

}  // namespace

TEST(Estimators, TransitionMatchesClosedForm) {
    Fixture F;
    const double t = 0.5;
    const Ou1 o(F.model.a()[0], F.model.r()[0], t, F.x[0]);
    const double want = std::sin(o.m) * std::exp(-o.v / 2);
    const MCEstimate e = estimate_pt(F.mc, F.f, t, F.x, 20000, 4);
    EXPECT_GT(e.std_error, 0);
    EXPECT_NEAR(e.value, want, 4 * e.std_error);
}

TEST(Estimators, FirstDerivativeMatchesClosedForm) {
    Fixture F;
    const double t = 0.5, r1 = F.model.r()[0];
    const Ou1 o(F.model.a()[0], r1, t, F.x[0]);
    const double want = std::cos(o.m) * o.E * r1 * std::exp(-o.v / 2);
    const Vec h = F.model.hr_basis(0);
    const MCEstimate e = bel_d1(F.mc, F.f, t, F.x, h, 20000, 6);
    EXPECT_NEAR(e.value, want, 4 * e.std_error);
    const MCEstimate s = bel_d1_smooth(F.mc, F.f, t, F.x, h, 20000, 6);
    EXPECT_NEAR(s.value, want, 4 * s.std_error + 1e-12);
}

TEST(Estimators, SecondDerivativeMatchesClosedForm) {
    Fixture F;
    const double t = 1.0, r1 = F.model.r()[0];
    const Ou1 o(F.model.a()[0], r1, t, F.x[0]);
    const double want = -std::sin(o.m) * o.E * o.E * r1 * r1 * std::exp(-o.v / 2);
    const Vec h = F.model.hr_basis(0);
    McContext mc = F.mc;
    mc.dt = 0.01;
    const MCEstimate e = bel_d2(mc, F.f, t, F.x, h, h, 4000, 16, 8);
    EXPECT_NEAR(e.value, want, 4 * e.std_error);
}

TEST(Estimators, ThreadCountDoesNotChangeBits) {
    Fixture F;
    const int saved = threads();
    set_threads(1);
    const MCEstimate a = bel_d1(F.mc, F.f, 0.3, F.x, F.model.hr_basis(1), 3000, 17);
    set_threads(3);
    const MCEstimate b = bel_d1(F.mc, F.f, 0.3, F.x, F.model.hr_basis(1), 3000, 17);
    set_threads(saved);
    EXPECT_EQ(a.value, b.value);
    EXPECT_EQ(a.std_error, b.std_error);
}

TEST(Estimators, ReduceSamplesMeanAndError) {
    std::vector<double> s{1, 2, 3, 4, 5, 6};
    const MCEstimate e = reduce_samples(s, 0, 0);
    EXPECT_DOUBLE_EQ(e.value, 3.5);
    // sample variance 3.5, se = sqrt(3.5 / 6)
    EXPECT_NEAR(e.std_error, std::sqrt(3.5 / 6), 1e-14);
}

TEST(Estimators, FitRecoversExactPowerLaw) {
    Vec t, v, se;
    for (int i = 0; i < 8; ++i) {
        t.push_back(1e-3 * std::pow(10.0, 2.0 * i / 7));
        v.push_back(3 * std::pow(t.back(), -0.5));
        se.push_back(1e-3 * v.back());
    }
    const RateFit fit = fit_log_log(t, v, se);
    EXPECT_NEAR(fit.slope, -0.5, 1e-12);
    EXPECT_NEAR(fit.intercept, std::log(3.0), 1e-10);
    EXPECT_LT(fit.slope_ci, 1e-10);
}

TEST(Estimators, FitDropsNoisyPoints) {
    Vec t{0.001, 0.002, 0.004, 0.008, 0.016, 0.032}, v, se;
    for (double s : t) {
        v.push_back(s);
        se.push_back(0.01 * s);
    }
    se[0] = 0.5 * v[0];
    const RateFit fit = fit_log_log(t, v, se);
    EXPECT_FALSE(fit.used[0]);
    EXPECT_EQ(fit.excluded.size(), 1u);
    EXPECT_NEAR(fit.slope, 1.0, 1e-12);
    se.assign(t.size(), 1.0);
    EXPECT_ANY_THROW(fit_log_log(t, v, se));
}

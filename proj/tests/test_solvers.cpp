// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>

#include "spdelab/errors.hpp"
#include "spdelab/solvers.hpp"

using namespace spdelab;

namespace {

SpectralModel small_model() {
    SpectralModel::Params p;
    p.n = 2;
    return SpectralModel(p);
}

}  // namespace

TEST(Quadrature, DiscountWeightsIntegrateExactly) {
    for (double kappa : {0.0, 0.5, 0.75}) {
        const QuadratureScheme q = make_quadrature(2.0, -0.25, 24, 3.0, 1.0, 0, kappa);
        EXPECT_LT(q.exactness_error(), 1e-12) << "kappa " << kappa;
        EXPECT_FALSE(q.tail_caveat);
        // e^{-(lambda - 4|zeta|) t_cut} = 1e-4
        EXPECT_NEAR(q.t_cut, std::log(1e4), 1e-12);
        EXPECT_NEAR(q.tail_bound, std::exp(-2.0 * q.t_cut) / 2.0, 1e-15);
        for (std::size_t j = 0; j < q.nodes.size(); ++j) {
            EXPECT_GE(q.nodes[j], q.edges[j]);
            EXPECT_LE(q.nodes[j], q.edges[j + 1]);
        }
    }
}

TEST(Quadrature, SmallLambdaRaisesCaveat) {
    const QuadratureScheme q = make_quadrature(1.0, -0.4, 16, 2.0, 1.0);
    EXPECT_TRUE(q.tail_caveat);
    EXPECT_NEAR(std::exp(-q.t_cut), 1e-4, 1e-10);
}

TEST(Quadrature, SingularNodesIntegratePowerExactly) {
    const double kappa = 0.75, lambda = 1.5;
    const QuadratureScheme q = make_quadrature(lambda, 0.0, 8, 4.0, 1.0, 2.0, kappa);
    // per cell: w_j e^{-lambda s_j} s_j^{-kappa} against the exact int e^{-lambda s} s^{-kappa} ds
    for (std::size_t j = 0; j < q.nodes.size(); ++j) {
        const double a = q.edges[j], b = q.edges[j + 1];
        const int N = 200000;
        double s = 0;
        // substitute s = u^{1/(1-kappa)} to flatten the singularity
        const double p = 1 / (1 - kappa), ua = std::pow(a, 1 - kappa), ub = std::pow(b, 1 - kappa);
        for (int i = 0; i < N; ++i) {
            const double u = ua + (ub - ua) * (i + 0.5) / N;
            s += std::exp(-lambda * std::pow(u, p)) * p * (ub - ua) / N;
        }
        EXPECT_NEAR(q.discounted(j) * std::pow(q.nodes[j], -kappa), s, 1e-6 * s) << "cell " << j;
    }
}

TEST(Resolvent, ConstantFieldIsExact) {
    const SpectralModel m{SpectralModel::Params{}};
    auto g = make_zero(m.n());
    Engine e(m, *g);
    McContext mc{e, 0.02, 4};
    const ScalarField f = make_field("const:c=3", m);
    const QuadratureScheme q = make_quadrature(2.0, -0.5, 12, 2.0, 3.0);
    SolverParams p;
    p.n_paths = 50;
    const MCEstimate u = resolvent(mc, f, Vec(m.n(), 0.1), q, p);
    EXPECT_NEAR(u.value, 3 * (1 - std::exp(-2.0 * q.t_cut)) / 2.0, 1e-12);
    EXPECT_EQ(u.std_error, 0.0);
    EXPECT_LE(std::abs(u.value), f.sup_bound / 2.0 + q.tail_bound);
}

TEST(Resolvent, ContractivityAndSplitForSine) {
    const SpectralModel m = small_model();
    RadialNonlinearity g(m.n(), RadialNonlinearity::Kind::Fixed, 1, 0, 0.1);
    Engine e(m, g);
    McContext mc{e, 0.02, 4};
    const ScalarField f = make_field("sin:omega=1", m);
    const double zeta = compute_constants(m, g.M()).zeta_R;
    const QuadratureScheme q = make_quadrature(2.0, zeta, 16, 2.0, 1.0);
    SolverParams p;
    p.n_paths = 1500;
    const Vec x{0.3, -0.2};
    const MCEstimate u = resolvent(mc, f, x, q, p);
    EXPECT_LE(std::abs(u.value), 1.0 / 2.0 + q.tail_bound + 3 * u.std_error);
    for (const SplitResult& s : resolvent_split(mc, f, x, Vec{0.25, 1.0}, q, p)) EXPECT_LT(std::abs(s.z), 4.0);
}

TEST(Evolve, ZeroSourceIsTransitionBitForBit) {
    const SpectralModel m = small_model();
    auto g = make_zero(m.n());
    Engine e(m, *g);
    McContext mc{e, 0.01, 4};
    const ScalarField f = make_field("holder:alpha=0.5", m);
    for (double t : {0.1, 0.7}) {
        const MCEstimate a = evolve(mc, f, nullptr, t, {0.2, 0.1}, 8, 2000, 5);
        const MCEstimate b = estimate_pt(mc, f, t, {0.2, 0.1}, 2000, 5);
        EXPECT_EQ(a.value, b.value);
        EXPECT_EQ(a.std_error, b.std_error);
    }
}

TEST(Evolve, ConstantSourceAddsCTimesT) {
    const SpectralModel m = small_model();
    auto g = make_zero(m.n());
    Engine e(m, *g);
    McContext mc{e, 0.01, 4};
    const ScalarField f = make_field("const:c=0", m);
    const TimeField src = constant_time_field(1.5);
    const MCEstimate v = evolve(mc, f, &src, 0.8, {0.0, 0.0}, 8, 100, 1);
    EXPECT_NEAR(v.value, 1.5 * 0.8, 1e-12);
}

TEST(Schvar, ZeroDriftReturnsData) {
    const SpectralModel m = small_model();
    auto g = make_zero(m.n());
    Engine e(m, *g);
    McContext mc{e, 0.02, 4};
    const ScalarField f = make_field("holder:alpha=0.5", m);
    const QuadratureScheme q = make_quadrature(2.0, -0.5, 8, 2.0, 1.0, 0, 0.5);
    SolverParams p;
    p.n_paths = 200;
    SchvarConfig c;
    c.lattice = 3;
    const SchvarResult r = schvar_solve(mc, constant_vector_field({0.0, 0.0}, m), f, c, q, p);
    ASSERT_EQ(r.psi.size(), r.f_values.size());
    for (std::size_t i = 0; i < r.psi.size(); ++i) EXPECT_EQ(r.psi[i], r.f_values[i]);
    EXPECT_EQ(r.residual, 0.0);
    EXPECT_TRUE(r.converged);
}

TEST(Schvar, ConstantDataIsFixedPoint) {
    const SpectralModel m = small_model();
    auto g = make_zero(m.n());
    Engine e(m, *g);
    McContext mc{e, 0.02, 4};
    const ScalarField f = make_field("const:c=1", m);
    const QuadratureScheme q = make_quadrature(2.0, -0.5, 8, 2.0, 1.0, 0, 0.5);
    SolverParams p;
    p.n_paths = 200;
    SchvarConfig c;
    c.lattice = 3;
    Vec F{0.05 * m.r()[0], 0.0};
    const SchvarResult r = schvar_solve(mc, constant_vector_field(F, m), f, c, q, p);
    for (double v : r.psi) EXPECT_NEAR(v, 1.0, 1e-12);
}

TEST(Schvar, LargeDriftIsRejected) {
    const SpectralModel m = small_model();
    auto g = make_zero(m.n());
    Engine e(m, *g);
    McContext mc{e, 0.02, 4};
    const ScalarField f = make_field("sin:omega=1", m);
    const QuadratureScheme q = make_quadrature(0.5, -0.5, 8, 2.0, 1.0, 0, 0.5);
    SolverParams p;
    p.n_paths = 300;
    SchvarConfig c;
    c.lattice = 3;
    Vec F{50 * m.r()[0], 0.0};
    EXPECT_THROW(schvar_solve(mc, constant_vector_field(F, m), f, c, q, p), DivergenceError);
}

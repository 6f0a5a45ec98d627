// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "spdelab/rng.hpp"

using namespace spdelab;

// Random123 known-answer vectors for philox4x32-10
TEST(Philox, KnownAnswers) {
    using C = Philox4x32::Ctr;
    using K = Philox4x32::Key;
    EXPECT_EQ(Philox4x32::generate(C{0, 0, 0, 0}, K{0, 0}), (C{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}));
    EXPECT_EQ(Philox4x32::generate(C{~0u, ~0u, ~0u, ~0u}, K{~0u, ~0u}),
              (C{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}));
    EXPECT_EQ(Philox4x32::generate(C{0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, K{0xa4093822u, 0x299f31d0u}),
              (C{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u}));
}

TEST(NormalStream, MomentsAndIndependenceOfPaths) {
    const int n = 8;
    double s1 = 0, s2 = 0, s4 = 0, cross = 0;
    long count = 0;
    double a[n], b[n];
    for (std::uint64_t p = 0; p < 4000; ++p) {
        NormalStream s(42, p), t(42, p + 100000);
        for (std::uint64_t step = 0; step < 5; ++step) {
            s.normals(step, n, a);
            t.normals(step, n, b);
            for (int i = 0; i < n; ++i) {
                s1 += a[i];
                s2 += a[i] * a[i];
                s4 += a[i] * a[i] * a[i] * a[i];
                cross += a[i] * b[i];
                ++count;
            }
        }
    }
    const double N = double(count);
    EXPECT_NEAR(s1 / N, 0.0, 4 / std::sqrt(N));
    EXPECT_NEAR(s2 / N, 1.0, 4 * std::sqrt(2 / N));
    EXPECT_NEAR(s4 / N, 3.0, 4 * std::sqrt(96 / N));
    EXPECT_NEAR(cross / N, 0.0, 4 / std::sqrt(N));
}

TEST(NormalStream, PureFunctionOfCounter) {
    double a[5], b[5];
    NormalStream(7, 3).normals(11, 5, a);
    NormalStream other(7, 3);
    other.normals(10, 5, b);
    other.normals(11, 5, b);
    for (int i = 0; i < 5; ++i) EXPECT_EQ(a[i], b[i]);
}

TEST(DeriveSeed, DistinctChildren) {
    std::set<std::uint64_t> seen;
    for (std::uint64_t a = 0; a < 50; ++a)
        for (std::uint64_t b = 0; b < 50; ++b) seen.insert(derive_seed(1, a, b));
    EXPECT_EQ(seen.size(), 2500u);
    EXPECT_NE(derive_seed(1, 0), derive_seed(2, 0));
}

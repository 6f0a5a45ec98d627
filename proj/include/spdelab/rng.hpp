// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace spdelab {

// Philox4x32-10 (Salmon et al., SC'11). Pure function of (counter, key), so
// any path / step can be generated without touching any other.
struct Philox4x32 {
    using Ctr = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static Ctr generate(Ctr c, Key k) {
        for (int round = 0; round < 10; ++round) {
            std::uint64_t p0 = std::uint64_t(0xD2511F53u) * c[0];
            std::uint64_t p1 = std::uint64_t(0xCD9E8D57u) * c[2];
            std::uint32_t hi0 = std::uint32_t(p0 >> 32), lo0 = std::uint32_t(p0);
            std::uint32_t hi1 = std::uint32_t(p1 >> 32), lo1 = std::uint32_t(p1);
            c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
            k[0] += 0x9E3779B9u;
            k[1] += 0xBB67AE85u;
        }
        return c;
    }
};

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

// child seed for a nested / per-node substream
inline std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t a, std::uint64_t b = 0) {
    return splitmix64(splitmix64(parent ^ splitmix64(a + 0x632BE59BD9B4E019ull)) + b);
}

// Gaussian substream for one path: counter = (step, block, path_lo, path_hi), key = seed.
class NormalStream {
public:
    NormalStream(std::uint64_t seed, std::uint64_t path)
        : key_{std::uint32_t(seed), std::uint32_t(seed >> 32)},
          plo_(std::uint32_t(path)), phi_(std::uint32_t(path >> 32)) {}

    // n standard normals for time step `step`
    void normals(std::uint64_t step, int n, double* out) const {
        for (int b = 0; 4 * b < n; ++b) {
            Philox4x32::Ctr c{std::uint32_t(step), std::uint32_t(b) | (std::uint32_t(step >> 32) << 16),
                              plo_, phi_};
            auto r = Philox4x32::generate(c, key_);
            double z[4];
            box_muller(r[0], r[1], z[0], z[1]);
            box_muller(r[2], r[3], z[2], z[3]);
            for (int i = 0; i < 4 && 4 * b + i < n; ++i) out[4 * b + i] = z[i];
        }
    }

private:
    static double unit(std::uint32_t x) { return (double(x) + 0.5) * 2.3283064365386963e-10; }
    static void box_muller(std::uint32_t a, std::uint32_t b, double& z0, double& z1) {
        double rad = std::sqrt(-2.0 * std::log(unit(a)));
        double th = 6.283185307179586 * unit(b);
        z0 = rad * std::cos(th);
        z1 = rad * std::sin(th);
    }

    Philox4x32::Key key_;
    std::uint32_t plo_, phi_;
};

}  // namespace spdelab

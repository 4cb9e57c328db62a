#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

#include "ashe/errors.hpp"

namespace ashe {

// splitmix64 finalizer. Bijective on 64-bit words.
inline uint64_t mix64(uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

inline uint64_t fnv1a64(std::string_view s) {
    uint64_t h = 0xCBF29CE484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ull;
    }
    return h;
}

// Derives an independent stream seed from a master seed, a purpose tag and up
// to three indices. Every consumer of randomness in the pipeline gets its own
// stream so that adding or reordering consumers never perturbs the others.
inline uint64_t rng_stream(uint64_t master, std::string_view tag, uint64_t a = 0,
                           uint64_t b = 0, uint64_t c = 0) {
    uint64_t s = mix64(master ^ fnv1a64(tag));
    s = mix64(s ^ a);
    s = mix64(s ^ b);
    s = mix64(s ^ c);
    return s;
}

// xoshiro256++ with a ziggurat normal sampler. Self-contained so that results
// are identical across standard library implementations.
class Rng {
  public:
    explicit Rng(uint64_t seed) {
        // splitmix64 seeding as recommended for the xoshiro family.
        uint64_t x = seed;
        for (auto& w : s_) {
            x += 0x9E3779B97F4A7C15ull;
            uint64_t z = x;
            z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
            z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
            w = z ^ (z >> 31);
        }
    }

    uint64_t next_u64() {
        const uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    uint32_t next_u32() { return static_cast<uint32_t>(next_u64() >> 32); }

    // [0, 1)
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // (0, 1]; safe as a log() argument.
    double uniform_pos() {
        return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Inclusive on both ends. Rejection sampling keeps it unbiased.
    int64_t uniform_int(int64_t lo, int64_t hi) {
        require(lo <= hi, "uniform_int: lo > hi");
        const uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
        if (span == 0) return static_cast<int64_t>(next_u64());  // full range
        const uint64_t limit = UINT64_MAX - UINT64_MAX % span;
        uint64_t v;
        do {
            v = next_u64();
        } while (v >= limit);
        return lo + static_cast<int64_t>(v % span);
    }

    bool bernoulli(double p) { return uniform() < p; }

    // Standard normal via the 128-layer ziggurat.
    double normal() {
        const Zig& z = zig();
        for (;;) {
            const int32_t hz = static_cast<int32_t>(next_u32());
            const uint32_t iz = static_cast<uint32_t>(hz) & 127u;
            const uint64_t ahz = static_cast<uint64_t>(hz < 0 ? -static_cast<int64_t>(hz)
                                                              : static_cast<int64_t>(hz));
            if (ahz < z.kn[iz]) return hz * z.wn[iz];

            if (iz == 0) {
                // Tail beyond r, Marsaglia's exact method.
                double x, y;
                do {
                    x = -std::log(uniform_pos()) / z.r;
                    y = -std::log(uniform_pos());
                } while (y + y < x * x);
                return hz > 0 ? z.r + x : -(z.r + x);
            }
            const double x = hz * z.wn[iz];
            if (z.fn[iz] + uniform() * (z.fn[iz - 1] - z.fn[iz]) <
                std::exp(-0.5 * x * x)) {
                return x;
            }
        }
    }

    double normal(double mu, double sigma) { return mu + sigma * normal(); }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            const size_t j = static_cast<size_t>(uniform_int(0, static_cast<int64_t>(i) - 1));
            std::swap(v[i - 1], v[j]);
        }
    }

  private:
    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    struct Zig {
        uint32_t kn[128];
        double wn[128];
        double fn[128];
        double r;
        Zig() {
            const double m1 = 2147483648.0;
            double dn = 3.442619855899;
            const double vn = 9.91256303526217e-3;
            double tn = dn;
            r = dn;
            double q = vn / std::exp(-0.5 * dn * dn);
            kn[0] = static_cast<uint32_t>((dn / q) * m1);
            kn[1] = 0;
            wn[0] = q / m1;
            wn[127] = dn / m1;
            fn[0] = 1.0;
            fn[127] = std::exp(-0.5 * dn * dn);
            for (int i = 126; i >= 1; --i) {
                dn = std::sqrt(-2.0 * std::log(vn / dn + std::exp(-0.5 * dn * dn)));
                kn[i + 1] = static_cast<uint32_t>((dn / tn) * m1);
                tn = dn;
                fn[i] = std::exp(-0.5 * dn * dn);
                wn[i] = dn / m1;
            }
        }
    };

    static const Zig& zig() {
        static const Zig z;
        return z;
    }

    uint64_t s_[4];
};

}  // namespace ashe

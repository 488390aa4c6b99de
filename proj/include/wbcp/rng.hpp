#pragma once

#include <cmath>
#include <cstdint>

namespace wbcp {

// SplitMix64 finalizer. Every stream derivation in the project goes through
// this, so results are reproducible across platforms and worker counts.
constexpr std::uint64_t splitmix64_step(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

// Derives the seed of an independent substream, e.g. per test query or per
// named pipeline stage. mix_seed(s, i) != mix_seed(s, j) for i != j in
// practice; collisions would need a 64-bit birthday event.
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64_step(splitmix64_step(seed) ^
                           (0xD2B74407B1CE6E93ull * (stream + 1)));
}

// xoshiro256++ by Blackman & Vigna. Small, fast, and fully specified, so a
// given seed yields the same stream everywhere.
class Xoshiro256pp {
public:
    explicit Xoshiro256pp(std::uint64_t seed) {
        std::uint64_t x = seed;
        for (auto& word : state_) {
            x += 0x9E3779B97F4A7C15ull;
            std::uint64_t z = x;
            z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
            z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
            word = z ^ (z >> 31);
        }
    }

    std::uint64_t next() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

private:
    static constexpr std::uint64_t rotl(std::uint64_t v, int k) {
        return (v << k) | (v >> (64 - k));
    }
    std::uint64_t state_[4];
};

// Deterministic sampler: uniforms, normals (Marsaglia polar with cached
// spare) and Gamma variates (Marsaglia-Tsang).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_.next(); }

    // Uniform on [0, 1), 53-bit resolution.
    double uniform01() { return static_cast<double>(gen_.next() >> 11) * 0x1.0p-53; }

    // Uniform on (0, 1]; safe to pass through log().
    double uniform_pos() {
        return static_cast<double>((gen_.next() >> 11) + 1) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform01() - 1.0;
            v = 2.0 * uniform01() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        has_spare_ = true;
        return u * f;
    }

    // Gamma(shape, 1). Shapes below kShapeBoostCutoff go through the boost
    // identity Gamma(a) = Gamma(a+1) * U^(1/a); the cutoff sits above 1 so
    // that shapes at and near 1 share one code path and one stream layout,
    // which keeps uniform-weight and near-uniform-weight runs sample-for-
    // sample identical.
    static constexpr double kShapeBoostCutoff = 1.5;

    double gamma(double shape) {
        if (shape < kShapeBoostCutoff) {
            const double g = gamma_mt(shape + 1.0);
            const double u = uniform_pos();
            return g * std::exp(std::log(u) / shape);
        }
        return gamma_mt(shape);
    }

    // Marsaglia-Tsang squeeze method; requires shape >= 1.
    double gamma_mt(double shape) {
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        return gamma_mt_dc(d, c);
    }

    // Core rejection loop with precomputed (d, c); hot path for Dirichlet
    // sampling where shapes repeat across Monte Carlo draws.
    double gamma_mt_dc(double d, double c) {
        for (;;) {
            double x, v;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = uniform01();
            const double x2 = x * x;
            if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
            if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

private:
    Xoshiro256pp gen_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// Precomputed per-shape constants for repeated Gamma draws.
struct GammaShape {
    double d = 0.0;
    double c = 0.0;
    double inv_shape = 0.0;  // 1/a, used only when boosted
    bool boosted = false;

    explicit GammaShape(double shape) {
        boosted = shape < Rng::kShapeBoostCutoff;
        const double a = boosted ? shape + 1.0 : shape;
        d = a - 1.0 / 3.0;
        c = 1.0 / std::sqrt(9.0 * d);
        inv_shape = 1.0 / shape;
    }

    double draw(Rng& rng) const {
        const double g = rng.gamma_mt_dc(d, c);
        if (!boosted) return g;
        const double u = rng.uniform_pos();
        return g * std::exp(std::log(u) * inv_shape);
    }
};

}  // namespace wbcp

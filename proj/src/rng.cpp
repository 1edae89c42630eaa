#include "onestep/rng.hpp"

#include <cmath>
#include <cstddef>
#include <numbers>

namespace onestep {

namespace {

inline std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
}

inline std::uint64_t fmix64(std::uint64_t z) noexcept {
    z ^= z >> 33;
    z *= 0xff51afd7ed558ccdULL;
    z ^= z >> 33;
    z *= 0xc4ceb9fe1a85ec53ULL;
    z ^= z >> 33;
    return z;
}

}  // namespace

std::uint64_t splitmix64_next(std::uint64_t& state) noexcept {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t mix64(std::uint64_t a, std::uint64_t b) noexcept {
    std::uint64_t z = fmix64(a + 0x9e3779b97f4a7c15ULL * (b + 1));
    return fmix64(z ^ b);
}

StreamRng::StreamRng(RngStream s) noexcept {
    std::uint64_t key = mix64(s.seed, s.stream_id);
    s_[0] = splitmix64_next(key);
    s_[1] = splitmix64_next(key);
    s_[2] = splitmix64_next(key);
    s_[3] = splitmix64_next(key);
    if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1;  // xoshiro forbids all-zero
}

std::uint64_t StreamRng::next_u64() noexcept {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

double StreamRng::u01() noexcept {
    // 52 random bits centred in the cell: uniform on (0, 1), endpoints excluded.
    return (static_cast<double>(next_u64() >> 12) + 0.5) * 0x1.0p-52;
}

double StreamRng::exponential() noexcept { return -std::log(u01()); }

double StreamRng::normal() noexcept {
    const double u1 = u01();
    const double u2 = u01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double StreamRng::gamma(double shape, double scale) noexcept {
    if (shape < 1.0) {
        // Boost a shape+1 draw down; consumes one extra uniform.
        const double u = u01();
        return gamma(shape + 1.0, scale) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x;
        double v;
        do {
            x = normal();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = u01();
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v * scale;
        if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v * scale;
    }
}

double StreamRng::beta(double a, double b) noexcept {
    const double x = gamma(a, 1.0);
    const double y = gamma(b, 1.0);
    return x / (x + y);
}

double StreamRng::inv_gamma(double shape, double scale) noexcept {
    return scale / gamma(shape, 1.0);
}

std::size_t StreamRng::categorical(const double* w, std::size_t n, double total) noexcept {
    const double u = u01() * total;
    double acc = 0.0;
    for (std::size_t h = 0; h + 1 < n; ++h) {
        acc += w[h];
        if (u < acc) return h;
    }
    return n - 1;
}

}  // namespace onestep

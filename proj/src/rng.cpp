// SPDX-License-Identifier: Apache-2.0
//
// genest: generative-prior channel estimation for wideband MIMO-OFDM
// Copyright (C) 2026 The genest authors

#include "genest/rng.hpp"

#include <cmath>
#include <numbers>

namespace genest {

std::uint64_t splitmix64(std::uint64_t &state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
    std::uint64_t state = master;
    std::uint64_t out = splitmix64(state);
    for (std::uint64_t step : path) {
        state = out ^ (step + 0x9e3779b97f4a7c15ULL);
        out = splitmix64(state);
    }
    return out;
}

Rng::Rng(std::uint64_t seed) {
    std::uint64_t state = seed;
    for (auto &word : s_)
        word = splitmix64(state);
}

static inline std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}

std::uint64_t Rng::next_u64() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

double Rng::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform();
}

std::uint64_t Rng::below(std::uint64_t n) {
    // rejection sampling on the top range to avoid modulo bias
    const std::uint64_t threshold = -n % n;
    for (;;) {
        std::uint64_t r = next_u64();
        if (r >= threshold)
            return r % n;
    }
}

double Rng::normal() {
    // Box-Muller; u1 shifted away from 0 so log stays finite
    double u1 = 1.0 - uniform();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::complex<double> Rng::cnormal() {
    double re = normal();
    double im = normal();
    return {re / std::numbers::sqrt2, im / std::numbers::sqrt2};
}

} // namespace genest

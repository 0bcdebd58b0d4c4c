// SPDX-License-Identifier: Apache-2.0
//
// genest: generative-prior channel estimation for wideband MIMO-OFDM
// Copyright (C) 2026 The genest authors

#pragma once

#include <complex>
#include <cstdint>
#include <initializer_list>

namespace genest {

/// One splitmix64 step; advances `state` and returns the next output.
std::uint64_t splitmix64(std::uint64_t &state);

/// Derives a child seed from a master seed and a path of indices.
/// Used to hand independent, reproducible streams to datasets, trials and
/// worker threads: derive_seed(master, {tag, point, trial}).
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path);

/// Deterministic xoshiro256** stream, seeded via splitmix64.
///
/// All distributions are implemented here rather than with <random> so a
/// (seed, call sequence) pair produces identical bits on every platform and
/// standard library.
class Rng {
  public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();

    /// Uniform in [0, 1) with 53 random bits.
    double uniform();

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi);

    /// Unbiased uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n);

    /// Standard normal via Box-Muller; consumes exactly two uniforms.
    double normal();

    /// Circularly symmetric complex normal with E|z|^2 = 1.
    std::complex<double> cnormal();

  private:
    std::uint64_t s_[4];
};

} // namespace genest

// SPDX-License-Identifier: Apache-2.0
//
// genest: generative-prior channel estimation for wideband MIMO-OFDM
// Copyright (C) 2026 The genest authors

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "genest/numeric.hpp"
#include "genest/rng.hpp"

namespace genest {

/// Geometric cluster-ray model: clusters of rays with Gaussian angle spread
/// around uniformly drawn centers, mapped onto an exponential power-delay
/// profile over n_taps delay taps. Arrays are uniform rectangular (URA) on
/// both ends.
struct ClusterRayConfig {
    int n_clusters = 8;
    int n_rays = 2;
    double angle_spread_deg = 5.0; // std of per-ray angle offsets
    int n_tx_h = 4;
    int n_tx_v = 4;
    int n_rx_h = 2;
    int n_rx_v = 2;
    int n_subcarriers = 16;
    int n_taps = 4;
    double delay_profile_decay = 0.7; // weight of tap l is exp(-decay*l)
    double antenna_spacing_wavelengths = 0.5;
    // complex ray gains are redrawn until |g| <= this many std deviations
    double gain_truncation_sigmas = 6.0;

    int n_tx() const { return n_tx_h * n_tx_v; }
    int n_rx() const { return n_rx_h * n_rx_v; }

    void validate() const; // throws InvalidConfigError

    bool operator==(const ClusterRayConfig &) const = default;
};

/// One frequency-selective channel draw: the per-subcarrier matrices H_k and,
/// when produced by the sampler, the delay taps they were derived from.
/// Taps are scratch data for consistency checks; they are not persisted.
struct ChannelRealization {
    std::vector<CMat> per_subcarrier; // n_f matrices, each n_rx x n_tx
    std::vector<CMat> taps;           // empty when unknown

    int n_f() const { return static_cast<int>(per_subcarrier.size()); }
    int n_r() const { return per_subcarrier.empty() ? 0 : static_cast<int>(per_subcarrier[0].rows()); }
    int n_t() const { return per_subcarrier.empty() ? 0 : static_cast<int>(per_subcarrier[0].cols()); }

    /// Stacked form [vec(H_0); vec(H_1); ...] with column-major vec.
    CVec stacked() const;

    double squared_norm() const;
};

ChannelRealization channel_from_stacked(const CVec &h, int n_f, int n_r, int n_t);

struct ChannelDataset {
    ClusterRayConfig config;
    std::vector<ChannelRealization> realizations;
    std::uint64_t master_seed = 0;

    int count() const { return static_cast<int>(realizations.size()); }
};

bool datasets_equal(const ChannelDataset &a, const ChannelDataset &b);

/// Normalized URA steering vector over an n_h x n_v grid:
/// entry(p, q) = exp(i 2 pi spacing (p sin(az) sin(el) + q cos(el))) / sqrt(n_h n_v)
/// with p the horizontal and q the vertical index, laid out p-major.
CVec array_response_ura(double azimuth, double elevation, int n_h, int n_v, double spacing);

/// Draws the delay taps C_l of one realization. Cluster i lands on tap
/// floor(i*L/N_cl); each of its rays contributes a truncated complex Gaussian
/// gain, weighted by the tap's exponential delay-profile weight, times the
/// outer product of receive and transmit steering vectors. The deterministic
/// normalization keeps E[||H_k||_F^2] = n_rx * n_tx.
std::vector<CMat> sample_geometric_taps(const ClusterRayConfig &cfg, Rng &rng);

/// Per-subcarrier response H_k = sum_l taps[l] * exp(-i 2 pi k l / n_f).
std::vector<CMat> taps_to_subcarriers(const std::vector<CMat> &taps, int n_f);

ChannelRealization sample_channel(const ClusterRayConfig &cfg, Rng &rng);

/// Generates `count` independent realizations; realization i uses the stream
/// derive_seed(master_seed, {i}), so the dataset is reproducible bit for bit
/// regardless of how generation is scheduled across threads.
ChannelDataset generate_dataset(const ClusterRayConfig &cfg, int count, std::uint64_t master_seed);

void save_dataset(const ChannelDataset &ds, const std::string &path);
ChannelDataset load_dataset(const std::string &path);

} // namespace genest

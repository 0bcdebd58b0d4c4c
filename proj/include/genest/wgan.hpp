// SPDX-License-Identifier: Apache-2.0
//
// genest: generative-prior channel estimation for wideband MIMO-OFDM
// Copyright (C) 2026 The genest authors

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "genest/channel.hpp"
#include "genest/neural.hpp"

namespace genest {

struct WganConfig {
    int critic_steps_k = 5;
    int batch_size = 200;
    int epochs = 500; // one epoch = k critic steps + 1 generator step
    double lr = 5e-5; // RMSprop learning rate for both networks
    double clip = 0.01;
    int latent_dim = 8;
    std::vector<int> gen_hidden = {128, 512};
    std::vector<int> critic_hidden = {512, 128};
    double rmsprop_decay = 0.9;
    double rmsprop_eps = 1e-8;
    int checkpoint_interval = 100; // epochs between checkpoints; 0 disables
    std::string checkpoint_dir;   // empty disables file checkpoints
    int stat_sample = 256;        // draws used to score checkpoints

    void validate() const;
};

/// Trained generator plus the bookkeeping needed to emit channels: output
/// dimensions and the dataset scale that was divided out before training.
struct GanPrior {
    NetworkParams generator;
    int n_f = 0, n_r = 0, n_t = 0;
    double output_scale = 1.0;

    int latent_dim() const { return generator.input_dim(); }
    ChannelRealization decode(const RVec &z) const;
};

void save_prior(const GanPrior &prior, const std::string &path);
GanPrior load_prior(const std::string &path);

struct TrainingLogRow {
    int epoch = 0;
    double critic_objective = 0.0; // batch estimate of E[D(h)] - E[D(G(z))]
    double gen_norm = 0.0;
    double critic_norm = 0.0;
    double seconds = 0.0; // wall time, diagnostic only; not reproducible
};

struct TrainingLog {
    std::vector<TrainingLogRow> rows;
};

void write_training_log_csv(const TrainingLog &log, const std::string &path);

/// One critic update: ascends the batch estimate of E[D(h)] - E[D(G(z))]
/// via RMSprop, then clips the critic weights. real_batch columns live in
/// the standardized (unit-scale) space the generator is trained in.
/// Returns the pre-update objective estimate.
double critic_step(NetworkParams &critic, const NetworkParams &generator, const RMat &real_batch,
                   Rng &rng, const WganConfig &cfg, RmspropState &critic_state);

/// One generator update: descends -E[D(G(z))] via RMSprop.
void generator_step(const NetworkParams &critic, NetworkParams &generator, Rng &rng,
                    const WganConfig &cfg, RmspropState &generator_state);

/// Trains a Wasserstein GAN on the dataset. Bit-reproducible from
/// (dataset, cfg, master_seed). Returns the final generator; when
/// checkpointing is configured the best checkpoint by a distribution-match
/// score is kept alongside the final one.
std::pair<GanPrior, TrainingLog> train(const ChannelDataset &dataset, const WganConfig &cfg,
                                       std::uint64_t master_seed);

std::vector<ChannelRealization> sample_channels(const GanPrior &prior, int n, Rng &rng);

/// Distribution diagnostics between a generated and a reference set:
/// second moments, frequency-axis autocorrelation, spatial covariance
/// spectra and entry tail curves. All discrepancies are >= 0 and 0 when the
/// sets coincide.
struct StatReport {
    double second_moment_rel_err = 0.0;
    double freq_autocorr_err = 0.0;   // mean abs error over lags 1..4
    double rx_spectrum_rel_err = 0.0; // receive-side covariance eigenvalues
    double tx_spectrum_rel_err = 0.0; // transmit-side covariance eigenvalues
    double tail_sup_err = 0.0;        // sup gap between exceedance curves

    double summary() const;
};

StatReport stat_match_report(const std::vector<ChannelRealization> &generated,
                             const std::vector<ChannelRealization> &real);

} // namespace genest

// SPDX-License-Identifier: Apache-2.0
//
// genest: generative-prior channel estimation for wideband MIMO-OFDM
// Copyright (C) 2026 The genest authors

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "genest/estimators.hpp"

namespace genest {

/// Everything a reproducible experiment needs: channel and transceiver
/// geometry, training and inversion settings, sweep grids and seeds.
struct ExperimentConfig {
    std::string name = "desk";

    ClusterRayConfig channel; // defaults are the desk geometry

    // hybrid transceiver knobs; antenna/subcarrier counts come from `channel`
    int n_tx_rf = 4;
    int n_rx_rf = 1;
    int n_streams = 4;
    int n_frames = 4;

    WganConfig wgan;
    InversionConfig inversion;

    std::vector<double> snr_grid_db = {-10.0, -5.0, 0.0, 5.0, 10.0};
    std::vector<double> eta_grid = {0.3, 0.5, 0.7, 1.0};
    double pilot_sweep_snr_db = -5.0;
    int trials = 100;
    std::vector<std::string> estimators = {"gan", "ls", "lmmse", "omp"};
    int omp_sparsity = 16;
    // run LS/LMMSE on a fully digital reference transceiver (identity phase
    // networks, orthogonal full pilots) as the comparison baseline; when
    // false they attempt the hybrid operator and usually report ill-posed
    bool digital_reference_for_linear = true;
    bool use_best_checkpoint = true;

    int train_count = 2000;

    // generalization sweep: generator trained on `channel`, evaluated on
    // variants with these cluster/ray counts
    std::vector<int> gen_test_clusters = {4, 6, 8, 10};
    std::vector<int> gen_test_rays = {1, 2, 4};
    std::vector<double> gen_snr_grid_db = {-10.0, -5.0, 0.0};
    int gen_trials = 40;

    // training ablation: one-factor-at-a-time around (wgan.epochs,
    // train_count, wgan.batch_size)
    std::vector<int> ablation_epochs;
    std::vector<int> ablation_data;
    std::vector<int> ablation_batch;
    double ablation_snr_db = -5.0;
    int ablation_test_channels = 100;

    std::uint64_t master_seed = 20260801;
    std::string out_dir = "out";

    TransceiverConfig transceiver() const;
    void validate() const;

    static ExperimentConfig desk();
    static ExperimentConfig micro();       // seconds-scale smoke/determinism runs
    static ExperimentConfig paper_scale(); // full-size settings; not for CI
    static ExperimentConfig paper_scale_generalization();
    static ExperimentConfig preset(const std::string &name);
};

ExperimentConfig load_config(const std::string &path);
void save_config(const ExperimentConfig &cfg, const std::string &path);

/// One aggregated sweep row. nmse_db_mean is 10*log10 of the mean error
/// ratio over trials; the standard error is mapped to dB by the delta
/// method. Exact recoveries clamp to -200 dB and set the "exact" flag;
/// ill-posed points keep NaN statistics and set the "ill-posed" flag.
struct SweepRow {
    std::string experiment;
    std::string sweep_param;
    double value = 0.0;
    std::string estimator;
    double snr_db = 0.0;
    double eta = 1.0;
    double nmse_db_mean = 0.0;
    double nmse_db_stderr = 0.0;
    int trials = 0;
    std::string flags;
};

struct SweepResult {
    std::vector<std::string> header_notes; // '#' comment lines in the CSV
    std::vector<SweepRow> rows;
};

void write_sweep_csv(const SweepResult &result, const std::string &path);

SweepResult run_snr_sweep(const ExperimentConfig &cfg, const GanPrior *prior,
                          const ChannelDataset *covariance_source);
SweepResult run_pilot_sweep(const ExperimentConfig &cfg, const GanPrior *prior,
                            const ChannelDataset *covariance_source);
SweepResult run_generalization_sweep(const ExperimentConfig &cfg, const GanPrior &prior,
                                     int train_clusters, int train_rays);
SweepResult run_training_ablation(const ExperimentConfig &cfg);

/// Single-trial run of the configured estimators at (snr, eta); row per
/// estimator with trials = 1.
SweepResult run_single_estimate(const ExperimentConfig &cfg, const GanPrior *prior,
                                const ChannelDataset *covariance_source, double snr_db, double eta);

/// Converts the CSV outputs under `dir` into gnuplot-ready .dat series.
/// Returns the number of .dat files written.
int write_report_dats(const std::string &dir);

// stream/seed tags used to derive independent reproducible rng streams
namespace seeds {
constexpr std::uint64_t kDataset = 1;
constexpr std::uint64_t kTrain = 2;
constexpr std::uint64_t kTail = 3;
constexpr std::uint64_t kSnrSweep = 10;
constexpr std::uint64_t kPilotSweep = 11;
constexpr std::uint64_t kGenSweep = 12;
constexpr std::uint64_t kAblation = 13;
constexpr std::uint64_t kEstimate = 14;
} // namespace seeds

} // namespace genest

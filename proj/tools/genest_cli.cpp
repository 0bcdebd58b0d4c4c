// SPDX-License-Identifier: Apache-2.0
//
// genest: generative-prior channel estimation for wideband MIMO-OFDM
// Copyright (C) 2026 The genest authors

#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "genest/experiment.hpp"
#include "genest/parallel.hpp"

namespace fs = std::filesystem;
using namespace genest;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitIllPosed = 3;

struct CommonOpts {
    std::string config_path;
    std::string preset;
    std::optional<std::uint64_t> seed;
    std::string out_dir;
};

void add_common(CLI::App *cmd, CommonOpts &opts) {
    cmd->add_option("--config", opts.config_path, "experiment config JSON");
    cmd->add_option("--preset", opts.preset,
                    "named preset (desk, micro, paper-scale, paper-scale-generalization)");
    cmd->add_option("--seed", opts.seed, "override the master seed");
    cmd->add_option("--out", opts.out_dir, "override the output directory");
}

ExperimentConfig resolve_config(const CommonOpts &opts) {
    ExperimentConfig cfg;
    if (!opts.config_path.empty())
        cfg = load_config(opts.config_path);
    else if (!opts.preset.empty())
        cfg = ExperimentConfig::preset(opts.preset);
    else
        throw InvalidConfigError("missing --config or --preset");
    if (opts.seed)
        cfg.master_seed = *opts.seed;
    if (!opts.out_dir.empty())
        cfg.out_dir = opts.out_dir;
    cfg.validate();
    fs::create_directories(cfg.out_dir);
    return cfg;
}

std::string dataset_path(const ExperimentConfig &cfg) { return cfg.out_dir + "/dataset.gchd"; }

std::string prior_path(const ExperimentConfig &cfg) {
    return cfg.out_dir + (cfg.use_best_checkpoint ? "/gan_best.gnet" : "/gan_final.gnet");
}

ChannelDataset require_dataset(const ExperimentConfig &cfg) {
    const std::string path = dataset_path(cfg);
    if (!fs::exists(path))
        throw InvalidConfigError("dataset not found at " + path + "; run gen-data first");
    return load_dataset(path);
}

GanPrior require_prior(const ExperimentConfig &cfg) {
    const std::string path = prior_path(cfg);
    if (!fs::exists(path))
        throw InvalidConfigError("generator checkpoint not found at " + path +
                                 "; run train-gan first");
    return load_prior(path);
}

bool wants(const ExperimentConfig &cfg, const std::string &name) {
    for (const std::string &e : cfg.estimators)
        if (e == name)
            return true;
    return false;
}

int finish_sweep(const SweepResult &res, const std::string &path) {
    write_sweep_csv(res, path);
    std::printf("wrote %s (%zu rows)\n", path.c_str(), res.rows.size());
    bool any_usable = false;
    for (const SweepRow &row : res.rows)
        if (row.flags.find("ill-posed") == std::string::npos)
            any_usable = true;
    return any_usable ? kExitOk : kExitIllPosed;
}

int cmd_gen_data(const CommonOpts &opts) {
    const ExperimentConfig cfg = resolve_config(opts);
    const ChannelDataset ds =
        generate_dataset(cfg.channel, cfg.train_count, derive_seed(cfg.master_seed, {seeds::kDataset}));
    save_dataset(ds, dataset_path(cfg));
    std::printf("wrote %s (%d realizations, %dx%d antennas, %d subcarriers)\n",
                dataset_path(cfg).c_str(), ds.count(), cfg.channel.n_rx(), cfg.channel.n_tx(),
                cfg.channel.n_subcarriers);
    return kExitOk;
}

int cmd_train_gan(const CommonOpts &opts) {
    ExperimentConfig cfg = resolve_config(opts);
    const ChannelDataset ds = require_dataset(cfg);
    WganConfig w = cfg.wgan;
    w.checkpoint_dir = cfg.out_dir;
    auto [prior, log] = train(ds, w, derive_seed(cfg.master_seed, {seeds::kTrain}));
    write_training_log_csv(log, cfg.out_dir + "/training_log.csv");
    std::printf("trained %d epochs; checkpoints in %s (final + best + latest); log %s\n",
                w.epochs, cfg.out_dir.c_str(), (cfg.out_dir + "/training_log.csv").c_str());
    return kExitOk;
}

int cmd_estimate(const CommonOpts &opts, double snr_db, double eta) {
    const ExperimentConfig cfg = resolve_config(opts);
    std::optional<GanPrior> prior;
    if (wants(cfg, "gan"))
        prior = require_prior(cfg);
    std::optional<ChannelDataset> cov;
    if (wants(cfg, "lmmse"))
        cov = require_dataset(cfg);
    const SweepResult res = run_single_estimate(cfg, prior ? &*prior : nullptr,
                                                cov ? &*cov : nullptr, snr_db, eta);
    for (const SweepRow &row : res.rows)
        std::printf("%-6s nmse %9.3f dB  [%s]\n", row.estimator.c_str(), row.nmse_db_mean,
                    row.flags.c_str());
    return finish_sweep(res, cfg.out_dir + "/estimate.csv");
}

int cmd_sweep_snr(const CommonOpts &opts) {
    const ExperimentConfig cfg = resolve_config(opts);
    std::optional<GanPrior> prior;
    if (wants(cfg, "gan"))
        prior = require_prior(cfg);
    std::optional<ChannelDataset> cov;
    if (wants(cfg, "lmmse"))
        cov = require_dataset(cfg);
    const SweepResult res =
        run_snr_sweep(cfg, prior ? &*prior : nullptr, cov ? &*cov : nullptr);
    return finish_sweep(res, cfg.out_dir + "/snr_sweep.csv");
}

int cmd_sweep_pilots(const CommonOpts &opts) {
    const ExperimentConfig cfg = resolve_config(opts);
    std::optional<GanPrior> prior;
    if (wants(cfg, "gan"))
        prior = require_prior(cfg);
    std::optional<ChannelDataset> cov;
    if (wants(cfg, "lmmse"))
        cov = require_dataset(cfg);
    const SweepResult res =
        run_pilot_sweep(cfg, prior ? &*prior : nullptr, cov ? &*cov : nullptr);
    return finish_sweep(res, cfg.out_dir + "/pilot_sweep.csv");
}

int cmd_sweep_gen(const CommonOpts &opts) {
    const ExperimentConfig cfg = resolve_config(opts);
    const GanPrior prior = require_prior(cfg);
    const SweepResult res =
        run_generalization_sweep(cfg, prior, cfg.channel.n_clusters, cfg.channel.n_rays);
    return finish_sweep(res, cfg.out_dir + "/generalization.csv");
}

int cmd_ablate(const CommonOpts &opts) {
    const ExperimentConfig cfg = resolve_config(opts);
    const SweepResult res = run_training_ablation(cfg);
    return finish_sweep(res, cfg.out_dir + "/ablation.csv");
}

int cmd_check_subgaussian(const CommonOpts &opts, long trials) {
    const ExperimentConfig cfg = resolve_config(opts);
    const TailReport report = subgaussian_tail_check(cfg.transceiver(), trials,
                                                     derive_seed(cfg.master_seed, {seeds::kTail}));
    write_tail_report_csv(report, cfg.out_dir + "/tail_check.csv");
    std::printf("wrote %s (%zu grid points, %ld trials)%s\n",
                (cfg.out_dir + "/tail_check.csv").c_str(), report.t.size(), report.trials,
                report.any_flagged() ? "  ** bound violated **" : "");
    return kExitOk;
}

int cmd_report(const CommonOpts &opts) {
    const ExperimentConfig cfg = resolve_config(opts);
    const int written = write_report_dats(cfg.out_dir);
    std::printf("wrote %d .dat series under %s\n", written, cfg.out_dir.c_str());
    return kExitOk;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"genest: generative-prior channel estimation workbench"};
    app.require_subcommand(1);

    CommonOpts opts;
    double snr_db = -5.0;
    double eta = 1.0;
    long tail_trials = 100000;

    CLI::App *gen_data = app.add_subcommand("gen-data", "generate a channel dataset");
    add_common(gen_data, opts);
    CLI::App *train_gan = app.add_subcommand("train-gan", "train the Wasserstein GAN prior");
    add_common(train_gan, opts);
    CLI::App *estimate = app.add_subcommand("estimate", "run one estimation trial");
    add_common(estimate, opts);
    estimate->add_option("--snr", snr_db, "SNR in dB");
    estimate->add_option("--eta", eta, "pilot ratio in (0,1]");
    CLI::App *sweep_snr = app.add_subcommand("sweep-snr", "NMSE vs SNR sweep");
    add_common(sweep_snr, opts);
    CLI::App *sweep_pilots = app.add_subcommand("sweep-pilots", "NMSE vs pilot ratio sweep");
    add_common(sweep_pilots, opts);
    CLI::App *sweep_gen =
        app.add_subcommand("sweep-gen", "generalization over cluster/ray mismatch");
    add_common(sweep_gen, opts);
    CLI::App *ablate = app.add_subcommand("ablate-training", "epochs/data/batch ablation");
    add_common(ablate, opts);
    CLI::App *check_sub =
        app.add_subcommand("check-subgaussian", "empirical measurement tail vs closed-form bound");
    add_common(check_sub, opts);
    check_sub->add_option("--trials", tail_trials, "Monte-Carlo trials (>= 1e4)");
    CLI::App *report = app.add_subcommand("report", "convert CSV outputs to gnuplot .dat files");
    add_common(report, opts);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (gen_data->parsed())
            return cmd_gen_data(opts);
        if (train_gan->parsed())
            return cmd_train_gan(opts);
        if (estimate->parsed())
            return cmd_estimate(opts, snr_db, eta);
        if (sweep_snr->parsed())
            return cmd_sweep_snr(opts);
        if (sweep_pilots->parsed())
            return cmd_sweep_pilots(opts);
        if (sweep_gen->parsed())
            return cmd_sweep_gen(opts);
        if (ablate->parsed())
            return cmd_ablate(opts);
        if (check_sub->parsed())
            return cmd_check_subgaussian(opts, tail_trials);
        if (report->parsed())
            return cmd_report(opts);
    } catch (const InvalidConfigError &e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const FormatError &e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const IllPosedError &e) {
        std::fprintf(stderr, "ill-posed: %s\n", e.what());
        return kExitIllPosed;
    } catch (const Error &e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return kExitConfig;
}

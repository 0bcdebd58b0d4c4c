// SPDX-License-Identifier: Apache-2.0
//
// genest: generative-prior channel estimation for wideband MIMO-OFDM
// Copyright (C) 2026 The genest authors

#include "genest/experiment.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>

#include <json.hpp>

#include "genest/parallel.hpp"

namespace genest {

using njson = nlohmann::json;

TransceiverConfig ExperimentConfig::transceiver() const {
    TransceiverConfig tc;
    tc.n_tx = channel.n_tx();
    tc.n_rx = channel.n_rx();
    tc.n_tx_rf = n_tx_rf;
    tc.n_rx_rf = n_rx_rf;
    tc.n_streams = n_streams;
    tc.n_f = channel.n_subcarriers;
    tc.n_frames = n_frames;
    return tc;
}

void ExperimentConfig::validate() const {
    channel.validate();
    transceiver().validate();
    wgan.validate();
    inversion.validate();
    if (snr_grid_db.empty() || eta_grid.empty())
        throw InvalidConfigError("experiment config: sweep grids must be nonempty");
    for (double eta : eta_grid)
        if (!(eta > 0.0) || eta > 1.0)
            throw InvalidConfigError("experiment config: eta values must lie in (0, 1]");
    if (trials < 1 || gen_trials < 1 || ablation_test_channels < 1)
        throw InvalidConfigError("experiment config: trial counts must be >= 1");
    if (train_count < 1)
        throw InvalidConfigError("experiment config: train_count must be >= 1");
    if (omp_sparsity < 1)
        throw InvalidConfigError("experiment config: omp_sparsity must be >= 1");
    if (estimators.empty())
        throw InvalidConfigError("experiment config: estimator set must be nonempty");
    for (const std::string &e : estimators)
        if (e != "gan" && e != "ls" && e != "lmmse" && e != "omp")
            throw InvalidConfigError("experiment config: unknown estimator '" + e + "'");
}

ExperimentConfig ExperimentConfig::desk() {
    ExperimentConfig cfg; // defaults are the desk preset
    return cfg;
}

ExperimentConfig ExperimentConfig::micro() {
    ExperimentConfig cfg;
    cfg.name = "micro";
    cfg.channel.n_clusters = 4;
    cfg.channel.n_rays = 1;
    cfg.channel.n_tx_h = 2;
    cfg.channel.n_tx_v = 2;
    cfg.channel.n_rx_h = 2;
    cfg.channel.n_rx_v = 1;
    cfg.channel.n_subcarriers = 4;
    cfg.channel.n_taps = 2;
    cfg.n_tx_rf = 2;
    cfg.n_rx_rf = 1;
    cfg.n_streams = 2;
    cfg.n_frames = 2;
    cfg.wgan.critic_steps_k = 2;
    cfg.wgan.batch_size = 32;
    cfg.wgan.epochs = 60;
    cfg.wgan.lr = 1e-3;
    cfg.wgan.clip = 0.02;
    cfg.wgan.latent_dim = 4;
    cfg.wgan.gen_hidden = {32, 64};
    cfg.wgan.critic_hidden = {64, 32};
    cfg.wgan.checkpoint_interval = 30;
    cfg.wgan.stat_sample = 64;
    cfg.inversion.restarts = 3;
    cfg.inversion.iterations = 60;
    cfg.snr_grid_db = {-5.0, 0.0};
    cfg.eta_grid = {0.5, 1.0};
    cfg.trials = 4;
    cfg.train_count = 128;
    cfg.omp_sparsity = 4;
    cfg.gen_test_clusters = {2, 4};
    cfg.gen_test_rays = {1, 2};
    cfg.gen_snr_grid_db = {-5.0};
    cfg.gen_trials = 3;
    cfg.ablation_epochs = {15, 60};
    cfg.ablation_data = {48, 128};
    cfg.ablation_batch = {16, 32};
    cfg.ablation_test_channels = 12;
    cfg.master_seed = 424242;
    return cfg;
}

ExperimentConfig ExperimentConfig::paper_scale() {
    ExperimentConfig cfg;
    cfg.name = "paper-scale";
    cfg.channel.n_clusters = 20;
    cfg.channel.n_rays = 2;
    cfg.channel.angle_spread_deg = 5.0;
    cfg.channel.n_tx_h = 8;
    cfg.channel.n_tx_v = 8;
    cfg.channel.n_rx_h = 4;
    cfg.channel.n_rx_v = 4;
    cfg.channel.n_subcarriers = 64;
    cfg.channel.n_taps = 16;
    cfg.channel.delay_profile_decay = 0.35;
    cfg.wgan.epochs = 3000;
    cfg.wgan.batch_size = 200;
    cfg.wgan.lr = 5e-5;
    cfg.wgan.latent_dim = 15;
    cfg.wgan.gen_hidden = {128, 512};
    cfg.wgan.critic_hidden = {512, 128};
    cfg.train_count = 5000;
    cfg.snr_grid_db = {-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0};
    cfg.master_seed = 20260802;
    return cfg;
}

ExperimentConfig ExperimentConfig::paper_scale_generalization() {
    ExperimentConfig cfg = paper_scale();
    cfg.name = "paper-scale-generalization";
    // single-subcarrier geometry with tight lambda/10 spacing used for the
    // cluster/ray robustness study
    cfg.channel.n_subcarriers = 1;
    cfg.channel.n_taps = 1;
    cfg.channel.antenna_spacing_wavelengths = 0.1;
    cfg.gen_test_clusters = {10, 15, 20, 25};
    cfg.gen_test_rays = {1, 2, 4, 8};
    cfg.gen_snr_grid_db = {-10.0, -5.0, 0.0, 5.0, 10.0};
    return cfg;
}

ExperimentConfig ExperimentConfig::preset(const std::string &name) {
    if (name == "desk")
        return desk();
    if (name == "micro")
        return micro();
    if (name == "paper-scale")
        return paper_scale();
    if (name == "paper-scale-generalization")
        return paper_scale_generalization();
    throw InvalidConfigError("unknown preset '" + name + "'");
}

// -- JSON --------------------------------------------------------------------

namespace {

void require_keys(const njson &j, const char *ctx, std::initializer_list<const char *> allowed) {
    if (!j.is_object())
        throw InvalidConfigError(std::string("config: expected an object for ") + ctx);
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char *k : allowed)
            if (it.key() == k) {
                ok = true;
                break;
            }
        if (!ok)
            throw InvalidConfigError(std::string("config: unknown key '") + it.key() + "' in " +
                                     ctx);
    }
}

template <typename T> void fetch(const njson &j, const char *key, T &out) {
    if (j.contains(key))
        j.at(key).get_to(out);
}

void parse_channel(const njson &j, ClusterRayConfig &c) {
    require_keys(j, "channel",
                 {"n_clusters", "n_rays", "angle_spread_deg", "n_tx_h", "n_tx_v", "n_rx_h",
                  "n_rx_v", "n_subcarriers", "n_taps", "delay_profile_decay",
                  "antenna_spacing_wavelengths", "gain_truncation_sigmas"});
    fetch(j, "n_clusters", c.n_clusters);
    fetch(j, "n_rays", c.n_rays);
    fetch(j, "angle_spread_deg", c.angle_spread_deg);
    fetch(j, "n_tx_h", c.n_tx_h);
    fetch(j, "n_tx_v", c.n_tx_v);
    fetch(j, "n_rx_h", c.n_rx_h);
    fetch(j, "n_rx_v", c.n_rx_v);
    fetch(j, "n_subcarriers", c.n_subcarriers);
    fetch(j, "n_taps", c.n_taps);
    fetch(j, "delay_profile_decay", c.delay_profile_decay);
    fetch(j, "antenna_spacing_wavelengths", c.antenna_spacing_wavelengths);
    fetch(j, "gain_truncation_sigmas", c.gain_truncation_sigmas);
}

void parse_wgan(const njson &j, WganConfig &w) {
    require_keys(j, "wgan",
                 {"critic_steps_k", "batch_size", "epochs", "lr", "clip", "latent_dim",
                  "gen_hidden", "critic_hidden", "rmsprop_decay", "rmsprop_eps",
                  "checkpoint_interval", "stat_sample"});
    fetch(j, "critic_steps_k", w.critic_steps_k);
    fetch(j, "batch_size", w.batch_size);
    fetch(j, "epochs", w.epochs);
    fetch(j, "lr", w.lr);
    fetch(j, "clip", w.clip);
    fetch(j, "latent_dim", w.latent_dim);
    fetch(j, "gen_hidden", w.gen_hidden);
    fetch(j, "critic_hidden", w.critic_hidden);
    fetch(j, "rmsprop_decay", w.rmsprop_decay);
    fetch(j, "rmsprop_eps", w.rmsprop_eps);
    fetch(j, "checkpoint_interval", w.checkpoint_interval);
    fetch(j, "stat_sample", w.stat_sample);
}

void parse_inversion(const njson &j, InversionConfig &v) {
    require_keys(j, "inversion",
                 {"restarts", "iterations", "step", "optimizer", "line_search", "rmsprop_decay",
                  "rmsprop_eps"});
    fetch(j, "restarts", v.restarts);
    fetch(j, "iterations", v.iterations);
    fetch(j, "step", v.step);
    if (j.contains("optimizer")) {
        const std::string opt = j.at("optimizer").get<std::string>();
        if (opt == "plain-gd")
            v.optimizer = InversionConfig::Optimizer::plain_gd;
        else if (opt == "rmsprop-on-z")
            v.optimizer = InversionConfig::Optimizer::rmsprop_on_z;
        else
            throw InvalidConfigError("config: unknown inversion optimizer '" + opt + "'");
    }
    fetch(j, "line_search", v.line_search);
    fetch(j, "rmsprop_decay", v.rmsprop_decay);
    fetch(j, "rmsprop_eps", v.rmsprop_eps);
}

} // namespace

ExperimentConfig load_config(const std::string &path) {
    std::ifstream is(path);
    if (!is)
        throw InvalidConfigError("config: cannot open " + path);
    njson j;
    try {
        is >> j;
    } catch (const njson::exception &e) {
        throw InvalidConfigError(std::string("config: JSON parse failure: ") + e.what());
    }
    try {
        require_keys(j, "top level",
                     {"name", "master_seed", "out_dir", "channel", "transceiver", "wgan",
                      "inversion", "sweep", "generalization", "ablation", "train_count"});
        ExperimentConfig cfg;
        fetch(j, "name", cfg.name);
        fetch(j, "master_seed", cfg.master_seed);
        fetch(j, "out_dir", cfg.out_dir);
        fetch(j, "train_count", cfg.train_count);
        if (j.contains("channel"))
            parse_channel(j.at("channel"), cfg.channel);
        if (j.contains("transceiver")) {
            const njson &t = j.at("transceiver");
            require_keys(t, "transceiver", {"n_tx_rf", "n_rx_rf", "n_streams", "n_frames"});
            fetch(t, "n_tx_rf", cfg.n_tx_rf);
            fetch(t, "n_rx_rf", cfg.n_rx_rf);
            fetch(t, "n_streams", cfg.n_streams);
            fetch(t, "n_frames", cfg.n_frames);
        }
        if (j.contains("wgan"))
            parse_wgan(j.at("wgan"), cfg.wgan);
        if (j.contains("inversion"))
            parse_inversion(j.at("inversion"), cfg.inversion);
        if (j.contains("sweep")) {
            const njson &s = j.at("sweep");
            require_keys(s, "sweep",
                         {"snr_grid_db", "eta_grid", "pilot_sweep_snr_db", "trials", "estimators",
                          "omp_sparsity", "digital_reference_for_linear", "use_best_checkpoint"});
            fetch(s, "snr_grid_db", cfg.snr_grid_db);
            fetch(s, "eta_grid", cfg.eta_grid);
            fetch(s, "pilot_sweep_snr_db", cfg.pilot_sweep_snr_db);
            fetch(s, "trials", cfg.trials);
            fetch(s, "estimators", cfg.estimators);
            fetch(s, "omp_sparsity", cfg.omp_sparsity);
            fetch(s, "digital_reference_for_linear", cfg.digital_reference_for_linear);
            fetch(s, "use_best_checkpoint", cfg.use_best_checkpoint);
        }
        if (j.contains("generalization")) {
            const njson &g = j.at("generalization");
            require_keys(g, "generalization", {"test_clusters", "test_rays", "snr_grid_db", "trials"});
            fetch(g, "test_clusters", cfg.gen_test_clusters);
            fetch(g, "test_rays", cfg.gen_test_rays);
            fetch(g, "snr_grid_db", cfg.gen_snr_grid_db);
            fetch(g, "trials", cfg.gen_trials);
        }
        if (j.contains("ablation")) {
            const njson &a = j.at("ablation");
            require_keys(a, "ablation", {"epochs", "data", "batch", "snr_db", "test_channels"});
            fetch(a, "epochs", cfg.ablation_epochs);
            fetch(a, "data", cfg.ablation_data);
            fetch(a, "batch", cfg.ablation_batch);
            fetch(a, "snr_db", cfg.ablation_snr_db);
            fetch(a, "test_channels", cfg.ablation_test_channels);
        }
        cfg.validate();
        return cfg;
    } catch (const njson::exception &e) {
        throw InvalidConfigError(std::string("config: type error: ") + e.what());
    }
}

void save_config(const ExperimentConfig &cfg, const std::string &path) {
    njson j;
    j["name"] = cfg.name;
    j["master_seed"] = cfg.master_seed;
    j["out_dir"] = cfg.out_dir;
    j["train_count"] = cfg.train_count;
    j["channel"] = {{"n_clusters", cfg.channel.n_clusters},
                    {"n_rays", cfg.channel.n_rays},
                    {"angle_spread_deg", cfg.channel.angle_spread_deg},
                    {"n_tx_h", cfg.channel.n_tx_h},
                    {"n_tx_v", cfg.channel.n_tx_v},
                    {"n_rx_h", cfg.channel.n_rx_h},
                    {"n_rx_v", cfg.channel.n_rx_v},
                    {"n_subcarriers", cfg.channel.n_subcarriers},
                    {"n_taps", cfg.channel.n_taps},
                    {"delay_profile_decay", cfg.channel.delay_profile_decay},
                    {"antenna_spacing_wavelengths", cfg.channel.antenna_spacing_wavelengths},
                    {"gain_truncation_sigmas", cfg.channel.gain_truncation_sigmas}};
    j["transceiver"] = {{"n_tx_rf", cfg.n_tx_rf},
                        {"n_rx_rf", cfg.n_rx_rf},
                        {"n_streams", cfg.n_streams},
                        {"n_frames", cfg.n_frames}};
    j["wgan"] = {{"critic_steps_k", cfg.wgan.critic_steps_k},
                 {"batch_size", cfg.wgan.batch_size},
                 {"epochs", cfg.wgan.epochs},
                 {"lr", cfg.wgan.lr},
                 {"clip", cfg.wgan.clip},
                 {"latent_dim", cfg.wgan.latent_dim},
                 {"gen_hidden", cfg.wgan.gen_hidden},
                 {"critic_hidden", cfg.wgan.critic_hidden},
                 {"rmsprop_decay", cfg.wgan.rmsprop_decay},
                 {"rmsprop_eps", cfg.wgan.rmsprop_eps},
                 {"checkpoint_interval", cfg.wgan.checkpoint_interval},
                 {"stat_sample", cfg.wgan.stat_sample}};
    j["inversion"] = {
        {"restarts", cfg.inversion.restarts},
        {"iterations", cfg.inversion.iterations},
        {"step", cfg.inversion.step},
        {"optimizer",
         cfg.inversion.optimizer == InversionConfig::Optimizer::plain_gd ? "plain-gd"
                                                                         : "rmsprop-on-z"},
        {"line_search", cfg.inversion.line_search},
        {"rmsprop_decay", cfg.inversion.rmsprop_decay},
        {"rmsprop_eps", cfg.inversion.rmsprop_eps}};
    j["sweep"] = {{"snr_grid_db", cfg.snr_grid_db},
                  {"eta_grid", cfg.eta_grid},
                  {"pilot_sweep_snr_db", cfg.pilot_sweep_snr_db},
                  {"trials", cfg.trials},
                  {"estimators", cfg.estimators},
                  {"omp_sparsity", cfg.omp_sparsity},
                  {"digital_reference_for_linear", cfg.digital_reference_for_linear},
                  {"use_best_checkpoint", cfg.use_best_checkpoint}};
    j["generalization"] = {{"test_clusters", cfg.gen_test_clusters},
                           {"test_rays", cfg.gen_test_rays},
                           {"snr_grid_db", cfg.gen_snr_grid_db},
                           {"trials", cfg.gen_trials}};
    j["ablation"] = {{"epochs", cfg.ablation_epochs},
                     {"data", cfg.ablation_data},
                     {"batch", cfg.ablation_batch},
                     {"snr_db", cfg.ablation_snr_db},
                     {"test_channels", cfg.ablation_test_channels}};
    std::ofstream os(path);
    if (!os)
        throw InvalidConfigError("save_config: cannot open " + path);
    os << j.dump(2) << "\n";
}

// -- sweep machinery ----------------------------------------------------------

namespace {

constexpr std::uint64_t kStreamChannel = 1;
constexpr std::uint64_t kStreamPhase = 2;
constexpr std::uint64_t kStreamPilot = 3;
constexpr std::uint64_t kStreamNoise = 4;
constexpr std::uint64_t kStreamLatent = 5;
constexpr std::uint64_t kStreamNoiseDigital = 6;
constexpr std::uint64_t kStreamMaskDigital = 7;
constexpr std::uint64_t kStreamAblationTrain = 8;
constexpr std::uint64_t kStreamAblationData = 9;

struct EstimatorSet {
    bool gan = false, ls = false, lmmse = false, omp = false;
};

EstimatorSet parse_estimators(const std::vector<std::string> &names) {
    EstimatorSet set;
    for (const std::string &n : names) {
        if (n == "gan")
            set.gan = true;
        else if (n == "ls")
            set.ls = true;
        else if (n == "lmmse")
            set.lmmse = true;
        else if (n == "omp")
            set.omp = true;
        else
            throw InvalidConfigError("unknown estimator '" + n + "'");
    }
    return set;
}

double error_ratio(const ChannelRealization &truth, const ChannelRealization &estimate) {
    double num = 0.0;
    for (int k = 0; k < truth.n_f(); ++k)
        num += (truth.per_subcarrier[static_cast<std::size_t>(k)] -
                estimate.per_subcarrier[static_cast<std::size_t>(k)])
                   .squaredNorm();
    return num / truth.squared_norm();
}

struct TrialEval {
    double ratio = std::numeric_limits<double>::quiet_NaN();
    bool ok = false;
    bool ill_posed = false;
};

struct PointTask {
    const ExperimentConfig *cfg = nullptr;
    std::uint64_t exp_tag = 0;
    std::uint64_t point_idx = 0;   // distinguishes noise/latent streams per point
    std::uint64_t channel_key = 0; // 0 shares channels/operators across points
    double snr_db = 0.0;
    double eta = 1.0;
    const ClusterRayConfig *channel_cfg = nullptr;
    EstimatorSet set;
    int trials = 0;
    const GanPrior *prior = nullptr;
    const CMat *psi = nullptr;
    const CMat *r_h = nullptr;
    const MeasurementOperator *digital_op = nullptr; // shared full-pilot reference
    const LmmseFilter *digital_filter = nullptr;     // matching per-point filter
};

struct PointOutcome {
    std::vector<TrialEval> gan, ls, lmmse, omp;
};

PointOutcome run_point(const PointTask &task) {
    PointOutcome out;
    out.gan.resize(static_cast<std::size_t>(task.trials));
    out.ls.resize(static_cast<std::size_t>(task.trials));
    out.lmmse.resize(static_cast<std::size_t>(task.trials));
    out.omp.resize(static_cast<std::size_t>(task.trials));

    const ExperimentConfig &cfg = *task.cfg;
    const std::uint64_t ms = cfg.master_seed;
    const TransceiverConfig tc = cfg.transceiver();
    const bool linear_on_hybrid =
        !cfg.digital_reference_for_linear && (task.set.ls || task.set.lmmse);

    parallel_for(task.trials, [&](int t) {
        const std::uint64_t trial = static_cast<std::uint64_t>(t);
        Rng ch_rng(derive_seed(ms, {task.exp_tag, kStreamChannel, task.channel_key, trial}));
        const ChannelRealization channel = sample_channel(*task.channel_cfg, ch_rng);

        if (task.set.gan || task.set.omp || linear_on_hybrid) {
            Rng pilot_rng(derive_seed(ms, {task.exp_tag, kStreamPilot, task.channel_key, trial}));
            const PilotFrame pilots = sample_pilots(tc, task.eta, pilot_rng);
            Rng phase_rng(derive_seed(ms, {task.exp_tag, kStreamPhase, task.channel_key, trial}));
            auto [f_rf, w_rf] = sample_phase_networks(tc, phase_rng);
            const MeasurementOperator op = build_operator(pilots, f_rf, w_rf, tc, task.snr_db);
            Rng noise_rng(derive_seed(ms, {task.exp_tag, kStreamNoise, task.point_idx, trial}));
            const EstimatorInput in{&op, add_awgn(apply_forward(op, channel), task.snr_db, noise_rng)};

            if (task.set.gan) {
                Rng z_rng(derive_seed(ms, {task.exp_tag, kStreamLatent, task.point_idx, trial}));
                const EstimateReport rep = estimate_gan(in, *task.prior, cfg.inversion, z_rng);
                out.gan[static_cast<std::size_t>(t)] = {error_ratio(channel, rep.estimate), true,
                                                        false};
            }
            if (task.set.omp) {
                const int k_eff = std::min<int>(cfg.omp_sparsity, static_cast<int>(op.rows()));
                const EstimateReport rep = estimate_omp(in, *task.psi, k_eff);
                out.omp[static_cast<std::size_t>(t)] = {error_ratio(channel, rep.estimate), true,
                                                        false};
            }
            if (linear_on_hybrid) {
                if (task.set.ls) {
                    try {
                        const EstimateReport rep = estimate_ls(in);
                        out.ls[static_cast<std::size_t>(t)] = {error_ratio(channel, rep.estimate),
                                                               true, false};
                    } catch (const IllPosedError &) {
                        out.ls[static_cast<std::size_t>(t)].ill_posed = true;
                    }
                }
                if (task.set.lmmse) {
                    try {
                        const EstimateReport rep = estimate_lmmse(in, *task.r_h);
                        out.lmmse[static_cast<std::size_t>(t)] = {
                            error_ratio(channel, rep.estimate), true, false};
                    } catch (const IllPosedError &) {
                        out.lmmse[static_cast<std::size_t>(t)].ill_posed = true;
                    }
                }
            }
        }

        if (cfg.digital_reference_for_linear && (task.set.ls || task.set.lmmse)) {
            const MeasurementOperator *dop = task.digital_op;
            std::optional<MeasurementOperator> local;
            if (task.eta < 1.0) {
                const TransceiverConfig dtc = tc.digital_reference();
                Rng mask_rng(
                    derive_seed(ms, {task.exp_tag, kStreamMaskDigital, task.channel_key, trial}));
                PilotFrame dp = mask_pilot_frame(orthogonal_pilots(dtc), task.eta, mask_rng);
                auto [df, dw] = identity_phase_networks(dtc);
                local.emplace(build_operator(dp, df, dw, dtc, task.snr_db));
                dop = &*local;
            }
            Rng dn_rng(derive_seed(ms, {task.exp_tag, kStreamNoiseDigital, task.point_idx, trial}));
            const EstimatorInput din{dop,
                                     add_awgn(apply_forward(*dop, channel), task.snr_db, dn_rng)};
            std::optional<EstimateReport> ls_rep;
            if (task.set.ls || task.set.lmmse) {
                try {
                    ls_rep = estimate_ls(din);
                } catch (const IllPosedError &) {
                    if (task.set.ls)
                        out.ls[static_cast<std::size_t>(t)].ill_posed = true;
                    if (task.set.lmmse)
                        out.lmmse[static_cast<std::size_t>(t)].ill_posed = true;
                }
            }
            if (ls_rep) {
                if (task.set.ls)
                    out.ls[static_cast<std::size_t>(t)] = {error_ratio(channel, ls_rep->estimate),
                                                           true, false};
                if (task.set.lmmse) {
                    try {
                        CVec filtered;
                        if (task.digital_filter && task.eta >= 1.0) {
                            filtered = task.digital_filter->apply(ls_rep->estimate.stacked());
                        } else {
                            LmmseFilter filter(*dop, din.received.noise_var, *task.r_h);
                            filtered = filter.apply(ls_rep->estimate.stacked());
                        }
                        const ChannelRealization est = channel_from_stacked(
                            filtered, dop->cfg.n_f, dop->cfg.n_rx, dop->cfg.n_tx);
                        out.lmmse[static_cast<std::size_t>(t)] = {error_ratio(channel, est), true,
                                                                  false};
                    } catch (const IllPosedError &) {
                        out.lmmse[static_cast<std::size_t>(t)].ill_posed = true;
                    }
                }
            }
        }
    });
    return out;
}

SweepRow aggregate(const std::string &experiment, const std::string &param, double value,
                   const std::string &estimator, double snr_db, double eta,
                   const std::vector<TrialEval> &evals, bool digital_ref) {
    SweepRow row;
    row.experiment = experiment;
    row.sweep_param = param;
    row.value = value;
    row.estimator = estimator;
    row.snr_db = snr_db;
    row.eta = eta;
    row.trials = static_cast<int>(evals.size());

    std::vector<std::string> flags;
    if (digital_ref)
        flags.push_back("digital-ref");

    int n_ok = 0, n_ill = 0;
    bool any_exact = false;
    double sum = 0.0, sumsq = 0.0;
    for (const TrialEval &e : evals) {
        if (e.ill_posed) {
            ++n_ill;
            continue;
        }
        if (!e.ok)
            continue;
        sum += e.ratio;
        sumsq += e.ratio * e.ratio;
        ++n_ok;
        if (e.ratio == 0.0)
            any_exact = true;
    }

    if (n_ok == 0) {
        row.nmse_db_mean = std::numeric_limits<double>::quiet_NaN();
        row.nmse_db_stderr = std::numeric_limits<double>::quiet_NaN();
        flags.push_back("ill-posed");
    } else {
        const double mean = sum / n_ok;
        const double var = std::max(0.0, sumsq / n_ok - mean * mean);
        const double se = std::sqrt(var / n_ok);
        if (mean <= 0.0) {
            row.nmse_db_mean = -200.0; // exact-recovery sentinel
            row.nmse_db_stderr = 0.0;
        } else {
            row.nmse_db_mean = 10.0 * std::log10(mean);
            row.nmse_db_stderr = 10.0 / std::log(10.0) * se / mean;
        }
        if (any_exact)
            flags.push_back("exact");
        if (n_ill > 0)
            flags.push_back("illposed_trials=" + std::to_string(n_ill));
    }

    std::string joined;
    for (std::size_t i = 0; i < flags.size(); ++i)
        joined += (i ? ";" : "") + flags[i];
    row.flags = joined;
    return row;
}

std::vector<std::string> convention_notes(const ExperimentConfig &cfg) {
    return {
        "genest experiment '" + cfg.name + "'",
        "conventions: rho=1; sigma_n^2 = 10^(-snr_db/10); analytic per-sample signal power = 1",
        "master_seed=" + std::to_string(cfg.master_seed),
    };
}

struct SharedResources {
    CMat psi;
    CMat r_h;
    std::optional<MeasurementOperator> digital_op;

    SharedResources(const ExperimentConfig &cfg, const EstimatorSet &set,
                    const ChannelDataset *cov_source) {
        if (set.omp)
            psi = dft_dictionary(cfg.channel.n_subcarriers, cfg.channel.n_rx(),
                                 cfg.channel.n_tx());
        if (set.lmmse) {
            if (!cov_source)
                throw InvalidConfigError("lmmse requested but no covariance dataset available");
            r_h = sample_covariance(*cov_source);
        }
        if ((set.ls || set.lmmse) && cfg.digital_reference_for_linear) {
            const TransceiverConfig dtc = cfg.transceiver().digital_reference();
            auto [df, dw] = identity_phase_networks(dtc);
            digital_op.emplace(build_operator(orthogonal_pilots(dtc), df, dw, dtc));
        }
    }
};

void check_gan_ready(const EstimatorSet &set, const GanPrior *prior, const ExperimentConfig &cfg) {
    if (!set.gan)
        return;
    if (!prior)
        throw InvalidConfigError("gan estimator requested but no trained generator supplied");
    if (prior->n_f != cfg.channel.n_subcarriers || prior->n_r != cfg.channel.n_rx() ||
        prior->n_t != cfg.channel.n_tx())
        throw InvalidConfigError("generator checkpoint dimensions do not match the experiment");
}

void append_point_rows(SweepResult &res, const std::string &experiment, const std::string &param,
                       double value, double snr_db, double eta, const EstimatorSet &set,
                       const PointOutcome &out, bool digital_ref) {
    if (set.gan)
        res.rows.push_back(aggregate(experiment, param, value, "gan", snr_db, eta, out.gan, false));
    if (set.ls)
        res.rows.push_back(aggregate(experiment, param, value, "ls", snr_db, eta, out.ls, digital_ref));
    if (set.lmmse)
        res.rows.push_back(
            aggregate(experiment, param, value, "lmmse", snr_db, eta, out.lmmse, digital_ref));
    if (set.omp)
        res.rows.push_back(aggregate(experiment, param, value, "omp", snr_db, eta, out.omp, false));
}

} // namespace

SweepResult run_snr_sweep(const ExperimentConfig &cfg, const GanPrior *prior,
                          const ChannelDataset *covariance_source) {
    cfg.validate();
    const EstimatorSet set = parse_estimators(cfg.estimators);
    check_gan_ready(set, prior, cfg);
    SharedResources shared(cfg, set, covariance_source);

    SweepResult res;
    res.header_notes = convention_notes(cfg);
    if (set.lmmse)
        res.header_notes.push_back("lmmse covariance from " +
                                   std::to_string(covariance_source->count()) +
                                   " realizations, relative shrinkage 1e-3");

    for (std::size_t p = 0; p < cfg.snr_grid_db.size(); ++p) {
        const double snr = cfg.snr_grid_db[p];
        std::optional<LmmseFilter> filter;
        if (set.lmmse && shared.digital_op)
            filter.emplace(*shared.digital_op, std::pow(10.0, -snr / 10.0), shared.r_h);

        PointTask task;
        task.cfg = &cfg;
        task.exp_tag = seeds::kSnrSweep;
        task.point_idx = p;
        task.channel_key = 0;
        task.snr_db = snr;
        task.eta = 1.0;
        task.channel_cfg = &cfg.channel;
        task.set = set;
        task.trials = cfg.trials;
        task.prior = prior;
        task.psi = &shared.psi;
        task.r_h = &shared.r_h;
        task.digital_op = shared.digital_op ? &*shared.digital_op : nullptr;
        task.digital_filter = filter ? &*filter : nullptr;

        const PointOutcome out = run_point(task);
        append_point_rows(res, "snr", "snr_db", snr, snr, 1.0, set, out,
                          cfg.digital_reference_for_linear);
    }
    return res;
}

SweepResult run_pilot_sweep(const ExperimentConfig &cfg, const GanPrior *prior,
                            const ChannelDataset *covariance_source) {
    cfg.validate();
    const EstimatorSet set = parse_estimators(cfg.estimators);
    check_gan_ready(set, prior, cfg);
    SharedResources shared(cfg, set, covariance_source);
    const double snr = cfg.pilot_sweep_snr_db;

    std::optional<LmmseFilter> filter;
    if (set.lmmse && shared.digital_op)
        filter.emplace(*shared.digital_op, std::pow(10.0, -snr / 10.0), shared.r_h);

    SweepResult res;
    res.header_notes = convention_notes(cfg);
    res.header_notes.push_back("pilot sweep at snr_db=" + std::to_string(snr));

    for (std::size_t p = 0; p < cfg.eta_grid.size(); ++p) {
        const double eta = cfg.eta_grid[p];
        PointTask task;
        task.cfg = &cfg;
        task.exp_tag = seeds::kPilotSweep;
        task.point_idx = p;
        task.channel_key = 0;
        task.snr_db = snr;
        task.eta = eta;
        task.channel_cfg = &cfg.channel;
        task.set = set;
        task.trials = cfg.trials;
        task.prior = prior;
        task.psi = &shared.psi;
        task.r_h = &shared.r_h;
        task.digital_op = shared.digital_op ? &*shared.digital_op : nullptr;
        task.digital_filter = filter ? &*filter : nullptr;

        const PointOutcome out = run_point(task);
        append_point_rows(res, "pilots", "eta", eta, snr, eta, set, out,
                          cfg.digital_reference_for_linear);
    }
    return res;
}

SweepResult run_generalization_sweep(const ExperimentConfig &cfg, const GanPrior &prior,
                                     int train_clusters, int train_rays) {
    cfg.validate();
    EstimatorSet set;
    set.gan = true;
    check_gan_ready(set, &prior, cfg);

    struct SeriesPoint {
        std::string param;
        int value;
        ClusterRayConfig channel;
    };
    std::vector<SeriesPoint> points;
    for (int c : cfg.gen_test_clusters) {
        ClusterRayConfig ch = cfg.channel;
        ch.n_clusters = c;
        ch.n_rays = train_rays;
        points.push_back({"clusters", c, ch});
    }
    for (int r : cfg.gen_test_rays) {
        ClusterRayConfig ch = cfg.channel;
        ch.n_clusters = train_clusters;
        ch.n_rays = r;
        points.push_back({"rays", r, ch});
    }

    SweepResult res;
    res.header_notes = convention_notes(cfg);
    res.header_notes.push_back("generator trained at clusters=" + std::to_string(train_clusters) +
                               " rays=" + std::to_string(train_rays));

    std::uint64_t point_counter = 0;
    for (std::size_t s = 0; s < points.size(); ++s) {
        for (double snr : cfg.gen_snr_grid_db) {
            PointTask task;
            task.cfg = &cfg;
            task.exp_tag = seeds::kGenSweep;
            task.point_idx = ++point_counter;
            task.channel_key = s + 1; // channels shared across the snr axis only
            task.snr_db = snr;
            task.eta = 1.0;
            task.channel_cfg = &points[s].channel;
            task.set = set;
            task.trials = cfg.gen_trials;
            task.prior = &prior;

            const PointOutcome out = run_point(task);
            res.rows.push_back(aggregate("generalization", points[s].param,
                                         static_cast<double>(points[s].value), "gan", snr, 1.0,
                                         out.gan, false));
        }
    }
    return res;
}

SweepResult run_training_ablation(const ExperimentConfig &cfg) {
    cfg.validate();

    struct GridPoint {
        std::string param;
        int value;
        int epochs, data, batch;
    };
    const int base_e = cfg.wgan.epochs;
    const int base_d = cfg.train_count;
    const int base_b = cfg.wgan.batch_size;
    auto or_base = [](const std::vector<int> &v, int base) {
        return v.empty() ? std::vector<int>{base} : v;
    };

    std::vector<GridPoint> grid;
    for (int e : or_base(cfg.ablation_epochs, base_e))
        grid.push_back({"epochs", e, e, base_d, base_b});
    for (int d : or_base(cfg.ablation_data, base_d))
        grid.push_back({"data", d, base_e, d, base_b});
    for (int b : or_base(cfg.ablation_batch, base_b))
        grid.push_back({"batch", b, base_e, base_d, b});
    // drop repeats of the same (epochs, data, batch) configuration
    std::vector<GridPoint> unique;
    for (const GridPoint &g : grid) {
        bool dup = false;
        for (const GridPoint &u : unique)
            dup = dup || (u.epochs == g.epochs && u.data == g.data && u.batch == g.batch);
        if (!dup)
            unique.push_back(g);
    }

    SweepResult res;
    res.header_notes = convention_notes(cfg);
    res.header_notes.push_back("ablation around epochs=" + std::to_string(base_e) +
                               " data=" + std::to_string(base_d) +
                               " batch=" + std::to_string(base_b) +
                               " at snr_db=" + std::to_string(cfg.ablation_snr_db));

    // a single master-seed stream for the generated data keeps smaller
    // datasets exact prefixes of larger ones
    const std::uint64_t data_seed = derive_seed(cfg.master_seed, {seeds::kAblation, kStreamAblationData});

    for (const GridPoint &g : unique) {
        if (g.batch > g.data)
            throw InvalidConfigError("ablation: batch size exceeds dataset size at a grid point");
        const ChannelDataset ds = generate_dataset(cfg.channel, g.data, data_seed);
        WganConfig w = cfg.wgan;
        w.epochs = g.epochs;
        w.batch_size = g.batch;
        w.checkpoint_dir.clear();
        auto [prior, log] =
            train(ds, w,
                  derive_seed(cfg.master_seed,
                              {seeds::kAblation, kStreamAblationTrain, static_cast<std::uint64_t>(g.epochs),
                               static_cast<std::uint64_t>(g.data), static_cast<std::uint64_t>(g.batch)}));

        PointTask task;
        task.cfg = &cfg;
        task.exp_tag = seeds::kAblation;
        task.point_idx = 0; // evaluation tuples shared across grid points
        task.channel_key = 0;
        task.snr_db = cfg.ablation_snr_db;
        task.eta = 1.0;
        task.channel_cfg = &cfg.channel;
        task.set = EstimatorSet{};
        task.set.gan = true;
        task.trials = cfg.ablation_test_channels;
        task.prior = &prior;

        const PointOutcome out = run_point(task);
        res.rows.push_back(aggregate("ablation", g.param, static_cast<double>(g.value), "gan",
                                     cfg.ablation_snr_db, 1.0, out.gan, false));
    }
    return res;
}

SweepResult run_single_estimate(const ExperimentConfig &cfg, const GanPrior *prior,
                                const ChannelDataset *covariance_source, double snr_db,
                                double eta) {
    cfg.validate();
    if (!(eta > 0.0) || eta > 1.0)
        throw InvalidConfigError("estimate: eta must lie in (0, 1]");
    const EstimatorSet set = parse_estimators(cfg.estimators);
    check_gan_ready(set, prior, cfg);
    SharedResources shared(cfg, set, covariance_source);

    PointTask task;
    task.cfg = &cfg;
    task.exp_tag = seeds::kEstimate;
    task.point_idx = 0;
    task.channel_key = 0;
    task.snr_db = snr_db;
    task.eta = eta;
    task.channel_cfg = &cfg.channel;
    task.set = set;
    task.trials = 1;
    task.prior = prior;
    task.psi = &shared.psi;
    task.r_h = &shared.r_h;
    task.digital_op = shared.digital_op ? &*shared.digital_op : nullptr;
    task.digital_filter = nullptr; // built per call inside the trial

    SweepResult res;
    res.header_notes = convention_notes(cfg);
    const PointOutcome out = run_point(task);
    append_point_rows(res, "estimate", "single", 0.0, snr_db, eta, set, out,
                      cfg.digital_reference_for_linear);
    return res;
}

// -- CSV / report -------------------------------------------------------------

void write_sweep_csv(const SweepResult &result, const std::string &path) {
    std::ofstream os(path);
    if (!os)
        throw FormatError("write_sweep_csv: cannot open " + path);
    for (const std::string &note : result.header_notes)
        os << "# " << note << "\n";
    os << "experiment,sweep_param,value,estimator,snr_db,eta,nmse_db_mean,nmse_db_stderr,trials,"
          "flags\n";
    char line[400];
    for (const SweepRow &r : result.rows) {
        std::snprintf(line, sizeof line, "%s,%s,%.6g,%s,%.6g,%.6g,%.6f,%.6f,%d,%s\n",
                      r.experiment.c_str(), r.sweep_param.c_str(), r.value, r.estimator.c_str(),
                      r.snr_db, r.eta, r.nmse_db_mean, r.nmse_db_stderr, r.trials,
                      r.flags.c_str());
        os << line;
    }
}

namespace {

struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    int col(const std::string &name) const {
        for (std::size_t i = 0; i < columns.size(); ++i)
            if (columns[i] == name)
                return static_cast<int>(i);
        return -1;
    }
};

std::optional<CsvTable> read_csv(const std::string &path) {
    std::ifstream is(path);
    if (!is)
        return std::nullopt;
    CsvTable table;
    std::string line;
    bool have_header = false;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#')
            continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ','))
            fields.push_back(field);
        if (!have_header) {
            table.columns = fields;
            have_header = true;
        } else {
            table.rows.push_back(fields);
        }
    }
    if (!have_header)
        return std::nullopt;
    return table;
}

int emit_series(const std::string &dir, const std::string &csv_name, const std::string &x_col,
                const std::vector<std::string> &key_cols, const std::string &stem) {
    auto table = read_csv(dir + "/" + csv_name);
    if (!table)
        return 0;
    const int xi = table->col(x_col);
    const int mi = table->col("nmse_db_mean");
    const int si = table->col("nmse_db_stderr");
    if (xi < 0 || mi < 0 || si < 0)
        return 0;
    std::vector<int> kis;
    for (const std::string &k : key_cols) {
        const int ki = table->col(k);
        if (ki < 0)
            return 0;
        kis.push_back(ki);
    }
    std::map<std::string, std::vector<std::array<std::string, 3>>> series;
    for (const auto &row : table->rows) {
        std::string key;
        for (int ki : kis)
            key += (key.empty() ? "" : "_") + row[static_cast<std::size_t>(ki)];
        series[key].push_back({row[static_cast<std::size_t>(xi)], row[static_cast<std::size_t>(mi)],
                               row[static_cast<std::size_t>(si)]});
    }
    int written = 0;
    for (const auto &[key, rows] : series) {
        const std::string path = dir + "/" + stem + "_" + key + ".dat";
        std::ofstream os(path);
        if (!os)
            throw FormatError("report: cannot open " + path);
        os << "# " << x_col << " nmse_db_mean nmse_db_stderr\n";
        for (const auto &r : rows)
            os << r[0] << " " << r[1] << " " << r[2] << "\n";
        ++written;
    }
    return written;
}

} // namespace

int write_report_dats(const std::string &dir) {
    int written = 0;
    written += emit_series(dir, "snr_sweep.csv", "snr_db", {"estimator"}, "snr_sweep");
    written += emit_series(dir, "pilot_sweep.csv", "eta", {"estimator"}, "pilot_sweep");
    written += emit_series(dir, "generalization.csv", "snr_db", {"sweep_param", "value"}, "gen");
    written += emit_series(dir, "ablation.csv", "value", {"sweep_param"}, "ablation");
    written += emit_series(dir, "estimate.csv", "snr_db", {"estimator"}, "estimate");

    // tail report has its own schema
    if (auto tail = read_csv(dir + "/tail_check.csv")) {
        const int ti = tail->col("t");
        const int ei = tail->col("empirical_prob");
        const int bi = tail->col("bound");
        if (ti >= 0 && ei >= 0 && bi >= 0) {
            std::ofstream os(dir + "/tail_check.dat");
            if (!os)
                throw FormatError("report: cannot open " + dir + "/tail_check.dat");
            os << "# t empirical_prob bound\n";
            for (const auto &r : tail->rows)
                os << r[static_cast<std::size_t>(ti)] << " " << r[static_cast<std::size_t>(ei)]
                   << " " << r[static_cast<std::size_t>(bi)] << "\n";
            ++written;
        }
    }
    return written;
}

} // namespace genest

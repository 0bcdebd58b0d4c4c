// SPDX-License-Identifier: Apache-2.0
//
// genest: generative-prior channel estimation for wideband MIMO-OFDM
// Copyright (C) 2026 The genest authors

#include "genest/wgan.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

namespace genest {

void WganConfig::validate() const {
    if (critic_steps_k < 1 || batch_size < 1 || epochs < 0 || latent_dim < 1)
        throw InvalidConfigError("wgan config: counts must be positive");
    if (!(lr > 0.0) || !(clip > 0.0))
        throw InvalidConfigError("wgan config: lr and clip must be > 0");
    for (int h : gen_hidden)
        if (h < 1)
            throw InvalidConfigError("wgan config: generator widths must be >= 1");
    for (int h : critic_hidden)
        if (h < 1)
            throw InvalidConfigError("wgan config: critic widths must be >= 1");
}

ChannelRealization GanPrior::decode(const RVec &z) const {
    RVec out = forward(generator, z);
    out *= output_scale;
    return real_to_channel(out, n_f, n_r, n_t);
}

void save_prior(const GanPrior &prior, const std::string &path) {
    GeneratorMeta meta{prior.n_f, prior.n_r, prior.n_t, prior.output_scale};
    save_network(prior.generator, path, &meta);
}

GanPrior load_prior(const std::string &path) {
    GanPrior prior;
    GeneratorMeta meta;
    prior.generator = load_network(path, &meta);
    prior.n_f = meta.n_f;
    prior.n_r = meta.n_r;
    prior.n_t = meta.n_t;
    prior.output_scale = meta.output_scale;
    if (prior.n_f < 1 || prior.n_r < 1 || prior.n_t < 1)
        throw FormatError("load_prior: checkpoint has no channel dimensions");
    const Eigen::Index want = 2 * static_cast<Eigen::Index>(prior.n_f) * prior.n_r * prior.n_t;
    if (prior.generator.output_dim() != want)
        throw FormatError("load_prior: generator output does not match channel dimensions");
    return prior;
}

void write_training_log_csv(const TrainingLog &log, const std::string &path) {
    std::ofstream os(path);
    if (!os)
        throw FormatError("write_training_log_csv: cannot open " + path);
    os << "epoch,critic_objective,gen_norm,critic_norm,seconds\n";
    char line[200];
    for (const TrainingLogRow &r : log.rows) {
        std::snprintf(line, sizeof line, "%d,%.9g,%.9g,%.9g,%.3f\n", r.epoch, r.critic_objective,
                      r.gen_norm, r.critic_norm, r.seconds);
        os << line;
    }
}

namespace {

RMat latent_batch(int dim, int count, Rng &rng) {
    RMat z(dim, count);
    for (Eigen::Index j = 0; j < z.cols(); ++j)
        for (Eigen::Index i = 0; i < z.rows(); ++i)
            z(i, j) = rng.normal();
    return z;
}

double param_norm(const NetworkParams &net) {
    double s = 0.0;
    for (std::size_t l = 0; l < net.weights.size(); ++l)
        s += net.weights[l].squaredNorm() + net.biases[l].squaredNorm();
    return std::sqrt(s);
}

} // namespace

double critic_step(NetworkParams &critic, const NetworkParams &generator, const RMat &real_batch,
                   Rng &rng, const WganConfig &cfg, RmspropState &critic_state) {
    const int m = static_cast<int>(real_batch.cols());
    if (m < 1)
        throw InvalidConfigError("critic_step: empty batch");
    const RMat z = latent_batch(generator.input_dim(), m, rng);
    const RMat fake = forward_batch(generator, z);

    RMat joint(real_batch.rows(), 2 * m);
    joint.leftCols(m) = real_batch;
    joint.rightCols(m) = fake;
    ForwardTrace trace = forward_trace(critic, joint);
    const double objective =
        (trace.output.leftCols(m).sum() - trace.output.rightCols(m).sum()) / m;

    // upstream -1/m on real, +1/m on fake gives the gradient of -objective;
    // the RMSprop descent step on it ascends the objective
    RMat upstream(1, 2 * m);
    upstream.leftCols(m).setConstant(-1.0 / m);
    upstream.rightCols(m).setConstant(1.0 / m);
    GradientBundle grads = backward_batch(critic, trace, upstream, true);
    rmsprop_step(critic, grads, critic_state, cfg.lr, cfg.rmsprop_decay, cfg.rmsprop_eps);
    clip_weights(critic, cfg.clip);
    return objective;
}

void generator_step(const NetworkParams &critic, NetworkParams &generator, Rng &rng,
                    const WganConfig &cfg, RmspropState &generator_state) {
    const int m = cfg.batch_size;
    const RMat z = latent_batch(generator.input_dim(), m, rng);
    ForwardTrace gen_trace = forward_trace(generator, z);
    ForwardTrace critic_trace = forward_trace(critic, gen_trace.output);

    // loss is -(1/m) sum D(G(z)); chain the critic's input gradient into the
    // generator's parameter gradients
    RMat upstream = RMat::Constant(1, m, -1.0 / m);
    GradientBundle through_critic = backward_batch(critic, critic_trace, upstream, false);
    GradientBundle grads = backward_batch(generator, gen_trace, through_critic.d_inputs, true);
    rmsprop_step(generator, grads, generator_state, cfg.lr, cfg.rmsprop_decay, cfg.rmsprop_eps);
}

namespace {

std::vector<LayerSpec> generator_spec(const WganConfig &cfg, int out_dim) {
    std::vector<LayerSpec> spec;
    int prev = cfg.latent_dim;
    for (int h : cfg.gen_hidden) {
        spec.push_back({prev, h, Activation::relu});
        prev = h;
    }
    spec.push_back({prev, out_dim, Activation::linear});
    return spec;
}

std::vector<LayerSpec> critic_spec(const WganConfig &cfg, int in_dim) {
    std::vector<LayerSpec> spec;
    int prev = in_dim;
    for (int h : cfg.critic_hidden) {
        spec.push_back({prev, h, Activation::leaky_relu});
        prev = h;
    }
    spec.push_back({prev, 1, Activation::linear});
    return spec;
}

struct EpochStream {
    // shuffled minibatch source; reshuffles whenever the remainder would not
    // fill a batch
    std::vector<int> order;
    std::size_t cursor = 0;
    Rng rng;

    EpochStream(int count, std::uint64_t seed) : order(static_cast<std::size_t>(count)), rng(seed) {
        for (int i = 0; i < count; ++i)
            order[static_cast<std::size_t>(i)] = i;
        reshuffle();
    }

    void reshuffle() {
        for (std::size_t i = order.size() - 1; i > 0; --i) {
            const std::size_t j = rng.below(i + 1);
            std::swap(order[i], order[j]);
        }
        cursor = 0;
    }

    void next_batch(const RMat &all, int m, RMat &batch) {
        if (cursor + static_cast<std::size_t>(m) > order.size())
            reshuffle();
        batch.resize(all.rows(), m);
        for (int j = 0; j < m; ++j)
            batch.col(j) = all.col(order[cursor++]);
    }
};

} // namespace

std::pair<GanPrior, TrainingLog> train(const ChannelDataset &dataset, const WganConfig &cfg,
                                       std::uint64_t master_seed) {
    cfg.validate();
    if (dataset.count() < cfg.batch_size)
        throw InvalidConfigError("train: dataset smaller than one batch");

    const int n_f = dataset.config.n_subcarriers;
    const int n_r = dataset.config.n_rx();
    const int n_t = dataset.config.n_tx();
    const Eigen::Index out_dim = 2 * static_cast<Eigen::Index>(n_f) * n_r * n_t;

    // bridge to real vectors and divide out the global RMS so the generator
    // learns a unit-scale target
    RMat real_all(out_dim, dataset.count());
    for (int i = 0; i < dataset.count(); ++i)
        real_all.col(i) = channel_to_real(dataset.realizations[static_cast<std::size_t>(i)]);
    double scale = std::sqrt(real_all.squaredNorm() / static_cast<double>(real_all.size()));
    if (!(scale > 0.0))
        scale = 1.0;
    real_all /= scale;

    Rng init_rng(derive_seed(master_seed, {0}));
    GanPrior prior;
    prior.generator = make_network(generator_spec(cfg, static_cast<int>(out_dim)), init_rng);
    prior.n_f = n_f;
    prior.n_r = n_r;
    prior.n_t = n_t;
    prior.output_scale = scale;
    NetworkParams critic = make_network(critic_spec(cfg, static_cast<int>(out_dim)), init_rng);

    RmspropState gen_state = make_rmsprop_state(prior.generator);
    RmspropState critic_state = make_rmsprop_state(critic);
    Rng train_rng(derive_seed(master_seed, {1}));
    EpochStream stream(dataset.count(), derive_seed(master_seed, {2}));

    TrainingLog log;
    const auto t0 = std::chrono::steady_clock::now();
    double best_score = std::numeric_limits<double>::infinity();
    RMat batch;

    auto checkpoint_score = [&](int epoch) {
        // deterministic draw for scoring; reference is a fixed prefix of the set
        Rng score_rng(derive_seed(master_seed, {3, static_cast<std::uint64_t>(epoch)}));
        const int n = std::min(cfg.stat_sample, dataset.count());
        std::vector<ChannelRealization> fake = sample_channels(prior, n, score_rng);
        std::vector<ChannelRealization> real(dataset.realizations.begin(),
                                             dataset.realizations.begin() + n);
        return stat_match_report(fake, real).summary();
    };

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        double objective_sum = 0.0;
        for (int t = 0; t < cfg.critic_steps_k; ++t) {
            stream.next_batch(real_all, cfg.batch_size, batch);
            objective_sum +=
                critic_step(critic, prior.generator, batch, train_rng, cfg, critic_state);
        }
        generator_step(critic, prior.generator, train_rng, cfg, gen_state);

        TrainingLogRow row;
        row.epoch = epoch;
        row.critic_objective = objective_sum / cfg.critic_steps_k;
        row.gen_norm = param_norm(prior.generator);
        row.critic_norm = param_norm(critic);
        row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        log.rows.push_back(row);

        const bool last = epoch == cfg.epochs;
        if (!cfg.checkpoint_dir.empty() && cfg.checkpoint_interval > 0 &&
            (epoch % cfg.checkpoint_interval == 0 || last)) {
            save_prior(prior, cfg.checkpoint_dir + "/gan_latest.gnet");
            const double score = checkpoint_score(epoch);
            if (score < best_score) {
                best_score = score;
                save_prior(prior, cfg.checkpoint_dir + "/gan_best.gnet");
            }
            if (last)
                save_prior(prior, cfg.checkpoint_dir + "/gan_final.gnet");
        }
    }
    if (!cfg.checkpoint_dir.empty() && cfg.epochs == 0) {
        save_prior(prior, cfg.checkpoint_dir + "/gan_best.gnet");
        save_prior(prior, cfg.checkpoint_dir + "/gan_final.gnet");
    }
    return {std::move(prior), std::move(log)};
}

std::vector<ChannelRealization> sample_channels(const GanPrior &prior, int n, Rng &rng) {
    if (n < 1)
        throw InvalidConfigError("sample_channels: need n >= 1");
    const RMat z = latent_batch(prior.latent_dim(), n, rng);
    const RMat out = forward_batch(prior.generator, z);
    std::vector<ChannelRealization> channels;
    channels.reserve(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
        RVec col = out.col(j) * prior.output_scale;
        channels.push_back(real_to_channel(col, prior.n_f, prior.n_r, prior.n_t));
    }
    return channels;
}

namespace {

double pooled_second_moment(const std::vector<ChannelRealization> &set) {
    double acc = 0.0;
    long count = 0;
    for (const ChannelRealization &ch : set) {
        acc += ch.squared_norm();
        count += static_cast<long>(ch.n_f()) * ch.n_r() * ch.n_t();
    }
    return count > 0 ? acc / static_cast<double>(count) : 0.0;
}

// complex autocorrelation across the subcarrier axis at the given lag,
// normalized by the pooled power
cplx freq_autocorr(const std::vector<ChannelRealization> &set, int lag) {
    cplx num(0.0, 0.0);
    double den = 0.0;
    for (const ChannelRealization &ch : set) {
        for (int k = 0; k + lag < ch.n_f(); ++k) {
            const CMat &a = ch.per_subcarrier[static_cast<std::size_t>(k + lag)];
            const CMat &b = ch.per_subcarrier[static_cast<std::size_t>(k)];
            num += (a.array() * b.array().conjugate()).sum();
        }
        den += ch.squared_norm();
    }
    return den > 0.0 ? num / den : cplx(0.0, 0.0);
}

RVec side_spectrum(const std::vector<ChannelRealization> &set, bool receive_side) {
    if (set.empty())
        return RVec();
    const int n_r = set[0].n_r();
    const int n_t = set[0].n_t();
    CMat cov = CMat::Zero(receive_side ? n_r : n_t, receive_side ? n_r : n_t);
    long blocks = 0;
    for (const ChannelRealization &ch : set)
        for (const CMat &hk : ch.per_subcarrier) {
            if (receive_side)
                cov += hk * hk.adjoint() / static_cast<double>(n_t);
            else
                cov += hk.adjoint() * hk / static_cast<double>(n_r);
            ++blocks;
        }
    cov /= static_cast<double>(blocks);
    Eigen::SelfAdjointEigenSolver<CMat> eig(cov);
    RVec vals = eig.eigenvalues().reverse();
    return vals;
}

std::vector<double> tail_curve(const std::vector<ChannelRealization> &set,
                               const std::vector<double> &grid) {
    long total = 0;
    std::vector<long> exceed(grid.size(), 0);
    for (const ChannelRealization &ch : set)
        for (const CMat &hk : ch.per_subcarrier)
            for (Eigen::Index j = 0; j < hk.cols(); ++j)
                for (Eigen::Index i = 0; i < hk.rows(); ++i)
                    for (double part : {hk(i, j).real(), hk(i, j).imag()}) {
                        ++total;
                        const double a = std::abs(part);
                        for (std::size_t g = 0; g < grid.size(); ++g)
                            if (a > grid[g])
                                ++exceed[g];
                    }
    std::vector<double> curve(grid.size(), 0.0);
    for (std::size_t g = 0; g < grid.size(); ++g)
        curve[g] = total > 0 ? static_cast<double>(exceed[g]) / static_cast<double>(total) : 0.0;
    return curve;
}

double max_abs_part(const std::vector<ChannelRealization> &set) {
    double m = 0.0;
    for (const ChannelRealization &ch : set)
        for (const CMat &hk : ch.per_subcarrier) {
            m = std::max(m, hk.real().cwiseAbs().maxCoeff());
            m = std::max(m, hk.imag().cwiseAbs().maxCoeff());
        }
    return m;
}

} // namespace

double StatReport::summary() const {
    return second_moment_rel_err + freq_autocorr_err + rx_spectrum_rel_err + tx_spectrum_rel_err +
           tail_sup_err;
}

StatReport stat_match_report(const std::vector<ChannelRealization> &generated,
                             const std::vector<ChannelRealization> &real) {
    if (generated.empty() || real.empty())
        throw InvalidConfigError("stat_match_report: both sets must be nonempty");
    if (generated[0].n_f() != real[0].n_f() || generated[0].n_r() != real[0].n_r() ||
        generated[0].n_t() != real[0].n_t())
        throw ShapeError("stat_match_report: sets have different channel dimensions");

    StatReport rep;
    const double m2_real = pooled_second_moment(real);
    const double m2_gen = pooled_second_moment(generated);
    rep.second_moment_rel_err = m2_real > 0.0 ? std::abs(m2_gen - m2_real) / m2_real : 0.0;

    const int max_lag = std::min(4, real[0].n_f() - 1);
    double lag_err = 0.0;
    for (int lag = 1; lag <= max_lag; ++lag)
        lag_err += std::abs(freq_autocorr(generated, lag) - freq_autocorr(real, lag));
    rep.freq_autocorr_err = max_lag > 0 ? lag_err / max_lag : 0.0;

    const RVec rx_g = side_spectrum(generated, true);
    const RVec rx_r = side_spectrum(real, true);
    rep.rx_spectrum_rel_err = rx_r.norm() > 0.0 ? (rx_g - rx_r).norm() / rx_r.norm() : 0.0;
    const RVec tx_g = side_spectrum(generated, false);
    const RVec tx_r = side_spectrum(real, false);
    rep.tx_spectrum_rel_err = tx_r.norm() > 0.0 ? (tx_g - tx_r).norm() / tx_r.norm() : 0.0;

    const double tmax = std::max(max_abs_part(generated), max_abs_part(real));
    std::vector<double> grid(32);
    for (std::size_t g = 0; g < grid.size(); ++g)
        grid[g] = tmax * static_cast<double>(g) / static_cast<double>(grid.size());
    const std::vector<double> curve_g = tail_curve(generated, grid);
    const std::vector<double> curve_r = tail_curve(real, grid);
    double sup = 0.0;
    for (std::size_t g = 0; g < grid.size(); ++g)
        sup = std::max(sup, std::abs(curve_g[g] - curve_r[g]));
    rep.tail_sup_err = sup;
    return rep;
}

} // namespace genest

// SPDX-License-Identifier: Apache-2.0
//
// genest: generative-prior channel estimation for wideband MIMO-OFDM
// Copyright (C) 2026 The genest authors

#include "genest/measurement.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

namespace genest {

void TransceiverConfig::validate() const {
    if (n_tx < 1 || n_rx < 1 || n_f < 1 || n_frames < 1)
        throw InvalidConfigError("transceiver config: dimensions must be >= 1");
    if (n_tx_rf < 1 || n_tx_rf > n_tx)
        throw InvalidConfigError("transceiver config: need 1 <= n_tx_rf <= n_tx");
    if (n_rx_rf < 1 || n_rx_rf > n_rx)
        throw InvalidConfigError("transceiver config: need 1 <= n_rx_rf <= n_rx");
    if (n_streams < 1 || n_streams > n_tx_rf)
        throw InvalidConfigError("transceiver config: need 1 <= n_streams <= n_tx_rf");
}

TransceiverConfig TransceiverConfig::digital_reference() const {
    TransceiverConfig d = *this;
    d.n_tx_rf = n_tx;
    d.n_rx_rf = n_rx;
    d.n_streams = n_tx;
    d.n_frames = n_tx;
    return d;
}

int PilotFrame::active_slots() const {
    return static_cast<int>(mask.count());
}

PilotFrame sample_pilots(const TransceiverConfig &cfg, double mask_ratio, Rng &rng) {
    cfg.validate();
    if (!(mask_ratio > 0.0) || mask_ratio > 1.0)
        throw InvalidConfigError("sample_pilots: mask ratio must lie in (0, 1]");

    PilotFrame pf;
    pf.n_frames = cfg.n_frames;
    pf.n_f = cfg.n_f;
    pf.n_streams = cfg.n_streams;
    const double amp = 1.0 / std::sqrt(2.0 * cfg.n_streams);
    pf.symbols.reserve(static_cast<std::size_t>(cfg.n_frames));
    for (int n = 0; n < cfg.n_frames; ++n) {
        CMat frame(cfg.n_streams, cfg.n_f);
        for (Eigen::Index k = 0; k < frame.cols(); ++k)
            for (Eigen::Index i = 0; i < frame.rows(); ++i) {
                const std::uint64_t bits = rng.next_u64();
                frame(i, k) = cplx((bits & 1) ? amp : -amp, (bits & 2) ? amp : -amp);
            }
        pf.symbols.push_back(std::move(frame));
    }
    pf.mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(cfg.n_frames, cfg.n_f, true);
    // the Fisher-Yates prefix inside mask_pilot_frame makes masks nested
    // across mask ratios for the same seed
    return mask_pilot_frame(std::move(pf), mask_ratio, rng);
}

PilotFrame mask_pilot_frame(PilotFrame frame, double mask_ratio, Rng &rng) {
    if (!(mask_ratio > 0.0) || mask_ratio > 1.0)
        throw InvalidConfigError("mask_pilot_frame: mask ratio must lie in (0, 1]");
    const int total = frame.n_frames * frame.n_f;
    std::vector<int> order(static_cast<std::size_t>(total));
    for (int i = 0; i < total; ++i)
        order[static_cast<std::size_t>(i)] = i;
    for (int i = total - 1; i > 0; --i) {
        const int j = static_cast<int>(rng.below(static_cast<std::uint64_t>(i) + 1));
        std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
    }
    const int keep = static_cast<int>(std::ceil(mask_ratio * total));
    frame.mask.setConstant(frame.n_frames, frame.n_f, false);
    for (int i = 0; i < keep; ++i) {
        const int slot = order[static_cast<std::size_t>(i)];
        frame.mask(slot / frame.n_f, slot % frame.n_f) = true;
    }
    for (int n = 0; n < frame.n_frames; ++n)
        for (int k = 0; k < frame.n_f; ++k)
            if (!frame.mask(n, k))
                frame.symbols[static_cast<std::size_t>(n)].col(k).setZero();
    return frame;
}

PilotFrame orthogonal_pilots(const TransceiverConfig &cfg) {
    cfg.validate();
    if (cfg.n_streams > cfg.n_frames)
        throw InvalidConfigError("orthogonal_pilots: needs n_streams <= n_frames");
    PilotFrame pf;
    pf.n_frames = cfg.n_frames;
    pf.n_f = cfg.n_f;
    pf.n_streams = cfg.n_streams;
    const double amp = 1.0 / std::sqrt(static_cast<double>(cfg.n_streams));
    for (int n = 0; n < cfg.n_frames; ++n) {
        CMat frame(cfg.n_streams, cfg.n_f);
        for (int i = 0; i < cfg.n_streams; ++i) {
            const double angle = -2.0 * std::numbers::pi *
                                 static_cast<double>((static_cast<long>(n) * i) % cfg.n_frames) /
                                 static_cast<double>(cfg.n_frames);
            frame.row(i).setConstant(std::polar(amp, angle));
        }
        pf.symbols.push_back(std::move(frame));
    }
    pf.mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(cfg.n_frames, cfg.n_f, true);
    return pf;
}

std::pair<CMat, CMat> sample_phase_networks(const TransceiverConfig &cfg, Rng &rng) {
    cfg.validate();
    const double at = 1.0 / std::sqrt(static_cast<double>(cfg.n_tx));
    const double ar = 1.0 / std::sqrt(static_cast<double>(cfg.n_rx));
    CMat f_rf(cfg.n_tx, cfg.n_tx_rf);
    for (Eigen::Index j = 0; j < f_rf.cols(); ++j)
        for (Eigen::Index i = 0; i < f_rf.rows(); ++i)
            f_rf(i, j) = (rng.next_u64() & 1) ? at : -at;
    CMat w_rf(cfg.n_rx, cfg.n_rx_rf);
    for (Eigen::Index j = 0; j < w_rf.cols(); ++j)
        for (Eigen::Index i = 0; i < w_rf.rows(); ++i)
            w_rf(i, j) = (rng.next_u64() & 1) ? ar : -ar;
    return {std::move(f_rf), std::move(w_rf)};
}

std::pair<CMat, CMat> identity_phase_networks(const TransceiverConfig &cfg) {
    cfg.validate();
    return {CMat::Identity(cfg.n_tx, cfg.n_tx_rf), CMat::Identity(cfg.n_rx, cfg.n_rx_rf)};
}

MeasurementOperator build_operator(const PilotFrame &pilots, const CMat &f_rf, const CMat &w_rf,
                                   const TransceiverConfig &cfg, double snr_db) {
    cfg.validate();
    if (pilots.n_frames != cfg.n_frames || pilots.n_f != cfg.n_f ||
        pilots.n_streams != cfg.n_streams)
        throw ShapeError("build_operator: pilot frame does not match transceiver config");
    if (f_rf.rows() != cfg.n_tx || f_rf.cols() != cfg.n_tx_rf)
        throw ShapeError("build_operator: analog precoder has wrong shape");
    if (w_rf.rows() != cfg.n_rx || w_rf.cols() != cfg.n_rx_rf)
        throw ShapeError("build_operator: analog combiner has wrong shape");

    MeasurementOperator op;
    op.cfg = cfg;
    op.pilots = pilots;
    op.f_rf = f_rf;
    op.w_rf = w_rf;
    op.snr_db = snr_db;
    for (int n = 0; n < cfg.n_frames; ++n)
        for (int k = 0; k < cfg.n_f; ++k)
            if (pilots.mask(n, k)) {
                op.slots.emplace_back(n, k);
                // s[n,k] = pad(p[n,k]) to n_tx_rf; x = F_rf * s only touches
                // the first n_streams precoder columns
                op.tx_vectors.push_back(
                    f_rf.leftCols(cfg.n_streams) *
                    pilots.symbols[static_cast<std::size_t>(n)].col(k));
            }
    return op;
}

CVec apply_forward_stacked(const MeasurementOperator &op, const CVec &h_stacked) {
    if (h_stacked.size() != op.cols())
        throw ShapeError("apply_forward: channel length does not match operator");
    CVec y(op.rows());
    const Eigen::Index m = op.cfg.n_rx_rf;
    const Eigen::Index block = static_cast<Eigen::Index>(op.cfg.n_rx) * op.cfg.n_tx;
    for (std::size_t s = 0; s < op.slots.size(); ++s) {
        const int k = op.slots[s].second;
        Eigen::Map<const CMat> hk(h_stacked.data() + k * block, op.cfg.n_rx, op.cfg.n_tx);
        y.segment(static_cast<Eigen::Index>(s) * m, m).noalias() =
            op.w_rf.adjoint() * (hk * op.tx_vectors[s]);
    }
    return y;
}

CVec apply_adjoint_stacked(const MeasurementOperator &op, const CVec &residual) {
    if (residual.size() != op.rows())
        throw ShapeError("apply_adjoint: residual length does not match operator");
    CVec g = CVec::Zero(op.cols());
    const Eigen::Index m = op.cfg.n_rx_rf;
    const Eigen::Index block = static_cast<Eigen::Index>(op.cfg.n_rx) * op.cfg.n_tx;
    for (std::size_t s = 0; s < op.slots.size(); ++s) {
        const int k = op.slots[s].second;
        Eigen::Map<CMat> gk(g.data() + k * block, op.cfg.n_rx, op.cfg.n_tx);
        gk.noalias() += (op.w_rf * residual.segment(static_cast<Eigen::Index>(s) * m, m)) *
                        op.tx_vectors[s].adjoint();
    }
    return g;
}

CVec apply_forward(const MeasurementOperator &op, const ChannelRealization &channel) {
    if (channel.n_f() != op.cfg.n_f || channel.n_r() != op.cfg.n_rx ||
        channel.n_t() != op.cfg.n_tx)
        throw ShapeError("apply_forward: channel dims do not match operator");
    return apply_forward_stacked(op, channel.stacked());
}

ChannelRealization apply_adjoint(const MeasurementOperator &op, const CVec &residual) {
    return channel_from_stacked(apply_adjoint_stacked(op, residual), op.cfg.n_f, op.cfg.n_rx,
                                op.cfg.n_tx);
}

CMat dense_matrix(const MeasurementOperator &op) {
    CMat a = CMat::Zero(op.rows(), op.cols());
    const Eigen::Index m = op.cfg.n_rx_rf;
    const Eigen::Index block = static_cast<Eigen::Index>(op.cfg.n_rx) * op.cfg.n_tx;
    const CMat wh = op.w_rf.adjoint();
    for (std::size_t s = 0; s < op.slots.size(); ++s) {
        const int k = op.slots[s].second;
        const CVec &x = op.tx_vectors[s];
        // vec(W^H H x) = (x^T (x) W^H) vec(H)
        for (int t = 0; t < op.cfg.n_tx; ++t)
            a.block(static_cast<Eigen::Index>(s) * m, k * block + t * op.cfg.n_rx, m,
                    op.cfg.n_rx) = x(t) * wh;
    }
    return a;
}

ReceivedSignal add_awgn(const CVec &clean, double snr_db, Rng &rng) {
    ReceivedSignal rx;
    if (std::isinf(snr_db) && snr_db > 0) {
        rx.y = clean;
        rx.noise_var = 0.0;
        return rx;
    }
    // analytic per-sample signal power is 1 under the library conventions
    rx.noise_var = std::pow(10.0, -snr_db / 10.0);
    const double sigma = std::sqrt(rx.noise_var);
    rx.y = clean;
    for (Eigen::Index i = 0; i < rx.y.size(); ++i)
        rx.y(i) += sigma * rng.cnormal();
    return rx;
}

bool TailReport::any_flagged() const {
    for (bool f : flagged)
        if (f)
            return true;
    return false;
}

TailReport subgaussian_tail_check(const TransceiverConfig &cfg, long trials, std::uint64_t seed,
                                  int grid_points) {
    cfg.validate();
    if (trials < 10000)
        throw InvalidConfigError("subgaussian_tail_check: need at least 1e4 trials");
    if (grid_points < 2)
        throw InvalidConfigError("subgaussian_tail_check: need at least 2 grid points");

    Rng rng(seed);
    auto [f_rf, w_rf] = sample_phase_networks(cfg, rng);
    const double w_scalar = w_rf(0, 0).real(); // one fixed combiner element

    // largest attainable |sample| is Ns * (1/sqrt(2 Ns)) / sqrt(Nr Nt)
    const double t_max = 1.2 * std::sqrt(cfg.n_streams / 2.0) /
                         std::sqrt(static_cast<double>(cfg.n_rx) * cfg.n_tx);
    const double amp = 1.0 / std::sqrt(2.0 * cfg.n_streams);
    const CVec f_col = f_rf.leftCols(cfg.n_streams).row(0).transpose(); // row 0 of F^T path

    std::vector<double> samples(static_cast<std::size_t>(trials));
    CVec p(cfg.n_streams);
    for (long i = 0; i < trials; ++i) {
        for (int s = 0; s < cfg.n_streams; ++s) {
            const std::uint64_t bits = rng.next_u64();
            p(s) = cplx((bits & 1) ? amp : -amp, (bits & 2) ? amp : -amp);
        }
        samples[static_cast<std::size_t>(i)] = (w_scalar * f_col.dot(p)).real();
    }

    TailReport report;
    report.trials = trials;
    const double rate = static_cast<double>(cfg.n_tx) * cfg.n_tx_rf * cfg.n_rx /
                        (2.0 * cfg.n_streams);
    for (int g = 0; g < grid_points; ++g) {
        const double t = t_max * static_cast<double>(g) / (grid_points - 1);
        long exceed = 0;
        for (double x : samples)
            if (x >= t)
                ++exceed;
        const double emp = static_cast<double>(exceed) / static_cast<double>(trials);
        const double se = std::sqrt(emp * (1.0 - emp) / static_cast<double>(trials));
        const double bnd = std::exp(-t * t * rate);
        report.t.push_back(t);
        report.empirical.push_back(emp);
        report.bound.push_back(bnd);
        report.stderr_.push_back(se);
        report.flagged.push_back(emp > bnd + 3.0 * se);
    }
    return report;
}

void write_tail_report_csv(const TailReport &report, const std::string &path) {
    std::ofstream os(path);
    if (!os)
        throw FormatError("write_tail_report_csv: cannot open " + path);
    os << "t,empirical_prob,bound,stderr,flagged\n";
    char line[160];
    for (std::size_t i = 0; i < report.t.size(); ++i) {
        std::snprintf(line, sizeof line, "%.9g,%.9g,%.9g,%.9g,%d\n", report.t[i],
                      report.empirical[i], report.bound[i], report.stderr_[i],
                      report.flagged[i] ? 1 : 0);
        os << line;
    }
}

} // namespace genest

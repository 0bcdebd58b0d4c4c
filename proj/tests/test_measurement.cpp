// SPDX-License-Identifier: Apache-2.0
//
// genest: generative-prior channel estimation for wideband MIMO-OFDM
// Copyright (C) 2026 The genest authors

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "genest/measurement.hpp"
#include "genest/numeric.hpp"

using namespace genest;

namespace {

TransceiverConfig small_tc() {
    TransceiverConfig tc;
    tc.n_tx = 4;
    tc.n_rx = 2;
    tc.n_tx_rf = 2;
    tc.n_rx_rf = 1;
    tc.n_streams = 2;
    tc.n_f = 4;
    tc.n_frames = 2;
    return tc;
}

ChannelRealization random_channel(int n_f, int n_r, int n_t, Rng &rng) {
    ChannelRealization ch;
    for (int k = 0; k < n_f; ++k) {
        CMat hk(n_r, n_t);
        for (Eigen::Index j = 0; j < n_t; ++j)
            for (Eigen::Index i = 0; i < n_r; ++i)
                hk(i, j) = rng.cnormal();
        ch.per_subcarrier.push_back(std::move(hk));
    }
    return ch;
}

MeasurementOperator random_operator(const TransceiverConfig &tc, double eta, std::uint64_t seed) {
    Rng rng(seed);
    const PilotFrame pilots = sample_pilots(tc, eta, rng);
    auto [f_rf, w_rf] = sample_phase_networks(tc, rng);
    return build_operator(pilots, f_rf, w_rf, tc);
}

// The stacked measurement matrix assembled literally from the per-frame
// Kronecker expression A[n] = (s[n]^T (I (x) F_rf^T)) (x) (I (x) W_rf^H)
// acting on vec of the full block-diagonal channel matrix.
CMat paper_dense_matrix(const MeasurementOperator &op) {
    const TransceiverConfig &tc = op.cfg;
    REQUIRE(op.pilots.mask.count() ==
            static_cast<Eigen::Index>(tc.n_frames) * tc.n_f); // full pilots only
    const CMat eye_f = CMat::Identity(tc.n_f, tc.n_f);
    const CMat tx_part = kron(eye_f, CMat(op.f_rf.transpose()));
    const CMat rx_part = kron(eye_f, CMat(op.w_rf.adjoint()));
    CMat stacked(static_cast<Eigen::Index>(tc.n_frames) * tc.n_f * tc.n_rx_rf,
                 static_cast<Eigen::Index>(tc.n_f) * tc.n_rx * tc.n_f * tc.n_tx);
    for (int n = 0; n < tc.n_frames; ++n) {
        CVec s(static_cast<Eigen::Index>(tc.n_f) * tc.n_tx_rf);
        s.setZero();
        for (int k = 0; k < tc.n_f; ++k)
            s.segment(static_cast<Eigen::Index>(k) * tc.n_tx_rf, tc.n_streams) =
                op.pilots.symbols[static_cast<std::size_t>(n)].col(k);
        const CMat row = s.transpose() * tx_part; // 1 x (n_f * n_tx)
        stacked.middleRows(static_cast<Eigen::Index>(n) * tc.n_f * tc.n_rx_rf,
                           static_cast<Eigen::Index>(tc.n_f) * tc.n_rx_rf) = kron(row, rx_part);
    }
    return stacked;
}

CVec vec_block_diagonal(const ChannelRealization &ch) {
    const int n_f = ch.n_f(), n_r = ch.n_r(), n_t = ch.n_t();
    CMat h = CMat::Zero(static_cast<Eigen::Index>(n_f) * n_r, static_cast<Eigen::Index>(n_f) * n_t);
    for (int k = 0; k < n_f; ++k)
        h.block(static_cast<Eigen::Index>(k) * n_r, static_cast<Eigen::Index>(k) * n_t, n_r, n_t) =
            ch.per_subcarrier[static_cast<std::size_t>(k)];
    return vec(h);
}

} // namespace

TEST_CASE("sample_pilots mask and alphabet") {
    const TransceiverConfig tc = small_tc();
    Rng rng(3);
    const PilotFrame full = sample_pilots(tc, 1.0, rng);
    CHECK(full.active_slots() == tc.n_frames * tc.n_f);

    const double amp = 1.0 / std::sqrt(2.0 * tc.n_streams);
    for (const CMat &frame : full.symbols)
        for (Eigen::Index k = 0; k < frame.cols(); ++k)
            for (Eigen::Index i = 0; i < frame.rows(); ++i) {
                CHECK(std::abs(std::abs(frame(i, k).real()) - amp) < 1e-15);
                CHECK(std::abs(std::abs(frame(i, k).imag()) - amp) < 1e-15);
            }

    Rng rng2(3);
    CHECK_THROWS_AS(sample_pilots(tc, 0.0, rng2), InvalidConfigError);
    CHECK_THROWS_AS(sample_pilots(tc, -0.2, rng2), InvalidConfigError);
    CHECK_THROWS_AS(sample_pilots(tc, 1.2, rng2), InvalidConfigError);
}

TEST_CASE("sample_pilots masks nest across eta for a fixed seed") {
    const TransceiverConfig tc = small_tc();
    const PilotFrame wide = [&] {
        Rng rng(77);
        return sample_pilots(tc, 0.8, rng);
    }();
    const PilotFrame narrow = [&] {
        Rng rng(77);
        return sample_pilots(tc, 0.3, rng);
    }();
    CHECK(narrow.active_slots() == static_cast<int>(std::ceil(0.3 * tc.n_frames * tc.n_f)));
    for (int n = 0; n < tc.n_frames; ++n)
        for (int k = 0; k < tc.n_f; ++k)
            if (narrow.mask(n, k)) {
                CHECK(wide.mask(n, k));
                CHECK(narrow.symbols[static_cast<std::size_t>(n)](0, k) ==
                      wide.symbols[static_cast<std::size_t>(n)](0, k));
            }
}

TEST_CASE("pilot entries are zero mean with second moment I/Ns") {
    const TransceiverConfig tc = small_tc();
    Rng rng(11);
    cplx mean(0.0, 0.0);
    CMat second = CMat::Zero(tc.n_streams, tc.n_streams);
    long entries = 0;
    const int draws = 10000;
    for (int d = 0; d < draws; ++d) {
        const PilotFrame pf = sample_pilots(tc, 1.0, rng);
        const CVec p = pf.symbols[0].col(0);
        second += p * p.adjoint();
        for (Eigen::Index i = 0; i < p.size(); ++i) {
            mean += p(i);
            ++entries;
        }
    }
    mean /= static_cast<double>(entries);
    CHECK(std::abs(mean) < 0.01);

    second /= static_cast<double>(draws);
    const CMat target = CMat::Identity(tc.n_streams, tc.n_streams) / tc.n_streams;
    CHECK((second - target).cwiseAbs().maxCoeff() < 0.02 / tc.n_streams);
}

TEST_CASE("orthogonal pilots give a scaled-unitary stacked matrix") {
    TransceiverConfig tc = small_tc().digital_reference(); // n_frames = n_streams = n_tx
    const PilotFrame pf = orthogonal_pilots(tc);
    CMat p(tc.n_frames, tc.n_streams);
    for (int n = 0; n < tc.n_frames; ++n)
        p.row(n) = pf.symbols[static_cast<std::size_t>(n)].col(0).transpose();
    const CMat gram = p.adjoint() * p;
    const CMat target = CMat::Identity(tc.n_streams, tc.n_streams) *
                        (static_cast<double>(tc.n_frames) / tc.n_streams);
    CHECK((gram - target).cwiseAbs().maxCoeff() < 1e-12);

    const double amp = 1.0 / std::sqrt(static_cast<double>(tc.n_streams));
    for (const CMat &frame : pf.symbols)
        for (Eigen::Index k = 0; k < frame.cols(); ++k)
            for (Eigen::Index i = 0; i < frame.rows(); ++i)
                CHECK(std::abs(std::abs(frame(i, k)) - amp) < 1e-14);
}

TEST_CASE("phase networks are one-bit with exact modulus") {
    TransceiverConfig tc;
    tc.n_tx = 64;
    tc.n_rx = 4;
    tc.n_tx_rf = 4;
    tc.n_rx_rf = 1;
    tc.n_streams = 4;
    tc.n_f = 2;
    tc.n_frames = 1;
    long plus = 0, total = 0;
    for (int trial = 0; trial < 100; ++trial) {
        Rng rng(derive_seed(5, {static_cast<std::uint64_t>(trial)}));
        auto [f_rf, w_rf] = sample_phase_networks(tc, rng);
        const double at = 1.0 / std::sqrt(static_cast<double>(tc.n_tx));
        const double ar = 1.0 / std::sqrt(static_cast<double>(tc.n_rx));
        for (Eigen::Index j = 0; j < f_rf.cols(); ++j)
            for (Eigen::Index i = 0; i < f_rf.rows(); ++i) {
                CHECK(f_rf(i, j).imag() == 0.0);
                CHECK(std::abs(f_rf(i, j).real()) == at); // exact
                plus += f_rf(i, j).real() > 0.0 ? 1 : 0;
                ++total;
            }
        for (Eigen::Index j = 0; j < w_rf.cols(); ++j)
            for (Eigen::Index i = 0; i < w_rf.rows(); ++i) {
                CHECK(w_rf(i, j).imag() == 0.0);
                CHECK(std::abs(w_rf(i, j).real()) == ar);
            }
    }
    const double frac = static_cast<double>(plus) / static_cast<double>(total);
    CHECK(frac > 0.45);
    CHECK(frac < 0.55);
}

TEST_CASE("identity transceiver selects the pilot-weighted column") {
    TransceiverConfig tc;
    tc.n_tx = 3;
    tc.n_rx = 2;
    tc.n_tx_rf = 3;
    tc.n_rx_rf = 2;
    tc.n_streams = 3;
    tc.n_f = 1;
    tc.n_frames = 1;

    PilotFrame pf;
    pf.n_frames = 1;
    pf.n_f = 1;
    pf.n_streams = 3;
    CMat sym = CMat::Zero(3, 1);
    sym(0, 0) = cplx(1.0, 0.0); // p = e_1
    pf.symbols.push_back(sym);
    pf.mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(1, 1, true);

    auto [f_rf, w_rf] = identity_phase_networks(tc);
    const MeasurementOperator op = build_operator(pf, f_rf, w_rf, tc);
    Rng rng(1);
    const ChannelRealization ch = random_channel(1, 2, 3, rng);
    const CVec y = apply_forward(op, ch);
    CHECK((y - ch.per_subcarrier[0].col(0)).norm() < 1e-15);

    // dense form is e_1^T (x) I
    const CMat a = dense_matrix(op);
    CHECK(a.rows() == 2);
    CHECK(a.cols() == 6);
    CHECK((a.leftCols(2) - CMat::Identity(2, 2)).norm() < 1e-15);
    CHECK(a.rightCols(4).norm() == 0.0);
}

TEST_CASE("masked slots drop measurement rows") {
    const TransceiverConfig tc = small_tc();
    Rng rng(21);
    const PilotFrame pilots = sample_pilots(tc, 0.4, rng);
    auto [f_rf, w_rf] = sample_phase_networks(tc, rng);
    const MeasurementOperator op = build_operator(pilots, f_rf, w_rf, tc);
    CHECK(static_cast<int>(op.rows()) == pilots.active_slots() * tc.n_rx_rf);
    CHECK(pilots.active_slots() == static_cast<int>(std::ceil(0.4 * tc.n_frames * tc.n_f)));
}

TEST_CASE("structured forward matches the literal paper Kronecker matrix") {
    const TransceiverConfig tc = small_tc();
    const MeasurementOperator op = random_operator(tc, 1.0, 33);
    Rng rng(34);
    const ChannelRealization ch = random_channel(tc.n_f, tc.n_rx, tc.n_tx, rng);

    const CMat giant = paper_dense_matrix(op);
    const CVec y_paper = giant * vec_block_diagonal(ch);
    const CVec y = apply_forward(op, ch);
    REQUIRE(y.size() == y_paper.size());
    CHECK((y - y_paper).norm() / y_paper.norm() < 1e-10);
}

TEST_CASE("structured forward/adjoint match dense materialization") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Rng cfg_rng(derive_seed(100, {seed}));
        TransceiverConfig tc;
        tc.n_tx = 2 << cfg_rng.below(2); // 2 or 4
        tc.n_rx = 2;
        tc.n_tx_rf = 2;
        tc.n_rx_rf = 1 + static_cast<int>(cfg_rng.below(2));
        tc.n_streams = 2;
        tc.n_f = 2 << cfg_rng.below(2); // 2 or 4
        tc.n_frames = 1 + static_cast<int>(cfg_rng.below(3));
        const double eta = 0.4 + 0.6 * cfg_rng.uniform();

        const MeasurementOperator op = random_operator(tc, eta, derive_seed(101, {seed}));
        const CMat a = dense_matrix(op);
        REQUIRE(a.size() <= 10000);

        Rng rng(derive_seed(102, {seed}));
        const ChannelRealization ch = random_channel(tc.n_f, tc.n_rx, tc.n_tx, rng);
        const CVec h = ch.stacked();
        const CVec y_struct = apply_forward(op, ch);
        const CVec y_dense = a * h;
        CHECK((y_struct - y_dense).norm() <= 1e-10 * std::max(1.0, y_dense.norm()));

        CVec r(op.rows());
        for (Eigen::Index i = 0; i < r.size(); ++i)
            r(i) = rng.cnormal();
        const CVec g_struct = apply_adjoint_stacked(op, r);
        const CVec g_dense = a.adjoint() * r;
        CHECK((g_struct - g_dense).norm() <= 1e-10 * std::max(1.0, g_dense.norm()));

        // adjoint identity <A h, r> = <h, A^H r>
        const cplx lhs = r.dot(y_struct); // r^H y
        const cplx rhs = g_struct.dot(h); // (A^H r)^H h
        CHECK(std::abs(lhs - rhs) <= 1e-10 * std::max(1.0, std::abs(lhs)));
    }
}

TEST_CASE("apply_forward is linear") {
    const TransceiverConfig tc = small_tc();
    const MeasurementOperator op = random_operator(tc, 1.0, 55);
    Rng rng(56);
    const ChannelRealization h1 = random_channel(tc.n_f, tc.n_rx, tc.n_tx, rng);
    const ChannelRealization h2 = random_channel(tc.n_f, tc.n_rx, tc.n_tx, rng);

    ChannelRealization zero;
    zero.per_subcarrier.assign(static_cast<std::size_t>(tc.n_f), CMat::Zero(tc.n_rx, tc.n_tx));
    CHECK(apply_forward(op, zero).norm() == 0.0);

    ChannelRealization sum;
    for (int k = 0; k < tc.n_f; ++k)
        sum.per_subcarrier.push_back(h1.per_subcarrier[static_cast<std::size_t>(k)] +
                                     h2.per_subcarrier[static_cast<std::size_t>(k)]);
    const CVec lhs = apply_forward(op, sum);
    const CVec rhs = apply_forward(op, h1) + apply_forward(op, h2);
    CHECK((lhs - rhs).norm() < 1e-12 * std::max(1.0, rhs.norm()));

    CHECK(apply_adjoint_stacked(op, CVec::Zero(op.rows())).norm() == 0.0);
}

TEST_CASE("add_awgn calibration") {
    // noiseless passthrough
    CVec clean(3);
    clean << cplx(1, 1), cplx(-2, 0.5), cplx(0, -1);
    Rng rng(9);
    const ReceivedSignal pass = add_awgn(clean, std::numeric_limits<double>::infinity(), rng);
    CHECK((pass.y - clean).norm() == 0.0);
    CHECK(pass.noise_var == 0.0);

    // identical seeds, identical noise
    Rng r1(42), r2(42);
    const ReceivedSignal a = add_awgn(clean, 3.0, r1);
    const ReceivedSignal b = add_awgn(clean, 3.0, r2);
    CHECK((a.y - b.y).norm() == 0.0);

    // empirical SNR within 0.2 dB of the request, pooled over many draws
    TransceiverConfig tc; // desk transceiver
    const double snr_req = 5.0;
    double sig_power = 0.0, noise_power = 0.0;
    for (int draw = 0; draw < 1500; ++draw) {
        const MeasurementOperator op =
            random_operator(tc, 1.0, derive_seed(200, {static_cast<std::uint64_t>(draw)}));
        Rng ch_rng(derive_seed(201, {static_cast<std::uint64_t>(draw)}));
        ClusterRayConfig ccfg; // desk channel
        const ChannelRealization ch = sample_channel(ccfg, ch_rng);
        const CVec y0 = apply_forward(op, ch);
        Rng n_rng(derive_seed(202, {static_cast<std::uint64_t>(draw)}));
        const ReceivedSignal rx = add_awgn(y0, snr_req, n_rng);
        sig_power += y0.squaredNorm();
        noise_power += (rx.y - y0).squaredNorm();
    }
    const double snr_emp = 10.0 * std::log10(sig_power / noise_power);
    CHECK(std::abs(snr_emp - snr_req) < 0.2);
}

TEST_CASE("subgaussian tail check obeys the closed-form bound") {
    TransceiverConfig tc;
    tc.n_tx = 16;
    tc.n_rx = 4;
    tc.n_tx_rf = 4;
    tc.n_rx_rf = 1;
    tc.n_streams = 4;
    tc.n_f = 4;
    tc.n_frames = 4;

    CHECK_THROWS_AS(subgaussian_tail_check(tc, 100, 1), InvalidConfigError);

    const TailReport rep = subgaussian_tail_check(tc, 100000, 321);
    CHECK(!rep.any_flagged());
    CHECK(rep.t.front() == 0.0);
    CHECK(rep.empirical.front() <= rep.bound.front());
    CHECK(rep.bound.front() == 1.0);

    // bound column is exactly exp(-t^2 Nt Ntrf Nr / (2 Ns))
    const double rate = static_cast<double>(tc.n_tx) * tc.n_tx_rf * tc.n_rx / (2.0 * tc.n_streams);
    for (std::size_t i = 0; i < rep.t.size(); ++i)
        CHECK(rep.bound[i] ==
              doctest::Approx(std::exp(-rep.t[i] * rep.t[i] * rate)).epsilon(1e-12));

    // odd stream count avoids the atom at zero: P(x >= 0) ~ 0.5
    TransceiverConfig odd = tc;
    odd.n_streams = 3;
    odd.n_tx_rf = 3;
    const TailReport rep_odd = subgaussian_tail_check(odd, 100000, 654);
    CHECK(rep_odd.empirical.front() > 0.45);
    CHECK(rep_odd.empirical.front() < 0.55);
    CHECK(!rep_odd.any_flagged());

    const std::string path = (std::filesystem::temp_directory_path() / "genest_tail.csv").string();
    write_tail_report_csv(rep, path);
    CHECK(std::filesystem::exists(path));
    std::filesystem::remove(path);
}

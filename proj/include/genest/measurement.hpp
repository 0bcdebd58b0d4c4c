// SPDX-License-Identifier: Apache-2.0
//
// genest: generative-prior channel estimation for wideband MIMO-OFDM
// Copyright (C) 2026 The genest authors

#pragma once

#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "genest/channel.hpp"
#include "genest/numeric.hpp"
#include "genest/rng.hpp"

namespace genest {

/// Hybrid transceiver dimensions. Digital precoder/combiner are fixed to
/// (padded) identities; analog networks carry one-bit phases {0, pi}, i.e.
/// real entries +-1/sqrt(N). The average received power rho is fixed to 1
/// throughout; SNR is set through the noise variance instead.
struct TransceiverConfig {
    int n_tx = 16;
    int n_rx = 4;
    int n_tx_rf = 4;
    int n_rx_rf = 1;
    int n_streams = 4; // N_s <= n_tx_rf
    int n_f = 16;
    int n_frames = 4; // N_p, symbols per frame interval

    void validate() const;

    /// Fully digital reference with the same antennas/subcarriers: one RF
    /// chain per antenna, identity phase networks, and n_tx pilot frames so
    /// least squares is well posed at full pilots.
    TransceiverConfig digital_reference() const;
};

/// Pilot symbols and the slot mask. symbols[n] holds column p[n,k] per
/// subcarrier k; masked-off slots carry zero symbols and contribute no
/// measurement rows.
struct PilotFrame {
    int n_frames = 0;
    int n_f = 0;
    int n_streams = 0;
    std::vector<CMat> symbols; // per frame: n_streams x n_f
    Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> mask; // n_frames x n_f

    int active_slots() const;
};

/// Random constant-modulus pilots: entries i.i.d. uniform over
/// {+-1 +- i}/sqrt(2 N_s); the mask keeps ceil(eta * N_p * N_f) slots,
/// chosen uniformly without replacement. Masks are nested across eta for a
/// fixed rng seed (the kept set for a smaller eta is a subset).
PilotFrame sample_pilots(const TransceiverConfig &cfg, double mask_ratio, Rng &rng);

/// Deterministic full-pilot frame with orthogonal pilots across antennas:
/// p[n,k]_i = exp(-i 2 pi n i / N_p) / sqrt(N_s), independent of k.
/// Requires n_streams <= n_frames for orthogonality.
PilotFrame orthogonal_pilots(const TransceiverConfig &cfg);

/// Re-masks an existing frame to ceil(eta * N_p * N_f) slots drawn uniformly
/// without replacement, zeroing the dropped symbols.
PilotFrame mask_pilot_frame(PilotFrame frame, double mask_ratio, Rng &rng);

/// One-bit analog precoder/combiner: entries i.i.d. +-1/sqrt(n_tx)
/// (resp. +-1/sqrt(n_rx)).
std::pair<CMat, CMat> sample_phase_networks(const TransceiverConfig &cfg, Rng &rng);

/// Padded identity networks for the fully digital reference.
std::pair<CMat, CMat> identity_phase_networks(const TransceiverConfig &cfg);

/// Structured linear map from a channel realization to the stacked received
/// samples: per active slot (n, k), in (n, k)-lexicographic order,
///   y_{n,k} = W_rf^H * H_k * x_{n,k},  x_{n,k} = F_rf * pad(p[n,k]).
struct MeasurementOperator {
    TransceiverConfig cfg;
    PilotFrame pilots;
    CMat f_rf; // n_tx x n_tx_rf
    CMat w_rf; // n_rx x n_rx_rf
    double snr_db = std::numeric_limits<double>::infinity();

    std::vector<std::pair<int, int>> slots; // active (frame, subcarrier)
    std::vector<CVec> tx_vectors;           // x_{n,k} per active slot

    Eigen::Index rows() const {
        return static_cast<Eigen::Index>(slots.size()) * cfg.n_rx_rf;
    }
    Eigen::Index cols() const {
        return static_cast<Eigen::Index>(cfg.n_f) * cfg.n_rx * cfg.n_tx;
    }
};

MeasurementOperator build_operator(const PilotFrame &pilots, const CMat &f_rf, const CMat &w_rf,
                                   const TransceiverConfig &cfg,
                                   double snr_db = std::numeric_limits<double>::infinity());

/// Noiseless forward map (rho = 1). Exactly linear in the channel.
CVec apply_forward(const MeasurementOperator &op, const ChannelRealization &channel);

/// Conjugate-transpose action: returns the channel-shaped gradient G with
/// <apply_forward(h), r> = <h, G> for every h.
ChannelRealization apply_adjoint(const MeasurementOperator &op, const CVec &residual);

/// Same maps over the stacked layout [vec(H_0); vec(H_1); ...]; used by the
/// inner loops of the estimators.
CVec apply_forward_stacked(const MeasurementOperator &op, const CVec &h_stacked);
CVec apply_adjoint_stacked(const MeasurementOperator &op, const CVec &residual);

/// Dense materialization over the stacked channel [vec(H_0); vec(H_1); ...];
/// row block for slot (n,k) is x_{n,k}^T (x) W_rf^H at subcarrier k's columns.
CMat dense_matrix(const MeasurementOperator &op);

struct ReceivedSignal {
    CVec y;
    double noise_var = 0.0; // sigma_n^2 per complex sample
};

/// Adds circular complex AWGN at the requested SNR. Under the library's
/// conventions (E||H_k||_F^2 = Nr*Nt, constant-modulus pilots and phase
/// networks) the analytic mean signal power is 1 per complex sample, so
/// sigma_n^2 = 10^(-snr_db/10). snr_db = +inf passes the signal through.
ReceivedSignal add_awgn(const CVec &clean, double snr_db, Rng &rng);

/// Empirical tail of the effective pilot-side measurement entries against
/// the Hoeffding envelope exp(-t^2 Nt Ntrf Nr / (2 Ns)).
struct TailReport {
    std::vector<double> t;
    std::vector<double> empirical;
    std::vector<double> bound;
    std::vector<double> stderr_;
    std::vector<bool> flagged;
    long trials = 0;

    bool any_flagged() const;
};

/// Fixes one-bit phase networks once, then redraws the pilot vector per
/// trial and records the real part of one effective measurement entry
/// w_rf * (F_rf * pad(p))_0. Exceedance frequencies on a uniform t-grid are
/// compared against the closed-form bound; a grid point is flagged when the
/// empirical frequency exceeds the bound by more than three binomial
/// standard errors.
TailReport subgaussian_tail_check(const TransceiverConfig &cfg, long trials, std::uint64_t seed,
                                  int grid_points = 20);

void write_tail_report_csv(const TailReport &report, const std::string &path);

} // namespace genest

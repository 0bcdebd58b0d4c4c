// SPDX-License-Identifier: Apache-2.0
//
// genest: generative-prior channel estimation for wideband MIMO-OFDM
// Copyright (C) 2026 The genest authors

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "genest/measurement.hpp"
#include "genest/wgan.hpp"

namespace genest {

struct EstimatorInput {
    const MeasurementOperator *op = nullptr;
    ReceivedSignal received;
};

/// Latent-space inversion settings for the generative estimator.
struct InversionConfig {
    enum class Optimizer { plain_gd, rmsprop_on_z };

    int restarts = 5;
    int iterations = 200;
    double step = 0.05;
    Optimizer optimizer = Optimizer::rmsprop_on_z;
    bool line_search = false; // backtracking on the measurement loss
    double rmsprop_decay = 0.9;
    double rmsprop_eps = 1e-8;

    void validate() const;
};

struct EstimateReport {
    ChannelRealization estimate;
    double residual_norm = 0.0; // ||y - A(estimate)||
    std::string estimator_id;
    std::vector<double> restart_losses; // generative estimator only
};

/// 10*log10(||h - est||^2 / ||h||^2) over the stacked entries. Returns
/// -inf when the estimate matches exactly; throws UndefinedMetricError for a
/// zero-norm truth.
double nmse_db(const ChannelRealization &truth, const ChannelRealization &estimate);

/// Least squares through the per-subcarrier normal equations. Raises
/// IllPosedError when any subcarrier's gram is singular (insufficient
/// pilots).
EstimateReport estimate_ls(const EstimatorInput &input);

/// Sample covariance of the stacked channel over a dataset, with relative
/// shrinkage delta*I, delta = shrinkage_rel * trace/dim.
CMat sample_covariance(const ChannelDataset &source, double shrinkage_rel = 1e-3);

/// Prepared LMMSE filter R_h (R_h + Gamma)^-1 for a fixed operator and noise
/// level (rho = 1). Gamma is assembled per subcarrier from
/// E[w w^H] = sigma^2 I_{Np} (x) I_{Nf} (x) (W_rf^H W_rf).
class LmmseFilter {
  public:
    LmmseFilter(const MeasurementOperator &op, double noise_var, const CMat &r_h);

    /// Applies the filter to a least-squares estimate.
    CVec apply(const CVec &h_ls) const;

    /// The assembled Gamma, exposed for cross-checking against the dense
    /// sandwiched formula.
    const CMat &gamma() const { return gamma_; }

  private:
    CMat r_h_;
    CMat gamma_;
    Eigen::LDLT<CMat> factor_; // of (R_h + Gamma)
};

EstimateReport estimate_lmmse(const EstimatorInput &input, const CMat &r_h);
EstimateReport estimate_lmmse(const EstimatorInput &input, const ChannelDataset &covariance_source);

/// Delay-angle DFT dictionary over the stacked channel layout
/// [vec(H_0); vec(H_1); ...]; unitary.
CMat dft_dictionary(int n_f, int n_r, int n_t);

/// Orthogonal matching pursuit on the composite operator A * basis. Stops at
/// `sparsity` atoms or when the residual drops below sigma_n * sqrt(rows).
EstimateReport estimate_omp(const EstimatorInput &input, const CMat &basis, int sparsity);

/// Generative-prior estimation: R restarts of gradient descent on
/// z -> ||y - A G(z)||^2, gradient computed through the operator adjoint and
/// the network's input gradient. Returns the decode of the best z found;
/// ties resolve to the lowest restart index.
EstimateReport estimate_gan(const EstimatorInput &input, const GanPrior &prior,
                            const InversionConfig &cfg, Rng &rng);

} // namespace genest

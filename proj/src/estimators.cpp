// SPDX-License-Identifier: Apache-2.0
//
// genest: generative-prior channel estimation for wideband MIMO-OFDM
// Copyright (C) 2026 The genest authors

#include "genest/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace genest {

void InversionConfig::validate() const {
    if (restarts < 1 || iterations < 1)
        throw InvalidConfigError("inversion config: restarts and iterations must be >= 1");
    if (step < 0.0)
        throw InvalidConfigError("inversion config: step must be >= 0");
}

double nmse_db(const ChannelRealization &truth, const ChannelRealization &estimate) {
    if (truth.n_f() != estimate.n_f() || truth.n_r() != estimate.n_r() ||
        truth.n_t() != estimate.n_t())
        throw ShapeError("nmse_db: channel dimensions mismatch");
    double num = 0.0;
    for (int k = 0; k < truth.n_f(); ++k)
        num += (truth.per_subcarrier[static_cast<std::size_t>(k)] -
                estimate.per_subcarrier[static_cast<std::size_t>(k)])
                   .squaredNorm();
    const double den = truth.squared_norm();
    if (den <= 0.0)
        throw UndefinedMetricError("nmse_db: zero-norm reference channel");
    if (num == 0.0)
        return -std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(num / den);
}

namespace {

// Per-subcarrier normal equations. The operator's columns never mix
// subcarriers, so the gram is block diagonal with one
// (n_rx*n_tx) x (n_rx*n_tx) block per subcarrier:
//   G_k = sum_slots conj(x) x^T (x) W W^H.
struct SubcarrierGrams {
    std::vector<CMat> grams; // n_f blocks
};

SubcarrierGrams build_grams(const MeasurementOperator &op) {
    const int n_f = op.cfg.n_f;
    const Eigen::Index block = static_cast<Eigen::Index>(op.cfg.n_rx) * op.cfg.n_tx;
    SubcarrierGrams g;
    g.grams.assign(static_cast<std::size_t>(n_f), CMat::Zero(block, block));
    const CMat wwh = op.w_rf * op.w_rf.adjoint();
    for (std::size_t s = 0; s < op.slots.size(); ++s) {
        const int k = op.slots[s].second;
        const CVec &x = op.tx_vectors[s];
        const CMat outer = x.conjugate() * x.transpose();
        g.grams[static_cast<std::size_t>(k)] += kron(outer, wwh);
    }
    return g;
}

} // namespace

EstimateReport estimate_ls(const EstimatorInput &input) {
    const MeasurementOperator &op = *input.op;
    if (input.received.y.size() != op.rows())
        throw ShapeError("estimate_ls: received length does not match operator");

    const SubcarrierGrams grams = build_grams(op);
    const CVec rhs_all = apply_adjoint_stacked(op, input.received.y);
    const Eigen::Index block = static_cast<Eigen::Index>(op.cfg.n_rx) * op.cfg.n_tx;

    CVec h(op.cols());
    for (int k = 0; k < op.cfg.n_f; ++k) {
        try {
            h.segment(k * block, block) = regularized_hermitian_solve(
                grams.grams[static_cast<std::size_t>(k)], rhs_all.segment(k * block, block), 0.0);
        } catch (const SingularMatrixError &) {
            throw IllPosedError("estimate_ls: insufficient pilots, gram is singular at subcarrier " +
                                std::to_string(k));
        }
    }

    EstimateReport rep;
    rep.estimator_id = "ls";
    rep.estimate = channel_from_stacked(h, op.cfg.n_f, op.cfg.n_rx, op.cfg.n_tx);
    rep.residual_norm = (input.received.y - apply_forward_stacked(op, h)).norm();
    return rep;
}

CMat sample_covariance(const ChannelDataset &source, double shrinkage_rel) {
    if (source.count() < 1)
        throw InvalidConfigError("sample_covariance: empty dataset");
    const Eigen::Index dim = static_cast<Eigen::Index>(source.config.n_subcarriers) *
                             source.config.n_rx() * source.config.n_tx();
    CMat x(dim, source.count());
    for (int i = 0; i < source.count(); ++i)
        x.col(i) = source.realizations[static_cast<std::size_t>(i)].stacked();
    CMat r = (x * x.adjoint()) / static_cast<double>(source.count());
    const double delta = shrinkage_rel * r.trace().real() / static_cast<double>(dim);
    r.diagonal().array() += cplx(delta, 0.0);
    return r;
}

LmmseFilter::LmmseFilter(const MeasurementOperator &op, double noise_var, const CMat &r_h) {
    const Eigen::Index dim = op.cols();
    if (r_h.rows() != dim || r_h.cols() != dim)
        throw ShapeError("LmmseFilter: covariance does not match operator");
    r_h_ = r_h;

    // Gamma = (A^H A)^-1 A^H E[w w^H] A (A^H A)^-1 assembled per subcarrier;
    // E[w w^H] has sigma^2 W^H W per measurement slot.
    const Eigen::Index block = static_cast<Eigen::Index>(op.cfg.n_rx) * op.cfg.n_tx;
    const SubcarrierGrams grams = build_grams(op);
    const CMat wmid = op.w_rf * (op.w_rf.adjoint() * op.w_rf) * op.w_rf.adjoint();
    gamma_ = CMat::Zero(dim, dim);
    for (int k = 0; k < op.cfg.n_f; ++k) {
        CMat mid = CMat::Zero(block, block);
        for (std::size_t s = 0; s < op.slots.size(); ++s) {
            if (op.slots[s].second != k)
                continue;
            const CVec &x = op.tx_vectors[s];
            mid += kron(CMat(x.conjugate() * x.transpose()), wmid);
        }
        mid *= noise_var;
        Eigen::LDLT<CMat> ldlt(grams.grams[static_cast<std::size_t>(k)]);
        const RVec d = ldlt.vectorD().real();
        const double dmax = d.cwiseAbs().maxCoeff();
        if (dmax <= 0.0 ||
            d.minCoeff() <= block * std::numeric_limits<double>::epsilon() * dmax)
            throw IllPosedError("LmmseFilter: LS gram singular at subcarrier " + std::to_string(k));
        const CMat t = ldlt.solve(mid);
        gamma_.block(k * block, k * block, block, block) = ldlt.solve(t.adjoint()).adjoint();
    }

    factor_.compute(r_h_ + gamma_);
    if (factor_.info() != Eigen::Success)
        throw SingularMatrixError("LmmseFilter: R_h + Gamma not factorizable");
}

CVec LmmseFilter::apply(const CVec &h_ls) const {
    return r_h_ * factor_.solve(h_ls);
}

EstimateReport estimate_lmmse(const EstimatorInput &input, const CMat &r_h) {
    const MeasurementOperator &op = *input.op;
    EstimateReport ls = estimate_ls(input);
    LmmseFilter filter(op, input.received.noise_var, r_h);
    CVec h = filter.apply(ls.estimate.stacked());
    EstimateReport rep;
    rep.estimator_id = "lmmse";
    rep.estimate = channel_from_stacked(h, op.cfg.n_f, op.cfg.n_rx, op.cfg.n_tx);
    rep.residual_norm = (input.received.y - apply_forward_stacked(op, h)).norm();
    return rep;
}

EstimateReport estimate_lmmse(const EstimatorInput &input, const ChannelDataset &covariance_source) {
    return estimate_lmmse(input, sample_covariance(covariance_source));
}

CMat dft_dictionary(int n_f, int n_r, int n_t) {
    const CMat f_delay = dft_matrix(n_f).adjoint();
    const CMat f_tx = dft_matrix(n_t).conjugate();
    const CMat f_rx = dft_matrix(n_r);
    return kron(f_delay, kron(f_tx, f_rx));
}

EstimateReport estimate_omp(const EstimatorInput &input, const CMat &basis, int sparsity) {
    const MeasurementOperator &op = *input.op;
    if (input.received.y.size() != op.rows())
        throw ShapeError("estimate_omp: received length does not match operator");
    if (basis.rows() != op.cols())
        throw ShapeError("estimate_omp: basis does not match operator columns");
    const Eigen::Index rows = op.rows();
    if (sparsity < 1 || sparsity > rows)
        throw InvalidConfigError("estimate_omp: sparsity must satisfy 1 <= K <= measurements");

    const CMat composite = dense_matrix(op) * basis;
    const CVec &y = input.received.y;
    const double stop_residual =
        std::sqrt(std::max(0.0, input.received.noise_var) * static_cast<double>(rows));

    std::vector<Eigen::Index> support;
    std::vector<char> used(static_cast<std::size_t>(composite.cols()), 0);
    CVec residual = y;
    CVec active_coeffs;
    CMat active;

    for (int it = 0; it < sparsity; ++it) {
        if (residual.norm() <= stop_residual)
            break;
        const CVec corr = composite.adjoint() * residual;
        Eigen::Index pick = -1;
        double best = -1.0;
        for (Eigen::Index j = 0; j < corr.size(); ++j) {
            if (used[static_cast<std::size_t>(j)])
                continue;
            const double a = std::abs(corr(j));
            if (a > best) {
                best = a;
                pick = j;
            }
        }
        if (pick < 0)
            break;
        used[static_cast<std::size_t>(pick)] = 1;
        support.push_back(pick);

        active.conservativeResize(rows, static_cast<Eigen::Index>(support.size()));
        active.col(static_cast<Eigen::Index>(support.size()) - 1) = composite.col(pick);
        active_coeffs = active.colPivHouseholderQr().solve(y);
        residual = y - active * active_coeffs;
    }

    CVec coeffs = CVec::Zero(composite.cols());
    for (std::size_t i = 0; i < support.size(); ++i)
        coeffs(support[i]) = active_coeffs(static_cast<Eigen::Index>(i));
    const CVec h = basis * coeffs;

    EstimateReport rep;
    rep.estimator_id = "omp";
    rep.estimate = channel_from_stacked(h, op.cfg.n_f, op.cfg.n_rx, op.cfg.n_tx);
    rep.residual_norm = residual.norm();
    return rep;
}

namespace {

struct InversionLoss {
    // residuals and squared losses for every restart column of G(z)
    std::vector<CVec> residuals;
    RVec losses;
};

InversionLoss eval_losses(const MeasurementOperator &op, const GanPrior &prior, const CVec &y,
                          const RMat &outputs) {
    InversionLoss out;
    const int cols = static_cast<int>(outputs.cols());
    out.residuals.resize(static_cast<std::size_t>(cols));
    out.losses.resize(cols);
    for (int j = 0; j < cols; ++j) {
        RVec v = outputs.col(j) * prior.output_scale;
        CVec h = real_to_stacked(v, prior.n_f, prior.n_r, prior.n_t);
        CVec r = y - apply_forward_stacked(op, h);
        out.losses(j) = r.squaredNorm();
        out.residuals[static_cast<std::size_t>(j)] = std::move(r);
    }
    return out;
}

} // namespace

EstimateReport estimate_gan(const EstimatorInput &input, const GanPrior &prior,
                            const InversionConfig &cfg, Rng &rng) {
    cfg.validate();
    const MeasurementOperator &op = *input.op;
    if (prior.n_f != op.cfg.n_f || prior.n_r != op.cfg.n_rx || prior.n_t != op.cfg.n_tx)
        throw ShapeError("estimate_gan: generator output does not match operator");
    if (input.received.y.size() != op.rows())
        throw ShapeError("estimate_gan: received length does not match operator");

    const int d = prior.latent_dim();
    const int restarts = cfg.restarts;
    const CVec &y = input.received.y;

    RMat z(d, restarts);
    for (Eigen::Index j = 0; j < z.cols(); ++j)
        for (Eigen::Index i = 0; i < z.rows(); ++i)
            z(i, j) = rng.normal();

    RMat ms = RMat::Zero(d, restarts); // rmsprop accumulator
    RVec step = RVec::Constant(restarts, cfg.step);
    RVec best_loss = RVec::Constant(restarts, std::numeric_limits<double>::infinity());
    RMat best_z = z;

    auto record_best = [&](const RVec &losses, const RMat &zs) {
        for (int j = 0; j < restarts; ++j)
            if (losses(j) < best_loss(j)) {
                best_loss(j) = losses(j);
                best_z.col(j) = zs.col(j);
            }
    };

    ForwardTrace trace = forward_trace(prior.generator, z);
    InversionLoss cur = eval_losses(op, prior, y, trace.output);
    record_best(cur.losses, z);

    for (int it = 0; it < cfg.iterations; ++it) {
        // dL/d(G out) = -2 * scale * bridge(A^H r), per restart column
        RMat upstream(prior.generator.output_dim(), restarts);
        for (int j = 0; j < restarts; ++j) {
            const CVec g = apply_adjoint_stacked(op, cur.residuals[static_cast<std::size_t>(j)]);
            upstream.col(j) =
                -2.0 * prior.output_scale * stacked_to_real(g, prior.n_f, prior.n_r, prior.n_t);
        }
        const GradientBundle grads = backward_batch(prior.generator, trace, upstream, false);

        RMat direction = grads.d_inputs;
        if (cfg.optimizer == InversionConfig::Optimizer::rmsprop_on_z) {
            ms = cfg.rmsprop_decay * ms.array() +
                 (1.0 - cfg.rmsprop_decay) * direction.array().square();
            direction.array() /= (ms.array() + cfg.rmsprop_eps).sqrt();
        }

        if (!cfg.line_search) {
            for (int j = 0; j < restarts; ++j)
                z.col(j) -= step(j) * direction.col(j);
            trace = forward_trace(prior.generator, z);
            cur = eval_losses(op, prior, y, trace.output);
            record_best(cur.losses, z);
        } else {
            // per-restart backtracking; a column keeps halving its step until
            // its loss does not increase
            std::vector<char> accepted(static_cast<std::size_t>(restarts), 0);
            RMat znew = z;
            for (int round = 0; round < 45; ++round) {
                RMat zc = z;
                for (int j = 0; j < restarts; ++j)
                    if (!accepted[static_cast<std::size_t>(j)])
                        zc.col(j) = z.col(j) - step(j) * direction.col(j);
                ForwardTrace cand_trace = forward_trace(prior.generator, zc);
                InversionLoss cand = eval_losses(op, prior, y, cand_trace.output);
                bool all_done = true;
                for (int j = 0; j < restarts; ++j) {
                    if (accepted[static_cast<std::size_t>(j)])
                        continue;
                    if (cand.losses(j) <= cur.losses(j)) {
                        accepted[static_cast<std::size_t>(j)] = 1;
                        znew.col(j) = zc.col(j);
                    } else {
                        step(j) *= 0.5;
                        all_done = false;
                    }
                }
                if (all_done)
                    break;
            }
            z = znew; // columns that never passed keep their old z
            trace = forward_trace(prior.generator, z);
            cur = eval_losses(op, prior, y, trace.output);
            record_best(cur.losses, z);
        }
    }

    int winner = 0;
    for (int j = 1; j < restarts; ++j)
        if (best_loss(j) < best_loss(winner))
            winner = j;

    EstimateReport rep;
    rep.estimator_id = "gan";
    rep.estimate = prior.decode(best_z.col(winner));
    rep.residual_norm = std::sqrt(best_loss(winner));
    rep.restart_losses.assign(best_loss.data(), best_loss.data() + restarts);
    return rep;
}

} // namespace genest

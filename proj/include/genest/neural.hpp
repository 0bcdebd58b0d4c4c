// SPDX-License-Identifier: Apache-2.0
//
// genest: generative-prior channel estimation for wideband MIMO-OFDM
// Copyright (C) 2026 The genest authors

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "genest/channel.hpp"
#include "genest/numeric.hpp"
#include "genest/rng.hpp"

namespace genest {

enum class Activation : std::uint8_t { relu = 0, leaky_relu = 1, linear = 2 };

constexpr double kLeakySlope = 0.2;

struct LayerSpec {
    int in_dim = 0;
    int out_dim = 0;
    Activation act = Activation::linear;
};

/// Fully connected feedforward network, all real double precision.
struct NetworkParams {
    std::vector<LayerSpec> spec;
    std::vector<RMat> weights; // out_dim x in_dim
    std::vector<RVec> biases;

    int input_dim() const { return spec.empty() ? 0 : spec.front().in_dim; }
    int output_dim() const { return spec.empty() ? 0 : spec.back().out_dim; }
    std::size_t parameter_count() const;
    double max_abs_parameter() const;
    /// Product of row-sum norms of the weight matrices; an upper bound on
    /// the network's Lipschitz constant in the max norm.
    double lipschitz_bound_inf() const;
};

/// He-style Gaussian initialization: W ~ N(0, 2/in_dim), biases zero.
NetworkParams make_network(const std::vector<LayerSpec> &spec, Rng &rng);

RVec forward(const NetworkParams &net, const RVec &input);

/// Batched forward pass; columns are independent examples.
RMat forward_batch(const NetworkParams &net, const RMat &inputs);

/// Forward pass that keeps per-layer inputs and pre-activations for
/// backpropagation.
struct ForwardTrace {
    std::vector<RMat> layer_inputs; // input to layer l, per column
    std::vector<RMat> preacts;      // W x + b before the activation
    RMat output;
};

ForwardTrace forward_trace(const NetworkParams &net, const RMat &inputs);

/// Gradients of sum_cols <upstream_col, net(input_col)> with respect to all
/// parameters, plus per-column gradients with respect to the inputs.
struct GradientBundle {
    std::vector<RMat> d_weights;
    std::vector<RVec> d_biases;
    RMat d_inputs;
};

GradientBundle backward(const NetworkParams &net, const RVec &input, const RVec &upstream);

/// Batched reverse pass over a stored trace. Parameter gradients accumulate
/// over columns inside fixed-order matrix products, so results do not depend
/// on thread count. Set want_param_grads = false when only input gradients
/// are needed (latent optimization).
GradientBundle backward_batch(const NetworkParams &net, const ForwardTrace &trace,
                              const RMat &upstream, bool want_param_grads = true);

struct RmspropState {
    std::vector<RMat> w_ms;
    std::vector<RVec> b_ms;
};

RmspropState make_rmsprop_state(const NetworkParams &net);

/// state <- decay*state + (1-decay)*grad^2; param <- param - lr*grad/sqrt(state+eps)
void rmsprop_step(NetworkParams &net, const GradientBundle &grads, RmspropState &state, double lr,
                  double decay = 0.9, double eps = 1e-8);

/// Clamps every weight and bias into [-clip, +clip]. Idempotent.
void clip_weights(NetworkParams &net, double clip);

// -- complex bridge ---------------------------------------------------------
//
// Real vector layout for a channel with dimensions (n_f, n_r, n_t):
//   index(k, r, t) = t*(n_r*n_f) + r*n_f + k          for the real part,
//   index(k, r, t) + n_f*n_r*n_t                       for the imaginary part.
// Subcarrier k is the fastest axis, then receive antenna, then transmit.

RVec channel_to_real(const ChannelRealization &channel);
ChannelRealization real_to_channel(const RVec &v, int n_f, int n_r, int n_t);

/// Same bridge expressed against the stacked complex layout
/// [vec(H_0); vec(H_1); ...]; exact inverses of each other.
CVec real_to_stacked(const RVec &v, int n_f, int n_r, int n_t);
RVec stacked_to_real(const CVec &h, int n_f, int n_r, int n_t);

// -- checkpointing -----------------------------------------------------------

/// Optional channel-generator metadata stored with a checkpoint.
struct GeneratorMeta {
    int n_f = 0, n_r = 0, n_t = 0;
    double output_scale = 1.0;
};

void save_network(const NetworkParams &net, const std::string &path,
                  const GeneratorMeta *meta = nullptr);
NetworkParams load_network(const std::string &path, GeneratorMeta *meta = nullptr);

} // namespace genest

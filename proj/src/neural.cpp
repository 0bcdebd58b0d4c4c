// SPDX-License-Identifier: Apache-2.0
//
// genest: generative-prior channel estimation for wideband MIMO-OFDM
// Copyright (C) 2026 The genest authors

#include "genest/neural.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

namespace genest {

namespace {

void check_spec(const std::vector<LayerSpec> &spec) {
    if (spec.empty())
        throw InvalidConfigError("network: need at least one layer");
    for (const LayerSpec &l : spec)
        if (l.in_dim < 1 || l.out_dim < 1)
            throw InvalidConfigError("network: layer dims must be >= 1");
    for (std::size_t l = 1; l < spec.size(); ++l)
        if (spec[l].in_dim != spec[l - 1].out_dim)
            throw InvalidConfigError("network: consecutive layer dims must chain");
}

inline double act_value(Activation a, double x) {
    switch (a) {
    case Activation::relu:
        return x > 0.0 ? x : 0.0;
    case Activation::leaky_relu:
        return x > 0.0 ? x : kLeakySlope * x;
    case Activation::linear:
        return x;
    }
    return x;
}

inline double act_slope(Activation a, double preact) {
    switch (a) {
    case Activation::relu:
        return preact > 0.0 ? 1.0 : 0.0;
    case Activation::leaky_relu:
        return preact > 0.0 ? 1.0 : kLeakySlope;
    case Activation::linear:
        return 1.0;
    }
    return 1.0;
}

void apply_activation(Activation a, RMat &m) {
    if (a == Activation::linear)
        return;
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            m(i, j) = act_value(a, m(i, j));
}

} // namespace

std::size_t NetworkParams::parameter_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < weights.size(); ++l)
        n += static_cast<std::size_t>(weights[l].size()) + static_cast<std::size_t>(biases[l].size());
    return n;
}

double NetworkParams::max_abs_parameter() const {
    double m = 0.0;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        if (weights[l].size() > 0)
            m = std::max(m, weights[l].cwiseAbs().maxCoeff());
        if (biases[l].size() > 0)
            m = std::max(m, biases[l].cwiseAbs().maxCoeff());
    }
    return m;
}

double NetworkParams::lipschitz_bound_inf() const {
    double prod = 1.0;
    for (const RMat &w : weights)
        prod *= w.cwiseAbs().rowwise().sum().maxCoeff();
    return prod;
}

NetworkParams make_network(const std::vector<LayerSpec> &spec, Rng &rng) {
    check_spec(spec);
    NetworkParams net;
    net.spec = spec;
    for (const LayerSpec &l : spec) {
        RMat w(l.out_dim, l.in_dim);
        const double std = std::sqrt(2.0 / l.in_dim);
        for (Eigen::Index j = 0; j < w.cols(); ++j)
            for (Eigen::Index i = 0; i < w.rows(); ++i)
                w(i, j) = std * rng.normal();
        net.weights.push_back(std::move(w));
        net.biases.push_back(RVec::Zero(l.out_dim));
    }
    return net;
}

RVec forward(const NetworkParams &net, const RVec &input) {
    return forward_batch(net, input);
}

RMat forward_batch(const NetworkParams &net, const RMat &inputs) {
    if (inputs.rows() != net.input_dim())
        throw ShapeError("forward: input dimension mismatch");
    RMat x = inputs;
    for (std::size_t l = 0; l < net.spec.size(); ++l) {
        RMat z = (net.weights[l] * x).colwise() + net.biases[l];
        apply_activation(net.spec[l].act, z);
        x = std::move(z);
    }
    return x;
}

ForwardTrace forward_trace(const NetworkParams &net, const RMat &inputs) {
    if (inputs.rows() != net.input_dim())
        throw ShapeError("forward_trace: input dimension mismatch");
    ForwardTrace tr;
    tr.layer_inputs.reserve(net.spec.size());
    tr.preacts.reserve(net.spec.size());
    RMat x = inputs;
    for (std::size_t l = 0; l < net.spec.size(); ++l) {
        tr.layer_inputs.push_back(x);
        RMat z = (net.weights[l] * x).colwise() + net.biases[l];
        tr.preacts.push_back(z);
        apply_activation(net.spec[l].act, z);
        x = std::move(z);
    }
    tr.output = std::move(x);
    return tr;
}

GradientBundle backward_batch(const NetworkParams &net, const ForwardTrace &trace,
                              const RMat &upstream, bool want_param_grads) {
    const std::size_t layers = net.spec.size();
    if (upstream.rows() != net.output_dim() || upstream.cols() != trace.output.cols())
        throw ShapeError("backward: upstream shape mismatch");

    GradientBundle g;
    if (want_param_grads) {
        g.d_weights.resize(layers);
        g.d_biases.resize(layers);
    }
    RMat delta = upstream;
    for (std::size_t l = layers; l-- > 0;) {
        const Activation act = net.spec[l].act;
        if (act != Activation::linear) {
            const RMat &z = trace.preacts[l];
            for (Eigen::Index j = 0; j < delta.cols(); ++j)
                for (Eigen::Index i = 0; i < delta.rows(); ++i)
                    delta(i, j) *= act_slope(act, z(i, j));
        }
        if (want_param_grads) {
            g.d_weights[l].noalias() = delta * trace.layer_inputs[l].transpose();
            g.d_biases[l] = delta.rowwise().sum();
        }
        RMat prev;
        prev.noalias() = net.weights[l].transpose() * delta;
        delta = std::move(prev);
    }
    g.d_inputs = std::move(delta);
    return g;
}

GradientBundle backward(const NetworkParams &net, const RVec &input, const RVec &upstream) {
    ForwardTrace tr = forward_trace(net, input);
    return backward_batch(net, tr, upstream, true);
}

RmspropState make_rmsprop_state(const NetworkParams &net) {
    RmspropState st;
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
        st.w_ms.push_back(RMat::Zero(net.weights[l].rows(), net.weights[l].cols()));
        st.b_ms.push_back(RVec::Zero(net.biases[l].size()));
    }
    return st;
}

void rmsprop_step(NetworkParams &net, const GradientBundle &grads, RmspropState &state, double lr,
                  double decay, double eps) {
    if (grads.d_weights.size() != net.weights.size())
        throw ShapeError("rmsprop_step: gradient bundle does not match network");
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
        state.w_ms[l] = decay * state.w_ms[l].array() +
                        (1.0 - decay) * grads.d_weights[l].array().square();
        net.weights[l].array() -=
            lr * grads.d_weights[l].array() / (state.w_ms[l].array() + eps).sqrt();
        state.b_ms[l] = decay * state.b_ms[l].array() +
                        (1.0 - decay) * grads.d_biases[l].array().square();
        net.biases[l].array() -=
            lr * grads.d_biases[l].array() / (state.b_ms[l].array() + eps).sqrt();
    }
}

void clip_weights(NetworkParams &net, double clip) {
    if (!(clip > 0.0))
        throw InvalidConfigError("clip_weights: clip must be > 0");
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
        net.weights[l] = net.weights[l].cwiseMax(-clip).cwiseMin(clip);
        net.biases[l] = net.biases[l].cwiseMax(-clip).cwiseMin(clip);
    }
}

RVec channel_to_real(const ChannelRealization &channel) {
    const int n_f = channel.n_f();
    const int n_r = channel.n_r();
    const int n_t = channel.n_t();
    const Eigen::Index half = static_cast<Eigen::Index>(n_f) * n_r * n_t;
    RVec v(2 * half);
    for (int t = 0; t < n_t; ++t)
        for (int r = 0; r < n_r; ++r)
            for (int k = 0; k < n_f; ++k) {
                const Eigen::Index idx =
                    static_cast<Eigen::Index>(t) * n_r * n_f + static_cast<Eigen::Index>(r) * n_f + k;
                const cplx h = channel.per_subcarrier[static_cast<std::size_t>(k)](r, t);
                v(idx) = h.real();
                v(idx + half) = h.imag();
            }
    return v;
}

ChannelRealization real_to_channel(const RVec &v, int n_f, int n_r, int n_t) {
    const Eigen::Index half = static_cast<Eigen::Index>(n_f) * n_r * n_t;
    if (v.size() != 2 * half)
        throw ShapeError("real_to_channel: length does not match dimensions");
    ChannelRealization ch;
    ch.per_subcarrier.assign(static_cast<std::size_t>(n_f), CMat(n_r, n_t));
    for (int t = 0; t < n_t; ++t)
        for (int r = 0; r < n_r; ++r)
            for (int k = 0; k < n_f; ++k) {
                const Eigen::Index idx =
                    static_cast<Eigen::Index>(t) * n_r * n_f + static_cast<Eigen::Index>(r) * n_f + k;
                ch.per_subcarrier[static_cast<std::size_t>(k)](r, t) = cplx(v(idx), v(idx + half));
            }
    return ch;
}

CVec real_to_stacked(const RVec &v, int n_f, int n_r, int n_t) {
    const Eigen::Index half = static_cast<Eigen::Index>(n_f) * n_r * n_t;
    if (v.size() != 2 * half)
        throw ShapeError("real_to_stacked: length does not match dimensions");
    CVec h(half);
    for (int t = 0; t < n_t; ++t)
        for (int r = 0; r < n_r; ++r)
            for (int k = 0; k < n_f; ++k) {
                const Eigen::Index bidx =
                    static_cast<Eigen::Index>(t) * n_r * n_f + static_cast<Eigen::Index>(r) * n_f + k;
                const Eigen::Index sidx = (static_cast<Eigen::Index>(k) * n_t + t) * n_r + r;
                h(sidx) = cplx(v(bidx), v(bidx + half));
            }
    return h;
}

RVec stacked_to_real(const CVec &h, int n_f, int n_r, int n_t) {
    const Eigen::Index half = static_cast<Eigen::Index>(n_f) * n_r * n_t;
    if (h.size() != half)
        throw ShapeError("stacked_to_real: length does not match dimensions");
    RVec v(2 * half);
    for (int t = 0; t < n_t; ++t)
        for (int r = 0; r < n_r; ++r)
            for (int k = 0; k < n_f; ++k) {
                const Eigen::Index bidx =
                    static_cast<Eigen::Index>(t) * n_r * n_f + static_cast<Eigen::Index>(r) * n_f + k;
                const Eigen::Index sidx = (static_cast<Eigen::Index>(k) * n_t + t) * n_r + r;
                v(bidx) = h(sidx).real();
                v(bidx + half) = h(sidx).imag();
            }
    return v;
}

namespace {

constexpr char kNetMagic[4] = {'G', 'N', 'E', 'T'};
constexpr std::uint16_t kNetVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "checkpoint serialization assumes a little-endian host");

template <typename T> void put(std::ostream &os, T v) {
    os.write(reinterpret_cast<const char *>(&v), sizeof v);
}

template <typename T> T take(std::istream &is) {
    T v{};
    if (!is.read(reinterpret_cast<char *>(&v), sizeof v))
        throw FormatError("network file: truncated");
    return v;
}

} // namespace

void save_network(const NetworkParams &net, const std::string &path, const GeneratorMeta *meta) {
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw FormatError("save_network: cannot open " + path);
    os.write(kNetMagic, 4);
    put<std::uint16_t>(os, kNetVersion);
    put<std::uint8_t>(os, meta ? 1 : 0);
    if (meta) {
        put<std::uint32_t>(os, static_cast<std::uint32_t>(meta->n_f));
        put<std::uint32_t>(os, static_cast<std::uint32_t>(meta->n_r));
        put<std::uint32_t>(os, static_cast<std::uint32_t>(meta->n_t));
        put<double>(os, meta->output_scale);
    }
    put<std::uint32_t>(os, static_cast<std::uint32_t>(net.spec.size()));
    for (const LayerSpec &l : net.spec) {
        put<std::uint32_t>(os, static_cast<std::uint32_t>(l.in_dim));
        put<std::uint32_t>(os, static_cast<std::uint32_t>(l.out_dim));
        put<std::uint8_t>(os, static_cast<std::uint8_t>(l.act));
    }
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
        const RMat &w = net.weights[l];
        for (Eigen::Index i = 0; i < w.rows(); ++i)
            for (Eigen::Index j = 0; j < w.cols(); ++j)
                put<double>(os, w(i, j)); // row-major on disk
        const RVec &b = net.biases[l];
        for (Eigen::Index i = 0; i < b.size(); ++i)
            put<double>(os, b(i));
    }
    if (!os)
        throw FormatError("save_network: write failed for " + path);
}

NetworkParams load_network(const std::string &path, GeneratorMeta *meta) {
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw FormatError("load_network: cannot open " + path);
    char magic[4];
    if (!is.read(magic, 4) || std::memcmp(magic, kNetMagic, 4) != 0)
        throw FormatError("load_network: bad magic");
    if (take<std::uint16_t>(is) != kNetVersion)
        throw FormatError("load_network: unsupported version");
    const std::uint8_t has_meta = take<std::uint8_t>(is);
    GeneratorMeta parsed;
    if (has_meta) {
        parsed.n_f = static_cast<int>(take<std::uint32_t>(is));
        parsed.n_r = static_cast<int>(take<std::uint32_t>(is));
        parsed.n_t = static_cast<int>(take<std::uint32_t>(is));
        parsed.output_scale = take<double>(is);
    }
    if (meta) {
        if (!has_meta)
            throw FormatError("load_network: checkpoint carries no generator metadata");
        *meta = parsed;
    }
    const std::uint32_t layers = take<std::uint32_t>(is);
    if (layers == 0 || layers > 1024)
        throw FormatError("load_network: implausible layer count");
    NetworkParams net;
    for (std::uint32_t l = 0; l < layers; ++l) {
        LayerSpec spec;
        spec.in_dim = static_cast<int>(take<std::uint32_t>(is));
        spec.out_dim = static_cast<int>(take<std::uint32_t>(is));
        const std::uint8_t act = take<std::uint8_t>(is);
        if (act > 2)
            throw FormatError("load_network: unknown activation code");
        spec.act = static_cast<Activation>(act);
        if (spec.in_dim < 1 || spec.out_dim < 1)
            throw FormatError("load_network: invalid layer dims");
        net.spec.push_back(spec);
    }
    for (std::uint32_t l = 0; l < layers; ++l) {
        const LayerSpec &s = net.spec[l];
        RMat w(s.out_dim, s.in_dim);
        for (Eigen::Index i = 0; i < w.rows(); ++i)
            for (Eigen::Index j = 0; j < w.cols(); ++j)
                w(i, j) = take<double>(is);
        RVec b(s.out_dim);
        for (Eigen::Index i = 0; i < b.size(); ++i)
            b(i) = take<double>(is);
        net.weights.push_back(std::move(w));
        net.biases.push_back(std::move(b));
    }
    is.peek();
    if (!is.eof())
        throw FormatError("load_network: trailing bytes after parameters");
    return net;
}

} // namespace genest

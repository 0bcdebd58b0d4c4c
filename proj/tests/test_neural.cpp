// SPDX-License-Identifier: Apache-2.0
//
// genest: generative-prior channel estimation for wideband MIMO-OFDM
// Copyright (C) 2026 The genest authors

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "genest/neural.hpp"
#include "genest/wgan.hpp"

using namespace genest;

namespace {

RVec random_rvec(Eigen::Index n, Rng &rng) {
    RVec v(n);
    for (Eigen::Index i = 0; i < n; ++i)
        v(i) = rng.normal();
    return v;
}

// central finite differences of <upstream, net(input)> with respect to every
// parameter and the input
double max_fd_gradient_error(const NetworkParams &net, const RVec &input, const RVec &upstream,
                             double h) {
    const GradientBundle g = backward(net, input, upstream);
    auto value = [&](const NetworkParams &n, const RVec &x) { return upstream.dot(forward(n, x)); };

    double gmax = std::abs(g.d_inputs.col(0).cwiseAbs().maxCoeff());
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
        gmax = std::max(gmax, g.d_weights[l].cwiseAbs().maxCoeff());
        gmax = std::max(gmax, g.d_biases[l].cwiseAbs().maxCoeff());
    }
    gmax = std::max(gmax, 1e-12);

    double worst = 0.0;
    NetworkParams work = net;
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
        for (Eigen::Index j = 0; j < net.weights[l].cols(); ++j)
            for (Eigen::Index i = 0; i < net.weights[l].rows(); ++i) {
                work.weights[l](i, j) = net.weights[l](i, j) + h;
                const double fp = value(work, input);
                work.weights[l](i, j) = net.weights[l](i, j) - h;
                const double fm = value(work, input);
                work.weights[l](i, j) = net.weights[l](i, j);
                worst =
                    std::max(worst, std::abs((fp - fm) / (2 * h) - g.d_weights[l](i, j)) / gmax);
            }
        for (Eigen::Index i = 0; i < net.biases[l].size(); ++i) {
            work.biases[l](i) = net.biases[l](i) + h;
            const double fp = value(work, input);
            work.biases[l](i) = net.biases[l](i) - h;
            const double fm = value(work, input);
            work.biases[l](i) = net.biases[l](i);
            worst = std::max(worst, std::abs((fp - fm) / (2 * h) - g.d_biases[l](i)) / gmax);
        }
    }
    RVec x = input;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        x(i) = input(i) + h;
        const double fp = value(net, x);
        x(i) = input(i) - h;
        const double fm = value(net, x);
        x(i) = input(i);
        worst = std::max(worst, std::abs((fp - fm) / (2 * h) - g.d_inputs(i, 0)) / gmax);
    }
    return worst;
}

} // namespace

TEST_CASE("forward closed forms") {
    NetworkParams identity;
    identity.spec = {{2, 2, Activation::linear}};
    identity.weights = {RMat::Identity(2, 2)};
    identity.biases = {RVec::Zero(2)};
    RVec x(2);
    x << -1.0, 2.0;
    CHECK((forward(identity, x) - x).norm() == 0.0);

    NetworkParams relu_net = identity;
    relu_net.spec[0].act = Activation::relu;
    const RVec r = forward(relu_net, x);
    CHECK(r(0) == 0.0);
    CHECK(r(1) == 2.0);

    NetworkParams leaky_net = identity;
    leaky_net.spec[0].act = Activation::leaky_relu;
    const RVec l = forward(leaky_net, x);
    CHECK(l(0) == doctest::Approx(-0.2));
    CHECK(l(1) == 2.0);

    CHECK_THROWS_AS(forward(identity, RVec::Zero(3)), ShapeError);
}

TEST_CASE("backward closed form for a linear layer") {
    NetworkParams lin;
    lin.spec = {{3, 2, Activation::linear}};
    Rng rng(2);
    lin.weights = {RMat::Zero(2, 3)};
    lin.weights[0] << 1, 2, 3, 4, 5, 6;
    lin.biases = {RVec::Zero(2)};

    const RVec input = random_rvec(3, rng);
    const RVec upstream = random_rvec(2, rng);
    const GradientBundle g = backward(lin, input, upstream);
    const RMat expect = upstream * input.transpose();
    CHECK((g.d_weights[0] - expect).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((g.d_biases[0] - upstream).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((g.d_inputs.col(0) - lin.weights[0].transpose() * upstream).cwiseAbs().maxCoeff() <
          1e-14);
}

TEST_CASE("relu-inactive units pass no gradient") {
    NetworkParams net;
    net.spec = {{1, 1, Activation::relu}};
    net.weights = {RMat::Constant(1, 1, 1.0)};
    net.biases = {RVec::Zero(1)};
    RVec x(1);
    x << -0.5; // preact negative, unit inactive
    RVec u(1);
    u << 3.0;
    const GradientBundle g = backward(net, x, u);
    CHECK(g.d_weights[0](0, 0) == 0.0);
    CHECK(g.d_biases[0](0) == 0.0);
    CHECK(g.d_inputs(0, 0) == 0.0);
}

TEST_CASE("backward matches central finite differences on 20 random nets") {
    for (std::uint64_t trial = 0; trial < 20; ++trial) {
        Rng rng(derive_seed(900, {trial}));
        const std::vector<LayerSpec> spec = {
            {4, 6, Activation::relu},
            {6, 5, Activation::leaky_relu},
            {5, 3, Activation::linear},
        };
        const NetworkParams net = make_network(spec, rng);
        const RVec input = random_rvec(4, rng);
        const RVec upstream = random_rvec(3, rng);
        CHECK(max_fd_gradient_error(net, input, upstream, 1e-6) < 1e-5);
    }
}

TEST_CASE("batched forward/backward agree with per-example calls") {
    Rng rng(7);
    const std::vector<LayerSpec> spec = {
        {3, 8, Activation::relu},
        {8, 4, Activation::linear},
    };
    const NetworkParams net = make_network(spec, rng);
    RMat inputs(3, 5);
    RMat upstream(4, 5);
    for (Eigen::Index j = 0; j < 5; ++j) {
        inputs.col(j) = random_rvec(3, rng);
        upstream.col(j) = random_rvec(4, rng);
    }
    const ForwardTrace trace = forward_trace(net, inputs);
    const GradientBundle batch = backward_batch(net, trace, upstream, true);

    RMat d_w0_sum = RMat::Zero(8, 3);
    for (Eigen::Index j = 0; j < 5; ++j) {
        CHECK((trace.output.col(j) - forward(net, inputs.col(j))).norm() < 1e-14);
        const GradientBundle single = backward(net, inputs.col(j), upstream.col(j));
        d_w0_sum += single.d_weights[0];
        CHECK((batch.d_inputs.col(j) - single.d_inputs.col(0)).cwiseAbs().maxCoeff() < 1e-12);
    }
    CHECK((batch.d_weights[0] - d_w0_sum).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("rmsprop step formula") {
    // default learning rate used across training configs
    CHECK(WganConfig{}.lr == doctest::Approx(5e-5));

    NetworkParams net;
    net.spec = {{1, 1, Activation::linear}};
    net.weights = {RMat::Constant(1, 1, 0.5)};
    net.biases = {RVec::Zero(1)};
    RmspropState state = make_rmsprop_state(net);

    GradientBundle zero;
    zero.d_weights = {RMat::Zero(1, 1)};
    zero.d_biases = {RVec::Zero(1)};
    rmsprop_step(net, zero, state, 0.01);
    CHECK(net.weights[0](0, 0) == 0.5);

    // one step from zero state with gradient g
    const double g = 0.3, lr = 0.01, decay = 0.9, eps = 1e-8;
    GradientBundle grads;
    grads.d_weights = {RMat::Constant(1, 1, g)};
    grads.d_biases = {RVec::Zero(1)};
    NetworkParams net2;
    net2.spec = net.spec;
    net2.weights = {RMat::Constant(1, 1, 0.5)};
    net2.biases = {RVec::Zero(1)};
    RmspropState st2 = make_rmsprop_state(net2);
    rmsprop_step(net2, grads, st2, lr, decay, eps);
    const double expect = 0.5 - lr * g / std::sqrt((1.0 - decay) * g * g + eps);
    CHECK(net2.weights[0](0, 0) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("clip_weights clamps and is idempotent") {
    Rng rng(3);
    NetworkParams net = make_network({{4, 4, Activation::relu}, {4, 2, Activation::linear}}, rng);
    net.weights[0](0, 0) = 0.9;
    net.weights[1](1, 2) = -5.0;

    CHECK_THROWS_AS(clip_weights(net, 0.0), InvalidConfigError);

    clip_weights(net, 0.01);
    CHECK(net.max_abs_parameter() <= 0.01);
    CHECK(net.weights[0](0, 0) == 0.01);
    CHECK(net.weights[1](1, 2) == -0.01);

    const NetworkParams snapshot = net;
    clip_weights(net, 0.01);
    for (std::size_t l = 0; l < net.weights.size(); ++l)
        CHECK((net.weights[l] - snapshot.weights[l]).norm() == 0.0);

    // post-clip Lipschitz bound is finite and loggable
    const double bound = net.lipschitz_bound_inf();
    CHECK(std::isfinite(bound));
    MESSAGE("post-clip Lipschitz bound (inf norm product): " << bound);
}

TEST_CASE("complex bridge round trip and ordering") {
    const int n_f = 3, n_r = 2, n_t = 2;
    Rng rng(5);
    ChannelRealization ch;
    for (int k = 0; k < n_f; ++k) {
        CMat hk(n_r, n_t);
        for (Eigen::Index j = 0; j < n_t; ++j)
            for (Eigen::Index i = 0; i < n_r; ++i)
                hk(i, j) = rng.cnormal();
        ch.per_subcarrier.push_back(hk);
    }

    const RVec v = channel_to_real(ch);
    CHECK(v.size() == 2 * n_f * n_r * n_t);
    const ChannelRealization back = real_to_channel(v, n_f, n_r, n_t);
    for (int k = 0; k < n_f; ++k)
        CHECK((back.per_subcarrier[static_cast<std::size_t>(k)] -
               ch.per_subcarrier[static_cast<std::size_t>(k)])
                  .norm() == 0.0);

    // element (k=0, r=0, t=1) real part sits at index 1 * n_f * n_r
    CHECK(v(static_cast<Eigen::Index>(1) * n_f * n_r) == ch.per_subcarrier[0](0, 1).real());
    // imaginary block offset
    CHECK(v(static_cast<Eigen::Index>(1) * n_f * n_r + n_f * n_r * n_t) ==
          ch.per_subcarrier[0](0, 1).imag());

    // all-real channel leaves the imaginary half zero
    ChannelRealization real_ch;
    for (int k = 0; k < n_f; ++k)
        real_ch.per_subcarrier.push_back(CMat::Constant(n_r, n_t, cplx(1.5, 0.0)));
    const RVec rv = channel_to_real(real_ch);
    CHECK(rv.tail(n_f * n_r * n_t).norm() == 0.0);

    // stacked variant agrees with the matrix path
    const CVec stacked = real_to_stacked(v, n_f, n_r, n_t);
    CHECK((stacked - ch.stacked()).norm() == 0.0);
    CHECK((stacked_to_real(stacked, n_f, n_r, n_t) - v).norm() == 0.0);

    CHECK_THROWS_AS(real_to_channel(RVec::Zero(5), n_f, n_r, n_t), ShapeError);
}

TEST_CASE("network checkpoint round trip is bit exact") {
    Rng rng(11);
    const NetworkParams net = make_network(
        {{3, 16, Activation::relu}, {16, 8, Activation::leaky_relu}, {8, 4, Activation::linear}},
        rng);
    const std::string path = (std::filesystem::temp_directory_path() / "genest_net.gnet").string();

    save_network(net, path);
    const NetworkParams back = load_network(path);
    REQUIRE(back.spec.size() == net.spec.size());
    for (std::size_t l = 0; l < net.spec.size(); ++l) {
        CHECK(back.spec[l].in_dim == net.spec[l].in_dim);
        CHECK(back.spec[l].out_dim == net.spec[l].out_dim);
        CHECK(back.spec[l].act == net.spec[l].act);
        CHECK((back.weights[l] - net.weights[l]).norm() == 0.0);
        CHECK((back.biases[l] - net.biases[l]).norm() == 0.0);
    }

    // metadata round trip
    GeneratorMeta meta{4, 2, 3, 1.2345};
    save_network(net, path, &meta);
    GeneratorMeta got;
    const NetworkParams back2 = load_network(path, &got);
    CHECK(back2.spec.size() == net.spec.size());
    CHECK(got.n_f == 4);
    CHECK(got.n_r == 2);
    CHECK(got.n_t == 3);
    CHECK(got.output_scale == 1.2345);

    // corrupt magic
    {
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.write("ZZZZ", 4);
    }
    CHECK_THROWS_AS(load_network(path), FormatError);

    save_network(net, path);
    std::filesystem::resize_file(path, std::filesystem::file_size(path) - 9);
    CHECK_THROWS_AS(load_network(path), FormatError);
    std::filesystem::remove(path);
}

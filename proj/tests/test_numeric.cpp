// SPDX-License-Identifier: Apache-2.0
//
// genest: generative-prior channel estimation for wideband MIMO-OFDM
// Copyright (C) 2026 The genest authors

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "genest/numeric.hpp"
#include "genest/rng.hpp"

using namespace genest;

namespace {

CMat random_cmat(Eigen::Index rows, Eigen::Index cols, Rng &rng) {
    CMat m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i)
            m(i, j) = rng.cnormal();
    return m;
}

CVec random_cvec(Eigen::Index n, Rng &rng) {
    CVec v(n);
    for (Eigen::Index i = 0; i < n; ++i)
        v(i) = rng.cnormal();
    return v;
}

} // namespace

TEST_CASE("dft_matrix basics") {
    CHECK_THROWS_AS(dft_matrix(0), InvalidDimensionError);

    const CMat f1 = dft_matrix(1);
    CHECK(f1.rows() == 1);
    CHECK(std::abs(f1(0, 0) - cplx(1.0, 0.0)) < 1e-15);

    const CMat f2 = dft_matrix(2);
    const double s = 1.0 / std::sqrt(2.0);
    CHECK(std::abs(f2(0, 0) - cplx(s, 0.0)) < 1e-15);
    CHECK(std::abs(f2(0, 1) - cplx(s, 0.0)) < 1e-15);
    CHECK(std::abs(f2(1, 0) - cplx(s, 0.0)) < 1e-15);
    CHECK(std::abs(f2(1, 1) - cplx(-s, 0.0)) < 1e-15);

    const CMat f8 = dft_matrix(8);
    CHECK((f8 * f8.adjoint() - CMat::Identity(8, 8)).norm() < 1e-12);
}

TEST_CASE("dft_matrix unitary for all orders up to 64") {
    for (Eigen::Index n = 1; n <= 64; ++n) {
        const CMat f = dft_matrix(n);
        CHECK((f * f.adjoint() - CMat::Identity(n, n)).norm() < 1e-10);
    }
}

TEST_CASE("kron layout and scalar cases") {
    Rng rng(7);
    const CMat b = random_cmat(2, 3, rng);

    const CMat block_diag = kron(CMat::Identity(2, 2), b);
    CHECK(block_diag.rows() == 4);
    CHECK(block_diag.cols() == 6);
    CHECK((block_diag.block(0, 0, 2, 3) - b).norm() == 0.0);
    CHECK((block_diag.block(2, 3, 2, 3) - b).norm() == 0.0);
    CHECK(block_diag.block(0, 3, 2, 3).norm() == 0.0);
    CHECK(block_diag.block(2, 0, 2, 3).norm() == 0.0);

    CMat two(1, 1);
    two(0, 0) = cplx(2.0, 0.0);
    CHECK((kron(two, b) - 2.0 * b).norm() == 0.0);
}

TEST_CASE("kron mixed-product property on random draws") {
    Rng rng(11);
    for (int trial = 0; trial < 100; ++trial) {
        const CMat v = random_cmat(2, 2, rng);
        const CMat y = random_cmat(2, 2, rng);
        const CMat x = random_cmat(2, 2, rng);
        const CMat z = random_cmat(2, 2, rng);
        const CMat lhs = kron(v, y) * kron(x, z);
        const CMat rhs = kron(CMat(v * x), CMat(y * z));
        CHECK((lhs - rhs).norm() < 1e-12);
    }
}

TEST_CASE("kron result capacity error") {
    const CMat big = CMat::Zero(1 << 14, 1 << 14);
    CHECK_THROWS_AS(kron(big, big), CapacityError);
}

TEST_CASE("vec column stacking") {
    CMat m(2, 2);
    m << cplx(1, 0), cplx(3, 0), cplx(2, 0), cplx(4, 0); // [[a,b],[c,d]] = [[1,3],[2,4]]
    const CVec v = vec(m);
    CHECK(v(0) == cplx(1, 0));
    CHECK(v(1) == cplx(2, 0));
    CHECK(v(2) == cplx(3, 0));
    CHECK(v(3) == cplx(4, 0));

    CMat one(1, 1);
    one(0, 0) = cplx(5, -1);
    CHECK(vec(one)(0) == cplx(5, -1));

    CHECK((unvec(v, 2, 2) - m).norm() == 0.0);
    CHECK_THROWS_AS(unvec(v, 3, 2), ShapeError);
}

TEST_CASE("vec identity kron(x^T, I) vec(H) = H x") {
    Rng rng(13);
    const CMat h = random_cmat(3, 3, rng);
    const CVec x = random_cvec(3, rng);
    const CMat xt = x.transpose();
    const CVec lhs = kron(xt, CMat::Identity(3, 3)) * vec(h);
    const CVec rhs = h * x;
    CHECK((lhs - rhs).norm() < 1e-12);
}

TEST_CASE("block_circulant layout") {
    Rng rng(17);
    const CMat c0 = random_cmat(2, 3, rng);
    const CMat c1 = random_cmat(2, 3, rng);

    const CMat c = block_circulant({c0, c1}, 2);
    CHECK((c.block(0, 0, 2, 3) - c0).norm() == 0.0);
    CHECK((c.block(0, 3, 2, 3) - c1).norm() == 0.0);
    CHECK((c.block(2, 0, 2, 3) - c1).norm() == 0.0);
    CHECK((c.block(2, 3, 2, 3) - c0).norm() == 0.0);

    const CMat d = block_circulant({c0}, 3);
    CHECK((d.block(0, 0, 2, 3) - c0).norm() == 0.0);
    CHECK((d.block(2, 3, 2, 3) - c0).norm() == 0.0);
    CHECK((d.block(4, 6, 2, 3) - c0).norm() == 0.0);
    CHECK(d.block(0, 3, 2, 3).norm() == 0.0);
    CHECK(d.block(2, 0, 2, 3).norm() == 0.0);

    CHECK_THROWS_AS(block_circulant({c0, CMat::Zero(3, 3)}, 4), ShapeError);
    CHECK_THROWS_AS(block_circulant({c0, c1, c0}, 2), ShapeError);
}

TEST_CASE("block_circulant diagonalization by DFT sandwich") {
    Rng rng(19);
    const int n_f = 8, n_r = 2, n_t = 3, taps = 3;
    for (int draw = 0; draw < 8; ++draw) {
        std::vector<CMat> c;
        for (int l = 0; l < taps; ++l)
            c.push_back(random_cmat(n_r, n_t, rng));
        const CMat circ = block_circulant(c, n_f);
        const CMat f = dft_matrix(n_f);
        const CMat h = kron(f, CMat::Identity(n_r, n_r)) * circ *
                       kron(f.adjoint(), CMat::Identity(n_t, n_t));

        double off_mass = 0.0;
        for (int j = 0; j < n_f; ++j)
            for (int k = 0; k < n_f; ++k)
                if (j != k)
                    off_mass += h.block(j * n_r, k * n_t, n_r, n_t).squaredNorm();
        CHECK(std::sqrt(off_mass) < 1e-10);

        for (int k = 0; k < n_f; ++k) {
            CMat expect = CMat::Zero(n_r, n_t);
            for (int l = 0; l < taps; ++l)
                expect += c[static_cast<std::size_t>(l)] *
                          std::polar(1.0, -2.0 * std::numbers::pi * k * l / n_f);
            CHECK((h.block(k * n_r, k * n_t, n_r, n_t) - expect).cwiseAbs().maxCoeff() < 1e-10);
        }
    }
}

TEST_CASE("regularized_hermitian_solve identity cases") {
    Rng rng(23);
    const CVec b = random_cvec(5, rng);
    const CVec x1 = regularized_hermitian_solve(CMat::Identity(5, 5), b, 0.0);
    CHECK((x1 - b).norm() < 1e-14);

    const CVec x2 = regularized_hermitian_solve(CMat(2.0 * CMat::Identity(5, 5)), b, 0.0);
    CHECK((x2 - 0.5 * b).norm() < 1e-14);
}

TEST_CASE("regularized_hermitian_solve random Hermitian PD residual") {
    Rng rng(29);
    const CMat a = random_cmat(6, 6, rng);
    const CMat gram = a.adjoint() * a + 0.1 * CMat::Identity(6, 6);
    const CVec rhs = random_cvec(6, rng);
    const CVec x = regularized_hermitian_solve(gram, rhs, 0.0);
    CHECK((gram * x - rhs).norm() < 1e-10);
}

TEST_CASE("regularized_hermitian_solve singular detection and ridge rescue") {
    Rng rng(31);
    const CMat a = random_cmat(2, 4, rng); // rank <= 2
    const CMat gram = a.adjoint() * a;
    const CVec rhs = random_cvec(4, rng);
    CHECK_THROWS_AS(regularized_hermitian_solve(gram, rhs, 0.0), SingularMatrixError);

    const CVec x = regularized_hermitian_solve(gram, rhs, 1e-3);
    CHECK(((gram + 1e-3 * CMat::Identity(4, 4)) * x - rhs).norm() < 1e-9);

    CHECK_THROWS_AS(regularized_hermitian_solve(gram, random_cvec(3, rng), 0.0), ShapeError);
    CHECK_THROWS_AS(regularized_hermitian_solve(gram, rhs, -1.0), InvalidConfigError);
}

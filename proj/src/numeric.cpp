// SPDX-License-Identifier: Apache-2.0
//
// genest: generative-prior channel estimation for wideband MIMO-OFDM
// Copyright (C) 2026 The genest authors

#include "genest/numeric.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace genest {

namespace {
// Keeps dense intermediates comfortably inside memory; desk-scale problems
// stay far below this.
constexpr Eigen::Index kMaxDenseEntries = Eigen::Index(1) << 28;
} // namespace

CMat dft_matrix(Eigen::Index n) {
    if (n < 1)
        throw InvalidDimensionError("dft_matrix: order must be >= 1");
    CMat f(n, n);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index k = 0; k < n; ++k) {
            // reduce j*k mod n before forming the angle to keep phases exact
            // for large orders
            const double angle =
                -2.0 * std::numbers::pi * static_cast<double>((j * k) % n) / static_cast<double>(n);
            f(j, k) = std::polar(scale, angle);
        }
    }
    return f;
}

CMat kron(const CMat &a, const CMat &b) {
    if (a.rows() > 0 && b.rows() > 0 && a.rows() > kMaxDenseEntries / b.rows())
        throw CapacityError("kron: result row count overflows supported sizes");
    if (a.cols() > 0 && b.cols() > 0 && a.cols() > kMaxDenseEntries / b.cols())
        throw CapacityError("kron: result column count overflows supported sizes");
    const Eigen::Index rows = a.rows() * b.rows();
    const Eigen::Index cols = a.cols() * b.cols();
    if (rows > 0 && cols > 0 && rows > kMaxDenseEntries / cols)
        throw CapacityError("kron: result entry count overflows supported sizes");
    CMat out(rows, cols);
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

CVec vec(const CMat &m) {
    CVec v(m.size());
    Eigen::Index idx = 0;
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            v(idx++) = m(i, j);
    return v;
}

CMat unvec(const CVec &v, Eigen::Index rows, Eigen::Index cols) {
    if (v.size() != rows * cols)
        throw ShapeError("unvec: length does not match requested shape");
    CMat m(rows, cols);
    Eigen::Index idx = 0;
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i)
            m(i, j) = v(idx++);
    return m;
}

CMat block_circulant(const std::vector<CMat> &taps, Eigen::Index n_f) {
    if (taps.empty())
        throw InvalidDimensionError("block_circulant: need at least one tap");
    if (static_cast<Eigen::Index>(taps.size()) > n_f)
        throw ShapeError("block_circulant: more taps than block columns");
    const Eigen::Index nr = taps.front().rows();
    const Eigen::Index nt = taps.front().cols();
    for (const CMat &tap : taps)
        if (tap.rows() != nr || tap.cols() != nt)
            throw ShapeError("block_circulant: taps must share dimensions");

    CMat out = CMat::Zero(n_f * nr, n_f * nt);
    for (Eigen::Index j = 0; j < n_f; ++j) {
        for (Eigen::Index k = 0; k < n_f; ++k) {
            const Eigen::Index tap = (j - k + n_f) % n_f;
            if (tap < static_cast<Eigen::Index>(taps.size()))
                out.block(j * nr, k * nt, nr, nt) = taps[static_cast<std::size_t>(tap)];
        }
    }
    return out;
}

CVec regularized_hermitian_solve(const CMat &gram, const CVec &rhs, double ridge) {
    if (gram.rows() != gram.cols())
        throw ShapeError("regularized_hermitian_solve: gram must be square");
    if (rhs.size() != gram.rows())
        throw ShapeError("regularized_hermitian_solve: rhs length mismatch");
    if (ridge < 0.0)
        throw InvalidConfigError("regularized_hermitian_solve: ridge must be >= 0");

    CMat system = gram;
    if (ridge > 0.0)
        system.diagonal().array() += cplx(ridge, 0.0);

    Eigen::LDLT<CMat> ldlt(system);
    const RVec d = ldlt.vectorD().real();
    const double dmax = d.size() > 0 ? d.cwiseAbs().maxCoeff() : 0.0;
    const double tol = static_cast<double>(gram.rows()) *
                       std::numeric_limits<double>::epsilon() * dmax;
    if (dmax <= 0.0 || d.minCoeff() <= tol)
        throw SingularMatrixError(
            "regularized_hermitian_solve: gram is singular (rank deficient at ridge=" +
            std::to_string(ridge) + ")");
    return ldlt.solve(rhs);
}

} // namespace genest

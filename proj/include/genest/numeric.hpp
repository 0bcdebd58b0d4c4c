// SPDX-License-Identifier: Apache-2.0
//
// genest: generative-prior channel estimation for wideband MIMO-OFDM
// Copyright (C) 2026 The genest authors

#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "genest/errors.hpp"

namespace genest {

using cplx = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;

/// Unitary DFT matrix: F[j,k] = exp(-i 2 pi j k / n) / sqrt(n), so that
/// F * F^H = I. The inverse transform is F^H.
CMat dft_matrix(Eigen::Index n);

/// Kronecker product with the standard block layout,
/// result(i*br+k, j*bc+l) = a(i,j) * b(k,l).
CMat kron(const CMat &a, const CMat &b);

/// Column-stacking vectorization.
CVec vec(const CMat &m);

/// Inverse of vec for a known shape.
CMat unvec(const CVec &v, Eigen::Index rows, Eigen::Index cols);

/// Assembles the (n_f*Nr) x (n_f*Nt) block-circulant matrix whose block
/// (j, k) is taps[(j - k) mod n_f], taps beyond the given list being zero.
/// The first block column is [C_0; C_1; ...; C_{L-1}; 0; ...].
CMat block_circulant(const std::vector<CMat> &taps, Eigen::Index n_f);

/// Solves (gram + ridge*I) x = rhs for Hermitian positive semidefinite gram
/// via a pivoted LDL^H factorization. With ridge = 0 a rank-deficient gram
/// raises SingularMatrixError instead of returning garbage.
CVec regularized_hermitian_solve(const CMat &gram, const CVec &rhs, double ridge);

} // namespace genest

// SPDX-License-Identifier: Apache-2.0
//
// genest: generative-prior channel estimation for wideband MIMO-OFDM
// Copyright (C) 2026 The genest authors

#pragma once

#include <stdexcept>
#include <string>

namespace genest {

/// Base class for all genest errors.
class Error : public std::runtime_error {
  public:
    explicit Error(const std::string &what) : std::runtime_error(what) {}
};

/// A dimension argument is zero/negative or otherwise meaningless.
class InvalidDimensionError : public Error {
  public:
    using Error::Error;
};

/// Operand shapes are inconsistent with each other.
class ShapeError : public Error {
  public:
    using Error::Error;
};

/// A result would exceed supported matrix sizes.
class CapacityError : public Error {
  public:
    using Error::Error;
};

/// A Hermitian system has no usable factorization (rank deficient without ridge).
class SingularMatrixError : public Error {
  public:
    using Error::Error;
};

/// An estimator was asked to solve an under-determined problem.
class IllPosedError : public Error {
  public:
    using Error::Error;
};

/// A serialized file is corrupt, truncated or has the wrong magic/version.
class FormatError : public Error {
  public:
    using Error::Error;
};

/// A configuration value is out of its documented range.
class InvalidConfigError : public Error {
  public:
    using Error::Error;
};

/// A metric is undefined for the given inputs (e.g. zero-norm reference).
class UndefinedMetricError : public Error {
  public:
    using Error::Error;
};

} // namespace genest

// SPDX-License-Identifier: Apache-2.0
//
// genest: generative-prior channel estimation for wideband MIMO-OFDM
// Copyright (C) 2026 The genest authors

#pragma once

#include <functional>

namespace genest {

/// Worker count used by parallel_for: the GENEST_THREADS environment
/// variable when set, otherwise the hardware concurrency.
int worker_count();

/// Runs fn(i) for i in [0, n) on a pool of worker_count() threads.
/// Indices are handed out atomically; results must be written to
/// index-addressed slots by the caller so output never depends on the
/// schedule. Exceptions from workers are rethrown on the calling thread.
void parallel_for(int n, const std::function<void(int)> &fn);

} // namespace genest

// Copyright 2026 The modalprobe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>

namespace modalprobe {

// Worker count: MODALPROBE_THREADS when set to a positive integer, otherwise
// the hardware concurrency (at least 1).
std::size_t thread_budget();

// Runs fn(0..n-1) on up to thread_budget() threads. If any call throws, the
// exception from the lowest index is rethrown after all workers finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace modalprobe

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>

namespace spdelab {

// worker count for batch runners; 0 means hardware concurrency
void set_threads(int n);
int threads();

// Calls body(i) for i in [0, n). Work is split in contiguous chunks; results
// must be written to per-index slots so reductions stay order independent.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace spdelab

#pragma once

#include <cstddef>
#include <functional>

namespace iform {

// Worker cap for data-parallel kernels. Default is 1. Every parallel kernel in
// this project assigns each output element to exactly one worker and keeps the
// per-element summation order fixed, so results are bitwise identical for any
// thread count.
void set_threads(int n);
int threads();

// Runs fn(lo, hi) over a partition of [0, n). With threads()==1 this is a
// plain call on the calling thread.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace iform

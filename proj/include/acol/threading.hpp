#pragma once

#include <cstdint>

namespace acol {

/// Worker-thread cap for the OpenMP kernels. BLAS is always pinned to one
/// thread; kernel parallelism partitions disjoint output slices, so results
/// are bitwise identical at any thread count.
void set_thread_count(int threads);

int thread_count();

/// Reads ACOL_THREADS (default 1, the fully deterministic reference mode).
void init_threading_from_env();

/// Pins OpenBLAS to a single thread. Called lazily before the first GEMM.
void ensure_blas_single_threaded();

}  // namespace acol

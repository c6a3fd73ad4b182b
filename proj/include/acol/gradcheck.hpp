#pragma once

#include <functional>

#include "acol/rng.hpp"
#include "acol/tensor.hpp"

namespace acol {

struct FdOptions {
    double eps = 1e-5;
    int64_t probes = 32;
    /// Coordinates with |value| below this are skipped (kink neighborhoods of
    /// relu-like ops when probing their direct inputs). 0 disables the guard.
    double kink_guard = 0.0;
};

struct FdResult {
    double max_rel_err = 0.0;
    int64_t probes_run = 0;
};

/// Central-difference gradient check of `analytic` against `loss_fn`, probing
/// random coordinates of `param` (which loss_fn must read live). Relative
/// error uses a max(1, |analytic|) denominator. Double precision only.
FdResult fd_check(const std::function<double()>& loss_fn, Tensor<double>& param,
                  const Tensor<double>& analytic, RngStream& rng, const FdOptions& opts = {});

}  // namespace acol

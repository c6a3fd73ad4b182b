#include "acol/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace acol {

FdResult fd_check(const std::function<double()>& loss_fn, Tensor<double>& param,
                  const Tensor<double>& analytic, RngStream& rng, const FdOptions& opts) {
    require_same_shape(param, analytic, "fd_check");
    FdResult res;
    const int64_t n = param.numel();
    for (int64_t p = 0; p < opts.probes; ++p) {
        int64_t idx = rng.uniform_int(n);
        if (opts.kink_guard > 0.0) {
            int attempts = 0;
            while (std::abs(param[idx]) < opts.kink_guard && attempts++ < 64) {
                idx = rng.uniform_int(n);
            }
            if (std::abs(param[idx]) < opts.kink_guard) continue;
        }
        const double saved = param[idx];
        param[idx] = saved + opts.eps;
        const double plus = loss_fn();
        param[idx] = saved - opts.eps;
        const double minus = loss_fn();
        param[idx] = saved;
        const double fd = (plus - minus) / (2.0 * opts.eps);
        const double rel = std::abs(fd - analytic[idx]) / std::max(1.0, std::abs(analytic[idx]));
        res.max_rel_err = std::max(res.max_rel_err, rel);
        ++res.probes_run;
    }
    return res;
}

}  // namespace acol

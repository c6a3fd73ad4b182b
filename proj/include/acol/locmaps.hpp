#pragma once

#include <cstdint>

#include "acol/tensor.hpp"

namespace acol {

/// One per-category spatial map (raw 1x1-conv output or normalized to [0,1]).
template <typename T>
struct LocalizationMap {
    Tensor<T> grid;  // [H,W]
    int64_t category = 0;
    bool normalized = false;
};

/// Min-max normalization of a 2-D grid; a constant grid maps to all zeros.
template <typename T>
Tensor<T> normalize_grid(const Tensor<T>& grid);

/// Channel c of sample n, taken unmodified from the branch maps [N,C,H,W].
template <typename T>
LocalizationMap<T> select_map(const Tensor<T>& branch_maps, int64_t sample, int64_t category);

/// Post-hoc class activation map: weighted channel sum of S [K,H,W] with
/// column c of W_fc [K,C]; the bias is ignored.
template <typename T>
LocalizationMap<T> cam_posthoc(const Tensor<T>& features, const Tensor<T>& fc_weights,
                               int64_t category);

template <typename T>
LocalizationMap<T> normalize_map(const LocalizationMap<T>& map);

/// Elementwise maximum of two normalized maps of equal shape.
template <typename T>
LocalizationMap<T> fuse_maps(const LocalizationMap<T>& a, const LocalizationMap<T>& b);

struct EquivalenceReport {
    double max_logit_diff = 0.0;
    double max_map_diff = 0.0;
    int64_t trials = 0;
};

/// Builds a GAP->FC head and a 1x1-conv->GAP head from the same random weight
/// matrix over the same random features, per trial, and reports the worst
/// disagreement of logits and maps between the two formulations.
template <typename T>
EquivalenceReport equivalence_report(uint64_t seed, int64_t trials, int64_t channels = 64,
                                     int64_t categories = 10, int64_t spatial = 8);

}  // namespace acol

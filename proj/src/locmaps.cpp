#include "acol/locmaps.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "acol/ops.hpp"
#include "acol/rng.hpp"

namespace acol {

template <typename T>
Tensor<T> normalize_grid(const Tensor<T>& grid) {
    T lo = grid[0], hi = grid[0];
    for (int64_t i = 1; i < grid.numel(); ++i) {
        lo = std::min(lo, grid[i]);
        hi = std::max(hi, grid[i]);
    }
    Tensor<T> out(grid.shape());
    if (hi == lo) return out;  // degenerate constant map -> all zeros
    const T scale = T(1) / (hi - lo);
    for (int64_t i = 0; i < grid.numel(); ++i) out[i] = (grid[i] - lo) * scale;
    return out;
}

template <typename T>
LocalizationMap<T> select_map(const Tensor<T>& branch_maps, int64_t sample, int64_t category) {
    if (branch_maps.rank() != 4) {
        throw std::invalid_argument("select_map: maps must be [N,C,H,W], got " +
                                    branch_maps.shape_str());
    }
    if (sample < 0 || sample >= branch_maps.dim(0)) {
        throw std::invalid_argument("select_map: sample " + std::to_string(sample) +
                                    " out of range [0," + std::to_string(branch_maps.dim(0)) + ")");
    }
    if (category < 0 || category >= branch_maps.dim(1)) {
        throw std::invalid_argument("select_map: category " + std::to_string(category) +
                                    " out of range [0," + std::to_string(branch_maps.dim(1)) + ")");
    }
    const int64_t h = branch_maps.dim(2), w = branch_maps.dim(3);
    Tensor<T> grid({h, w});
    const T* src = branch_maps.data() + (sample * branch_maps.dim(1) + category) * h * w;
    std::copy(src, src + h * w, grid.data());
    return {std::move(grid), category, false};
}

template <typename T>
LocalizationMap<T> cam_posthoc(const Tensor<T>& features, const Tensor<T>& fc_weights,
                               int64_t category) {
    if (features.rank() != 3) {
        throw std::invalid_argument("cam_posthoc: features must be [K,H,W], got " +
                                    features.shape_str());
    }
    if (fc_weights.rank() != 2 || fc_weights.dim(0) != features.dim(0)) {
        throw std::invalid_argument("cam_posthoc: weights " + fc_weights.shape_str() +
                                    " do not match features " + features.shape_str());
    }
    if (category < 0 || category >= fc_weights.dim(1)) {
        throw std::invalid_argument("cam_posthoc: category " + std::to_string(category) +
                                    " out of range [0," + std::to_string(fc_weights.dim(1)) + ")");
    }
    const int64_t k = features.dim(0), h = features.dim(1), w = features.dim(2);
    Tensor<T> grid({h, w});
    for (int64_t ki = 0; ki < k; ++ki) {
        const T wv = fc_weights.at2(ki, category);
        const T* slab = features.data() + ki * h * w;
        for (int64_t p = 0; p < h * w; ++p) grid[p] += wv * slab[p];
    }
    return {std::move(grid), category, false};
}

template <typename T>
LocalizationMap<T> normalize_map(const LocalizationMap<T>& map) {
    return {normalize_grid(map.grid), map.category, true};
}

template <typename T>
LocalizationMap<T> fuse_maps(const LocalizationMap<T>& a, const LocalizationMap<T>& b) {
    if (!a.normalized || !b.normalized) {
        throw std::invalid_argument("fuse_maps: both maps must be normalized");
    }
    require_same_shape(a.grid, b.grid, "fuse_maps");
    LocalizationMap<T> out{Tensor<T>(a.grid.shape()), a.category, true};
    for (int64_t i = 0; i < a.grid.numel(); ++i) out.grid[i] = std::max(a.grid[i], b.grid[i]);
    return out;
}

template <typename T>
EquivalenceReport equivalence_report(uint64_t seed, int64_t trials, int64_t channels,
                                     int64_t categories, int64_t spatial) {
    if (trials < 1) throw std::invalid_argument("equivalence_report: trials must be >= 1");
    EquivalenceReport report;
    report.trials = trials;
    for (int64_t trial = 0; trial < trials; ++trial) {
        RngStream rng = RngStream::derive(seed, rng_tag::equivalence, static_cast<uint64_t>(trial));
        Tensor<T> features({channels, spatial, spatial});
        for (int64_t i = 0; i < features.numel(); ++i) {
            features[i] = static_cast<T>(rng.normal());
        }
        Tensor<T> weight({channels, categories});
        for (int64_t i = 0; i < weight.numel(); ++i) {
            weight[i] = static_cast<T>(rng.normal());
        }

        // GAP -> fully connected route.
        Tensor<T> batched({1, channels, spatial, spatial}, features.vec());
        Tensor<T> pooled = gap(batched);  // [1,K]
        std::vector<T> logits_fc(static_cast<size_t>(categories), T(0));
        for (int64_t c = 0; c < categories; ++c) {
            T acc = T(0);
            for (int64_t k = 0; k < channels; ++k) acc += pooled.at2(0, k) * weight.at2(k, c);
            logits_fc[static_cast<size_t>(c)] = acc;
        }

        // 1x1 conv -> GAP route sharing the same weight matrix.
        ConvLayer<T> head;
        head.weights = Tensor<T>({categories, channels, 1, 1});
        head.bias = Tensor<T>({categories});
        for (int64_t c = 0; c < categories; ++c) {
            for (int64_t k = 0; k < channels; ++k) {
                head.weights[c * channels + k] = weight.at2(k, c);
            }
        }
        Tensor<T> conv_maps = conv2d_forward(batched, head);
        Tensor<T> logits_conv = gap(conv_maps);

        for (int64_t c = 0; c < categories; ++c) {
            const double diff = std::abs(static_cast<double>(logits_fc[static_cast<size_t>(c)]) -
                                         static_cast<double>(logits_conv.at2(0, c)));
            report.max_logit_diff = std::max(report.max_logit_diff, diff);
            const LocalizationMap<T> fc_map = cam_posthoc(features, weight, c);
            const LocalizationMap<T> conv_map = select_map(conv_maps, 0, c);
            for (int64_t p = 0; p < fc_map.grid.numel(); ++p) {
                const double mdiff = std::abs(static_cast<double>(fc_map.grid[p]) -
                                              static_cast<double>(conv_map.grid[p]));
                report.max_map_diff = std::max(report.max_map_diff, mdiff);
            }
        }
    }
    return report;
}

#define ACOL_INSTANTIATE_LOCMAPS(T)                                                            \
    template Tensor<T> normalize_grid<T>(const Tensor<T>&);                                    \
    template LocalizationMap<T> select_map<T>(const Tensor<T>&, int64_t, int64_t);             \
    template LocalizationMap<T> cam_posthoc<T>(const Tensor<T>&, const Tensor<T>&, int64_t);   \
    template LocalizationMap<T> normalize_map<T>(const LocalizationMap<T>&);                   \
    template LocalizationMap<T> fuse_maps<T>(const LocalizationMap<T>&,                        \
                                             const LocalizationMap<T>&);                       \
    template EquivalenceReport equivalence_report<T>(uint64_t, int64_t, int64_t, int64_t,      \
                                                     int64_t);

ACOL_INSTANTIATE_LOCMAPS(float)
ACOL_INSTANTIATE_LOCMAPS(double)

#undef ACOL_INSTANTIATE_LOCMAPS

}  // namespace acol

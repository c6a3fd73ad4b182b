#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "acol/tensor.hpp"

namespace acol {

/// Half-open pixel rectangle: [x0,x1) x [y0,y1).
struct BBox {
    int64_t x0 = 0, y0 = 0, x1 = 0, y1 = 0;

    int64_t area() const { return (x1 - x0) * (y1 - y0); }
    bool valid() const { return x0 < x1 && y0 < y1; }
    bool operator==(const BBox&) const = default;
};

struct BoolGrid {
    int64_t h = 0, w = 0;
    std::vector<uint8_t> cells;

    bool at(int64_t i, int64_t j) const { return cells[static_cast<size_t>(i * w + j)] != 0; }
    void set(int64_t i, int64_t j, bool v) { cells[static_cast<size_t>(i * w + j)] = v ? 1 : 0; }
};

/// Foreground = values strictly above tau_rel * max(map).
template <typename T>
BoolGrid segment_foreground(const Tensor<T>& map, double tau_rel);

/// Largest connected foreground component (8-connectivity by default,
/// 4-connectivity for sensitivity checks). Size ties resolve to the component
/// containing the smallest row-major pixel; an empty mask yields an empty
/// component.
BoolGrid largest_connected_component(const BoolGrid& mask, bool eight_connectivity = true);

/// Tight box of a non-empty component, scaled from map to image coordinates
/// rounding outward. Returns nullopt for an empty component (a no-detection,
/// which the caller scores as a localization error).
std::optional<BBox> tight_bbox(const BoolGrid& component, int64_t map_size, int64_t image_size);

/// Intersection over union by pixel area.
double iou(const BBox& a, const BBox& b);

struct GuessPrediction {
    int64_t category = -1;
    std::optional<BBox> box;  // absent when k_box excluded this guess
};

struct SamplePrediction {
    std::vector<GuessPrediction> guesses;  // ranked, best first
    std::optional<BBox> gt_known_box;      // box extracted at the true category
};

struct SampleTruth {
    int64_t label = -1;
    BBox box;
};

struct LocMetrics {
    double top1_loc_err = 0.0;
    double topk_loc_err = 0.0;
    double gt_known_loc_err = 0.0;
    double cls_err = 0.0;
    int64_t n_samples = 0;
};

/// A guess counts as a correct localization when its category matches and its
/// box has IoU strictly above 0.5; gt_known scores the true-category box only.
LocMetrics evaluate(std::span<const SamplePrediction> predictions,
                    std::span<const SampleTruth> ground_truth, int64_t k);

}  // namespace acol

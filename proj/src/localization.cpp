#include "acol/localization.hpp"

#include <algorithm>
#include <stdexcept>

namespace acol {

template <typename T>
BoolGrid segment_foreground(const Tensor<T>& map, double tau_rel) {
    if (map.rank() != 2) {
        throw std::invalid_argument("segment_foreground: map must be 2-D, got " + map.shape_str());
    }
    if (tau_rel <= 0.0 || tau_rel >= 1.0) {
        throw std::invalid_argument("segment_foreground: tau_rel must lie in (0,1), got " +
                                    std::to_string(tau_rel));
    }
    T peak = map[0];
    for (int64_t i = 1; i < map.numel(); ++i) peak = std::max(peak, map[i]);
    const T threshold = static_cast<T>(tau_rel) * peak;
    BoolGrid grid{map.dim(0), map.dim(1),
                  std::vector<uint8_t>(static_cast<size_t>(map.numel()))};
    for (int64_t i = 0; i < map.numel(); ++i) {
        grid.cells[static_cast<size_t>(i)] = map[i] > threshold ? 1 : 0;
    }
    return grid;
}

BoolGrid largest_connected_component(const BoolGrid& mask, bool eight_connectivity) {
    const int64_t h = mask.h, w = mask.w;
    std::vector<int32_t> label(static_cast<size_t>(h * w), -1);
    std::vector<int64_t> stack;
    int32_t next_label = 0;
    int64_t best_size = 0;
    int32_t best_label = -1;

    // Row-major scan: the first pixel of each component is its smallest
    // row-major pixel, so keeping the earlier component on ties realizes the
    // tie rule.
    for (int64_t start = 0; start < h * w; ++start) {
        if (!mask.cells[static_cast<size_t>(start)] || label[static_cast<size_t>(start)] >= 0) {
            continue;
        }
        const int32_t current = next_label++;
        int64_t size = 0;
        stack.assign(1, start);
        label[static_cast<size_t>(start)] = current;
        while (!stack.empty()) {
            const int64_t p = stack.back();
            stack.pop_back();
            ++size;
            const int64_t pi = p / w, pj = p % w;
            for (int64_t di = -1; di <= 1; ++di) {
                for (int64_t dj = -1; dj <= 1; ++dj) {
                    if (di == 0 && dj == 0) continue;
                    if (!eight_connectivity && di != 0 && dj != 0) continue;
                    const int64_t ni = pi + di, nj = pj + dj;
                    if (ni < 0 || ni >= h || nj < 0 || nj >= w) continue;
                    const int64_t q = ni * w + nj;
                    if (!mask.cells[static_cast<size_t>(q)] || label[static_cast<size_t>(q)] >= 0) {
                        continue;
                    }
                    label[static_cast<size_t>(q)] = current;
                    stack.push_back(q);
                }
            }
        }
        if (size > best_size) {
            best_size = size;
            best_label = current;
        }
    }

    BoolGrid out{h, w, std::vector<uint8_t>(static_cast<size_t>(h * w))};
    if (best_label >= 0) {
        for (int64_t i = 0; i < h * w; ++i) {
            out.cells[static_cast<size_t>(i)] = label[static_cast<size_t>(i)] == best_label ? 1 : 0;
        }
    }
    return out;
}

std::optional<BBox> tight_bbox(const BoolGrid& component, int64_t map_size, int64_t image_size) {
    int64_t min_i = component.h, max_i = -1, min_j = component.w, max_j = -1;
    for (int64_t i = 0; i < component.h; ++i) {
        for (int64_t j = 0; j < component.w; ++j) {
            if (!component.at(i, j)) continue;
            min_i = std::min(min_i, i);
            max_i = std::max(max_i, i);
            min_j = std::min(min_j, j);
            max_j = std::max(max_j, j);
        }
    }
    if (max_i < 0) return std::nullopt;

    // Map-space extents are half-open; corners scale outward (floor the mins,
    // ceil the maxes) so the image box still covers the component.
    const auto scale_lo = [&](int64_t v) { return (v * image_size) / map_size; };
    const auto scale_hi = [&](int64_t v) {
        return (v * image_size + map_size - 1) / map_size;
    };
    BBox box{scale_lo(min_j), scale_lo(min_i), scale_hi(max_j + 1), scale_hi(max_i + 1)};
    return box;
}

double iou(const BBox& a, const BBox& b) {
    if (!a.valid() || !b.valid()) {
        throw std::invalid_argument("iou: boxes must be non-degenerate");
    }
    const int64_t ix0 = std::max(a.x0, b.x0), iy0 = std::max(a.y0, b.y0);
    const int64_t ix1 = std::min(a.x1, b.x1), iy1 = std::min(a.y1, b.y1);
    const int64_t iw = std::max<int64_t>(0, ix1 - ix0), ih = std::max<int64_t>(0, iy1 - iy0);
    const int64_t inter = iw * ih;
    const int64_t uni = a.area() + b.area() - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

LocMetrics evaluate(std::span<const SamplePrediction> predictions,
                    std::span<const SampleTruth> ground_truth, int64_t k) {
    if (predictions.size() != ground_truth.size()) {
        throw std::invalid_argument("evaluate: " + std::to_string(predictions.size()) +
                                    " predictions vs " + std::to_string(ground_truth.size()) +
                                    " ground-truth entries");
    }
    if (predictions.empty()) {
        throw std::invalid_argument("evaluate: empty sample set");
    }
    if (k < 1) throw std::invalid_argument("evaluate: k must be >= 1");

    int64_t top1_ok = 0, topk_ok = 0, gt_known_ok = 0, cls_ok = 0;
    for (size_t s = 0; s < predictions.size(); ++s) {
        const SamplePrediction& pred = predictions[s];
        const SampleTruth& truth = ground_truth[s];
        if (static_cast<int64_t>(pred.guesses.size()) < k) {
            throw std::invalid_argument("evaluate: sample " + std::to_string(s) + " has " +
                                        std::to_string(pred.guesses.size()) +
                                        " guesses but k=" + std::to_string(k));
        }
        if (!truth.box.valid()) {
            throw std::invalid_argument("evaluate: sample " + std::to_string(s) +
                                        " has no valid ground-truth box");
        }
        const auto guess_hits = [&](const GuessPrediction& g) {
            return g.category == truth.label && g.box && iou(*g.box, truth.box) > 0.5;
        };
        if (pred.guesses[0].category == truth.label) ++cls_ok;
        if (guess_hits(pred.guesses[0])) ++top1_ok;
        for (int64_t r = 0; r < k; ++r) {
            if (guess_hits(pred.guesses[static_cast<size_t>(r)])) {
                ++topk_ok;
                break;
            }
        }
        if (pred.gt_known_box && iou(*pred.gt_known_box, truth.box) > 0.5) ++gt_known_ok;
    }

    const double n = static_cast<double>(predictions.size());
    LocMetrics m;
    m.n_samples = static_cast<int64_t>(predictions.size());
    m.top1_loc_err = 1.0 - static_cast<double>(top1_ok) / n;
    m.topk_loc_err = 1.0 - static_cast<double>(topk_ok) / n;
    m.gt_known_loc_err = 1.0 - static_cast<double>(gt_known_ok) / n;
    m.cls_err = 1.0 - static_cast<double>(cls_ok) / n;
    return m;
}

template BoolGrid segment_foreground<float>(const Tensor<float>&, double);
template BoolGrid segment_foreground<double>(const Tensor<double>&, double);

}  // namespace acol

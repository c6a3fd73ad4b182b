#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "acol/ops.hpp"
#include "acol/tensor.hpp"

namespace acol {

/// Desk-scale architecture: every backbone entry is conv3x3(s1,p1) + relu +
/// maxpool2; every branch entry is conv3x3(s1,p1) + relu, closed by a
/// 1x1 conv with one output channel per category.
struct NetConfig {
    int64_t image_size = 64;
    int64_t in_channels = 3;
    std::vector<int64_t> backbone_channels{64, 64, 64};
    std::vector<int64_t> branch_channels{64, 64};
    int64_t num_categories = 4;

    int64_t downsample_factor() const { return int64_t(1) << backbone_channels.size(); }
    int64_t feature_size() const { return image_size / downsample_factor(); }
};

template <typename T>
struct NetworkParams {
    std::vector<ConvLayer<T>> backbone;
    std::vector<ConvLayer<T>> classifier_a;
    std::vector<ConvLayer<T>> classifier_b;
    int64_t num_categories = 0;
};

/// He fan-in initialization, biases zero. The two branches draw independent
/// weights unless identical_branches is set (a mode the symmetry tests use).
template <typename T>
NetworkParams<T> init_network(const NetConfig& config, uint64_t seed,
                              bool identical_branches = false);

template <typename T>
void for_each_param(NetworkParams<T>& params,
                    const std::function<void(const std::string&, Tensor<T>&)>& fn);

/// Boolean spatial grid; true marks positions to erase.
struct EraseMask {
    int64_t size = 0;
    std::vector<uint8_t> grid;

    bool at(int64_t i, int64_t j) const { return grid[static_cast<size_t>(i * size + j)] != 0; }
};

enum class RunMode { train, test };

struct RunOptions {
    RunMode mode = RunMode::train;
    double delta = 0.6;
    bool erase_enabled = true;
    /// When set, bypasses mask computation (gradient audits freeze the mask).
    const std::vector<EraseMask>* mask_override = nullptr;
};

template <typename T>
struct BlockCache {
    Tensor<T> input;
    Tensor<T> preact;
    std::vector<int64_t> argmax;
    std::vector<int64_t> prepool_shape;
};

template <typename T>
struct BranchCache {
    std::vector<Tensor<T>> inputs;   // input to each conv layer
    std::vector<Tensor<T>> preacts;  // pre-relu outputs of the non-final layers
};

template <typename T>
struct ForwardRecord {
    RunMode mode = RunMode::train;
    Tensor<T> S;         // backbone features [N,K,H1,H1]
    Tensor<T> S_erased;  // features fed to branch B
    std::vector<EraseMask> masks;
    std::vector<int64_t> mask_categories;  // category whose map built each mask
    Tensor<T> maps_a, logits_a;
    Tensor<T> maps_b, logits_b;
    std::vector<BlockCache<T>> backbone_cache;
    BranchCache<T> cache_a, cache_b;
};

template <typename T>
Tensor<T> backbone_forward(const Tensor<T>& images, const std::vector<ConvLayer<T>>& layers);

template <typename T>
struct ClassifierOut {
    Tensor<T> maps;    // [N,C,H2,H2], the 1x1 conv output
    Tensor<T> logits;  // gap(maps)
};

template <typename T>
ClassifierOut<T> classifier_forward(const Tensor<T>& features,
                                    const std::vector<ConvLayer<T>>& layers);

/// Normalizes the map to [0,1], resizes to target_size if needed, thresholds
/// strictly above delta. A constant map yields an all-false mask.
template <typename T>
EraseMask make_erase_mask(const Tensor<T>& map, double delta, int64_t target_size);

/// Zeroes every channel at masked spatial positions.
template <typename T>
Tensor<T> erase_features(const Tensor<T>& features, const std::vector<EraseMask>& masks);

/// Full ACoL pass: backbone, classifier A, erase mask from A's map (at the
/// label in train mode, at A's argmax in test mode), erase, classifier B.
template <typename T>
ForwardRecord<T> acol_forward(const Tensor<T>& images, std::span<const int64_t> labels,
                              const NetworkParams<T>& params, const RunOptions& opts);

template <typename T>
struct LayerGrads {
    Tensor<T> weights;
    Tensor<T> bias;
};

template <typename T>
struct NetGrads {
    std::vector<LayerGrads<T>> backbone, classifier_a, classifier_b;
};

template <typename T>
struct LossDiagnostics {
    /// Gradient reaching S through branch B, after the erase mask zeroed it.
    Tensor<T> grad_s_from_b;
};

template <typename T>
struct LossResult {
    T loss_a = T(0);
    T loss_b = T(0);
    NetGrads<T> grads;

    T total() const { return loss_a + loss_b; }
};

/// Sum of the two cross entropies with unit weights; the erase mask is a
/// constant during differentiation.
template <typename T>
LossResult<T> acol_loss_and_grads(const ForwardRecord<T>& record, std::span<const int64_t> labels,
                                  const NetworkParams<T>& params,
                                  LossDiagnostics<T>* diag = nullptr);

}  // namespace acol

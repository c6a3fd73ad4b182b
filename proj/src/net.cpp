#include "acol/net.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "acol/locmaps.hpp"
#include "acol/rng.hpp"

namespace acol {

namespace {

template <typename T>
ConvLayer<T> make_conv(int64_t in_ch, int64_t out_ch, int64_t k, int64_t pad, uint64_t seed,
                       uint64_t layer_tag) {
    ConvLayer<T> layer;
    layer.weights = Tensor<T>({out_ch, in_ch, k, k});
    layer.bias = Tensor<T>({out_ch});
    layer.stride = 1;
    layer.pad = pad;
    RngStream rng = RngStream::derive(seed, rng_tag::weight_init, layer_tag);
    const double std_dev = std::sqrt(2.0 / static_cast<double>(in_ch * k * k));
    for (int64_t i = 0; i < layer.weights.numel(); ++i) {
        layer.weights[i] = static_cast<T>(rng.normal() * std_dev);
    }
    return layer;
}

template <typename T>
int64_t argmax_row(const Tensor<T>& logits, int64_t row) {
    const int64_t classes = logits.dim(1);
    const T* r = logits.data() + row * classes;
    int64_t best = 0;
    for (int64_t c = 1; c < classes; ++c) {
        if (r[c] > r[best]) best = c;
    }
    return best;
}

template <typename T>
Tensor<T> backbone_forward_impl(const Tensor<T>& images, const std::vector<ConvLayer<T>>& layers,
                                std::vector<BlockCache<T>>* cache) {
    if (images.rank() != 4) {
        throw std::invalid_argument("backbone_forward: images must be [N,C,H,W], got " +
                                    images.shape_str());
    }
    const int64_t factor = int64_t(1) << layers.size();
    if (images.dim(2) % factor != 0 || images.dim(3) % factor != 0) {
        throw std::invalid_argument("backbone_forward: spatial size of " + images.shape_str() +
                                    " is not divisible by the downsampling factor " +
                                    std::to_string(factor));
    }
    Tensor<T> x = images;
    if (cache) cache->clear();
    for (const auto& layer : layers) {
        Tensor<T> preact = conv2d_forward(x, layer);
        Tensor<T> activated = relu(preact);
        MaxPoolResult<T> pooled = maxpool2(activated);
        if (cache) {
            cache->push_back({std::move(x), std::move(preact), std::move(pooled.argmax),
                              activated.shape()});
        }
        x = std::move(pooled.output);
    }
    return x;
}

template <typename T>
ClassifierOut<T> classifier_forward_impl(const Tensor<T>& features,
                                         const std::vector<ConvLayer<T>>& layers,
                                         BranchCache<T>* cache) {
    if (layers.empty()) throw std::invalid_argument("classifier_forward: empty layer list");
    Tensor<T> x = features;
    if (cache) {
        cache->inputs.clear();
        cache->preacts.clear();
    }
    for (size_t i = 0; i + 1 < layers.size(); ++i) {
        Tensor<T> preact = conv2d_forward(x, layers[i]);
        Tensor<T> activated = relu(preact);
        if (cache) {
            cache->inputs.push_back(std::move(x));
            cache->preacts.push_back(std::move(preact));
        }
        x = std::move(activated);
    }
    Tensor<T> maps = conv2d_forward(x, layers.back());
    if (cache) cache->inputs.push_back(std::move(x));
    Tensor<T> logits = gap(maps);
    return {std::move(maps), std::move(logits)};
}

// Backward through one classifier branch; returns the gradient at its input
// features and fills per-layer grads.
template <typename T>
Tensor<T> classifier_backward(const Tensor<T>& grad_logits, const std::vector<ConvLayer<T>>& layers,
                              const BranchCache<T>& cache, const Tensor<T>& maps,
                              std::vector<LayerGrads<T>>& grads) {
    grads.resize(layers.size());
    Tensor<T> dmaps = gap_backward(grad_logits, maps.dim(2), maps.dim(3));
    ConvGrads<T> cg = conv2d_backward(cache.inputs.back(), layers.back(), dmaps);
    grads.back() = {std::move(cg.weights), std::move(cg.bias)};
    Tensor<T> dx = std::move(cg.input);
    for (int64_t i = static_cast<int64_t>(layers.size()) - 2; i >= 0; --i) {
        dx = relu_backward(cache.preacts[static_cast<size_t>(i)], dx);
        cg = conv2d_backward(cache.inputs[static_cast<size_t>(i)], layers[static_cast<size_t>(i)],
                             dx);
        grads[static_cast<size_t>(i)] = {std::move(cg.weights), std::move(cg.bias)};
        dx = std::move(cg.input);
    }
    return dx;
}

}  // namespace

template <typename T>
NetworkParams<T> init_network(const NetConfig& config, uint64_t seed, bool identical_branches) {
    if (config.num_categories < 2) {
        throw std::invalid_argument("init_network: need at least 2 categories");
    }
    NetworkParams<T> params;
    params.num_categories = config.num_categories;
    int64_t in_ch = config.in_channels;
    uint64_t tag = 0;
    for (int64_t out_ch : config.backbone_channels) {
        params.backbone.push_back(make_conv<T>(in_ch, out_ch, 3, 1, seed, tag++));
        in_ch = out_ch;
    }
    const int64_t feat_ch = in_ch;
    auto build_branch = [&](uint64_t base_tag) {
        std::vector<ConvLayer<T>> branch;
        int64_t ch = feat_ch;
        uint64_t t = base_tag;
        for (int64_t out_ch : config.branch_channels) {
            branch.push_back(make_conv<T>(ch, out_ch, 3, 1, seed, t++));
            ch = out_ch;
        }
        branch.push_back(make_conv<T>(ch, config.num_categories, 1, 0, seed, t));
        return branch;
    };
    params.classifier_a = build_branch(100);
    params.classifier_b = identical_branches ? params.classifier_a : build_branch(200);
    return params;
}

template <typename T>
void for_each_param(NetworkParams<T>& params,
                    const std::function<void(const std::string&, Tensor<T>&)>& fn) {
    auto visit = [&](std::vector<ConvLayer<T>>& layers, const std::string& prefix) {
        for (size_t i = 0; i < layers.size(); ++i) {
            fn(prefix + "." + std::to_string(i) + ".weight", layers[i].weights);
            fn(prefix + "." + std::to_string(i) + ".bias", layers[i].bias);
        }
    };
    visit(params.backbone, "backbone");
    visit(params.classifier_a, "clsA");
    visit(params.classifier_b, "clsB");
}

template <typename T>
Tensor<T> backbone_forward(const Tensor<T>& images, const std::vector<ConvLayer<T>>& layers) {
    return backbone_forward_impl(images, layers, nullptr);
}

template <typename T>
ClassifierOut<T> classifier_forward(const Tensor<T>& features,
                                    const std::vector<ConvLayer<T>>& layers) {
    return classifier_forward_impl(features, layers, nullptr);
}

template <typename T>
EraseMask make_erase_mask(const Tensor<T>& map, double delta, int64_t target_size) {
    if (map.rank() != 2 || map.dim(0) != map.dim(1)) {
        throw std::invalid_argument("make_erase_mask: map must be square 2-D, got " +
                                    map.shape_str());
    }
    if (delta <= 0.0 || delta >= 1.0) {
        throw std::invalid_argument("make_erase_mask: delta must lie in (0,1), got " +
                                    std::to_string(delta));
    }
    Tensor<T> normalized = normalize_grid(map);
    if (map.dim(0) != target_size) {
        normalized = bilinear_resize(normalized, target_size, target_size);
    }
    EraseMask mask;
    mask.size = target_size;
    mask.grid.resize(static_cast<size_t>(target_size * target_size));
    for (int64_t i = 0; i < normalized.numel(); ++i) {
        mask.grid[static_cast<size_t>(i)] =
            normalized[i] > static_cast<T>(delta) ? uint8_t(1) : uint8_t(0);
    }
    return mask;
}

template <typename T>
Tensor<T> erase_features(const Tensor<T>& features, const std::vector<EraseMask>& masks) {
    if (features.rank() != 4) {
        throw std::invalid_argument("erase_features: features must be [N,K,H,W], got " +
                                    features.shape_str());
    }
    const int64_t batch = features.dim(0), ch = features.dim(1), h = features.dim(2),
                  w = features.dim(3);
    if (static_cast<int64_t>(masks.size()) != batch) {
        throw std::invalid_argument("erase_features: " + std::to_string(masks.size()) +
                                    " masks for batch of " + std::to_string(batch));
    }
    for (const auto& mask : masks) {
        if (mask.size != h || h != w) {
            throw std::invalid_argument("erase_features: mask size " + std::to_string(mask.size) +
                                        " does not match feature size " + std::to_string(h));
        }
    }
    Tensor<T> out = features;
#pragma omp parallel for schedule(static)
    for (int64_t n = 0; n < batch; ++n) {
        const EraseMask& mask = masks[static_cast<size_t>(n)];
        for (int64_t p = 0; p < h * w; ++p) {
            if (!mask.grid[static_cast<size_t>(p)]) continue;
            for (int64_t c = 0; c < ch; ++c) {
                out[(n * ch + c) * h * w + p] = T(0);
            }
        }
    }
    return out;
}

template <typename T>
ForwardRecord<T> acol_forward(const Tensor<T>& images, std::span<const int64_t> labels,
                              const NetworkParams<T>& params, const RunOptions& opts) {
    const int64_t batch = images.dim(0);
    if (opts.mode == RunMode::train && static_cast<int64_t>(labels.size()) != batch) {
        throw std::invalid_argument("acol_forward: train mode requires one label per sample (got " +
                                    std::to_string(labels.size()) + " for batch of " +
                                    std::to_string(batch) + ")");
    }
    for (int64_t y : labels) {
        if (y < 0 || y >= params.num_categories) {
            throw std::invalid_argument("acol_forward: label " + std::to_string(y) +
                                        " out of range [0," +
                                        std::to_string(params.num_categories) + ")");
        }
    }

    ForwardRecord<T> record;
    record.mode = opts.mode;
    record.S = backbone_forward_impl(images, params.backbone, &record.backbone_cache);

    ClassifierOut<T> out_a = classifier_forward_impl(record.S, params.classifier_a,
                                                     &record.cache_a);
    record.maps_a = std::move(out_a.maps);
    record.logits_a = std::move(out_a.logits);

    const int64_t h1 = record.S.dim(2);
    record.masks.resize(static_cast<size_t>(batch));
    record.mask_categories.assign(static_cast<size_t>(batch), -1);
    if (opts.mask_override) {
        if (static_cast<int64_t>(opts.mask_override->size()) != batch) {
            throw std::invalid_argument("acol_forward: mask override count mismatch");
        }
        record.masks = *opts.mask_override;
    } else if (!opts.erase_enabled) {
        for (auto& mask : record.masks) {
            mask.size = h1;
            mask.grid.assign(static_cast<size_t>(h1 * h1), 0);
        }
    } else {
        for (int64_t n = 0; n < batch; ++n) {
            const int64_t cat = opts.mode == RunMode::train
                                    ? labels[static_cast<size_t>(n)]
                                    : argmax_row(record.logits_a, n);
            record.mask_categories[static_cast<size_t>(n)] = cat;
            LocalizationMap<T> map = select_map(record.maps_a, n, cat);
            record.masks[static_cast<size_t>(n)] = make_erase_mask(map.grid, opts.delta, h1);
        }
    }

    record.S_erased = erase_features(record.S, record.masks);
    ClassifierOut<T> out_b = classifier_forward_impl(record.S_erased, params.classifier_b,
                                                     &record.cache_b);
    record.maps_b = std::move(out_b.maps);
    record.logits_b = std::move(out_b.logits);
    return record;
}

template <typename T>
LossResult<T> acol_loss_and_grads(const ForwardRecord<T>& record, std::span<const int64_t> labels,
                                  const NetworkParams<T>& params, LossDiagnostics<T>* diag) {
    if (record.mode != RunMode::train) {
        throw std::invalid_argument("acol_loss_and_grads: record must come from a train-mode pass");
    }
    LossResult<T> result;

    SoftmaxCeResult<T> ce_a = softmax_cross_entropy(record.logits_a, labels);
    SoftmaxCeResult<T> ce_b = softmax_cross_entropy(record.logits_b, labels);
    result.loss_a = ce_a.loss;
    result.loss_b = ce_b.loss;

    Tensor<T> ds_a = classifier_backward(ce_a.grad_logits, params.classifier_a, record.cache_a,
                                         record.maps_a, result.grads.classifier_a);
    Tensor<T> ds_b = classifier_backward(ce_b.grad_logits, params.classifier_b, record.cache_b,
                                         record.maps_b, result.grads.classifier_b);

    // The mask is a constant of the step: branch B's gradient is cut at the
    // erased positions before it reaches the backbone.
    const int64_t batch = ds_b.dim(0), ch = ds_b.dim(1), spatial = ds_b.dim(2) * ds_b.dim(3);
    for (int64_t n = 0; n < batch; ++n) {
        const EraseMask& mask = record.masks[static_cast<size_t>(n)];
        for (int64_t p = 0; p < spatial; ++p) {
            if (!mask.grid[static_cast<size_t>(p)]) continue;
            for (int64_t c = 0; c < ch; ++c) ds_b[(n * ch + c) * spatial + p] = T(0);
        }
    }
    if (diag) diag->grad_s_from_b = ds_b;

    Tensor<T> ds = std::move(ds_a);
    for (int64_t i = 0; i < ds.numel(); ++i) ds[i] += ds_b[i];

    result.grads.backbone.resize(params.backbone.size());
    Tensor<T> dx = std::move(ds);
    for (int64_t i = static_cast<int64_t>(params.backbone.size()) - 1; i >= 0; --i) {
        const BlockCache<T>& cache = record.backbone_cache[static_cast<size_t>(i)];
        Tensor<T> dpool = maxpool2_backward(cache.argmax, cache.prepool_shape, dx);
        Tensor<T> dact = relu_backward(cache.preact, dpool);
        ConvGrads<T> cg = conv2d_backward(cache.input, params.backbone[static_cast<size_t>(i)],
                                          dact);
        result.grads.backbone[static_cast<size_t>(i)] = {std::move(cg.weights), std::move(cg.bias)};
        dx = std::move(cg.input);
    }
    return result;
}

#define ACOL_INSTANTIATE_NET(T)                                                                   \
    template NetworkParams<T> init_network<T>(const NetConfig&, uint64_t, bool);                  \
    template void for_each_param<T>(NetworkParams<T>&,                                           \
                                    const std::function<void(const std::string&, Tensor<T>&)>&); \
    template Tensor<T> backbone_forward<T>(const Tensor<T>&, const std::vector<ConvLayer<T>>&);  \
    template ClassifierOut<T> classifier_forward<T>(const Tensor<T>&,                            \
                                                    const std::vector<ConvLayer<T>>&);           \
    template EraseMask make_erase_mask<T>(const Tensor<T>&, double, int64_t);                    \
    template Tensor<T> erase_features<T>(const Tensor<T>&, const std::vector<EraseMask>&);       \
    template ForwardRecord<T> acol_forward<T>(const Tensor<T>&, std::span<const int64_t>,        \
                                              const NetworkParams<T>&, const RunOptions&);       \
    template LossResult<T> acol_loss_and_grads<T>(const ForwardRecord<T>&,                       \
                                                  std::span<const int64_t>,                      \
                                                  const NetworkParams<T>&, LossDiagnostics<T>*);

ACOL_INSTANTIATE_NET(float)
ACOL_INSTANTIATE_NET(double)

#undef ACOL_INSTANTIATE_NET

}  // namespace acol

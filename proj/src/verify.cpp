#include "acol/verify.hpp"

#include <chrono>
#include <cmath>

#include "acol/gradcheck.hpp"
#include "acol/locmaps.hpp"
#include "acol/net.hpp"
#include "acol/ops.hpp"
#include "acol/rng.hpp"

namespace acol {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

TensorD random_tensor(const std::vector<int64_t>& shape, RngStream& rng, double scale = 1.0) {
    TensorD t(shape);
    for (int64_t i = 0; i < t.numel(); ++i) t[i] = rng.normal() * scale;
    return t;
}

// Probe loss: sum(g ⊙ op(x)) for a fixed random g.
double weighted_sum(const TensorD& values, const TensorD& weights) {
    double acc = 0.0;
    for (int64_t i = 0; i < values.numel(); ++i) acc += values[i] * weights[i];
    return acc;
}

CheckResult check_conv(uint64_t seed) {
    const auto start = Clock::now();
    RngStream rng = RngStream::derive(seed, rng_tag::gradcheck, 1);
    TensorD input = random_tensor({2, 3, 7, 7}, rng);
    ConvLayer<double> layer;
    layer.weights = random_tensor({4, 3, 3, 3}, rng, 0.5);
    layer.bias = random_tensor({4}, rng, 0.1);
    layer.stride = 1;
    layer.pad = 1;
    const TensorD g = random_tensor({2, 4, 7, 7}, rng);

    const auto loss = [&] { return weighted_sum(conv2d_forward(input, layer), g); };
    ConvGrads<double> grads = conv2d_backward(input, layer, g);

    double worst = 0.0;
    worst = std::max(worst, fd_check(loss, input, grads.input, rng).max_rel_err);
    worst = std::max(worst, fd_check(loss, layer.weights, grads.weights, rng).max_rel_err);
    worst = std::max(worst,
                     fd_check(loss, layer.bias, grads.bias, rng, {.probes = 4}).max_rel_err);
    return {"grad-conv", worst, 1e-4, worst <= 1e-4, seconds_since(start)};
}

CheckResult check_relu(uint64_t seed) {
    const auto start = Clock::now();
    RngStream rng = RngStream::derive(seed, rng_tag::gradcheck, 2);
    TensorD input = random_tensor({2, 4, 6, 6}, rng);
    const TensorD g = random_tensor({2, 4, 6, 6}, rng);
    const auto loss = [&] { return weighted_sum(relu(input), g); };
    const TensorD analytic = relu_backward(input, g);
    const FdResult res = fd_check(loss, input, analytic, rng, {.kink_guard = 1e-4});
    return {"grad-relu", res.max_rel_err, 1e-4, res.max_rel_err <= 1e-4, seconds_since(start)};
}

CheckResult check_maxpool(uint64_t seed) {
    const auto start = Clock::now();
    RngStream rng = RngStream::derive(seed, rng_tag::gradcheck, 3);
    // Margins above 1e-3 inside every window keep the probes away from ties.
    TensorD input({2, 3, 6, 6});
    for (int64_t n = 0; n < 2; ++n) {
        for (int64_t c = 0; c < 3; ++c) {
            for (int64_t oh = 0; oh < 3; ++oh) {
                for (int64_t ow = 0; ow < 3; ++ow) {
                    double vals[4];
                    bool ok = false;
                    while (!ok) {
                        for (double& v : vals) v = rng.normal();
                        ok = true;
                        for (int a = 0; a < 4 && ok; ++a) {
                            for (int b = a + 1; b < 4 && ok; ++b) {
                                if (std::abs(vals[a] - vals[b]) < 1e-3) ok = false;
                            }
                        }
                    }
                    for (int64_t dh = 0; dh < 2; ++dh) {
                        for (int64_t dw = 0; dw < 2; ++dw) {
                            input.at4(n, c, 2 * oh + dh, 2 * ow + dw) = vals[2 * dh + dw];
                        }
                    }
                }
            }
        }
    }
    const TensorD g = random_tensor({2, 3, 3, 3}, rng);
    const auto loss = [&] { return weighted_sum(maxpool2(input).output, g); };
    const MaxPoolResult<double> fwd = maxpool2(input);
    const TensorD analytic = maxpool2_backward(fwd.argmax, input.shape(), g);
    const FdResult res = fd_check(loss, input, analytic, rng);
    return {"grad-maxpool", res.max_rel_err, 1e-4, res.max_rel_err <= 1e-4,
            seconds_since(start)};
}

CheckResult check_gap(uint64_t seed) {
    const auto start = Clock::now();
    RngStream rng = RngStream::derive(seed, rng_tag::gradcheck, 4);
    TensorD input = random_tensor({2, 5, 4, 4}, rng);
    const TensorD g = random_tensor({2, 5}, rng);
    const auto loss = [&] { return weighted_sum(gap(input), g); };
    const TensorD analytic = gap_backward(g, 4, 4);
    const FdResult res = fd_check(loss, input, analytic, rng);
    return {"grad-gap", res.max_rel_err, 1e-4, res.max_rel_err <= 1e-4, seconds_since(start)};
}

CheckResult check_softmax_ce(uint64_t seed) {
    const auto start = Clock::now();
    RngStream rng = RngStream::derive(seed, rng_tag::gradcheck, 5);
    TensorD logits = random_tensor({6, 5}, rng);
    std::vector<int64_t> labels(6);
    for (auto& y : labels) y = rng.uniform_int(5);
    const auto loss = [&] { return softmax_cross_entropy<double>(logits, labels).loss; };
    const TensorD analytic = softmax_cross_entropy<double>(logits, labels).grad_logits;
    const FdResult res = fd_check(loss, logits, analytic, rng);
    return {"grad-softmax-ce", res.max_rel_err, 1e-4, res.max_rel_err <= 1e-4,
            seconds_since(start)};
}

CheckResult check_full_net(uint64_t seed) {
    const auto start = Clock::now();
    RngStream rng = RngStream::derive(seed, rng_tag::gradcheck, 6);

    NetConfig config;
    config.image_size = 16;
    config.in_channels = 3;
    config.backbone_channels = {8, 8};
    config.branch_channels = {8};
    config.num_categories = 3;
    NetworkParams<double> params = init_network<double>(config, seed);

    TensorD images = random_tensor({2, 3, 16, 16}, rng, 0.5);
    for (int64_t i = 0; i < images.numel(); ++i) images[i] = std::abs(images[i]);
    const std::vector<int64_t> labels{1, 2};

    // Freeze the erase mask of an initial pass, then differentiate with the
    // mask held constant.
    RunOptions opts;
    opts.mode = RunMode::train;
    opts.delta = 0.6;
    const ForwardRecord<double> initial = acol_forward(images, labels, params, opts);
    const std::vector<EraseMask> frozen = initial.masks;
    RunOptions frozen_opts = opts;
    frozen_opts.mask_override = &frozen;

    const auto loss = [&] {
        const ForwardRecord<double> rec = acol_forward(images, labels, params, frozen_opts);
        const auto ce_a = softmax_cross_entropy<double>(rec.logits_a, labels);
        const auto ce_b = softmax_cross_entropy<double>(rec.logits_b, labels);
        return ce_a.loss + ce_b.loss;
    };

    const ForwardRecord<double> rec = acol_forward(images, labels, params, frozen_opts);
    const LossResult<double> analytic = acol_loss_and_grads(rec, labels, params);

    double worst = 0.0;
    const auto probe = [&](std::vector<ConvLayer<double>>& layers,
                           const std::vector<LayerGrads<double>>& grads) {
        for (size_t i = 0; i < layers.size(); ++i) {
            worst = std::max(worst,
                             fd_check(loss, layers[i].weights, grads[i].weights, rng).max_rel_err);
            worst = std::max(
                worst,
                fd_check(loss, layers[i].bias, grads[i].bias, rng, {.probes = 8}).max_rel_err);
        }
    };
    probe(params.backbone, analytic.grads.backbone);
    probe(params.classifier_a, analytic.grads.classifier_a);
    probe(params.classifier_b, analytic.grads.classifier_b);
    return {"grad-full-net", worst, 1e-4, worst <= 1e-4, seconds_since(start)};
}

CheckResult check_equivalence_double(uint64_t seed, int64_t trials) {
    const auto start = Clock::now();
    const EquivalenceReport rep = equivalence_report<double>(seed, trials);
    const double worst = std::max(rep.max_logit_diff, rep.max_map_diff);
    return {"equivalence-double", worst, 1e-12, worst <= 1e-12, seconds_since(start)};
}

CheckResult check_equivalence_single(uint64_t seed, int64_t trials) {
    const auto start = Clock::now();
    const EquivalenceReport rep = equivalence_report<float>(seed, trials);
    const double worst = std::max(rep.max_logit_diff, rep.max_map_diff);
    return {"equivalence-single", worst, 1e-5, worst <= 1e-5, seconds_since(start)};
}

}  // namespace

std::vector<CheckResult> run_verification(uint64_t seed, int64_t equivalence_trials) {
    std::vector<CheckResult> results;
    results.push_back(check_equivalence_double(seed, equivalence_trials));
    results.push_back(check_equivalence_single(seed, equivalence_trials));
    results.push_back(check_conv(seed));
    results.push_back(check_relu(seed));
    results.push_back(check_maxpool(seed));
    results.push_back(check_gap(seed));
    results.push_back(check_softmax_ce(seed));
    results.push_back(check_full_net(seed));
    return results;
}

bool all_passed(const std::vector<CheckResult>& results) {
    for (const auto& r : results) {
        if (!r.pass) return false;
    }
    return true;
}

}  // namespace acol

#include "acol/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "acol/locmaps.hpp"
#include "acol/ops.hpp"
#include "acol/rng.hpp"
#include "acol/serialize.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace acol {

namespace {

std::string pred_mode_name(PredMode mode) {
    switch (mode) {
        case PredMode::branch_a: return "branch-a";
        case PredMode::branch_b: return "branch-b";
        default: return "mean";
    }
}

PredMode pred_mode_from_name(const std::string& name) {
    if (name == "branch-a") return PredMode::branch_a;
    if (name == "branch-b") return PredMode::branch_b;
    if (name == "mean") return PredMode::mean_branches;
    throw std::invalid_argument("unknown pred-mode '" + name +
                                "' (expected mean, branch-a or branch-b)");
}

NetGrads<float> make_zero_velocity(const NetworkParams<float>& params) {
    NetGrads<float> v;
    const auto fill = [](const std::vector<ConvLayer<float>>& layers,
                         std::vector<LayerGrads<float>>& out) {
        for (const auto& layer : layers) {
            out.push_back({TensorF(layer.weights.shape()), TensorF(layer.bias.shape())});
        }
    };
    fill(params.backbone, v.backbone);
    fill(params.classifier_a, v.classifier_a);
    fill(params.classifier_b, v.classifier_b);
    return v;
}

void apply_sgd(NetworkParams<float>& params, const NetGrads<float>& grads,
               NetGrads<float>& velocity, const TrainConfig& cfg) {
    const auto lr = static_cast<float>(cfg.lr);
    const auto mom = static_cast<float>(cfg.momentum);
    const auto wd = static_cast<float>(cfg.weight_decay);
    const auto step = [&](std::vector<ConvLayer<float>>& layers,
                          const std::vector<LayerGrads<float>>& g,
                          std::vector<LayerGrads<float>>& v) {
        for (size_t i = 0; i < layers.size(); ++i) {
            sgd_update(layers[i].weights, g[i].weights, v[i].weights, lr, mom, wd);
            sgd_update(layers[i].bias, g[i].bias, v[i].bias, lr, mom, wd);
        }
    };
    step(params.backbone, grads.backbone, velocity.backbone);
    step(params.classifier_a, grads.classifier_a, velocity.classifier_a);
    step(params.classifier_b, grads.classifier_b, velocity.classifier_b);
}

int64_t argmax_row(const TensorF& logits, int64_t row) {
    const int64_t classes = logits.dim(1);
    const float* r = logits.data() + row * classes;
    int64_t best = 0;
    for (int64_t c = 1; c < classes; ++c) {
        if (r[c] > r[best]) best = c;
    }
    return best;
}

std::string checkpoint_path(const std::string& out_dir, int64_t epoch) {
    char name[32];
    std::snprintf(name, sizeof(name), "ckpt_ep%03lld.acol", static_cast<long long>(epoch));
    return (fs::path(out_dir) / name).string();
}

std::optional<BBox> extract_box(const TensorF& normalized_map, int64_t image_size,
                                const TrainConfig& cfg) {
    TensorF resized = bilinear_resize(normalized_map, image_size, image_size);
    BoolGrid foreground = segment_foreground(resized, cfg.tau_rel);
    BoolGrid component = largest_connected_component(foreground, cfg.eight_connectivity);
    return tight_bbox(component, image_size, image_size);
}

json box_json(const std::optional<BBox>& box) {
    if (!box) return nullptr;
    return json::array({box->x0, box->y0, box->x1, box->y1});
}

}  // namespace

std::vector<std::string> validate_config(const TrainConfig& config) {
    if (config.delta <= 0.0 || config.delta >= 1.0) {
        throw std::invalid_argument("config: delta must lie in (0,1), got " +
                                    std::to_string(config.delta));
    }
    if (config.lr < 0.0 || config.momentum < 0.0 || config.momentum >= 1.0 ||
        config.weight_decay < 0.0) {
        throw std::invalid_argument("config: lr/momentum/weight-decay out of range");
    }
    if (config.epochs < 1 || config.batch_size < 1) {
        throw std::invalid_argument("config: epochs and batch-size must be positive");
    }
    if (config.tau_rel <= 0.0 || config.tau_rel >= 1.0) {
        throw std::invalid_argument("config: tau-rel must lie in (0,1), got " +
                                    std::to_string(config.tau_rel));
    }
    if (config.top_k < 1 || config.k_box < 1) {
        throw std::invalid_argument("config: top-k and k-box must be >= 1");
    }
    std::vector<std::string> warnings;
    if (config.delta < 0.5 || config.delta > 0.9) {
        warnings.push_back("delta " + std::to_string(config.delta) +
                           " lies outside the canonical sweep range [0.5, 0.9]");
    }
    return warnings;
}

json train_config_to_json(const TrainConfig& c) {
    return json{{"delta", c.delta},
                {"lr", c.lr},
                {"momentum", c.momentum},
                {"weight-decay", c.weight_decay},
                {"epochs", c.epochs},
                {"batch-size", c.batch_size},
                {"seed", c.seed},
                {"tau-rel", c.tau_rel},
                {"top-k", c.top_k},
                {"k-box", c.k_box},
                {"pred-mode", pred_mode_name(c.pred_mode)},
                {"erase-enabled", c.erase_enabled},
                {"identical-branch-init", c.identical_branch_init},
                {"eight-connectivity", c.eight_connectivity},
                {"patience", c.patience},
                {"min-rel-improvement", c.min_rel_improvement},
                {"stop-acc-a", c.stop_acc_a},
                {"stop-acc-b", c.stop_acc_b}};
}

TrainConfig train_config_from_json(const json& j) {
    TrainConfig c;
    c.delta = j.value("delta", c.delta);
    c.lr = j.value("lr", c.lr);
    c.momentum = j.value("momentum", c.momentum);
    c.weight_decay = j.value("weight-decay", c.weight_decay);
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch-size", c.batch_size);
    c.seed = j.value("seed", c.seed);
    c.tau_rel = j.value("tau-rel", c.tau_rel);
    c.top_k = j.value("top-k", c.top_k);
    c.k_box = j.value("k-box", c.k_box);
    c.pred_mode = pred_mode_from_name(j.value("pred-mode", pred_mode_name(c.pred_mode)));
    c.erase_enabled = j.value("erase-enabled", c.erase_enabled);
    c.identical_branch_init = j.value("identical-branch-init", c.identical_branch_init);
    c.eight_connectivity = j.value("eight-connectivity", c.eight_connectivity);
    c.patience = j.value("patience", c.patience);
    c.min_rel_improvement = j.value("min-rel-improvement", c.min_rel_improvement);
    c.stop_acc_a = j.value("stop-acc-a", c.stop_acc_a);
    c.stop_acc_b = j.value("stop-acc-b", c.stop_acc_b);
    return c;
}

json net_config_to_json(const NetConfig& c) {
    return json{{"image-size", c.image_size},
                {"in-channels", c.in_channels},
                {"backbone-channels", c.backbone_channels},
                {"branch-channels", c.branch_channels},
                {"num-categories", c.num_categories}};
}

NetConfig net_config_from_json(const json& j) {
    NetConfig c;
    c.image_size = j.value("image-size", c.image_size);
    c.in_channels = j.value("in-channels", c.in_channels);
    c.backbone_channels = j.value("backbone-channels", c.backbone_channels);
    c.branch_channels = j.value("branch-channels", c.branch_channels);
    c.num_categories = j.value("num-categories", c.num_categories);
    return c;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    std::vector<NamedTensor> tensors;
    auto& params = const_cast<NetworkParams<float>&>(ckpt.params);
    for_each_param<float>(params, [&](const std::string& name, TensorF& t) {
        tensors.push_back({name, t});
    });
    const auto push_velocity = [&](const std::vector<LayerGrads<float>>& layers,
                                   const std::string& prefix) {
        for (size_t i = 0; i < layers.size(); ++i) {
            tensors.push_back({"opt.v." + prefix + "." + std::to_string(i) + ".weight",
                               layers[i].weights});
            tensors.push_back(
                {"opt.v." + prefix + "." + std::to_string(i) + ".bias", layers[i].bias});
        }
    };
    push_velocity(ckpt.velocity.backbone, "backbone");
    push_velocity(ckpt.velocity.classifier_a, "clsA");
    push_velocity(ckpt.velocity.classifier_b, "clsB");
    save_tensor_file(path, tensors);

    json sidecar{{"format-version", 1},
                 {"epoch", ckpt.epoch},
                 {"train-config", train_config_to_json(ckpt.train_config)},
                 {"net-config", net_config_to_json(ckpt.net_config)},
                 {"rng", {{"scheme", "per-epoch-counter"},
                          {"seed", ckpt.train_config.seed},
                          {"next-epoch", ckpt.epoch + 1}}}};
    std::ofstream os(path + ".json");
    if (!os) throw std::runtime_error("cannot write checkpoint sidecar: " + path + ".json");
    os << sidecar.dump(2) << "\n";
}

Checkpoint load_checkpoint(const std::string& path, int64_t expected_categories) {
    std::ifstream is(path + ".json");
    if (!is) throw std::runtime_error("missing checkpoint sidecar: " + path + ".json");
    json sidecar;
    try {
        is >> sidecar;
    } catch (const json::exception& e) {
        throw std::runtime_error("malformed checkpoint sidecar " + path + ".json: " + e.what());
    }

    Checkpoint ckpt;
    ckpt.epoch = sidecar.at("epoch").get<int64_t>();
    ckpt.train_config = train_config_from_json(sidecar.at("train-config"));
    ckpt.net_config = net_config_from_json(sidecar.at("net-config"));

    if (expected_categories >= 0 && ckpt.net_config.num_categories != expected_categories) {
        throw std::runtime_error(
            "checkpoint " + path + " was trained for " +
            std::to_string(ckpt.net_config.num_categories) + " categories (head shape [" +
            std::to_string(ckpt.net_config.num_categories) + "," +
            std::to_string(ckpt.net_config.branch_channels.back()) + ",1,1]) but " +
            std::to_string(expected_categories) + " were expected");
    }

    ckpt.params = init_network<float>(ckpt.net_config, 0);
    ckpt.velocity = make_zero_velocity(ckpt.params);

    std::vector<NamedTensor> tensors = load_tensor_file(path);
    const auto find = [&](const std::string& name) -> TensorF& {
        for (auto& nt : tensors) {
            if (nt.name == name) return nt.tensor;
        }
        throw std::runtime_error("checkpoint " + path + " is missing tensor '" + name + "'");
    };
    const auto restore = [&](const std::string& name, TensorF& dst) {
        TensorF& src = find(name);
        if (src.shape() != dst.shape()) {
            throw std::runtime_error("checkpoint " + path + ": tensor '" + name + "' has shape " +
                                     src.shape_str() + " but the architecture expects " +
                                     dst.shape_str());
        }
        dst = src;
    };
    for_each_param<float>(ckpt.params, [&](const std::string& name, TensorF& t) {
        restore(name, t);
    });
    const auto restore_velocity = [&](std::vector<LayerGrads<float>>& layers,
                                      const std::string& prefix) {
        for (size_t i = 0; i < layers.size(); ++i) {
            restore("opt.v." + prefix + "." + std::to_string(i) + ".weight", layers[i].weights);
            restore("opt.v." + prefix + "." + std::to_string(i) + ".bias", layers[i].bias);
        }
    };
    restore_velocity(ckpt.velocity.backbone, "backbone");
    restore_velocity(ckpt.velocity.classifier_a, "clsA");
    restore_velocity(ckpt.velocity.classifier_b, "clsB");
    return ckpt;
}

TrainResult train(const std::vector<Sample>& train_set, const NetConfig& net_config,
                  const TrainConfig& config, const std::string& out_dir,
                  const StepObserver& observer, const std::string& resume_checkpoint) {
    validate_config(config);
    if (train_set.empty()) throw std::invalid_argument("train: empty training set");
    const int64_t n = static_cast<int64_t>(train_set.size());
    const int64_t size = net_config.image_size;
    for (const Sample& s : train_set) {
        if (s.label < 0 || s.label >= net_config.num_categories) {
            throw std::invalid_argument("train: label " + std::to_string(s.label) +
                                        " out of range for " +
                                        std::to_string(net_config.num_categories) + " categories");
        }
        if (s.image.dim(1) != size || s.image.dim(2) != size) {
            throw std::invalid_argument("train: sample image " + s.image.shape_str() +
                                        " does not match the configured size " +
                                        std::to_string(size));
        }
    }

    TrainResult result;
    int64_t start_epoch = 0;
    if (!resume_checkpoint.empty()) {
        Checkpoint ckpt = load_checkpoint(resume_checkpoint, net_config.num_categories);
        json stored = train_config_to_json(ckpt.train_config);
        json current = train_config_to_json(config);
        stored.erase("epochs");
        current.erase("epochs");
        if (stored != current || net_config_to_json(ckpt.net_config) !=
                                     net_config_to_json(net_config)) {
            throw std::invalid_argument(
                "resume: checkpoint config differs from the requested config (only the epoch "
                "budget may change)");
        }
        result.params = std::move(ckpt.params);
        result.velocity = std::move(ckpt.velocity);
        start_epoch = ckpt.epoch + 1;
    } else {
        result.params = init_network<float>(net_config, config.seed,
                                            config.identical_branch_init);
        result.velocity = make_zero_velocity(result.params);
    }

    std::ofstream log_stream;
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        log_stream.open(fs::path(out_dir) / "train_log.jsonl",
                        start_epoch == 0 ? std::ios::trunc : std::ios::app);
        if (!log_stream) throw std::runtime_error("cannot open train log in " + out_dir);
    }

    RunOptions run_opts;
    run_opts.mode = RunMode::train;
    run_opts.delta = config.delta;
    run_opts.erase_enabled = config.erase_enabled;

    double best_loss = std::numeric_limits<double>::infinity();
    int64_t stale_epochs = 0;

    for (int64_t epoch = start_epoch; epoch < config.epochs; ++epoch) {
        std::vector<int64_t> order(static_cast<size_t>(n));
        std::iota(order.begin(), order.end(), 0);
        RngStream shuffle_rng = RngStream::derive(config.seed, rng_tag::shuffle,
                                                  static_cast<uint64_t>(epoch));
        shuffle_rng.shuffle(order);

        double loss_a_sum = 0.0, loss_b_sum = 0.0;
        int64_t correct_a = 0, correct_b = 0;
        bool finite = true;
        int64_t step = 0;

        for (int64_t begin = 0; begin < n && finite; begin += config.batch_size, ++step) {
            const int64_t b = std::min(config.batch_size, n - begin);
            TensorF batch({b, 3, size, size});
            std::vector<int64_t> labels(static_cast<size_t>(b));
            for (int64_t i = 0; i < b; ++i) {
                const Sample& s = train_set[static_cast<size_t>(order[static_cast<size_t>(
                    begin + i)])];
                std::copy(s.image.data(), s.image.data() + s.image.numel(),
                          batch.data() + i * 3 * size * size);
                labels[static_cast<size_t>(i)] = s.label;
            }

            ForwardRecord<float> record = acol_forward(batch, labels, result.params, run_opts);
            LossDiagnostics<float> diag;
            LossResult<float> loss = acol_loss_and_grads(record, labels, result.params,
                                                         observer ? &diag : nullptr);
            if (!std::isfinite(static_cast<double>(loss.total()))) {
                finite = false;
                break;
            }
            if (observer) observer(StepProbe{epoch, step, record, diag});

            for (int64_t i = 0; i < b; ++i) {
                if (argmax_row(record.logits_a, i) == labels[static_cast<size_t>(i)]) ++correct_a;
                if (argmax_row(record.logits_b, i) == labels[static_cast<size_t>(i)]) ++correct_b;
            }
            loss_a_sum += static_cast<double>(loss.loss_a) * static_cast<double>(b);
            loss_b_sum += static_cast<double>(loss.loss_b) * static_cast<double>(b);

            apply_sgd(result.params, loss.grads, result.velocity, config);
        }

        if (!finite) {
            result.diverged = true;
            break;
        }

        EpochLog entry{epoch, loss_a_sum / static_cast<double>(n),
                       loss_b_sum / static_cast<double>(n),
                       static_cast<double>(correct_a) / static_cast<double>(n),
                       static_cast<double>(correct_b) / static_cast<double>(n)};
        result.log.push_back(entry);
        result.epochs_run = epoch + 1;

        if (!out_dir.empty()) {
            log_stream << epoch_log_to_json(entry).dump() << "\n";
            log_stream.flush();
            const std::string path = checkpoint_path(out_dir, epoch);
            save_checkpoint(path, {result.params, result.velocity, epoch, config, net_config});
            result.last_checkpoint = path;
        }

        const double epoch_loss = entry.loss_a + entry.loss_b;
        if (epoch_loss < best_loss * (1.0 - config.min_rel_improvement)) {
            best_loss = epoch_loss;
            stale_epochs = 0;
        } else {
            ++stale_epochs;
        }
        if (stale_epochs >= config.patience && entry.acc_a >= config.stop_acc_a &&
            entry.acc_b >= config.stop_acc_b) {
            result.early_stopped = true;
            break;
        }
    }
    return result;
}

SampleRecord localize_sample(const NetworkParams<float>& params, const Sample& sample,
                             const TrainConfig& config) {
    const int64_t size = sample.image.dim(1);
    const int64_t categories = params.num_categories;
    TensorF batch({1, 3, size, size}, sample.image.vec());

    RunOptions opts;
    opts.mode = RunMode::test;
    opts.delta = config.delta;
    opts.erase_enabled = config.erase_enabled;
    ForwardRecord<float> record = acol_forward(batch, {}, params, opts);

    std::vector<double> scores(static_cast<size_t>(categories));
    for (int64_t c = 0; c < categories; ++c) {
        const double a = static_cast<double>(record.logits_a.at2(0, c));
        const double b = static_cast<double>(record.logits_b.at2(0, c));
        switch (config.pred_mode) {
            case PredMode::branch_a: scores[static_cast<size_t>(c)] = a; break;
            case PredMode::branch_b: scores[static_cast<size_t>(c)] = b; break;
            default: scores[static_cast<size_t>(c)] = 0.5 * (a + b); break;
        }
    }
    std::vector<int64_t> ranking(static_cast<size_t>(categories));
    std::iota(ranking.begin(), ranking.end(), 0);
    std::stable_sort(ranking.begin(), ranking.end(), [&](int64_t lhs, int64_t rhs) {
        return scores[static_cast<size_t>(lhs)] > scores[static_cast<size_t>(rhs)];
    });

    const int64_t k = std::min<int64_t>(config.top_k, categories);
    const int64_t k_box = std::min<int64_t>(config.k_box, k);
    ranking.resize(static_cast<size_t>(k));

    const auto fused_box = [&](int64_t category) {
        const LocalizationMap<float> a =
            normalize_map(select_map(record.maps_a, 0, category));
        const LocalizationMap<float> b =
            normalize_map(select_map(record.maps_b, 0, category));
        return extract_box(fuse_maps(a, b).grid, size, config);
    };
    const auto branch_a_box = [&](int64_t category) {
        const LocalizationMap<float> a =
            normalize_map(select_map(record.maps_a, 0, category));
        return extract_box(a.grid, size, config);
    };

    SampleRecord rec;
    rec.label = sample.label;
    rec.gt_box = sample.gt_box;
    rec.ranking = ranking;
    for (int64_t r = 0; r < k; ++r) {
        if (r < k_box) {
            rec.boxes.push_back(fused_box(ranking[static_cast<size_t>(r)]));
            rec.boxes_a.push_back(branch_a_box(ranking[static_cast<size_t>(r)]));
        } else {
            rec.boxes.push_back(std::nullopt);
            rec.boxes_a.push_back(std::nullopt);
        }
    }
    if (sample.label >= 0) {
        rec.gt_known_box = fused_box(sample.label);
        rec.gt_known_box_a = branch_a_box(sample.label);
    }
    return rec;
}

EvalOutcome evaluate_model(const NetworkParams<float>& params, const std::vector<Sample>& test_set,
                           const TrainConfig& config) {
    if (test_set.empty()) throw std::invalid_argument("evaluate_model: empty test set");
    for (const Sample& s : test_set) {
        if (s.label < 0 || s.label >= params.num_categories) {
            throw std::invalid_argument("evaluate_model: label " + std::to_string(s.label) +
                                        " out of range for " +
                                        std::to_string(params.num_categories) + " categories");
        }
    }

    EvalOutcome outcome;
    const int64_t n = static_cast<int64_t>(test_set.size());
    outcome.samples.resize(static_cast<size_t>(n));
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n; ++i) {
        SampleRecord rec = localize_sample(params, test_set[static_cast<size_t>(i)], config);
        rec.index = i;
        outcome.samples[static_cast<size_t>(i)] = std::move(rec);
    }

    const int64_t k = std::min<int64_t>(config.top_k, params.num_categories);
    std::vector<SamplePrediction> fused_preds, branch_a_preds;
    std::vector<SampleTruth> truths;
    for (const SampleRecord& rec : outcome.samples) {
        SamplePrediction fused, branch_a;
        for (size_t r = 0; r < rec.ranking.size(); ++r) {
            fused.guesses.push_back({rec.ranking[r], rec.boxes[r]});
            branch_a.guesses.push_back({rec.ranking[r], rec.boxes_a[r]});
        }
        fused.gt_known_box = rec.gt_known_box;
        branch_a.gt_known_box = rec.gt_known_box_a;
        fused_preds.push_back(std::move(fused));
        branch_a_preds.push_back(std::move(branch_a));
        truths.push_back({rec.label, rec.gt_box});
    }
    outcome.fused = evaluate(fused_preds, truths, k);
    outcome.branch_a = evaluate(branch_a_preds, truths, k);
    return outcome;
}

std::vector<SweepRow> delta_sweep(const GeneratedData& data, const NetConfig& net_config,
                                  const TrainConfig& base_config,
                                  const std::vector<double>& deltas) {
    std::vector<SweepRow> rows;
    for (double delta : deltas) {
        SweepRow row;
        row.delta = delta;
        try {
            TrainConfig cfg = base_config;
            cfg.delta = delta;
            validate_config(cfg);
            TrainResult trained = train(data.train, net_config, cfg);
            if (trained.diverged) {
                throw std::runtime_error("training diverged (non-finite loss)");
            }
            EvalOutcome outcome = evaluate_model(trained.params, data.test, cfg);
            row.fused = outcome.fused;
            row.branch_a = outcome.branch_a;
        } catch (const std::exception& e) {
            row.error = e.what();
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

json metrics_to_json(const LocMetrics& m) {
    return json{{"top1_loc_err", m.top1_loc_err},
                {"top5_loc_err", m.topk_loc_err},
                {"gt_known_loc_err", m.gt_known_loc_err},
                {"cls_err", m.cls_err},
                {"n", m.n_samples}};
}

json epoch_log_to_json(const EpochLog& log) {
    return json{{"epoch", log.epoch},
                {"loss_a", log.loss_a},
                {"loss_b", log.loss_b},
                {"acc_a", log.acc_a},
                {"acc_b", log.acc_b}};
}

json sample_record_to_json(const SampleRecord& rec) {
    json guesses = json::array();
    for (size_t r = 0; r < rec.ranking.size(); ++r) {
        json g{{"rank", r},
               {"category", rec.ranking[r]},
               {"box", box_json(rec.boxes[r])},
               {"box_a", box_json(rec.boxes_a[r])}};
        g["iou"] = rec.boxes[r] ? json(iou(*rec.boxes[r], rec.gt_box)) : json(nullptr);
        guesses.push_back(std::move(g));
    }
    json out{{"index", rec.index},
             {"label", rec.label},
             {"gt_box", json::array({rec.gt_box.x0, rec.gt_box.y0, rec.gt_box.x1, rec.gt_box.y1})},
             {"guesses", std::move(guesses)},
             {"gt_known_box", box_json(rec.gt_known_box)},
             {"gt_known_box_a", box_json(rec.gt_known_box_a)}};
    out["gt_known_iou"] =
        rec.gt_known_box ? json(iou(*rec.gt_known_box, rec.gt_box)) : json(nullptr);
    return out;
}

}  // namespace acol

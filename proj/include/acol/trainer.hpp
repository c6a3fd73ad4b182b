#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "acol/localization.hpp"
#include "acol/net.hpp"
#include "acol/synthdata.hpp"

namespace acol {

enum class PredMode { mean_branches, branch_a, branch_b };

struct TrainConfig {
    double delta = 0.6;
    double lr = 0.01;
    double momentum = 0.9;
    double weight_decay = 5e-4;
    int64_t epochs = 30;
    int64_t batch_size = 32;
    uint64_t seed = 7;
    double tau_rel = 0.2;
    int64_t top_k = 5;
    int64_t k_box = 5;
    PredMode pred_mode = PredMode::mean_branches;
    bool erase_enabled = true;
    bool identical_branch_init = false;
    bool eight_connectivity = true;
    // Early stop: training halts once the epoch loss has not improved by
    // min_rel_improvement for `patience` epochs and both accuracy gates hold.
    int64_t patience = 3;
    double min_rel_improvement = 0.01;
    double stop_acc_a = 0.995;
    double stop_acc_b = 0.90;
};

/// Hard-validates the config (delta in (0,1), positive sizes); returns
/// warnings for soft violations such as delta outside the canonical
/// [0.5, 0.9] sweep range.
std::vector<std::string> validate_config(const TrainConfig& config);

nlohmann::json train_config_to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const nlohmann::json& j);
nlohmann::json net_config_to_json(const NetConfig& config);
NetConfig net_config_from_json(const nlohmann::json& j);

struct EpochLog {
    int64_t epoch = 0;
    double loss_a = 0.0, loss_b = 0.0;
    double acc_a = 0.0, acc_b = 0.0;
};

struct StepProbe {
    int64_t epoch = 0;
    int64_t step = 0;
    const ForwardRecord<float>& record;
    const LossDiagnostics<float>& diag;
};
using StepObserver = std::function<void(const StepProbe&)>;

struct Checkpoint {
    NetworkParams<float> params;
    NetGrads<float> velocity;
    int64_t epoch = -1;  // last completed epoch
    TrainConfig train_config;
    NetConfig net_config;
};

/// Writes `<path>` (tensor container with parameters and optimizer state)
/// plus the `<path>.json` sidecar (configs, epoch, RNG position).
void save_checkpoint(const std::string& path, const Checkpoint& ckpt);

/// Loads and shape-checks a checkpoint; pass expected_categories >= 0 to
/// reject a checkpoint trained for a different number of categories.
Checkpoint load_checkpoint(const std::string& path, int64_t expected_categories = -1);

struct TrainResult {
    NetworkParams<float> params;
    NetGrads<float> velocity;
    std::vector<EpochLog> log;
    int64_t epochs_run = 0;
    bool early_stopped = false;
    bool diverged = false;
    std::string last_checkpoint;  // empty when out_dir was empty
};

/// Shuffled-minibatch SGD over the full ACoL objective. When out_dir is
/// non-empty, writes ckpt_ep%03d.acol (+ sidecar) per epoch and appends
/// train_log.jsonl. Resuming from a checkpoint continues bitwise-identically
/// to an uninterrupted run. On a non-finite loss the epoch is abandoned and
/// the last good checkpoint is kept.
TrainResult train(const std::vector<Sample>& train_set, const NetConfig& net_config,
                  const TrainConfig& config, const std::string& out_dir = "",
                  const StepObserver& observer = nullptr,
                  const std::string& resume_checkpoint = "");

struct SampleRecord {
    int64_t index = 0;
    int64_t label = -1;
    BBox gt_box;
    std::vector<int64_t> ranking;                 // categories, best first
    std::vector<std::optional<BBox>> boxes;       // fused-map box per rank (<= k_box)
    std::vector<std::optional<BBox>> boxes_a;     // branch-A-only box per rank
    std::optional<BBox> gt_known_box;             // fused, at the true category
    std::optional<BBox> gt_known_box_a;           // branch-A-only, at the true category
};

struct EvalOutcome {
    LocMetrics fused;
    LocMetrics branch_a;  // CAM-style single-branch baseline
    std::vector<SampleRecord> samples;
};

/// Test-mode forward per sample; fused and branch-A-only maps go through the
/// identical box-extraction pipeline (normalize, fuse, resize to image size,
/// threshold at tau_rel, largest component, tight box).
EvalOutcome evaluate_model(const NetworkParams<float>& params, const std::vector<Sample>& test_set,
                           const TrainConfig& config);

/// Localization of one image; cmd-localize and evaluate_model share this
/// path, so their boxes agree exactly.
SampleRecord localize_sample(const NetworkParams<float>& params, const Sample& sample,
                             const TrainConfig& config);

struct SweepRow {
    double delta = 0.0;
    LocMetrics fused;
    LocMetrics branch_a;
    std::string error;  // non-empty when this cell failed

    bool ok() const { return error.empty(); }
};

/// Trains one model per delta from the same seed and evaluates each; a failed
/// cell carries its error and the sweep continues.
std::vector<SweepRow> delta_sweep(const GeneratedData& data, const NetConfig& net_config,
                                  const TrainConfig& base_config,
                                  const std::vector<double>& deltas);

nlohmann::json metrics_to_json(const LocMetrics& metrics);
nlohmann::json epoch_log_to_json(const EpochLog& log);
nlohmann::json sample_record_to_json(const SampleRecord& record);

}  // namespace acol

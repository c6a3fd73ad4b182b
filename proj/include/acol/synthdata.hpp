#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "acol/localization.hpp"
#include "acol/tensor.hpp"

namespace acol {

// Two-part-object dataset. Each image carries one object made of a
// *discriminative* glyph (shape unique per category, shared color) and a
// *common* disc (shape shared across categories, weakly category-tinted),
// diagonally adjacent. Each part's box stays within [25%, 50%) of the
// ground-truth box area, so a box around a single part never reaches 0.5 IoU
// with the ground truth; covering the full object requires both parts.
struct DataConfig {
    int64_t num_train = 800;
    int64_t num_test = 200;
    int64_t num_categories = 4;
    int64_t image_size = 64;
    double noise = 0.03;
    double scale_jitter = 0.15;
    double tint_strength = 0.35;
    uint64_t seed = 7;
};

struct Sample {
    TensorF image;  // [3,S,S] in [0,1], 8-bit quantized
    int64_t label = -1;
    BBox gt_box;      // tight box of the whole object
    BBox glyph_box;   // tight box of the discriminative part
    BBox common_box;  // tight box of the common part
};

struct SampleMeta {
    std::string path;
    int64_t label = -1;
    BBox box;
    BBox glyph_box;
    BBox common_box;
};

struct DatasetManifest {
    DataConfig config;
    std::vector<SampleMeta> train;
    std::vector<SampleMeta> test;
};

struct GeneratedData {
    std::vector<Sample> train;
    std::vector<Sample> test;
    DatasetManifest manifest;
};

/// p x p boolean stencil of a category glyph (shapes 0..7); every stencil
/// touches all four edges of its box.
BoolGrid glyph_stencil(int64_t shape, int64_t p);

/// Stencil of the common part (one shape for every category).
BoolGrid common_stencil(int64_t p);

/// One sample from its counter-based stream; deterministic in
/// (config.seed, split_tag, index). The optional object mask receives the
/// exact painted pixels.
Sample generate_sample(const DataConfig& config, uint64_t split_tag, int64_t index,
                       BoolGrid* object_mask = nullptr);

/// Whole dataset; per-category counts are exactly num/C (num must divide).
GeneratedData generate(const DataConfig& config);

/// Layout: dir/{train,test}/img_%06d.png plus dir/manifest.json.
void save_dataset(const std::string& dir, const GeneratedData& data);

GeneratedData load_dataset(const std::string& dir);

}  // namespace acol

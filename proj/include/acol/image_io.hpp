#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "acol/localization.hpp"
#include "acol/tensor.hpp"

namespace acol {

/// 8-bit interleaved image, 1 (gray) or 3 (RGB) channels.
struct ImageU8 {
    int64_t w = 0, h = 0, channels = 0;
    std::vector<uint8_t> pixels;

    uint8_t* px(int64_t y, int64_t x) { return pixels.data() + (y * w + x) * channels; }
    const uint8_t* px(int64_t y, int64_t x) const {
        return pixels.data() + (y * w + x) * channels;
    }
};

void write_png(const std::string& path, const ImageU8& image);

/// Reads an 8-bit gray or RGB PNG; any corruption (including CRC mismatch)
/// raises an error naming the path.
ImageU8 read_png(const std::string& path);

/// [3,H,W] float tensor in [0,1] -> RGB bytes (round to nearest).
ImageU8 tensor_to_image(const TensorF& tensor);

/// Inverse of tensor_to_image; exact for 8-bit-quantized data.
TensorF image_to_tensor(const ImageU8& image);

/// Fixed 256-entry jet-like colormap.
std::array<uint8_t, 3> jet_color(uint8_t v);

/// Normalized [H,W] map -> grayscale heatmap.
ImageU8 heatmap_gray(const TensorF& map);

/// 50/50 blend of the image with the jet-colored map (same spatial size).
ImageU8 overlay_heatmap(const ImageU8& image, const TensorF& map);

void draw_box(ImageU8& image, const BBox& box, const std::array<uint8_t, 3>& color,
              int64_t thickness = 2);

}  // namespace acol

#include "acol/image_io.hpp"

#include <png.h>

#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <memory>
#include <stdexcept>

namespace acol {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

struct PngReader {
    png_structp png = nullptr;
    png_infop info = nullptr;

    PngReader() {
        png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
        if (png) info = png_create_info_struct(png);
    }
    ~PngReader() {
        if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
    }
    PngReader(const PngReader&) = delete;
    PngReader& operator=(const PngReader&) = delete;
};

struct PngWriter {
    png_structp png = nullptr;
    png_infop info = nullptr;

    PngWriter() {
        png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
        if (png) info = png_create_info_struct(png);
    }
    ~PngWriter() {
        if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
    }
    PngWriter(const PngWriter&) = delete;
    PngWriter& operator=(const PngWriter&) = delete;
};

}  // namespace

void write_png(const std::string& path, const ImageU8& image) {
    if (image.channels != 1 && image.channels != 3) {
        throw std::invalid_argument("write_png: image must have 1 or 3 channels");
    }
    if (image.pixels.size() != static_cast<size_t>(image.w * image.h * image.channels)) {
        throw std::invalid_argument("write_png: pixel buffer does not match dimensions");
    }
    FilePtr file(std::fopen(path.c_str(), "wb"));
    if (!file) throw std::runtime_error("cannot open for writing: " + path);

    PngWriter ctx;
    if (!ctx.png || !ctx.info) throw std::runtime_error("libpng init failed for " + path);

    std::vector<png_const_bytep> rows(static_cast<size_t>(image.h));
    for (int64_t y = 0; y < image.h; ++y) {
        rows[static_cast<size_t>(y)] = image.pixels.data() + y * image.w * image.channels;
    }

    // libpng reports errors by longjmp; no C++ objects are created inside the
    // guarded region.
    if (setjmp(png_jmpbuf(ctx.png))) {
        throw std::runtime_error("png write failed: " + path);
    }
    png_init_io(ctx.png, file.get());
    png_set_IHDR(ctx.png, ctx.info, static_cast<png_uint_32>(image.w),
                 static_cast<png_uint_32>(image.h), 8,
                 image.channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(ctx.png, ctx.info);
    png_write_image(ctx.png, const_cast<png_bytepp>(rows.data()));
    png_write_end(ctx.png, nullptr);
}

ImageU8 read_png(const std::string& path) {
    FilePtr file(std::fopen(path.c_str(), "rb"));
    if (!file) throw std::runtime_error("cannot open png: " + path);

    PngReader ctx;
    if (!ctx.png || !ctx.info) throw std::runtime_error("libpng init failed for " + path);

    ImageU8 image;
    std::vector<png_bytep> rows;

    if (setjmp(png_jmpbuf(ctx.png))) {
        throw std::runtime_error("corrupt or unreadable png: " + path);
    }
    png_init_io(ctx.png, file.get());
    png_read_info(ctx.png, ctx.info);
    const png_uint_32 w = png_get_image_width(ctx.png, ctx.info);
    const png_uint_32 h = png_get_image_height(ctx.png, ctx.info);
    const int bit_depth = png_get_bit_depth(ctx.png, ctx.info);
    const int color_type = png_get_color_type(ctx.png, ctx.info);
    if (bit_depth != 8 ||
        (color_type != PNG_COLOR_TYPE_RGB && color_type != PNG_COLOR_TYPE_GRAY)) {
        throw std::runtime_error("unsupported png format in " + path + " (need 8-bit gray or RGB)");
    }
    image.w = w;
    image.h = h;
    image.channels = color_type == PNG_COLOR_TYPE_RGB ? 3 : 1;
    image.pixels.resize(static_cast<size_t>(image.w * image.h * image.channels));
    rows.resize(h);
    for (int64_t y = 0; y < image.h; ++y) {
        rows[static_cast<size_t>(y)] = image.pixels.data() + y * image.w * image.channels;
    }
    // Re-arm after the allocations so nothing construction-sensitive sits
    // between setjmp and a potential longjmp.
    if (setjmp(png_jmpbuf(ctx.png))) {
        throw std::runtime_error("corrupt or unreadable png: " + path);
    }
    png_read_image(ctx.png, rows.data());
    png_read_end(ctx.png, nullptr);
    return image;
}

ImageU8 tensor_to_image(const TensorF& tensor) {
    if (tensor.rank() != 3 || tensor.dim(0) != 3) {
        throw std::invalid_argument("tensor_to_image: expected [3,H,W], got " + tensor.shape_str());
    }
    const int64_t h = tensor.dim(1), w = tensor.dim(2);
    ImageU8 image{w, h, 3, std::vector<uint8_t>(static_cast<size_t>(3 * h * w))};
    for (int64_t y = 0; y < h; ++y) {
        for (int64_t x = 0; x < w; ++x) {
            for (int64_t c = 0; c < 3; ++c) {
                const float v = std::min(std::max(tensor.at3(c, y, x), 0.0f), 1.0f);
                image.px(y, x)[c] = static_cast<uint8_t>(std::lround(v * 255.0f));
            }
        }
    }
    return image;
}

TensorF image_to_tensor(const ImageU8& image) {
    if (image.channels != 3) {
        throw std::invalid_argument("image_to_tensor: expected RGB image");
    }
    TensorF tensor({3, image.h, image.w});
    for (int64_t y = 0; y < image.h; ++y) {
        for (int64_t x = 0; x < image.w; ++x) {
            for (int64_t c = 0; c < 3; ++c) {
                tensor.at3(c, y, x) = static_cast<float>(image.px(y, x)[c]) / 255.0f;
            }
        }
    }
    return tensor;
}

std::array<uint8_t, 3> jet_color(uint8_t v) {
    static const auto lut = [] {
        std::array<std::array<uint8_t, 3>, 256> table{};
        for (int i = 0; i < 256; ++i) {
            const double x = static_cast<double>(i) / 255.0;
            const auto ramp = [](double t) { return std::min(std::max(t, 0.0), 1.0); };
            table[static_cast<size_t>(i)] = {
                static_cast<uint8_t>(std::lround(255.0 * ramp(1.5 - std::abs(4.0 * x - 3.0)))),
                static_cast<uint8_t>(std::lround(255.0 * ramp(1.5 - std::abs(4.0 * x - 2.0)))),
                static_cast<uint8_t>(std::lround(255.0 * ramp(1.5 - std::abs(4.0 * x - 1.0))))};
        }
        return table;
    }();
    return lut[v];
}

ImageU8 heatmap_gray(const TensorF& map) {
    if (map.rank() != 2) {
        throw std::invalid_argument("heatmap_gray: map must be 2-D, got " + map.shape_str());
    }
    const int64_t h = map.dim(0), w = map.dim(1);
    ImageU8 image{w, h, 1, std::vector<uint8_t>(static_cast<size_t>(h * w))};
    for (int64_t i = 0; i < h * w; ++i) {
        const float v = std::min(std::max(map[i], 0.0f), 1.0f);
        image.pixels[static_cast<size_t>(i)] = static_cast<uint8_t>(std::lround(v * 255.0f));
    }
    return image;
}

ImageU8 overlay_heatmap(const ImageU8& image, const TensorF& map) {
    if (image.channels != 3) {
        throw std::invalid_argument("overlay_heatmap: base image must be RGB");
    }
    if (map.rank() != 2 || map.dim(0) != image.h || map.dim(1) != image.w) {
        throw std::invalid_argument("overlay_heatmap: map " + map.shape_str() +
                                    " does not match image " + std::to_string(image.w) + "x" +
                                    std::to_string(image.h));
    }
    ImageU8 out = image;
    for (int64_t y = 0; y < image.h; ++y) {
        for (int64_t x = 0; x < image.w; ++x) {
            const float v = std::min(std::max(map.at2(y, x), 0.0f), 1.0f);
            const auto color = jet_color(static_cast<uint8_t>(std::lround(v * 255.0f)));
            for (int64_t c = 0; c < 3; ++c) {
                out.px(y, x)[c] = static_cast<uint8_t>(
                    (static_cast<int>(image.px(y, x)[c]) + static_cast<int>(color[c]) + 1) / 2);
            }
        }
    }
    return out;
}

void draw_box(ImageU8& image, const BBox& box, const std::array<uint8_t, 3>& color,
              int64_t thickness) {
    if (image.channels != 3) throw std::invalid_argument("draw_box: image must be RGB");
    const auto paint = [&](int64_t y, int64_t x) {
        if (y < 0 || y >= image.h || x < 0 || x >= image.w) return;
        for (int64_t c = 0; c < 3; ++c) image.px(y, x)[c] = color[static_cast<size_t>(c)];
    };
    for (int64_t t = 0; t < thickness; ++t) {
        for (int64_t x = box.x0; x < box.x1; ++x) {
            paint(box.y0 + t, x);
            paint(box.y1 - 1 - t, x);
        }
        for (int64_t y = box.y0; y < box.y1; ++y) {
            paint(y, box.x0 + t);
            paint(y, box.x1 - 1 - t);
        }
    }
}

}  // namespace acol

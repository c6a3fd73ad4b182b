#include "acol/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "acol/image_io.hpp"
#include "acol/ops.hpp"
#include "acol/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace acol {

namespace {

constexpr int64_t kBasePartSize = 14;
constexpr int64_t kPlacementMargin = 3;
constexpr int64_t kMaxShapes = 8;

// Shapes in doubled coordinates (u = 2i-(p-1), v = 2j-(p-1)) so even and odd
// sizes both touch every box edge.
bool glyph_hit(int64_t shape, int64_t p, int64_t i, int64_t j) {
    const int64_t u = 2 * i - (p - 1);
    const int64_t v = 2 * j - (p - 1);
    const int64_t t = std::max<int64_t>(2, (2 * p) / 6);  // stroke width, doubled
    switch (shape) {
        case 0:  // plus
            return std::abs(u) <= t || std::abs(v) <= t;
        case 1:  // X
            return std::abs(u - v) <= t || std::abs(u + v) <= t;
        case 2:  // frame
            return std::abs(u) >= p - 1 - t || std::abs(v) >= p - 1 - t;
        case 3:  // filled diamond
            return std::abs(u) + std::abs(v) <= p;
        case 4:  // H
            return std::abs(v) >= p - 1 - t || std::abs(u) <= t / 2;
        case 5:  // three horizontal stripes
            return std::abs(u) >= p - 1 - t || std::abs(u) <= t / 2;
        case 6:  // T
            return u <= -(p - 1) + t || std::abs(v) <= t / 2;
        case 7:  // corner squares
            return std::abs(u) >= p - 1 - 2 * t && std::abs(v) >= p - 1 - 2 * t;
        default:
            throw std::invalid_argument("glyph shape " + std::to_string(shape) +
                                        " out of range [0," + std::to_string(kMaxShapes) + ")");
    }
}

BoolGrid stencil_from(int64_t p, const std::function<bool(int64_t, int64_t)>& hit) {
    BoolGrid grid{p, p, std::vector<uint8_t>(static_cast<size_t>(p * p))};
    for (int64_t i = 0; i < p; ++i) {
        for (int64_t j = 0; j < p; ++j) grid.set(i, j, hit(i, j));
    }
    return grid;
}

std::array<float, 3> category_hue(int64_t label, int64_t categories) {
    // Evenly spaced hue wheel, full saturation.
    const double h = 6.0 * static_cast<double>(label) / static_cast<double>(categories);
    const int sector = static_cast<int>(h) % 6;
    const double f = h - std::floor(h);
    const double q = 1.0 - f;
    double r = 0, g = 0, b = 0;
    switch (sector) {
        case 0: r = 1; g = f; break;
        case 1: r = q; g = 1; break;
        case 2: g = 1; b = f; break;
        case 3: g = q; b = 1; break;
        case 4: r = f; b = 1; break;
        default: r = 1; b = q; break;
    }
    return {static_cast<float>(r), static_cast<float>(g), static_cast<float>(b)};
}

void paint(TensorF& image, const BoolGrid& stencil, int64_t y0, int64_t x0,
           const std::array<float, 3>& color, BoolGrid* object_mask) {
    for (int64_t i = 0; i < stencil.h; ++i) {
        for (int64_t j = 0; j < stencil.w; ++j) {
            if (!stencil.at(i, j)) continue;
            for (int64_t c = 0; c < 3; ++c) {
                image.at3(c, y0 + i, x0 + j) = color[static_cast<size_t>(c)];
            }
            if (object_mask) object_mask->set(y0 + i, x0 + j, true);
        }
    }
}

BBox tight_box_of(const BoolGrid& mask) {
    int64_t min_i = mask.h, max_i = -1, min_j = mask.w, max_j = -1;
    for (int64_t i = 0; i < mask.h; ++i) {
        for (int64_t j = 0; j < mask.w; ++j) {
            if (!mask.at(i, j)) continue;
            min_i = std::min(min_i, i);
            max_i = std::max(max_i, i);
            min_j = std::min(min_j, j);
            max_j = std::max(max_j, j);
        }
    }
    return {min_j, min_i, max_j + 1, max_i + 1};
}

json box_to_json(const BBox& b) { return json::array({b.x0, b.y0, b.x1, b.y1}); }

BBox box_from_json(const json& j) {
    if (!j.is_array() || j.size() != 4) throw std::runtime_error("manifest: malformed box");
    return {j[0].get<int64_t>(), j[1].get<int64_t>(), j[2].get<int64_t>(), j[3].get<int64_t>()};
}

}  // namespace

BoolGrid glyph_stencil(int64_t shape, int64_t p) {
    return stencil_from(p, [&](int64_t i, int64_t j) { return glyph_hit(shape, p, i, j); });
}

BoolGrid common_stencil(int64_t p) {
    // Filled disc, slightly fat so all box edges are touched at any size.
    return stencil_from(p, [&](int64_t i, int64_t j) {
        const int64_t u = 2 * i - (p - 1);
        const int64_t v = 2 * j - (p - 1);
        return u * u + v * v <= p * p;
    });
}

Sample generate_sample(const DataConfig& config, uint64_t split_tag, int64_t index,
                       BoolGrid* object_mask) {
    const int64_t size = config.image_size;
    RngStream rng = RngStream::derive(config.seed, split_tag, static_cast<uint64_t>(index));

    Sample sample;
    sample.label = index % config.num_categories;
    sample.image = TensorF({3, size, size});

    // Textured background: coarse per-channel value noise, upsampled.
    for (int64_t c = 0; c < 3; ++c) {
        TensorF coarse({4, 4});
        for (int64_t i = 0; i < coarse.numel(); ++i) {
            coarse[i] = static_cast<float>(rng.uniform(0.15, 0.45));
        }
        TensorF fine = bilinear_resize(coarse, size, size);
        for (int64_t p = 0; p < size * size; ++p) sample.image[c * size * size + p] = fine[p];
    }

    // Part size with scale jitter.
    int64_t p = static_cast<int64_t>(std::llround(
        static_cast<double>(kBasePartSize) *
        (1.0 + rng.uniform(-config.scale_jitter, config.scale_jitter))));
    p = std::clamp<int64_t>(p, 7, (size - 2 * kPlacementMargin) / 3);

    // Diagonal adjacency: the far axis separates the parts completely, the
    // near axis keeps them attached; both part boxes then sit in
    // [25%, 50%) of the union area.
    int64_t dx = 0, dy = 0, gx = 0, gy = 0;
    bool placed = false;
    for (int attempt = 0; attempt < 32 && !placed; ++attempt) {
        const int64_t d_far = static_cast<int64_t>(std::llround(p * rng.uniform(1.0, 1.12)));
        const int64_t d_near = static_cast<int64_t>(std::llround(p * rng.uniform(0.48, 0.72)));
        const bool far_is_x = rng.uniform() < 0.5;
        int64_t cand_dx = far_is_x ? d_far : d_near;
        int64_t cand_dy = far_is_x ? d_near : d_far;
        if (rng.uniform() < 0.5) cand_dx = -cand_dx;
        if (rng.uniform() < 0.5) cand_dy = -cand_dy;

        const int64_t union_w = p + std::abs(cand_dx);
        const int64_t union_h = p + std::abs(cand_dy);
        const double frac = static_cast<double>(p * p) /
                            static_cast<double>(union_w * union_h);
        if (frac < 0.25 || frac >= 0.5) continue;
        const int64_t max_x = size - kPlacementMargin - union_w;
        const int64_t max_y = size - kPlacementMargin - union_h;
        if (max_x < kPlacementMargin || max_y < kPlacementMargin) continue;
        const int64_t ux = kPlacementMargin + rng.uniform_int(max_x - kPlacementMargin + 1);
        const int64_t uy = kPlacementMargin + rng.uniform_int(max_y - kPlacementMargin + 1);
        gx = cand_dx >= 0 ? ux : ux + std::abs(cand_dx);
        gy = cand_dy >= 0 ? uy : uy + std::abs(cand_dy);
        dx = cand_dx;
        dy = cand_dy;
        placed = true;
    }
    if (!placed) {
        // Deterministic fallback: fixed diagonal arrangement at the center.
        dx = p;
        dy = (3 * p) / 5;
        const int64_t union_w = p + dx, union_h = p + dy;
        gx = (size - union_w) / 2;
        gy = (size - union_h) / 2;
    }

    if (object_mask) {
        *object_mask = BoolGrid{size, size, std::vector<uint8_t>(static_cast<size_t>(size * size))};
    }
    const std::array<float, 3> glyph_color{0.95f, 0.95f, 0.92f};
    const auto hue = category_hue(sample.label, config.num_categories);
    const float t = static_cast<float>(config.tint_strength);
    const std::array<float, 3> common_color{(1.0f - t) * 0.55f + t * hue[0],
                                            (1.0f - t) * 0.55f + t * hue[1],
                                            (1.0f - t) * 0.55f + t * hue[2]};

    paint(sample.image, glyph_stencil(sample.label % kMaxShapes, p), gy, gx, glyph_color,
          object_mask);
    paint(sample.image, common_stencil(p), gy + dy, gx + dx, common_color, object_mask);

    sample.glyph_box = {gx, gy, gx + p, gy + p};
    sample.common_box = {gx + dx, gy + dy, gx + dx + p, gy + dy + p};
    sample.gt_box = {std::min(sample.glyph_box.x0, sample.common_box.x0),
                     std::min(sample.glyph_box.y0, sample.common_box.y0),
                     std::max(sample.glyph_box.x1, sample.common_box.x1),
                     std::max(sample.glyph_box.y1, sample.common_box.y1)};

    // Pixel noise, then 8-bit quantization so saved and in-memory data agree.
    for (int64_t i = 0; i < sample.image.numel(); ++i) {
        float v = sample.image[i];
        if (config.noise > 0.0) {
            v += static_cast<float>(rng.normal() * config.noise);
        }
        v = std::clamp(v, 0.0f, 1.0f);
        sample.image[i] = static_cast<float>(std::lround(v * 255.0f)) / 255.0f;
    }
    return sample;
}

GeneratedData generate(const DataConfig& config) {
    if (config.num_categories < 2 || config.num_categories > kMaxShapes) {
        throw std::invalid_argument("generate: num_categories must lie in [2," +
                                    std::to_string(kMaxShapes) + "]");
    }
    if (config.num_train % config.num_categories != 0 ||
        config.num_test % config.num_categories != 0) {
        throw std::invalid_argument("generate: sample counts must be divisible by " +
                                    std::to_string(config.num_categories) +
                                    " for exact class balance");
    }
    if (config.image_size < 32 || config.image_size % 8 != 0) {
        throw std::invalid_argument("generate: image_size must be >= 32 and divisible by 8");
    }

    GeneratedData data;
    data.manifest.config = config;
    const auto build_split = [&](uint64_t tag, int64_t count, const std::string& subdir,
                                 std::vector<Sample>& out, std::vector<SampleMeta>& meta) {
        out.resize(static_cast<size_t>(count));
#pragma omp parallel for schedule(static)
        for (int64_t i = 0; i < count; ++i) {
            out[static_cast<size_t>(i)] = generate_sample(config, tag, i);
        }
        meta.resize(static_cast<size_t>(count));
        for (int64_t i = 0; i < count; ++i) {
            char name[32];
            std::snprintf(name, sizeof(name), "img_%06lld.png", static_cast<long long>(i));
            const Sample& s = out[static_cast<size_t>(i)];
            meta[static_cast<size_t>(i)] = {subdir + "/" + name, s.label, s.gt_box, s.glyph_box,
                                            s.common_box};
        }
    };
    build_split(rng_tag::dataset_train, config.num_train, "train", data.train,
                data.manifest.train);
    build_split(rng_tag::dataset_test, config.num_test, "test", data.test, data.manifest.test);
    return data;
}

void save_dataset(const std::string& dir, const GeneratedData& data) {
    fs::create_directories(fs::path(dir) / "train");
    fs::create_directories(fs::path(dir) / "test");
    const auto write_split = [&](const std::vector<Sample>& samples,
                                 const std::vector<SampleMeta>& meta) {
        for (size_t i = 0; i < samples.size(); ++i) {
            write_png((fs::path(dir) / meta[i].path).string(),
                      tensor_to_image(samples[i].image));
        }
    };
    write_split(data.train, data.manifest.train);
    write_split(data.test, data.manifest.test);

    json manifest;
    const DataConfig& c = data.manifest.config;
    manifest["seed"] = c.seed;
    manifest["num-train"] = c.num_train;
    manifest["num-test"] = c.num_test;
    manifest["num-categories"] = c.num_categories;
    manifest["image-size"] = c.image_size;
    manifest["noise"] = c.noise;
    manifest["scale-jitter"] = c.scale_jitter;
    manifest["tint-strength"] = c.tint_strength;
    const auto split_json = [](const std::vector<SampleMeta>& meta) {
        json arr = json::array();
        for (const auto& m : meta) {
            arr.push_back({{"path", m.path},
                           {"label", m.label},
                           {"box", box_to_json(m.box)},
                           {"glyph-box", box_to_json(m.glyph_box)},
                           {"common-box", box_to_json(m.common_box)}});
        }
        return arr;
    };
    manifest["train"] = split_json(data.manifest.train);
    manifest["test"] = split_json(data.manifest.test);

    std::ofstream os(fs::path(dir) / "manifest.json");
    if (!os) throw std::runtime_error("cannot write manifest in " + dir);
    os << manifest.dump(2) << "\n";
}

GeneratedData load_dataset(const std::string& dir) {
    const fs::path manifest_path = fs::path(dir) / "manifest.json";
    std::ifstream is(manifest_path);
    if (!is) throw std::runtime_error("missing manifest: " + manifest_path.string());
    json manifest;
    try {
        is >> manifest;
    } catch (const json::exception& e) {
        throw std::runtime_error("malformed manifest " + manifest_path.string() + ": " + e.what());
    }

    GeneratedData data;
    DataConfig& c = data.manifest.config;
    c.seed = manifest.at("seed").get<uint64_t>();
    c.num_train = manifest.at("num-train").get<int64_t>();
    c.num_test = manifest.at("num-test").get<int64_t>();
    c.num_categories = manifest.at("num-categories").get<int64_t>();
    c.image_size = manifest.at("image-size").get<int64_t>();
    c.noise = manifest.at("noise").get<double>();
    c.scale_jitter = manifest.at("scale-jitter").get<double>();
    c.tint_strength = manifest.at("tint-strength").get<double>();

    const auto read_split = [&](const json& arr, std::vector<Sample>& out,
                                std::vector<SampleMeta>& meta) {
        for (const auto& entry : arr) {
            SampleMeta m;
            m.path = entry.at("path").get<std::string>();
            m.label = entry.at("label").get<int64_t>();
            m.box = box_from_json(entry.at("box"));
            m.glyph_box = box_from_json(entry.at("glyph-box"));
            m.common_box = box_from_json(entry.at("common-box"));

            Sample s;
            s.label = m.label;
            s.gt_box = m.box;
            s.glyph_box = m.glyph_box;
            s.common_box = m.common_box;
            s.image = image_to_tensor(read_png((fs::path(dir) / m.path).string()));
            if (s.image.dim(1) != c.image_size || s.image.dim(2) != c.image_size) {
                throw std::runtime_error("image size mismatch in " + m.path);
            }
            out.push_back(std::move(s));
            meta.push_back(std::move(m));
        }
    };
    read_split(manifest.at("train"), data.train, data.manifest.train);
    read_split(manifest.at("test"), data.test, data.manifest.test);
    return data;
}

}  // namespace acol

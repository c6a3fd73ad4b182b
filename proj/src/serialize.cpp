#include "acol/serialize.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace acol {

namespace {

constexpr char kMagic[4] = {'A', 'C', 'O', 'L'};

void write_u32(std::ostream& os, uint32_t v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

void write_u64(std::ostream& os, uint64_t v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

uint32_t read_u32(std::istream& is, const std::string& path) {
    uint32_t v = 0;
    if (!is.read(reinterpret_cast<char*>(&v), sizeof(v))) {
        throw std::runtime_error("tensor file truncated: " + path);
    }
    return v;
}

uint64_t read_u64(std::istream& is, const std::string& path) {
    uint64_t v = 0;
    if (!is.read(reinterpret_cast<char*>(&v), sizeof(v))) {
        throw std::runtime_error("tensor file truncated: " + path);
    }
    return v;
}

}  // namespace

void save_tensor_file(const std::string& path, const std::vector<NamedTensor>& tensors) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    os.write(kMagic, 4);
    write_u32(os, kTensorFileVersion);
    write_u32(os, static_cast<uint32_t>(tensors.size()));
    for (const auto& nt : tensors) {
        write_u32(os, static_cast<uint32_t>(nt.name.size()));
        os.write(nt.name.data(), static_cast<std::streamsize>(nt.name.size()));
        write_u32(os, 0);  // dtype: float32
        write_u32(os, static_cast<uint32_t>(nt.tensor.rank()));
        for (int64_t d : nt.tensor.shape()) write_u64(os, static_cast<uint64_t>(d));
        os.write(reinterpret_cast<const char*>(nt.tensor.data()),
                 static_cast<std::streamsize>(nt.tensor.numel() * sizeof(float)));
    }
    if (!os) throw std::runtime_error("write failed: " + path);
}

std::vector<NamedTensor> load_tensor_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open tensor file: " + path);
    char magic[4] = {};
    if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
        throw std::runtime_error("bad magic in tensor file: " + path);
    }
    const uint32_t version = read_u32(is, path);
    if (version != kTensorFileVersion) {
        throw std::runtime_error("unsupported tensor file version " + std::to_string(version) +
                                 " in " + path);
    }
    const uint32_t count = read_u32(is, path);
    std::vector<NamedTensor> tensors;
    tensors.reserve(count);
    for (uint32_t t = 0; t < count; ++t) {
        const uint32_t name_len = read_u32(is, path);
        std::string name(name_len, '\0');
        if (!is.read(name.data(), name_len)) {
            throw std::runtime_error("tensor file truncated: " + path);
        }
        const uint32_t dtype = read_u32(is, path);
        if (dtype != 0) {
            throw std::runtime_error("unsupported dtype tag " + std::to_string(dtype) + " in " +
                                     path);
        }
        const uint32_t rank = read_u32(is, path);
        std::vector<int64_t> shape(rank);
        int64_t numel = 1;
        for (uint32_t r = 0; r < rank; ++r) {
            shape[r] = static_cast<int64_t>(read_u64(is, path));
            if (shape[r] < 1) throw std::runtime_error("invalid dimension in " + path);
            numel *= shape[r];
        }
        std::vector<float> data(static_cast<size_t>(numel));
        if (!is.read(reinterpret_cast<char*>(data.data()),
                     static_cast<std::streamsize>(numel * sizeof(float)))) {
            throw std::runtime_error("tensor file truncated: " + path);
        }
        tensors.push_back({std::move(name), TensorF(std::move(shape), std::move(data))});
    }
    return tensors;
}

}  // namespace acol

#pragma once

#include <string>
#include <vector>

#include "acol/tensor.hpp"

namespace acol {

struct NamedTensor {
    std::string name;
    TensorF tensor;
};

// Portable tensor container. Layout, all little-endian:
//   magic "ACOL" | format version u32 | tensor count u32
//   per tensor: name length u32 | UTF-8 name | dtype tag u32 (0 = float32)
//               | rank u32 | dims u64 each | raw data
constexpr uint32_t kTensorFileVersion = 1;

void save_tensor_file(const std::string& path, const std::vector<NamedTensor>& tensors);

/// Throws on missing file, bad magic, unknown version or dtype, or truncation;
/// every diagnostic names the path.
std::vector<NamedTensor> load_tensor_file(const std::string& path);

}  // namespace acol

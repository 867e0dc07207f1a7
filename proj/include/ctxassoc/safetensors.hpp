#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace ctxassoc {

struct Tensor {
  std::vector<std::int64_t> shape;
  std::vector<float> data;  // row-major, converted to f32

  [[nodiscard]] std::int64_t numel() const;
};

/// Reads a `.safetensors` file (F32, F16 and BF16 tensors; everything else
/// is rejected).
std::map<std::string, Tensor> load_safetensors(const std::filesystem::path& file);

/// Writes F32 tensors; used by tests and fixture tooling.
void save_safetensors(const std::map<std::string, Tensor>& tensors, const std::filesystem::path& file);

}  // namespace ctxassoc

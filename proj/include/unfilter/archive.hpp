#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>
#include <torch/torch.h>

namespace unfilter {

// Single-file tensor container used for checkpoints and backbone weights.
//
// Layout (all integers little-endian):
//   bytes 0..7   magic "UNFTENS1"
//   u32          format version (kVersion)
//   u64          header length L
//   L bytes      UTF-8 JSON header:
//                  {"meta": {...},
//                   "tensors": [{"name", "dtype", "shape", "offset", "nbytes"}]}
//   payload      raw contiguous tensor bytes; offsets are relative to the
//                payload start, in header order
//
// dtype is one of "float32", "float64", "int64". Output bytes depend only on
// the names, tensor values and meta, so identical states hash identically.
class TensorArchive {
 public:
  static constexpr std::uint32_t kVersion = 1;

  nlohmann::json meta = nlohmann::json::object();

  void add(const std::string& name, const torch::Tensor& t);
  bool contains(const std::string& name) const;
  // Throws CheckpointError when absent.
  const torch::Tensor& get(const std::string& name) const;
  const std::vector<std::pair<std::string, torch::Tensor>>& tensors() const { return tensors_; }

  std::vector<std::uint8_t> serialize() const;
  static TensorArchive deserialize(std::span<const std::uint8_t> bytes);

  void save(const std::filesystem::path& path) const;
  static TensorArchive load(const std::filesystem::path& path);

 private:
  std::vector<std::pair<std::string, torch::Tensor>> tensors_;
};

std::string sha256_hex(std::span<const std::uint8_t> bytes);
std::string sha256_file(const std::filesystem::path& path);

// Writes every named parameter and buffer of `module` under `prefix`.
void add_module_state(TensorArchive& ar, const std::string& prefix, const torch::nn::Module& module);
// Copies tensors back in place; throws CheckpointError on missing keys or
// shape mismatches.
void load_module_state(const TensorArchive& ar, const std::string& prefix, torch::nn::Module& module);

}  // namespace unfilter

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "taso/tensor.hpp"

namespace taso {

struct NamedTensor {
    std::string name;
    Tensor value;

    friend bool operator==(const NamedTensor&, const NamedTensor&) = default;
};

// Tensor bundle layout:
//   line 1: compact JSON manifest {"format":"taso-tensors","version":1,
//           "dtype":"float64-le","tensors":[{"name":..,"shape":[..]},..]} + '\n'
//   then:   every tensor's elements in manifest order, little-endian IEEE-754 doubles.
void write_tensor_bundle(const std::filesystem::path& path, const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> read_tensor_bundle(const std::filesystem::path& path);

}  // namespace taso

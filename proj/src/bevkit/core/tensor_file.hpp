#pragma once

#include "bevkit/core/tensor.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace bevkit {

struct TensorFileError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Generic dense f32 tensor as stored on disk.
struct TensorData {
    std::vector<uint64_t> dims;
    std::vector<float> data;
};

// Binary layout (normative, little-endian):
//   bytes 0..7   magic "BDKT0001"
//   byte  8      dtype code, 0 = f32
//   byte  9      rank
//   bytes 10..15 zero padding
//   rank x u64   dims
//   payload      row-major f32
void write_tensor(const std::string& path, std::span<const uint64_t> dims,
                  std::span<const float> payload);
TensorData read_tensor(const std::string& path);

void write_feature_map(const std::string& path, const BevFeatureMap& map);
// Grid spec is not stored in the file; the caller supplies it.
BevFeatureMap read_feature_map(const std::string& path, const BevGridSpec& spec);

void write_mask(const std::string& path, const WeightMask& mask);
WeightMask read_mask(const std::string& path, const BevGridSpec& spec);

void write_point_cloud(const std::string& path, const PointCloud& cloud);
PointCloud read_point_cloud(const std::string& path);

} // namespace bevkit

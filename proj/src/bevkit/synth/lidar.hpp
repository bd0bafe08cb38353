#pragma once

#include "bevkit/core/tensor.hpp"
#include "bevkit/synth/scene.hpp"

#include <cstdint>

namespace bevkit::synth {

struct LidarConfig {
    // Points per box ~= density_scale * surface_area / range^2, clamped.
    double density_scale = 3000.0;
    int min_points_per_box = 8;
    int max_points_per_box = 2048;
    int ground_points = 16000;
    double ground_z_sd = 0.02;
    // One extra channel (intensity) beyond xyz.
    int extra_channels = 1;
};

// Deterministic per seed. Every returned point lies inside the perception
// range of `extent`.
PointCloud simulate_lidar(const SceneTruth& scene, const LidarConfig& cfg, uint64_t seed);

} // namespace bevkit::synth

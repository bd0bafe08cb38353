#pragma once

#include "bevkit/core/tensor.hpp"
#include "bevkit/synth/scene.hpp"

#include <cstdint>
#include <vector>

namespace bevkit::synth {

// Oracle renderer standing in for a trained LiDAR backbone: smooth
// truncated-Gaussian activations over box footprints with attribute
// channels, plus a low-magnitude background where returns exist.
struct TeacherConfig {
    // Per-channel magnitude multipliers are drawn once per config from
    // this range (log-uniform), giving channels deliberately uneven scales.
    double scale_min = 1.0;
    double scale_max = 4.0;
    double background_gain = 0.45;
    // Attribute channels carry value * this amplitude under the bump.
    double attribute_amplitude = 2.0;
    // Bump support extends this many cells beyond the box footprint.
    double halo_cells = 1.0;
};

std::vector<double> teacher_channel_scales(const TeacherConfig& cfg, int channels,
                                           uint64_t config_seed);

// Deterministic. `support_out`, when non-null, is set to 1 exactly on the
// cells that received any box or point contribution.
BevFeatureMap render_teacher_bev(const SceneTruth& scene, const PointCloud& cloud,
                                 const BevGridSpec& spec, int channels,
                                 const TeacherConfig& cfg,
                                 const std::vector<double>& channel_scales,
                                 MaskT<uint8_t>* support_out = nullptr);

} // namespace bevkit::synth

#pragma once

#include "bevkit/core/grid.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace bevkit::synth {

// Oriented 3D box. Length l runs along the heading (yaw) direction,
// w perpendicular to it, h vertical. Yaw is kept in (-pi, pi].
struct Box3D {
    double x = 0, y = 0, z = 0;
    double w = 0, h = 0, l = 0;
    double yaw = 0;
    int class_id = 0;
};

struct SceneTruth {
    std::vector<Box3D> boxes;
    BevGridSpec ground_extent;
    uint64_t seed = 0;
};

struct SceneConfig {
    int min_boxes = 2;
    int max_boxes = 6;
    int class_count = 3;
    // Box centers are kept this far inside the extent so footprints and
    // detection targets stay on the grid.
    double edge_margin = 6.0;
    // Rejection threshold for overlapping placements, as a fraction of the
    // summed footprint radii.
    double min_separation = 0.7;
};

SceneTruth generate_scene(const SceneConfig& cfg, const BevGridSpec& extent, uint64_t seed);

std::string scene_to_json(const SceneTruth& scene);
SceneTruth scene_from_json(const std::string& text);

} // namespace bevkit::synth

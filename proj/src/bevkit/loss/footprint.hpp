#pragma once

#include "bevkit/core/grid.hpp"
#include "bevkit/synth/scene.hpp"

#include <optional>

namespace bevkit::loss {

// Axis-aligned BEV rectangle bounding a rotated box's projected corners,
// in metric coordinates: x_min <= x_max, y_min <= y_max.
struct Footprint2D {
    double x_min = 0, y_min = 0, x_max = 0, y_max = 0;

    double width() const { return x_max - x_min; }
    double height() const { return y_max - y_min; }
};

// Rotates the four footprint corners, takes per-axis min/max and clamps to
// the grid extent. Returns nullopt when the box lies fully outside.
std::optional<Footprint2D> axis_aligned_footprint(const synth::Box3D& box,
                                                  const BevGridSpec& spec);

} // namespace bevkit::loss

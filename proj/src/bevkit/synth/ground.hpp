#pragma once

#include "bevkit/core/rng.hpp"

#include <cmath>
#include <cstdint>

namespace bevkit::synth {

// Smooth per-scene ground appearance field in [0, 1]. The teacher samples
// it where LiDAR returns exist; the camera sees it everywhere, so ground
// context is shared across modalities the way real imagery shares it.
struct GroundField {
    double fx = 1, fy = 1, fd = 2;
    double px = 0, py = 0, pd = 0;

    double at(double u, double v) const {
        return 0.5 + 0.2 * std::sin(2.0 * M_PI * (fx * u + px)) +
               0.2 * std::cos(2.0 * M_PI * (fy * v + py)) +
               0.1 * std::sin(2.0 * M_PI * (fd * (u + v) + pd));
    }
};

inline GroundField make_ground_field(uint64_t scene_seed) {
    Rng rng(hash_combine(scene_seed, 0x96F1E1Dull));
    GroundField field;
    field.fx = rng.uniform(1.0, 3.0);
    field.fy = rng.uniform(1.0, 3.0);
    field.fd = rng.uniform(1.0, 2.0);
    field.px = rng.uniform(0.0, 1.0);
    field.py = rng.uniform(0.0, 1.0);
    field.pd = rng.uniform(0.0, 1.0);
    return field;
}

} // namespace bevkit::synth

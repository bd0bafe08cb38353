#pragma once

#include "bevkit/core/tensor.hpp"
#include "bevkit/synth/scene.hpp"

namespace bevkit::synth {

// Shared box splat used by both the teacher renderer and the camera
// observation: channel 0 carries the magnitude bump, interior channels
// carry cycled attribute encodings, the last channel is left for
// background terms. The bump is an anisotropic Gaussian in the box frame,
// truncated to the footprint plus `halo_cells`, with an exact unit peak at
// the cell containing the box center.
struct BumpParams {
    double attribute_amplitude = 2.0;
    double halo_cells = 1.0;
    // Overall amplitude; ghost artifacts splat at reduced gain.
    double gain = 1.0;
};

void add_box_bump(FeatureMapT<float>& stack, const Box3D& box, const BumpParams& params,
                  MaskT<uint8_t>* support);

} // namespace bevkit::synth

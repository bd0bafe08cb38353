#pragma once

#include "bevkit/core/tensor.hpp"
#include "bevkit/synth/scene.hpp"

#include <cstdint>
#include <vector>

namespace bevkit::synth {

// Stand-in for the multi-view camera input: the box attribute stack is
// corrupted (per-box dropout, range-scaled center jitter), mixed through a
// fixed channel matrix, and overlaid with per-cell noise. The result is
// what the student has to map back to the teacher's feature space.
struct CameraConfig {
    int obs_channels = 8;
    double noise_sd = 0.1;
    // Center jitter standard deviation at 50 m range, scaling linearly.
    double jitter_sd_at_50m = 0.5;
    double dropout = 0.2;
    // Depth-error ghosts: with this probability a box also appears at a
    // radially displaced position where the LiDAR side has nothing.
    double ghost_rate = 0.65;
    double ghost_range_shift = 0.25;
    double ghost_gain = 1.0;
    double ambient_gain = 0.3;
    double mix_diag_boost = 2.5;
    double attribute_amplitude = 2.0;
    double halo_cells = 1.0;
};

// Fixed obs_channels x stack_channels mixing matrix, drawn once per config.
std::vector<double> camera_mixing_matrix(const CameraConfig& cfg, int stack_channels,
                                         uint64_t config_seed);

using CameraObservation = BevFeatureMap;

// Deterministic per seed. With noise, jitter and dropout all zero this is
// exactly the noiseless rendering returned by render_camera_clean.
CameraObservation render_camera_observation(const SceneTruth& scene, const BevGridSpec& spec,
                                            int stack_channels, const CameraConfig& cfg,
                                            const std::vector<double>& mixing, uint64_t seed);

CameraObservation render_camera_clean(const SceneTruth& scene, const BevGridSpec& spec,
                                      int stack_channels, const CameraConfig& cfg,
                                      const std::vector<double>& mixing);

} // namespace bevkit::synth

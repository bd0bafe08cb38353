#include "bevkit/synth/camera.hpp"

#include "bevkit/core/rng.hpp"
#include "bevkit/synth/bump.hpp"
#include "bevkit/synth/ground.hpp"

#include <cmath>
#include <stdexcept>

namespace bevkit::synth {

namespace {

CameraObservation render_impl(const SceneTruth& scene, const BevGridSpec& spec,
                              int stack_channels, const CameraConfig& cfg,
                              const std::vector<double>& mixing, uint64_t seed, bool corrupt) {
    spec.validate();
    if (cfg.obs_channels < 1)
        throw std::invalid_argument("CameraConfig: obs_channels must be >= 1");
    if (static_cast<int>(mixing.size()) != cfg.obs_channels * stack_channels)
        throw std::invalid_argument("render_camera_observation: mixing matrix shape mismatch");

    Rng rng(hash_combine(seed, 0xCA3E9Aull));
    const int X = spec.cells_x;
    const int Y = spec.cells_y;

    FeatureMapT<float> stack(spec, stack_channels);
    const BumpParams bump{cfg.attribute_amplitude, cfg.halo_cells, 1.0};
    const BumpParams ghost_bump{cfg.attribute_amplitude, cfg.halo_cells, cfg.ghost_gain};
    for (const Box3D& box : scene.boxes) {
        Box3D seen = box;
        if (corrupt && cfg.dropout > 0.0) {
            if (rng.uniform() < cfg.dropout) continue;
        }
        if (corrupt && cfg.jitter_sd_at_50m > 0.0) {
            const double range = std::hypot(box.x, box.y);
            const double sd = cfg.jitter_sd_at_50m * range / 50.0;
            seen.x += rng.normal(0.0, sd);
            seen.y += rng.normal(0.0, sd);
        }
        add_box_bump(stack, seen, bump, nullptr);
        if (corrupt && cfg.ghost_rate > 0.0 && rng.uniform() < cfg.ghost_rate) {
            // Same azimuth, wrong range: the depth ambiguity artifact.
            const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
            const double factor =
                1.0 + sign * cfg.ghost_range_shift * (0.5 + 0.5 * rng.uniform());
            Box3D ghost = seen;
            ghost.x = seen.x * factor;
            ghost.y = seen.y * factor;
            add_box_bump(stack, ghost, ghost_bump, nullptr);
        }
    }

    // The camera sees the ground appearance everywhere; only the teacher's
    // occupancy gating is hidden from it.
    const GroundField field = make_ground_field(scene.seed);
    const int bg = stack_channels - 1;
    for (int i = 0; i < X; ++i)
        for (int j = 0; j < Y; ++j)
            stack.at(bg, i, j) += static_cast<float>(
                cfg.ambient_gain * field.at((i + 0.5) / X, (j + 0.5) / Y));

    CameraObservation obs(spec, cfg.obs_channels);
    for (int c = 0; c < cfg.obs_channels; ++c) {
        for (int i = 0; i < X; ++i) {
            for (int j = 0; j < Y; ++j) {
                double v = 0.0;
                for (int d = 0; d < stack_channels; ++d)
                    v += mixing[static_cast<size_t>(c) * stack_channels + d] * stack.at(d, i, j);
                obs.at(c, i, j) = static_cast<float>(v);
            }
        }
    }

    if (corrupt && cfg.noise_sd > 0.0) {
        for (float& v : obs.data) v += static_cast<float>(rng.normal(0.0, cfg.noise_sd));
    }
    return obs;
}

} // namespace

std::vector<double> camera_mixing_matrix(const CameraConfig& cfg, int stack_channels,
                                         uint64_t config_seed) {
    Rng rng(hash_combine(config_seed, 0x313C5ull));
    std::vector<double> m(static_cast<size_t>(cfg.obs_channels) * stack_channels);
    for (int c = 0; c < cfg.obs_channels; ++c)
        for (int d = 0; d < stack_channels; ++d) {
            double v = rng.uniform(-0.8, 0.8);
            if (c == d) v += cfg.mix_diag_boost;
            m[static_cast<size_t>(c) * stack_channels + d] = v;
        }
    return m;
}

CameraObservation render_camera_observation(const SceneTruth& scene, const BevGridSpec& spec,
                                            int stack_channels, const CameraConfig& cfg,
                                            const std::vector<double>& mixing, uint64_t seed) {
    return render_impl(scene, spec, stack_channels, cfg, mixing, seed, true);
}

CameraObservation render_camera_clean(const SceneTruth& scene, const BevGridSpec& spec,
                                      int stack_channels, const CameraConfig& cfg,
                                      const std::vector<double>& mixing) {
    return render_impl(scene, spec, stack_channels, cfg, mixing, 0, false);
}

} // namespace bevkit::synth

#include "bevkit/synth/teacher.hpp"

#include "bevkit/core/rng.hpp"
#include "bevkit/synth/bump.hpp"
#include "bevkit/synth/ground.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bevkit::synth {

namespace {

// Deterministic per-channel gain so background texture differs by channel.
double channel_phase(int d) {
    return 0.6 + 0.8 * ((static_cast<uint64_t>(d) * 2654435761ull) % 97) / 96.0;
}

} // namespace

std::vector<double> teacher_channel_scales(const TeacherConfig& cfg, int channels,
                                           uint64_t config_seed) {
    Rng rng(hash_combine(config_seed, 0x7EAC4ull));
    std::vector<double> scales(channels);
    const double log_lo = std::log(cfg.scale_min);
    const double log_hi = std::log(cfg.scale_max);
    for (double& s : scales) s = std::exp(rng.uniform(log_lo, log_hi));
    return scales;
}

BevFeatureMap render_teacher_bev(const SceneTruth& scene, const PointCloud& cloud,
                                 const BevGridSpec& spec, int channels,
                                 const TeacherConfig& cfg,
                                 const std::vector<double>& channel_scales,
                                 MaskT<uint8_t>* support_out) {
    spec.validate();
    if (channels < 2) throw std::invalid_argument("render_teacher_bev: channels must be >= 2");
    if (static_cast<int>(channel_scales.size()) != channels)
        throw std::invalid_argument("render_teacher_bev: channel scale count mismatch");

    const int X = spec.cells_x;
    const int Y = spec.cells_y;
    BevFeatureMap map(spec, channels);
    MaskT<uint8_t> support(spec, 0);

    // Per-cell point counts drive the background term.
    MaskT<float> counts(spec, 0.0f);
    const size_t n = cloud.point_count();
    for (size_t p = 0; p < n; ++p) {
        if (auto idx = spec.grid_index(cloud.x(p), cloud.y(p))) {
            counts.at(idx->first, idx->second) += 1.0f;
            support.at(idx->first, idx->second) = 1;
        }
    }

    // Ground appearance where returns exist: the shared per-scene field,
    // so the camera-side model can actually account for it.
    const GroundField field = make_ground_field(scene.seed);
    for (int i = 0; i < X; ++i) {
        for (int j = 0; j < Y; ++j) {
            const float c = counts.at(i, j);
            if (c <= 0.0f) continue;
            const double texture = field.at((i + 0.5) / X, (j + 0.5) / Y);
            for (int d = 0; d < channels; ++d) {
                const double gain = (d == channels - 1) ? 1.0 : channel_phase(d);
                map.at(d, i, j) += static_cast<float>(cfg.background_gain * texture * gain);
            }
        }
    }

    const BumpParams bump{cfg.attribute_amplitude, cfg.halo_cells};
    for (const Box3D& box : scene.boxes) add_box_bump(map, box, bump, &support);

    for (int d = 0; d < channels; ++d) {
        const double scale = channel_scales[d];
        for (int i = 0; i < X; ++i)
            for (int j = 0; j < Y; ++j)
                map.at(d, i, j) = static_cast<float>(map.at(d, i, j) * scale);
    }

    if (support_out) *support_out = std::move(support);
    return map;
}

} // namespace bevkit::synth

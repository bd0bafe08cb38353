#include "bevkit/synth/lidar.hpp"

#include "bevkit/core/rng.hpp"

#include <algorithm>
#include <cmath>

namespace bevkit::synth {

namespace {

void push_point(PointCloud& cloud, const BevGridSpec& extent, double x, double y, double z,
                double intensity) {
    if (!(x >= extent.x_min && x < extent.x_max && y >= extent.y_min && y < extent.y_max)) return;
    cloud.data.push_back(static_cast<float>(x));
    cloud.data.push_back(static_cast<float>(y));
    cloud.data.push_back(static_cast<float>(z));
    cloud.data.push_back(static_cast<float>(intensity));
}

} // namespace

PointCloud simulate_lidar(const SceneTruth& scene, const LidarConfig& cfg, uint64_t seed) {
    Rng rng(hash_combine(seed, 0x11DA2ull));
    PointCloud cloud;
    cloud.extra_channels = cfg.extra_channels;
    const BevGridSpec& extent = scene.ground_extent;

    for (const Box3D& box : scene.boxes) {
        const double area = 2.0 * (box.w * box.l + box.w * box.h + box.l * box.h);
        const double range_sq = std::max(1.0, box.x * box.x + box.y * box.y);
        const int count = std::clamp(
            static_cast<int>(std::llround(cfg.density_scale * area / range_sq)),
            cfg.min_points_per_box, cfg.max_points_per_box);

        // Faces: top plus four sides, weighted by area; the underside is
        // never visible to a roof-mounted sensor.
        const double face_area[5] = {box.w * box.l, box.l * box.h, box.l * box.h,
                                     box.w * box.h, box.w * box.h};
        double total = 0;
        for (double a : face_area) total += a;
        const double cos_yaw = std::cos(box.yaw);
        const double sin_yaw = std::sin(box.yaw);

        for (int p = 0; p < count; ++p) {
            double pick = rng.uniform(0.0, total);
            int face = 0;
            while (face < 4 && pick > face_area[face]) {
                pick -= face_area[face];
                ++face;
            }
            // Local frame: u along l (heading), v along w, s vertical.
            double u = 0, v = 0, s = 0;
            switch (face) {
                case 0: u = rng.uniform(-0.5, 0.5) * box.l; v = rng.uniform(-0.5, 0.5) * box.w; s = box.h; break;
                case 1: u = rng.uniform(-0.5, 0.5) * box.l; v = 0.5 * box.w; s = rng.uniform(0.0, box.h); break;
                case 2: u = rng.uniform(-0.5, 0.5) * box.l; v = -0.5 * box.w; s = rng.uniform(0.0, box.h); break;
                case 3: u = 0.5 * box.l; v = rng.uniform(-0.5, 0.5) * box.w; s = rng.uniform(0.0, box.h); break;
                default: u = -0.5 * box.l; v = rng.uniform(-0.5, 0.5) * box.w; s = rng.uniform(0.0, box.h); break;
            }
            const double gx = box.x + cos_yaw * u - sin_yaw * v;
            const double gy = box.y + sin_yaw * u + cos_yaw * v;
            const double gz = box.z - box.h * 0.5 + s;
            const double intensity = 0.3 + 0.2 * box.class_id + 0.1 * rng.uniform();
            push_point(cloud, extent, gx, gy, gz, intensity);
        }
    }

    for (int p = 0; p < cfg.ground_points; ++p) {
        const double gx = rng.uniform(extent.x_min, extent.x_max);
        const double gy = rng.uniform(extent.y_min, extent.y_max);
        const double gz = rng.normal(0.0, cfg.ground_z_sd);
        push_point(cloud, extent, gx, gy, gz, 0.05 + 0.05 * rng.uniform());
    }
    return cloud;
}

} // namespace bevkit::synth

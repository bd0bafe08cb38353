#include "bevkit/synth/scene.hpp"

#include "bevkit/core/rng.hpp"

#include <json.hpp>

#include <cmath>
#include <stdexcept>

namespace bevkit::synth {

namespace {

struct ClassTemplate {
    double w_lo, w_hi, l_lo, l_hi, h_lo, h_hi;
};

// Car-, truck- and pedestrian-like size families.
constexpr ClassTemplate kClassTemplates[3] = {
    {1.7, 2.2, 4.0, 5.2, 1.4, 1.8},
    {2.3, 2.9, 6.0, 9.0, 2.5, 3.5},
    {0.6, 1.0, 0.6, 1.0, 1.5, 1.9},
};

double wrap_angle(double a) {
    while (a > M_PI) a -= 2.0 * M_PI;
    while (a <= -M_PI) a += 2.0 * M_PI;
    return a;
}

} // namespace

SceneTruth generate_scene(const SceneConfig& cfg, const BevGridSpec& extent, uint64_t seed) {
    extent.validate();
    if (cfg.min_boxes < 0 || cfg.max_boxes < cfg.min_boxes)
        throw std::invalid_argument("SceneConfig: invalid box count range");
    if (cfg.class_count < 1 || cfg.class_count > 3)
        throw std::invalid_argument("SceneConfig: class_count must be in [1,3]");
    const double usable_x = (extent.x_max - extent.x_min) - 2.0 * cfg.edge_margin;
    const double usable_y = (extent.y_max - extent.y_min) - 2.0 * cfg.edge_margin;
    if (usable_x <= 0 || usable_y <= 0)
        throw std::invalid_argument("SceneConfig: edge_margin leaves no usable extent");

    Rng rng(hash_combine(seed, 0x5CE17Eull));
    SceneTruth scene;
    scene.ground_extent = extent;
    scene.seed = seed;

    const int n = static_cast<int>(rng.uniform_int(cfg.min_boxes, cfg.max_boxes));
    scene.boxes.reserve(n);
    for (int b = 0; b < n; ++b) {
        const int cls = static_cast<int>(rng.uniform_int(0, cfg.class_count - 1));
        const ClassTemplate& t = kClassTemplates[cls];
        Box3D box;
        box.class_id = cls;
        box.w = rng.uniform(t.w_lo, t.w_hi);
        box.l = rng.uniform(t.l_lo, t.l_hi);
        box.h = rng.uniform(t.h_lo, t.h_hi);
        box.yaw = wrap_angle(rng.uniform(-M_PI, M_PI));
        if (box.yaw <= -M_PI) box.yaw = M_PI;
        box.z = box.h * 0.5;

        // Rejection-sample for separation; after enough attempts the last
        // candidate wins so the configured count always holds.
        const double radius = 0.5 * std::hypot(box.w, box.l);
        bool placed = false;
        for (int attempt = 0; attempt < 64 && !placed; ++attempt) {
            const double cx = rng.uniform(extent.x_min + cfg.edge_margin, extent.x_max - cfg.edge_margin);
            const double cy = rng.uniform(extent.y_min + cfg.edge_margin, extent.y_max - cfg.edge_margin);
            box.x = cx;
            box.y = cy;
            bool clear = true;
            for (const Box3D& other : scene.boxes) {
                const double gap = std::hypot(cx - other.x, cy - other.y);
                const double other_radius = 0.5 * std::hypot(other.w, other.l);
                if (gap < cfg.min_separation * (radius + other_radius) + 1.0) {
                    clear = false;
                    break;
                }
            }
            placed = clear;
        }
        scene.boxes.push_back(box);
    }
    return scene;
}

std::string scene_to_json(const SceneTruth& scene) {
    nlohmann::json j;
    j["seed"] = scene.seed;
    j["extent"] = {{"x_min", scene.ground_extent.x_min}, {"x_max", scene.ground_extent.x_max},
                   {"y_min", scene.ground_extent.y_min}, {"y_max", scene.ground_extent.y_max},
                   {"cells_x", scene.ground_extent.cells_x},
                   {"cells_y", scene.ground_extent.cells_y}};
    nlohmann::json boxes = nlohmann::json::array();
    for (const Box3D& b : scene.boxes)
        boxes.push_back({b.x, b.y, b.z, b.w, b.h, b.l, b.yaw, static_cast<double>(b.class_id)});
    j["boxes"] = boxes;
    return j.dump();
}

SceneTruth scene_from_json(const std::string& text) {
    const nlohmann::json j = nlohmann::json::parse(text);
    SceneTruth scene;
    scene.seed = j.at("seed").get<uint64_t>();
    const auto& e = j.at("extent");
    scene.ground_extent.x_min = e.at("x_min").get<double>();
    scene.ground_extent.x_max = e.at("x_max").get<double>();
    scene.ground_extent.y_min = e.at("y_min").get<double>();
    scene.ground_extent.y_max = e.at("y_max").get<double>();
    scene.ground_extent.cells_x = e.at("cells_x").get<int>();
    scene.ground_extent.cells_y = e.at("cells_y").get<int>();
    scene.ground_extent.validate();
    for (const auto& row : j.at("boxes")) {
        if (!row.is_array() || row.size() != 8)
            throw std::runtime_error("scene JSON: box rows must have 8 numbers");
        Box3D b;
        b.x = row[0].get<double>();
        b.y = row[1].get<double>();
        b.z = row[2].get<double>();
        b.w = row[3].get<double>();
        b.h = row[4].get<double>();
        b.l = row[5].get<double>();
        b.yaw = row[6].get<double>();
        b.class_id = static_cast<int>(row[7].get<double>());
        scene.boxes.push_back(b);
    }
    return scene;
}

} // namespace bevkit::synth

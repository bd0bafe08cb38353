#include "bevkit/student/detection.hpp"

#include <algorithm>
#include <cmath>

namespace bevkit::student {

std::vector<synth::Box3D> decode_boxes(const FeatureMapT<float>& pred, int top_k,
                                       double default_h) {
    const BevGridSpec& spec = pred.spec;
    const int X = spec.cells_x;
    const int Y = spec.cells_y;
    const size_t cells = pred.cell_count();

    struct Hit {
        float logit;
        int i, j;
    };
    std::vector<Hit> hits;
    for (int i = 0; i < X; ++i) {
        for (int j = 0; j < Y; ++j) {
            const float z = pred.at(0, i, j);
            if (z <= 0.0f) continue; // sigmoid(z) <= 0.5
            bool local_max = true;
            for (int di = -1; di <= 1 && local_max; ++di) {
                const int ii = i + di;
                if (ii < 0 || ii >= X) continue;
                for (int dj = -1; dj <= 1; ++dj) {
                    const int jj = j + dj;
                    if (jj < 0 || jj >= Y || (di == 0 && dj == 0)) continue;
                    if (pred.at(0, ii, jj) > z) {
                        local_max = false;
                        break;
                    }
                }
            }
            if (local_max) hits.push_back({z, i, j});
        }
    }
    std::sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) {
        if (a.logit != b.logit) return a.logit > b.logit;
        if (a.i != b.i) return a.i < b.i;
        return a.j < b.j;
    });
    if (static_cast<int>(hits.size()) > top_k) hits.resize(top_k);

    std::vector<synth::Box3D> boxes;
    boxes.reserve(hits.size());
    for (const Hit& hit : hits) {
        const size_t cell = static_cast<size_t>(hit.i) * Y + hit.j;
        synth::Box3D box;
        box.x = spec.cell_center_x(hit.i) + pred.data[1 * cells + cell] * spec.cell_size_x();
        box.y = spec.cell_center_y(hit.j) + pred.data[2 * cells + cell] * spec.cell_size_y();
        box.w = std::clamp(std::exp(static_cast<double>(pred.data[3 * cells + cell])), 0.3, 30.0);
        box.l = std::clamp(std::exp(static_cast<double>(pred.data[4 * cells + cell])), 0.3, 30.0);
        box.yaw = std::atan2(static_cast<double>(pred.data[5 * cells + cell]),
                             static_cast<double>(pred.data[6 * cells + cell]));
        box.h = default_h;
        box.z = 0.5 * default_h;
        box.class_id = 0;
        boxes.push_back(box);
    }
    return boxes;
}

} // namespace bevkit::student

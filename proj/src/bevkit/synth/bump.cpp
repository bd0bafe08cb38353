#include "bevkit/synth/bump.hpp"

#include <algorithm>
#include <cmath>

namespace bevkit::synth {

namespace {

enum class Attribute { ClassId, LogArea, LogAspect, SinYaw, CosYaw, TopHeight };
constexpr Attribute kAttributeCycle[6] = {Attribute::ClassId, Attribute::LogArea,
                                          Attribute::LogAspect, Attribute::SinYaw,
                                          Attribute::CosYaw, Attribute::TopHeight};

double attribute_value(Attribute a, const Box3D& b) {
    switch (a) {
        case Attribute::ClassId: return (b.class_id + 1.0) / 4.0;
        case Attribute::LogArea: return std::log(b.w * b.l);
        case Attribute::LogAspect: return std::log(b.l / b.w);
        case Attribute::SinYaw: return std::sin(b.yaw);
        case Attribute::CosYaw: return std::cos(b.yaw);
        case Attribute::TopHeight: return b.z + 0.5 * b.h;
    }
    return 0.0;
}

} // namespace

void add_box_bump(FeatureMapT<float>& stack, const Box3D& box, const BumpParams& params,
                  MaskT<uint8_t>* support) {
    const BevGridSpec& spec = stack.spec;
    const int X = spec.cells_x;
    const int Y = spec.cells_y;
    const int bg = stack.channels - 1;

    const double cell = std::max(spec.cell_size_x(), spec.cell_size_y());
    const double half_u = 0.5 * box.l + params.halo_cells * cell;
    const double half_v = 0.5 * box.w + params.halo_cells * cell;
    const double sigma_u = std::max(0.25 * box.l, 0.75 * cell);
    const double sigma_v = std::max(0.25 * box.w, 0.75 * cell);
    const double reach = std::hypot(half_u, half_v);
    const double cos_yaw = std::cos(box.yaw);
    const double sin_yaw = std::sin(box.yaw);
    const auto center_idx = spec.grid_index(box.x, box.y);

    const int i_lo = std::max(0, static_cast<int>(std::floor((box.x - reach - spec.x_min) / spec.cell_size_x())));
    const int i_hi = std::min(X - 1, static_cast<int>(std::ceil((box.x + reach - spec.x_min) / spec.cell_size_x())));
    const int j_lo = std::max(0, static_cast<int>(std::floor((box.y - reach - spec.y_min) / spec.cell_size_y())));
    const int j_hi = std::min(Y - 1, static_cast<int>(std::ceil((box.y + reach - spec.y_min) / spec.cell_size_y())));

    for (int i = i_lo; i <= i_hi; ++i) {
        for (int j = j_lo; j <= j_hi; ++j) {
            const double dx = spec.cell_center_x(i) - box.x;
            const double dy = spec.cell_center_y(j) - box.y;
            const double u = cos_yaw * dx + sin_yaw * dy;
            const double v = -sin_yaw * dx + cos_yaw * dy;
            if (std::abs(u) > half_u || std::abs(v) > half_v) continue;
            double bump =
                std::exp(-0.5 * (u * u / (sigma_u * sigma_u) + v * v / (sigma_v * sigma_v)));
            if (center_idx && center_idx->first == i && center_idx->second == j) bump = 1.0;
            bump *= params.gain;
            if (support) support->at(i, j) = 1;

            stack.at(0, i, j) += static_cast<float>(bump);
            for (int d = 1; d < bg; ++d) {
                const Attribute a = kAttributeCycle[(d - 1) % 6];
                stack.at(d, i, j) += static_cast<float>(
                    bump * params.attribute_amplitude * attribute_value(a, box));
            }
        }
    }
}

} // namespace bevkit::synth

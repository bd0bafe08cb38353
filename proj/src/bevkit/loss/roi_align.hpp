#pragma once

#include "bevkit/core/tensor.hpp"
#include "bevkit/loss/footprint.hpp"

#include <stdexcept>
#include <vector>

namespace bevkit::loss {

// o x o x D patch bilinearly resampled from a feature map over a
// footprint. Layout: data[(d * o + u) * o + v].
template <class T>
struct RoiPatchT {
    int size = 0;
    int channels = 0;
    std::vector<T> data;

    T& at(int d, int u, int v) { return data[(static_cast<size_t>(d) * size + u) * size + v]; }
    T at(int d, int u, int v) const {
        return data[(static_cast<size_t>(d) * size + u) * size + v];
    }
};

using RoiPatch = RoiPatchT<float>;

namespace detail {

// Bilinear weights over the four surrounding cell centers; samples outside
// the grid read zero.
template <class T, class Fn>
void for_each_bilinear_tap(const BevGridSpec& spec, double sx, double sy, Fn&& fn) {
    const double gx = (sx - spec.x_min) / spec.cell_size_x() - 0.5;
    const double gy = (sy - spec.y_min) / spec.cell_size_y() - 0.5;
    const int i0 = static_cast<int>(std::floor(gx));
    const int j0 = static_cast<int>(std::floor(gy));
    const double ax = gx - i0;
    const double ay = gy - j0;
    const double wx[2] = {1.0 - ax, ax};
    const double wy[2] = {1.0 - ay, ay};
    for (int di = 0; di < 2; ++di) {
        const int i = i0 + di;
        if (i < 0 || i >= spec.cells_x) continue;
        for (int dj = 0; dj < 2; ++dj) {
            const int j = j0 + dj;
            if (j < 0 || j >= spec.cells_y) continue;
            const double w = wx[di] * wy[dj];
            if (w != 0.0) fn(i, j, static_cast<T>(w));
        }
    }
}

} // namespace detail

// Sampling points sit at the centers of an o x o subdivision of the
// footprint; one bilinear tap per point.
template <class T>
RoiPatchT<T> roi_align(const FeatureMapT<T>& map, const Footprint2D& fp, int o) {
    if (o < 1) throw std::invalid_argument("roi_align: output size must be >= 1");
    if (!(fp.x_max > fp.x_min) || !(fp.y_max > fp.y_min))
        throw std::invalid_argument("roi_align: empty footprint");
    RoiPatchT<T> patch;
    patch.size = o;
    patch.channels = map.channels;
    patch.data.assign(static_cast<size_t>(o) * o * map.channels, T(0));

    const double step_x = fp.width() / o;
    const double step_y = fp.height() / o;
    const size_t cells = map.cell_count();
    for (int u = 0; u < o; ++u) {
        const double sx = fp.x_min + (u + 0.5) * step_x;
        for (int v = 0; v < o; ++v) {
            const double sy = fp.y_min + (v + 0.5) * step_y;
            detail::for_each_bilinear_tap<T>(map.spec, sx, sy, [&](int i, int j, T w) {
                const size_t cell = static_cast<size_t>(i) * map.spec.cells_y + j;
                for (int d = 0; d < map.channels; ++d)
                    patch.at(d, u, v) += w * map.data[static_cast<size_t>(d) * cells + cell];
            });
        }
    }
    return patch;
}

// Adjoint of roi_align: scatters the patch gradient back into the map.
template <class T>
void roi_align_backward(const RoiPatchT<T>& grad_patch, const Footprint2D& fp,
                        FeatureMapT<T>& grad_map) {
    const int o = grad_patch.size;
    const double step_x = fp.width() / o;
    const double step_y = fp.height() / o;
    const size_t cells = grad_map.cell_count();
    for (int u = 0; u < o; ++u) {
        const double sx = fp.x_min + (u + 0.5) * step_x;
        for (int v = 0; v < o; ++v) {
            const double sy = fp.y_min + (v + 0.5) * step_y;
            detail::for_each_bilinear_tap<T>(grad_map.spec, sx, sy, [&](int i, int j, T w) {
                const size_t cell = static_cast<size_t>(i) * grad_map.spec.cells_y + j;
                for (int d = 0; d < grad_map.channels; ++d)
                    grad_map.data[static_cast<size_t>(d) * cells + cell] +=
                        w * grad_patch.at(d, u, v);
            });
        }
    }
}

} // namespace bevkit::loss

#pragma once

#include "bevkit/core/grid.hpp"

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace bevkit {

// Dense D x X x Y feature tensor on a metric grid, row-major with channels
// outermost: data[(d * X + i) * Y + j]. Float for the pipeline, double for
// the finite-difference shadow path.
template <class T>
struct FeatureMapT {
    BevGridSpec spec;
    int channels = 0;
    std::vector<T> data;

    FeatureMapT() = default;
    FeatureMapT(const BevGridSpec& s, int d, T fill = T(0))
        : spec(s), channels(d), data(static_cast<size_t>(d) * s.cells_x * s.cells_y, fill) {
        spec.validate();
        if (d < 1) throw std::invalid_argument("FeatureMapT: channels must be >= 1");
    }

    size_t cell_count() const { return static_cast<size_t>(spec.cells_x) * spec.cells_y; }
    size_t size() const { return data.size(); }

    T& at(int d, int i, int j) {
        return data[(static_cast<size_t>(d) * spec.cells_x + i) * spec.cells_y + j];
    }
    T at(int d, int i, int j) const {
        return data[(static_cast<size_t>(d) * spec.cells_x + i) * spec.cells_y + j];
    }
};

// X x Y per-cell weights, same layout without the channel axis.
template <class T>
struct MaskT {
    BevGridSpec spec;
    std::vector<T> data;

    MaskT() = default;
    MaskT(const BevGridSpec& s, T fill = T(0))
        : spec(s), data(static_cast<size_t>(s.cells_x) * s.cells_y, fill) {
        spec.validate();
    }

    size_t size() const { return data.size(); }

    T& at(int i, int j) { return data[static_cast<size_t>(i) * spec.cells_y + j]; }
    T at(int i, int j) const { return data[static_cast<size_t>(i) * spec.cells_y + j]; }
};

using BevFeatureMap = FeatureMapT<float>;
using WeightMask = MaskT<float>;

template <class To, class From>
FeatureMapT<To> convert_map(const FeatureMapT<From>& in) {
    FeatureMapT<To> out(in.spec, in.channels);
    for (size_t k = 0; k < in.data.size(); ++k) out.data[k] = static_cast<To>(in.data[k]);
    return out;
}

template <class To, class From>
MaskT<To> convert_mask(const MaskT<From>& in) {
    MaskT<To> out(in.spec);
    for (size_t k = 0; k < in.data.size(); ++k) out.data[k] = static_cast<To>(in.data[k]);
    return out;
}

template <class T>
void require_same_shape(const FeatureMapT<T>& a, const FeatureMapT<T>& b, const char* what) {
    if (!(a.spec == b.spec) || a.channels != b.channels)
        throw std::invalid_argument(std::string(what) + ": feature map shape mismatch");
}

template <class T, class U>
void require_same_grid(const FeatureMapT<T>& a, const MaskT<U>& m, const char* what) {
    if (!(a.spec == m.spec))
        throw std::invalid_argument(std::string(what) + ": grid spec mismatch");
}

// N x (3 + extra_channels) point set, row-major, metric meters.
struct PointCloud {
    int extra_channels = 0;
    std::vector<float> data;

    size_t point_count() const {
        const size_t stride = 3 + extra_channels;
        return stride == 0 ? 0 : data.size() / stride;
    }
    size_t stride() const { return 3 + extra_channels; }

    float x(size_t n) const { return data[n * stride() + 0]; }
    float y(size_t n) const { return data[n * stride() + 1]; }
    float z(size_t n) const { return data[n * stride() + 2]; }
};

} // namespace bevkit

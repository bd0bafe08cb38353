#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <utility>

namespace bevkit {

// Metric bird's-eye-view grid over the ground plane. Cells are half-open
// intervals [lo, hi) in both axes; index i runs along x, j along y.
struct BevGridSpec {
    double x_min = -51.2;
    double x_max = 51.2;
    double y_min = -51.2;
    double y_max = 51.2;
    int cells_x = 64;
    int cells_y = 64;

    void validate() const {
        if (!(x_max > x_min) || !(y_max > y_min))
            throw std::invalid_argument("BevGridSpec: empty metric extent");
        if (cells_x < 1 || cells_y < 1)
            throw std::invalid_argument("BevGridSpec: cell counts must be >= 1");
        if (!std::isfinite(x_min) || !std::isfinite(x_max) || !std::isfinite(y_min) ||
            !std::isfinite(y_max))
            throw std::invalid_argument("BevGridSpec: non-finite extent");
    }

    double cell_size_x() const { return (x_max - x_min) / cells_x; }
    double cell_size_y() const { return (y_max - y_min) / cells_y; }

    // Floor binning; points at the exact upper boundary fall outside.
    std::optional<std::pair<int, int>> grid_index(double x, double y) const {
        if (!(x >= x_min && x < x_max && y >= y_min && y < y_max)) return std::nullopt;
        int i = static_cast<int>(std::floor((x - x_min) / cell_size_x()));
        int j = static_cast<int>(std::floor((y - y_min) / cell_size_y()));
        // Guard against rounding at the extreme edges of the box.
        if (i < 0) i = 0;
        if (j < 0) j = 0;
        if (i >= cells_x) i = cells_x - 1;
        if (j >= cells_y) j = cells_y - 1;
        return std::make_pair(i, j);
    }

    double cell_center_x(int i) const { return x_min + (i + 0.5) * cell_size_x(); }
    double cell_center_y(int j) const { return y_min + (j + 0.5) * cell_size_y(); }

    bool operator==(const BevGridSpec& o) const = default;
};

} // namespace bevkit

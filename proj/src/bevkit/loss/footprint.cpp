#include "bevkit/loss/footprint.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bevkit::loss {

std::optional<Footprint2D> axis_aligned_footprint(const synth::Box3D& box,
                                                  const BevGridSpec& spec) {
    if (!(box.w > 0.0) || !(box.l > 0.0))
        throw std::invalid_argument("axis_aligned_footprint: box extents must be positive");
    const double cos_yaw = std::cos(box.yaw);
    const double sin_yaw = std::sin(box.yaw);
    const double hu = 0.5 * box.l;
    const double hv = 0.5 * box.w;

    double x_lo = std::numeric_limits<double>::infinity();
    double x_hi = -std::numeric_limits<double>::infinity();
    double y_lo = std::numeric_limits<double>::infinity();
    double y_hi = -std::numeric_limits<double>::infinity();
    for (int corner = 0; corner < 4; ++corner) {
        const double u = (corner & 1) ? hu : -hu;
        const double v = (corner & 2) ? hv : -hv;
        const double gx = box.x + cos_yaw * u - sin_yaw * v;
        const double gy = box.y + sin_yaw * u + cos_yaw * v;
        x_lo = std::min(x_lo, gx);
        x_hi = std::max(x_hi, gx);
        y_lo = std::min(y_lo, gy);
        y_hi = std::max(y_hi, gy);
    }

    Footprint2D fp;
    fp.x_min = std::max(x_lo, spec.x_min);
    fp.x_max = std::min(x_hi, spec.x_max);
    fp.y_min = std::max(y_lo, spec.y_min);
    fp.y_max = std::min(y_hi, spec.y_max);
    if (!(fp.x_max > fp.x_min) || !(fp.y_max > fp.y_min)) return std::nullopt;
    return fp;
}

} // namespace bevkit::loss

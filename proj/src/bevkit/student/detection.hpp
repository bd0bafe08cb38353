#pragma once

#include "bevkit/core/tensor.hpp"
#include "bevkit/loss/footprint.hpp"
#include "bevkit/loss/losses.hpp"
#include "bevkit/student/student.hpp"
#include "bevkit/synth/scene.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace bevkit::student {

inline constexpr int kRegressionDims = 6;

// Regression targets at a positive (center) cell: dx, dy in cell units,
// log w, log l, sin yaw, cos yaw.
struct PositiveCell {
    int i = 0, j = 0;
    double targets[kRegressionDims] = {0, 0, 0, 0, 0, 0};
};

template <class T>
struct DetectionTargets {
    MaskT<T> heatmap;
    std::vector<PositiveCell> positives;
};

namespace detail {

inline double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }

} // namespace detail

// Gaussian-splatted center heatmap plus per-center regression targets.
// The center cell is exactly one; overlapping splats combine by max. When
// two boxes share a center cell the first box keeps the regression slot.
template <class T>
DetectionTargets<T> encode_detection_targets(const synth::SceneTruth& scene,
                                             const BevGridSpec& spec) {
    DetectionTargets<T> targets;
    targets.heatmap = MaskT<T>(spec, T(0));
    const int X = spec.cells_x;
    const int Y = spec.cells_y;

    for (const synth::Box3D& box : scene.boxes) {
        const auto center = spec.grid_index(box.x, box.y);
        if (!center) continue;
        const auto fp = loss::axis_aligned_footprint(box, spec);
        if (!fp) continue;
        const int ci = center->first;
        const int cj = center->second;

        bool taken = false;
        for (const PositiveCell& p : targets.positives)
            if (p.i == ci && p.j == cj) taken = true;
        if (!taken) {
            PositiveCell pos;
            pos.i = ci;
            pos.j = cj;
            pos.targets[0] = (box.x - spec.cell_center_x(ci)) / spec.cell_size_x();
            pos.targets[1] = (box.y - spec.cell_center_y(cj)) / spec.cell_size_y();
            pos.targets[2] = std::log(box.w);
            pos.targets[3] = std::log(box.l);
            pos.targets[4] = std::sin(box.yaw);
            pos.targets[5] = std::cos(box.yaw);
            targets.positives.push_back(pos);
        }

        const double sigma_i = std::clamp(fp->width() / spec.cell_size_x() / 6.0, 0.75, 3.0);
        const double sigma_j = std::clamp(fp->height() / spec.cell_size_y() / 6.0, 0.75, 3.0);
        const int radius_i = static_cast<int>(std::ceil(3.0 * sigma_i));
        const int radius_j = static_cast<int>(std::ceil(3.0 * sigma_j));
        for (int di = -radius_i; di <= radius_i; ++di) {
            const int ii = ci + di;
            if (ii < 0 || ii >= X) continue;
            for (int dj = -radius_j; dj <= radius_j; ++dj) {
                const int jj = cj + dj;
                if (jj < 0 || jj >= Y) continue;
                const double g = std::exp(-0.5 * (di * di / (sigma_i * sigma_i) +
                                                  dj * dj / (sigma_j * sigma_j)));
                targets.heatmap.at(ii, jj) =
                    std::max(targets.heatmap.at(ii, jj), static_cast<T>(g));
            }
        }
        targets.heatmap.at(ci, cj) = T(1);
    }
    return targets;
}

template <class T>
struct DetectionLossResult {
    double loss = 0.0;
    double focal = 0.0;
    double regression = 0.0;
    FeatureMapT<T> grad_pred;
    int n_positive = 0;
};

// Focal-style binary objectness against the center heatmap plus SmoothL1
// regression at positive cells, both normalized by the positive count.
template <class T>
DetectionLossResult<T> detection_surrogate_loss(const FeatureMapT<T>& pred,
                                                const DetectionTargets<T>& targets,
                                                double reg_weight, double beta) {
    if (pred.channels != kHeadOutputs)
        throw std::invalid_argument("detection_surrogate_loss: prediction channel mismatch");
    if (!(pred.spec == targets.heatmap.spec))
        throw std::invalid_argument("detection_surrogate_loss: grid spec mismatch");

    DetectionLossResult<T> result;
    result.grad_pred = FeatureMapT<T>(pred.spec, kHeadOutputs);
    result.n_positive = static_cast<int>(targets.positives.size());
    const size_t cells = pred.cell_count();
    const double norm = 1.0 / std::max(1, result.n_positive);

    double focal = 0.0;
    for (size_t cell = 0; cell < cells; ++cell) {
        const double z = pred.data[cell];
        const double p = 1.0 / (1.0 + std::exp(-z));
        const double log_p = -detail::softplus(-z);
        const double log_1mp = -detail::softplus(z);
        const double y = targets.heatmap.data[cell];
        double grad_z;
        if (y >= 1.0) {
            focal += -(1.0 - p) * (1.0 - p) * log_p;
            grad_z = 2.0 * p * (1.0 - p) * (1.0 - p) * log_p - (1.0 - p) * (1.0 - p) * (1.0 - p);
        } else {
            const double k = std::pow(1.0 - y, 4.0);
            focal += -k * p * p * log_1mp;
            grad_z = -2.0 * k * p * p * (1.0 - p) * log_1mp + k * p * p * p;
        }
        result.grad_pred.data[cell] = static_cast<T>(grad_z * norm);
    }
    result.focal = focal * norm;

    double reg = 0.0;
    for (const PositiveCell& pos : targets.positives) {
        const size_t cell = static_cast<size_t>(pos.i) * pred.spec.cells_y + pos.j;
        for (int r = 0; r < kRegressionDims; ++r) {
            const double v = pred.data[static_cast<size_t>(r + 1) * cells + cell];
            const double d = v - pos.targets[r];
            reg += loss::smooth_l1(d, beta) / kRegressionDims;
            result.grad_pred.data[static_cast<size_t>(r + 1) * cells + cell] +=
                static_cast<T>(reg_weight * loss::smooth_l1_grad(d, beta) * norm /
                               kRegressionDims);
        }
    }
    result.regression = reg * norm;
    result.loss = result.focal + reg_weight * result.regression;
    return result;
}

// Decodes thresholded head predictions back into boxes (3x3 local-max
// suppression, objectness above 0.5, strongest first). Used to source
// correlation targets for scenes whose labels are withheld.
std::vector<synth::Box3D> decode_boxes(const FeatureMapT<float>& pred, int top_k,
                                       double default_h = 1.5);

} // namespace bevkit::student

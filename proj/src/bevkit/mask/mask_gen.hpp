#pragma once

#include "bevkit/core/tensor.hpp"

#include <array>
#include <optional>
#include <string>

namespace bevkit::mask {

// Normalized 3x3 smoothing kernel. Entries sum to one and are symmetric
// under quarter turns and reflections.
struct GaussianKernel {
    std::array<double, 9> weights{};
    double sigma = 1.0;

    double at(int di, int dj) const { return weights[static_cast<size_t>(di + 1) * 3 + (dj + 1)]; }
};

GaussianKernel make_gaussian_kernel(double sigma);

enum class Regularizer { None, Sigmoid, Log };

Regularizer regularizer_from_string(const std::string& name);
std::string regularizer_to_string(Regularizer reg);

struct MaskConfig {
    double sigma = 1.0;
    // Gate threshold: quantile of the nonzero prior response per frame, or
    // an absolute value when gate_abs is set.
    double gate_quantile = 0.6;
    std::optional<double> gate_abs;
    Regularizer regularizer = Regularizer::Log;
    // When true, the prior response reduces the whitened teacher map;
    // otherwise the raw map is used.
    bool whitened_response = true;
};

// Per-cell point counts; out-of-range points are dropped.
WeightMask count_points(const PointCloud& points, const BevGridSpec& spec);

// 3x3 convolution with zero padding at the borders.
WeightMask smooth_counts(const WeightMask& counts, const GaussianKernel& kernel);

// Per-cell channel reduction of the feature map: L2 norm across channels,
// min-max normalized to [0, 1] over the frame.
WeightMask feature_response(const BevFeatureMap& features);

// c = smoothed counts * response, elementwise.
WeightMask prior_response(const WeightMask& smoothed, const BevFeatureMap& features);

// Threshold from the nonzero entries of the response; +inf when none exist
// so the gate closes everywhere.
double gate_threshold_quantile(const WeightMask& response, double quantile);

// Binary gate: 1 where response >= threshold.
WeightMask gate_mask(const WeightMask& response, double threshold);

// R from the gated smoothed counts, per the configured regularizer.
WeightMask regularize_weights(const WeightMask& smoothed, const WeightMask& gate,
                              const MaskConfig& cfg);

// Full chain; `features` must already be whitened (or raw) per cfg.
WeightMask build_mask(const PointCloud& points, const BevFeatureMap& features,
                      const BevGridSpec& spec, const MaskConfig& cfg);

} // namespace bevkit::mask

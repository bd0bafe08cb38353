#include "bevkit/mask/mask_gen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace bevkit::mask {

GaussianKernel make_gaussian_kernel(double sigma) {
    if (!(sigma > 0.0)) throw std::invalid_argument("GaussianKernel: sigma must be positive");
    GaussianKernel k;
    k.sigma = sigma;
    double total = 0.0;
    for (int di = -1; di <= 1; ++di)
        for (int dj = -1; dj <= 1; ++dj) {
            const double w = std::exp(-0.5 * (di * di + dj * dj) / (sigma * sigma));
            k.weights[static_cast<size_t>(di + 1) * 3 + (dj + 1)] = w;
            total += w;
        }
    for (double& w : k.weights) w /= total;
    return k;
}

Regularizer regularizer_from_string(const std::string& name) {
    if (name == "none") return Regularizer::None;
    if (name == "sigmoid") return Regularizer::Sigmoid;
    if (name == "log") return Regularizer::Log;
    throw std::invalid_argument("unknown regularizer: " + name);
}

std::string regularizer_to_string(Regularizer reg) {
    switch (reg) {
        case Regularizer::None: return "none";
        case Regularizer::Sigmoid: return "sigmoid";
        case Regularizer::Log: return "log";
    }
    return "log";
}

WeightMask count_points(const PointCloud& points, const BevGridSpec& spec) {
    spec.validate();
    WeightMask counts(spec, 0.0f);
    const size_t n = points.point_count();
    for (size_t p = 0; p < n; ++p) {
        if (auto idx = spec.grid_index(points.x(p), points.y(p)))
            counts.at(idx->first, idx->second) += 1.0f;
    }
    return counts;
}

WeightMask smooth_counts(const WeightMask& counts, const GaussianKernel& kernel) {
    const int X = counts.spec.cells_x;
    const int Y = counts.spec.cells_y;
    WeightMask out(counts.spec, 0.0f);
    for (int i = 0; i < X; ++i) {
        for (int j = 0; j < Y; ++j) {
            double acc = 0.0;
            for (int di = -1; di <= 1; ++di) {
                const int ii = i + di;
                if (ii < 0 || ii >= X) continue;
                for (int dj = -1; dj <= 1; ++dj) {
                    const int jj = j + dj;
                    if (jj < 0 || jj >= Y) continue;
                    acc += kernel.at(di, dj) * counts.at(ii, jj);
                }
            }
            out.at(i, j) = static_cast<float>(acc);
        }
    }
    return out;
}

WeightMask feature_response(const BevFeatureMap& features) {
    const int X = features.spec.cells_x;
    const int Y = features.spec.cells_y;
    WeightMask response(features.spec, 0.0f);
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < X; ++i) {
        for (int j = 0; j < Y; ++j) {
            double sq = 0.0;
            for (int d = 0; d < features.channels; ++d) {
                const double v = features.at(d, i, j);
                sq += v * v;
            }
            const double norm = std::sqrt(sq);
            response.at(i, j) = static_cast<float>(norm);
            lo = std::min(lo, norm);
            hi = std::max(hi, norm);
        }
    }
    if (!(hi > lo)) {
        for (float& v : response.data) v = 0.0f;
        return response;
    }
    const double inv = 1.0 / (hi - lo);
    for (float& v : response.data) v = static_cast<float>((v - lo) * inv);
    return response;
}

WeightMask prior_response(const WeightMask& smoothed, const BevFeatureMap& features) {
    require_same_grid(features, smoothed, "prior_response");
    const WeightMask response = feature_response(features);
    WeightMask c(smoothed.spec, 0.0f);
    for (size_t k = 0; k < c.data.size(); ++k)
        c.data[k] = smoothed.data[k] * response.data[k];
    return c;
}

double gate_threshold_quantile(const WeightMask& response, double quantile) {
    if (!(quantile >= 0.0 && quantile <= 1.0))
        throw std::invalid_argument("gate quantile must be in [0, 1]");
    std::vector<float> nonzero;
    nonzero.reserve(response.data.size());
    for (float v : response.data)
        if (v > 0.0f) nonzero.push_back(v);
    if (nonzero.empty()) return std::numeric_limits<double>::infinity();
    std::sort(nonzero.begin(), nonzero.end());
    // Nearest-rank: the smallest value with at least quantile mass below it.
    size_t idx = static_cast<size_t>(std::floor(quantile * static_cast<double>(nonzero.size())));
    if (idx >= nonzero.size()) idx = nonzero.size() - 1;
    return nonzero[idx];
}

WeightMask gate_mask(const WeightMask& response, double threshold) {
    WeightMask gate(response.spec, 0.0f);
    for (size_t k = 0; k < gate.data.size(); ++k)
        gate.data[k] = (response.data[k] >= threshold) ? 1.0f : 0.0f;
    return gate;
}

WeightMask regularize_weights(const WeightMask& smoothed, const WeightMask& gate,
                              const MaskConfig& cfg) {
    if (!(smoothed.spec == gate.spec))
        throw std::invalid_argument("regularize_weights: grid spec mismatch");
    WeightMask out(smoothed.spec, 0.0f);
    for (size_t k = 0; k < out.data.size(); ++k) {
        const double g = static_cast<double>(smoothed.data[k]) * gate.data[k];
        double r = 0.0;
        switch (cfg.regularizer) {
            case Regularizer::Log: r = std::sqrt(std::log1p(g)); break;
            case Regularizer::Sigmoid: r = 2.0 * (1.0 / (1.0 + std::exp(-g)) - 0.5); break;
            case Regularizer::None: r = g; break;
        }
        out.data[k] = static_cast<float>(r);
    }
    return out;
}

WeightMask build_mask(const PointCloud& points, const BevFeatureMap& features,
                      const BevGridSpec& spec, const MaskConfig& cfg) {
    if (!(features.spec == spec))
        throw std::invalid_argument("build_mask: feature map grid mismatch");
    const WeightMask counts = count_points(points, spec);
    const WeightMask smoothed = smooth_counts(counts, make_gaussian_kernel(cfg.sigma));
    const WeightMask c = prior_response(smoothed, features);
    const double threshold =
        cfg.gate_abs ? *cfg.gate_abs : gate_threshold_quantile(c, cfg.gate_quantile);
    const WeightMask gate = gate_mask(c, threshold);
    return regularize_weights(smoothed, gate, cfg);
}

} // namespace bevkit::mask

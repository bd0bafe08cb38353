#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace bevkit::train {

struct AdamWConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;
};

// One mutable parameter tensor and its gradient for a single step.
struct ParamView {
    std::string name;
    std::span<float> values;
    std::span<const float> grads;
    // Per-group learning-rate multiplier (projection heads train slower).
    double lr_mult = 1.0;
};

// Decoupled-weight-decay Adam with bias correction. Moments are kept in
// double and are keyed by registration order, so the same view list must
// be passed every step.
class AdamW {
public:
    explicit AdamW(AdamWConfig cfg) : cfg_(cfg) {}

    // Throws on NaN gradients, naming the offending tensor.
    void step(std::span<const ParamView> params, double lr_scale = 1.0);

    int64_t step_count() const { return step_; }
    const AdamWConfig& config() const { return cfg_; }

private:
    AdamWConfig cfg_;
    int64_t step_ = 0;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
};

// Cosine decay from full rate to a small floor over total_steps.
double cosine_lr_scale(int64_t step, int64_t total_steps);

} // namespace bevkit::train

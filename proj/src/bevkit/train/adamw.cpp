#include "bevkit/train/adamw.hpp"

#include <cmath>
#include <stdexcept>

namespace bevkit::train {

void AdamW::step(std::span<const ParamView> params, double lr_scale) {
    if (m_.empty()) {
        m_.resize(params.size());
        v_.resize(params.size());
        for (size_t t = 0; t < params.size(); ++t) {
            m_[t].assign(params[t].values.size(), 0.0);
            v_[t].assign(params[t].values.size(), 0.0);
        }
    }
    if (m_.size() != params.size())
        throw std::invalid_argument("AdamW::step: parameter group count changed");

    ++step_;
    const double bias1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
    const double bias2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
    for (size_t t = 0; t < params.size(); ++t) {
        const ParamView& p = params[t];
        const double lr = cfg_.lr * lr_scale * p.lr_mult;
        if (p.values.size() != p.grads.size() || p.values.size() != m_[t].size())
            throw std::invalid_argument("AdamW::step: shape mismatch for " + p.name);
        for (size_t k = 0; k < p.values.size(); ++k) {
            const double g = p.grads[k];
            if (std::isnan(g))
                throw std::runtime_error("AdamW::step: NaN gradient in " + p.name);
            m_[t][k] = cfg_.beta1 * m_[t][k] + (1.0 - cfg_.beta1) * g;
            v_[t][k] = cfg_.beta2 * v_[t][k] + (1.0 - cfg_.beta2) * g * g;
            const double m_hat = m_[t][k] / bias1;
            const double v_hat = v_[t][k] / bias2;
            double value = p.values[k];
            value -= lr * (m_hat / (std::sqrt(v_hat) + cfg_.eps));
            value -= lr * cfg_.weight_decay * value;
            p.values[k] = static_cast<float>(value);
        }
    }
}

double cosine_lr_scale(int64_t step, int64_t total_steps) {
    if (total_steps <= 1) return 1.0;
    const double t = static_cast<double>(step) / static_cast<double>(total_steps - 1);
    return 0.05 + 0.95 * 0.5 * (1.0 + std::cos(M_PI * std::min(1.0, t)));
}

} // namespace bevkit::train

#include "bevkit/student/fit_head.hpp"

#include "bevkit/core/rng.hpp"
#include "bevkit/train/adamw.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace bevkit::student {

namespace {

double dataset_loss(const HeadParamsT<float>& head,
                    const std::vector<HeadFitSample>& samples,
                    const std::vector<DetectionTargets<float>>& targets,
                    const FitHeadOptions& options) {
    double total = 0.0;
    for (size_t k = 0; k < samples.size(); ++k) {
        const FeatureMapT<float> pred = head_forward(head, *samples[k].features);
        total += detection_surrogate_loss(pred, targets[k], options.reg_weight,
                                          options.smooth_l1_beta)
                     .loss;
    }
    return total / static_cast<double>(samples.size());
}

} // namespace

FitHeadResult fit_teacher_head(const std::vector<HeadFitSample>& samples,
                               const FitHeadOptions& options) {
    if (samples.empty()) throw std::invalid_argument("fit_teacher_head: empty dataset");
    const int channels = samples.front().features->channels;

    std::vector<DetectionTargets<float>> targets;
    targets.reserve(samples.size());
    for (const HeadFitSample& s : samples)
        targets.push_back(encode_detection_targets<float>(*s.scene, s.features->spec));

    FitHeadResult result;
    result.head = make_head_params<float>(channels, hash_combine(options.seed, 0x7EA0ull));
    {
        HeadParamsT<float> zero = result.head;
        std::fill(zero.w.begin(), zero.w.end(), 0.0f);
        std::fill(zero.b.begin(), zero.b.end(), 0.0f);
        result.zero_head_loss = dataset_loss(zero, samples, targets, options);
    }
    result.initial_loss = dataset_loss(result.head, samples, targets, options);

    train::AdamW optimizer(
        {options.lr, options.beta1, options.beta2, options.adam_eps, 0.0});
    Rng shuffle_rng(hash_combine(options.seed, 0x0F17ull));
    std::vector<size_t> order(samples.size());
    std::iota(order.begin(), order.end(), 0);

    const int64_t total_steps =
        static_cast<int64_t>(options.epochs) * static_cast<int64_t>(samples.size());
    int64_t step = 0;
    HeadGrads<float> grads;
    for (int epoch = 0; epoch < options.epochs; ++epoch) {
        for (size_t k = order.size(); k > 1; --k)
            std::swap(order[k - 1], order[shuffle_rng.uniform_int(0, static_cast<int64_t>(k) - 1)]);
        for (size_t pick : order) {
            const FeatureMapT<float>& features = *samples[pick].features;
            const FeatureMapT<float> pred = head_forward(result.head, features);
            const auto loss = detection_surrogate_loss(pred, targets[pick],
                                                       options.reg_weight,
                                                       options.smooth_l1_beta);
            grads.resize_like(result.head);
            head_backward<float>(result.head, features, loss.grad_pred, &grads, nullptr);
            const double lr_scale =
                options.cosine_decay ? train::cosine_lr_scale(step, total_steps) : 1.0;
            const train::ParamView views[2] = {
                {"teacher_head_w", result.head.w, grads.w},
                {"teacher_head_b", result.head.b, grads.b},
            };
            optimizer.step(views, lr_scale);
            ++step;
        }
    }
    result.final_loss = dataset_loss(result.head, samples, targets, options);
    return result;
}

} // namespace bevkit::student

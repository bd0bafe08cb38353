#pragma once

#include "bevkit/student/detection.hpp"
#include "bevkit/student/student.hpp"

#include <vector>

namespace bevkit::student {

struct HeadFitSample {
    const BevFeatureMap* features = nullptr; // whitened teacher map
    const synth::SceneTruth* scene = nullptr;
};

struct FitHeadOptions {
    int epochs = 30;
    double lr = 5e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    double reg_weight = 1.0;
    double smooth_l1_beta = 1.0;
    bool cosine_decay = true;
    uint64_t seed = 0;
};

struct FitHeadResult {
    HeadParamsT<float> head;
    double zero_head_loss = 0.0;
    double initial_loss = 0.0;
    double final_loss = 0.0;
};

// Gradient descent of the detection head on fixed (teacher) features.
FitHeadResult fit_teacher_head(const std::vector<HeadFitSample>& samples,
                               const FitHeadOptions& options);

} // namespace bevkit::student

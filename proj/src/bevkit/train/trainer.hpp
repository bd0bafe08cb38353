#pragma once

#include "bevkit/config.hpp"
#include "bevkit/student/fit_head.hpp"
#include "bevkit/student/student.hpp"
#include "bevkit/train/dataset.hpp"
#include "bevkit/whiten/whitening.hpp"

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace bevkit::train {

struct EpochMetrics {
    std::string stage;
    int epoch = 0;
    double l_rec = 0.0;
    double l_corr = 0.0;
    double l_total = 0.0;
    double train_surrogate = 0.0;
    double heldout_masked_rec = 0.0;
    double heldout_surrogate = 0.0;
    double lr_scale = 1.0;
    double wall_ms = 0.0;
};

struct TrainerOptions {
    // Where to dump offending tensors when a loss goes NaN; empty disables.
    std::string nan_dump_dir;
};

// Optional per-sample hook applied to the observation during finetuning
// only; pretraining never invokes it so both modalities stay aligned.
using AugmentHook = std::function<void(BevFeatureMap&, Rng&)>;

whiten::ChannelStats compute_dataset_stats(const Config& cfg, const Dataset& data);

// Masks for every scene, in roster order (maskgen over a dataset).
std::vector<WeightMask> compute_dataset_masks(const Config& cfg, const Dataset& data,
                                              const whiten::ChannelStats& stats, int threads);

struct PretrainResult {
    student::StudentModel model;
    student::FitHeadResult teacher_head;
    std::vector<EpochMetrics> epochs;
    double init_heldout_masked_rec = 0.0;
    double final_heldout_masked_rec = 0.0;
    uint64_t boxes_skipped = 0;
    AccessSnapshot reads;
};

// Stage 1: optimizes the view transform and the trainable projection head
// against whitened teacher targets. Also fits (and returns) the teacher
// head, which sources correlation boxes for unlabeled scenes and is the
// donor for head inheritance.
PretrainResult pretrain(const Config& cfg, const Dataset& data,
                        const whiten::ChannelStats& stats, const TrainerOptions& options = {});

struct FinetuneResult {
    student::StudentModel model;
    std::vector<EpochMetrics> epochs;
    bool inherited = false;
    std::string init_stage;
    double init_heldout_surrogate = 0.0;
    double epoch1_heldout_surrogate = 0.0;
    double final_heldout_surrogate = 0.0;
    AccessSnapshot reads;
};

// Stage 2: detection surrogate only, images and labels as input. Reads of
// point clouds, teacher maps or masks are a hard error.
FinetuneResult finetune(const Config& cfg, const Dataset& data, student::StudentModel model,
                        const student::HeadParamsT<float>* teacher_head, bool inherit,
                        const TrainerOptions& options = {}, AugmentHook augment = nullptr);

double eval_surrogate(const Config& cfg, const Dataset& data,
                      const student::StudentModel& model, std::span<const size_t> indices);

// Masked reconstruction error of the student features against whitened
// teacher targets; always weighted by the generated masks so values stay
// comparable across ablation cells.
double eval_masked_rec(const Config& cfg, const Dataset& data,
                       const whiten::ChannelStats& stats, const student::StudentModel& model,
                       std::span<const size_t> indices);

} // namespace bevkit::train

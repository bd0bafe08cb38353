#include "bevkit/train/trainer.hpp"

#include "bevkit/core/rng.hpp"
#include "bevkit/core/tensor_file.hpp"
#include "bevkit/errors.hpp"
#include "bevkit/loss/losses.hpp"
#include "bevkit/mask/mask_gen.hpp"
#include "bevkit/student/detection.hpp"
#include "bevkit/train/adamw.hpp"
#include "bevkit/train/parallel.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <unordered_map>

namespace bevkit::train {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
    return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

void shuffle_indices(std::vector<size_t>& order, Rng& rng) {
    for (size_t k = order.size(); k > 1; --k)
        std::swap(order[k - 1], order[rng.uniform_int(0, static_cast<int64_t>(k) - 1)]);
}

// Caches whitened teacher maps, masks and correlation boxes per scene so
// each artifact is read once per stage.
struct PretrainCache {
    std::vector<BevFeatureMap> obs;
    std::vector<BevFeatureMap> teacher_whitened;
    std::vector<WeightMask> weights;       // training weights (uniform if mask off)
    std::vector<WeightMask> metric_masks;  // generated masks, for the metric
    std::vector<std::vector<synth::Box3D>> boxes;
    std::unordered_map<size_t, size_t> slot_of;
};

WeightMask uniform_mask(const BevGridSpec& spec) { return WeightMask(spec, 1.0f); }

void dump_nan_tensors(const std::string& dir, const BevFeatureMap& obs,
                      const BevFeatureMap& student_map, const BevFeatureMap& teacher,
                      const WeightMask& weights) {
    if (dir.empty()) return;
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) return;
    write_feature_map(dir + "/obs.bdkt", obs);
    write_feature_map(dir + "/student.bdkt", student_map);
    write_feature_map(dir + "/teacher.bdkt", teacher);
    write_mask(dir + "/weights.bdkt", weights);
}

} // namespace

whiten::ChannelStats compute_dataset_stats(const Config& cfg, const Dataset& data) {
    // Statistics cover the pretraining pool (labeled share plus unlabeled
    // spill-over), one mergeable partial per scene in roster order.
    std::vector<size_t> pool = pretrain_indices(data, std::max(cfg.train.pretrain_data_frac, 1.0));
    if (pool.empty()) pool = train_indices(data);
    std::vector<whiten::ChannelStats> partials(
        pool.size(), whiten::ChannelStats(data.channels(), cfg.whitening.epsilon,
                                          cfg.whitening.nonzero_only));
    parallel_for(pool.size(), cfg.threads, [&](size_t k) {
        const BevFeatureMap map = data.teacher(pool[k]);
        whiten::accumulate_stats(partials[k], map);
    });
    whiten::ChannelStats stats(data.channels(), cfg.whitening.epsilon,
                               cfg.whitening.nonzero_only);
    for (const whiten::ChannelStats& p : partials) whiten::merge_stats(stats, p);
    return stats;
}

std::vector<WeightMask> compute_dataset_masks(const Config& cfg, const Dataset& data,
                                              const whiten::ChannelStats& stats, int threads) {
    std::vector<WeightMask> masks(data.records().size());
    parallel_for(masks.size(), threads, [&](size_t idx) {
        const PointCloud cloud = data.cloud(idx);
        BevFeatureMap teacher = data.teacher(idx);
        if (cfg.mask.whitened_response) teacher = whiten::whiten(teacher, stats);
        masks[idx] = mask::build_mask(cloud, teacher, data.grid(), cfg.mask);
    });
    return masks;
}

PretrainResult pretrain(const Config& cfg, const Dataset& data,
                        const whiten::ChannelStats& stats, const TrainerOptions& options) {
    const AccessSnapshot reads_before = data.counters().snapshot();
    const std::vector<size_t> pool = pretrain_indices(data, cfg.train.pretrain_data_frac);
    if (pool.empty()) throw UsageError("pretrain: empty pretraining dataset");
    const std::vector<size_t> heldout = heldout_indices(data);

    PretrainResult result;
    result.model = student::make_student(data.obs_channels(), data.channels(),
                                         cfg.loss.roi_size, cfg.loss.proj_hidden,
                                         cfg.loss.embed_dim, hash_combine(cfg.seed, 0x57D0ull));

    // Teacher head, fit on whitened teacher features of the labeled share.
    std::vector<size_t> labeled_pool;
    for (size_t idx : pool)
        if (!data.records()[idx].unlabeled) labeled_pool.push_back(idx);
    if (labeled_pool.empty())
        throw UsageError("pretrain: no labeled scenes available to fit the teacher head");
    if (static_cast<int>(labeled_pool.size()) > cfg.train.teacher_head_max_scenes)
        labeled_pool.resize(cfg.train.teacher_head_max_scenes);

    std::vector<BevFeatureMap> fit_maps(labeled_pool.size());
    std::vector<synth::SceneTruth> fit_scenes(labeled_pool.size());
    parallel_for(labeled_pool.size(), cfg.threads, [&](size_t k) {
        fit_maps[k] = whiten::whiten(data.teacher(labeled_pool[k]), stats);
        fit_scenes[k] = data.scene(labeled_pool[k]);
    });
    std::vector<student::HeadFitSample> fit_samples(labeled_pool.size());
    for (size_t k = 0; k < labeled_pool.size(); ++k)
        fit_samples[k] = {&fit_maps[k], &fit_scenes[k]};
    student::FitHeadOptions fit_options;
    fit_options.epochs = cfg.train.teacher_head_epochs;
    fit_options.lr = cfg.train.lr_teacher_head;
    fit_options.reg_weight = cfg.loss.reg_weight;
    fit_options.smooth_l1_beta = cfg.loss.smooth_l1_beta;
    fit_options.seed = hash_combine(cfg.seed, 0x7EAC8EADull);
    result.teacher_head = student::fit_teacher_head(fit_samples, fit_options);

    // Per-scene caches for the pool and the held-out split.
    PretrainCache cache;
    std::vector<size_t> all_indices = pool;
    all_indices.insert(all_indices.end(), heldout.begin(), heldout.end());
    {
        size_t slot = 0;
        for (size_t idx : all_indices)
            if (!cache.slot_of.count(idx)) cache.slot_of[idx] = slot++;
        cache.obs.resize(slot);
        cache.teacher_whitened.resize(slot);
        cache.weights.resize(slot);
        cache.metric_masks.resize(slot);
        cache.boxes.resize(slot);
    }
    std::vector<size_t> unique_indices;
    for (const auto& [idx, slot] : cache.slot_of) unique_indices.push_back(idx);
    std::sort(unique_indices.begin(), unique_indices.end());

    const bool masks_from_dataset = data.has_masks();
    parallel_for(unique_indices.size(), cfg.threads, [&](size_t k) {
        const size_t idx = unique_indices[k];
        const size_t slot = cache.slot_of.at(idx);
        cache.obs[slot] = data.obs(idx);
        cache.teacher_whitened[slot] = whiten::whiten(data.teacher(idx), stats);
        if (masks_from_dataset) {
            cache.metric_masks[slot] = data.mask(idx);
        } else {
            BevFeatureMap response = cfg.mask.whitened_response
                                         ? cache.teacher_whitened[slot]
                                         : data.teacher(idx);
            cache.metric_masks[slot] =
                mask::build_mask(data.cloud(idx), response, data.grid(), cfg.mask);
        }
        cache.weights[slot] =
            cfg.ablation.mask ? cache.metric_masks[slot] : uniform_mask(data.grid());
        if (data.records()[idx].unlabeled) {
            const FeatureMapT<float> pred =
                student::head_forward(result.teacher_head.head, cache.teacher_whitened[slot]);
            cache.boxes[slot] = student::decode_boxes(pred, cfg.train.unlabeled_top_k);
        } else {
            cache.boxes[slot] = data.scene(idx).boxes;
        }
    });

    loss::PretrainLossConfig loss_cfg;
    loss_cfg.lambda_rec = cfg.loss.lambda_rec;
    loss_cfg.lambda_corr = cfg.ablation.tgc ? cfg.loss.lambda_corr : 0.0;
    loss_cfg.variant = cfg.loss.rec_variant;
    loss_cfg.roi_size = cfg.loss.roi_size;
    loss_cfg.smooth_l1_beta = cfg.loss.smooth_l1_beta;
    loss_cfg.standardize_student = cfg.loss.standardize_student;

    auto heldout_metric = [&]() {
        if (heldout.empty()) return 0.0;
        double total = 0.0;
        for (size_t idx : heldout) {
            const size_t slot = cache.slot_of.at(idx);
            const auto trace = student::view_forward(result.model.view, cache.obs[slot]);
            total += loss::reconstruction_loss(trace.out, cache.teacher_whitened[slot],
                                               cache.metric_masks[slot], loss::RecVariant::L2)
                         .loss;
        }
        return total / static_cast<double>(heldout.size());
    };

    result.init_heldout_masked_rec = heldout_metric();

    AdamW optimizer({cfg.train.lr_pretrain, cfg.train.beta1, cfg.train.beta2,
                     cfg.train.adam_eps, cfg.train.weight_decay});
    Rng shuffle_rng(hash_combine(cfg.seed, 0x0D7Aull));
    std::vector<size_t> order = pool;
    const int64_t total_steps =
        static_cast<int64_t>(cfg.train.pretrain_epochs) * static_cast<int64_t>(pool.size());
    int64_t step = 0;

    student::ViewGrads<float> view_grads;
    for (int epoch = 0; epoch < cfg.train.pretrain_epochs; ++epoch) {
        const auto epoch_start = Clock::now();
        shuffle_indices(order, shuffle_rng);
        double sum_rec = 0.0, sum_corr = 0.0, sum_total = 0.0;
        double lr_scale = 1.0;
        for (size_t idx : order) {
            const size_t slot = cache.slot_of.at(idx);
            const auto trace = student::view_forward(result.model.view, cache.obs[slot]);
            const auto report = loss::pretrain_loss(
                trace.out, cache.teacher_whitened[slot], cache.boxes[slot],
                cache.weights[slot], result.model.proj_student, result.model.proj_teacher,
                loss_cfg);
            if (!std::isfinite(report.l_total)) {
                dump_nan_tensors(options.nan_dump_dir, cache.obs[slot], trace.out,
                                 cache.teacher_whitened[slot], cache.weights[slot]);
                throw CheckError("pretrain: non-finite loss at epoch " +
                                 std::to_string(epoch) + ", scene " +
                                 data.records()[idx].id);
            }
            sum_rec += report.l_rec;
            sum_corr += report.l_corr;
            sum_total += report.l_total;
            result.boxes_skipped += static_cast<uint64_t>(report.boxes_skipped);

            view_grads.resize_like(result.model.view);
            student::view_backward(result.model.view, cache.obs[slot], trace,
                                   report.grad_student, view_grads);
            lr_scale = cfg.train.cosine_decay ? cosine_lr_scale(step, total_steps) : 1.0;
            const double proj_mult = cfg.loss.proj_lr_mult;
            const ParamView views[7] = {
                {"view_affine_w", result.model.view.affine_w, view_grads.affine_w, 1.0},
                {"view_affine_b", result.model.view.affine_b, view_grads.affine_b, 1.0},
                {"view_mix_w", result.model.view.mix_w, view_grads.mix_w, 1.0},
                {"proj_student_w1", result.model.proj_student.w1, report.grad_proj1.w1, proj_mult},
                {"proj_student_b1", result.model.proj_student.b1, report.grad_proj1.b1, proj_mult},
                {"proj_student_w2", result.model.proj_student.w2, report.grad_proj1.w2, proj_mult},
                {"proj_student_b2", result.model.proj_student.b2, report.grad_proj1.b2, proj_mult},
            };
            optimizer.step(views, lr_scale);
            ++step;
        }

        EpochMetrics m;
        m.stage = "pretrain";
        m.epoch = epoch;
        m.l_rec = sum_rec / static_cast<double>(pool.size());
        m.l_corr = sum_corr / static_cast<double>(pool.size());
        m.l_total = sum_total / static_cast<double>(pool.size());
        m.heldout_masked_rec = heldout_metric();
        m.lr_scale = lr_scale;
        m.wall_ms = elapsed_ms(epoch_start);
        result.epochs.push_back(std::move(m));
    }

    result.final_heldout_masked_rec =
        result.epochs.empty() ? result.init_heldout_masked_rec
                              : result.epochs.back().heldout_masked_rec;
    result.reads = data.counters().snapshot() - reads_before;
    return result;
}

FinetuneResult finetune(const Config& cfg, const Dataset& data, student::StudentModel model,
                        const student::HeadParamsT<float>* teacher_head, bool inherit,
                        const TrainerOptions& options, AugmentHook augment) {
    const AccessSnapshot reads_before = data.counters().snapshot();
    const std::vector<size_t> train = train_indices(data);
    const std::vector<size_t> heldout = heldout_indices(data);
    if (train.empty()) throw UsageError("finetune: empty labeled dataset");

    FinetuneResult result;
    if (inherit) {
        if (!teacher_head) throw UsageError("finetune: head inheritance needs a teacher head");
        student::inherit_head(model, *teacher_head);
        result.inherited = true;
    }

    // Only observations and labels are touched from here on.
    struct Sample {
        BevFeatureMap obs;
        student::DetectionTargets<float> targets;
    };
    std::vector<Sample> train_samples(train.size());
    parallel_for(train.size(), cfg.threads, [&](size_t k) {
        train_samples[k].obs = data.obs(train[k]);
        train_samples[k].targets =
            student::encode_detection_targets<float>(data.scene(train[k]), data.grid());
    });
    std::vector<Sample> heldout_samples(heldout.size());
    parallel_for(heldout.size(), cfg.threads, [&](size_t k) {
        heldout_samples[k].obs = data.obs(heldout[k]);
        heldout_samples[k].targets =
            student::encode_detection_targets<float>(data.scene(heldout[k]), data.grid());
    });

    auto heldout_metric = [&](const student::StudentModel& m) {
        if (heldout_samples.empty()) return 0.0;
        double total = 0.0;
        for (const Sample& s : heldout_samples) {
            const auto trace = student::view_forward(m.view, s.obs);
            const auto pred = student::head_forward(m.head, trace.out);
            total += student::detection_surrogate_loss(pred, s.targets, cfg.loss.reg_weight,
                                                       cfg.loss.smooth_l1_beta)
                         .loss;
        }
        return total / static_cast<double>(heldout_samples.size());
    };

    result.init_heldout_surrogate = heldout_metric(model);

    AdamW optimizer({cfg.train.lr_finetune, cfg.train.beta1, cfg.train.beta2,
                     cfg.train.adam_eps, cfg.train.weight_decay});
    Rng shuffle_rng(hash_combine(cfg.seed, 0xF17EFull));
    Rng augment_rng(hash_combine(cfg.seed, 0xA3Dull));
    std::vector<size_t> order(train.size());
    std::iota(order.begin(), order.end(), 0);
    const int64_t total_steps =
        static_cast<int64_t>(cfg.train.finetune_epochs) * static_cast<int64_t>(train.size());
    int64_t step = 0;

    student::ViewGrads<float> view_grads;
    student::HeadGrads<float> head_grads;
    for (int epoch = 0; epoch < cfg.train.finetune_epochs; ++epoch) {
        const auto epoch_start = Clock::now();
        shuffle_indices(order, shuffle_rng);
        double sum_loss = 0.0;
        double lr_scale = 1.0;
        for (size_t pick : order) {
            const Sample& sample = train_samples[pick];
            const BevFeatureMap* obs = &sample.obs;
            BevFeatureMap augmented;
            if (augment) {
                augmented = sample.obs;
                augment(augmented, augment_rng);
                obs = &augmented;
            }
            const auto trace = student::view_forward(model.view, *obs);
            const auto pred = student::head_forward(model.head, trace.out);
            const auto loss = student::detection_surrogate_loss(
                pred, sample.targets, cfg.loss.reg_weight, cfg.loss.smooth_l1_beta);
            if (!std::isfinite(loss.loss)) {
                dump_nan_tensors(options.nan_dump_dir, *obs, trace.out, trace.out,
                                 sample.targets.heatmap);
                throw CheckError("finetune: non-finite loss at epoch " +
                                 std::to_string(epoch));
            }
            sum_loss += loss.loss;

            head_grads.resize_like(model.head);
            FeatureMapT<float> grad_features(data.grid(), data.channels());
            student::head_backward(model.head, trace.out, loss.grad_pred,
                                   cfg.train.freeze_head ? nullptr : &head_grads,
                                   &grad_features);
            view_grads.resize_like(model.view);
            student::view_backward(model.view, *obs, trace, grad_features, view_grads);

            lr_scale = cfg.train.cosine_decay ? cosine_lr_scale(step, total_steps) : 1.0;
            std::vector<ParamView> views = {
                {"view_affine_w", model.view.affine_w, view_grads.affine_w},
                {"view_affine_b", model.view.affine_b, view_grads.affine_b},
                {"view_mix_w", model.view.mix_w, view_grads.mix_w},
            };
            if (!cfg.train.freeze_head) {
                views.push_back({"head_w", model.head.w, head_grads.w});
                views.push_back({"head_b", model.head.b, head_grads.b});
            }
            optimizer.step(views, lr_scale);
            ++step;
        }

        EpochMetrics m;
        m.stage = "finetune";
        m.epoch = epoch;
        m.train_surrogate = sum_loss / static_cast<double>(train.size());
        m.heldout_surrogate = heldout_metric(model);
        m.lr_scale = lr_scale;
        m.wall_ms = elapsed_ms(epoch_start);
        result.epochs.push_back(std::move(m));
    }

    result.epoch1_heldout_surrogate =
        result.epochs.empty() ? result.init_heldout_surrogate
                              : result.epochs.front().heldout_surrogate;
    result.final_heldout_surrogate =
        result.epochs.empty() ? result.init_heldout_surrogate
                              : result.epochs.back().heldout_surrogate;

    result.reads = data.counters().snapshot() - reads_before;
    if (result.reads.cloud != 0 || result.reads.teacher != 0 || result.reads.mask != 0)
        throw std::logic_error("finetune touched LiDAR-side artifacts; this is a bug");
    result.model = std::move(model);
    return result;
}

double eval_surrogate(const Config& cfg, const Dataset& data,
                      const student::StudentModel& model, std::span<const size_t> indices) {
    if (indices.empty()) return 0.0;
    std::vector<double> losses(indices.size());
    parallel_for(indices.size(), cfg.threads, [&](size_t k) {
        const size_t idx = indices[k];
        const BevFeatureMap obs = data.obs(idx);
        const auto targets =
            student::encode_detection_targets<float>(data.scene(idx), data.grid());
        const auto trace = student::view_forward(model.view, obs);
        const auto pred = student::head_forward(model.head, trace.out);
        losses[k] = student::detection_surrogate_loss(pred, targets, cfg.loss.reg_weight,
                                                      cfg.loss.smooth_l1_beta)
                        .loss;
    });
    double total = 0.0;
    for (double l : losses) total += l;
    return total / static_cast<double>(indices.size());
}

double eval_masked_rec(const Config& cfg, const Dataset& data,
                       const whiten::ChannelStats& stats, const student::StudentModel& model,
                       std::span<const size_t> indices) {
    if (indices.empty()) return 0.0;
    std::vector<double> losses(indices.size());
    parallel_for(indices.size(), cfg.threads, [&](size_t k) {
        const size_t idx = indices[k];
        const BevFeatureMap obs = data.obs(idx);
        const BevFeatureMap teacher = whiten::whiten(data.teacher(idx), stats);
        WeightMask metric_mask;
        if (data.has_masks()) {
            metric_mask = data.mask(idx);
        } else {
            const BevFeatureMap response =
                cfg.mask.whitened_response ? teacher : data.teacher(idx);
            metric_mask = mask::build_mask(data.cloud(idx), response, data.grid(), cfg.mask);
        }
        const auto trace = student::view_forward(model.view, obs);
        losses[k] =
            loss::reconstruction_loss(trace.out, teacher, metric_mask, loss::RecVariant::L2)
                .loss;
    });
    double total = 0.0;
    for (double l : losses) total += l;
    return total / static_cast<double>(indices.size());
}

} // namespace bevkit::train

#pragma once

#include "bevkit/core/grid.hpp"
#include "bevkit/loss/losses.hpp"
#include "bevkit/mask/mask_gen.hpp"
#include "bevkit/synth/camera.hpp"
#include "bevkit/synth/lidar.hpp"
#include "bevkit/synth/scene.hpp"
#include "bevkit/synth/teacher.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace bevkit {

struct DataConfig {
    int train_scenes = 200;
    int heldout_scenes = 20;
    int unlabeled_scenes = 200;
};

struct WhiteningConfig {
    double epsilon = 1e-5;
    bool nonzero_only = false;
};

struct LossConfig {
    loss::RecVariant rec_variant = loss::RecVariant::L2;
    double lambda_rec = 1.0;
    double lambda_corr = 12.0;
    int roi_size = 7;
    int proj_hidden = 64;
    int embed_dim = 64;
    double smooth_l1_beta = 1.0;
    bool standardize_student = false;
    double reg_weight = 1.0;
    // Learning-rate multiplier for the trainable projection head; kept low
    // so the correlation objective is satisfied through the features.
    double proj_lr_mult = 0.05;
};

struct TrainConfig {
    int pretrain_epochs = 24;
    int finetune_epochs = 12;
    double lr_pretrain = 2e-3;
    double lr_finetune = 5e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    double weight_decay = 1e-4;
    bool cosine_decay = true;
    bool freeze_head = false;
    bool inherit_head = true;
    // Fraction of the labeled pool used for pretraining; above 1.0 the
    // remainder comes from the unlabeled pool.
    double pretrain_data_frac = 1.0;
    int teacher_head_epochs = 30;
    double lr_teacher_head = 5e-3;
    int teacher_head_max_scenes = 128;
    int unlabeled_top_k = 10;
};

struct AblationConfig {
    bool distill = true;
    bool mask = true;
    bool tgc = true;
    int n_seeds = 5;
};

// One declarative config document; every field validated at load, unknown
// keys rejected, CLI overrides win over the file.
struct Config {
    uint64_t seed = 1234;
    int threads = 1;
    BevGridSpec grid;
    int channels = 8;
    synth::SceneConfig scene;
    synth::LidarConfig lidar;
    synth::TeacherConfig teacher;
    synth::CameraConfig camera;
    DataConfig data;
    mask::MaskConfig mask;
    WhiteningConfig whitening;
    LossConfig loss;
    TrainConfig train;
    AblationConfig ablation;

    // Identity of the artifacts this config produces. config_hash covers
    // every semantic field; data_hash only the fields that shape the
    // synthetic dataset; mask_hash adds the mask and whitening sections.
    std::string config_hash() const;
    std::string data_hash() const;
    std::string mask_hash() const;

    std::string dump_json() const;
};

Config default_config();
Config load_config(const std::string& path, const std::vector<std::string>& overrides);
Config config_from_json_text(const std::string& text, const std::vector<std::string>& overrides);

uint64_t fnv1a64(const std::string& text);
std::string hash_hex(uint64_t value);

} // namespace bevkit

#include "bevkit/config.hpp"

#include "bevkit/errors.hpp"

#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace bevkit {

using nlohmann::json;

namespace {

json default_json() {
    json j;
    j["seed"] = 1234;
    j["threads"] = 1;
    j["grid"] = {{"x_min", -51.2}, {"x_max", 51.2}, {"y_min", -51.2}, {"y_max", 51.2},
                 {"cells_x", 64},  {"cells_y", 64}};
    j["channels"] = 8;
    j["scene"] = {{"min_boxes", 2},      {"max_boxes", 6},       {"class_count", 3},
                  {"edge_margin", 6.0},  {"min_separation", 0.7}};
    j["lidar"] = {{"density_scale", 3000.0},  {"min_points_per_box", 8},
                  {"max_points_per_box", 2048}, {"ground_points", 16000},
                  {"ground_z_sd", 0.02}};
    j["teacher"] = {{"scale_min", 1.0},     {"scale_max", 4.0},
                    {"background_gain", 0.45}, {"attribute_amplitude", 2.0},
                    {"halo_cells", 1.0}};
    j["camera"] = {{"obs_channels", 8},  {"noise_sd", 0.1},   {"jitter_sd_at_50m", 0.5},
                   {"dropout", 0.2},     {"ghost_rate", 0.65}, {"ghost_range_shift", 0.25},
                   {"ghost_gain", 1.0},  {"ambient_gain", 0.3}, {"mix_diag_boost", 2.5}};
    j["data"] = {{"train_scenes", 200}, {"heldout_scenes", 20}, {"unlabeled_scenes", 200}};
    j["mask"] = {{"sigma", 1.0},       {"gate_quantile", 0.6}, {"gate_abs", nullptr},
                 {"regularizer", "log"}, {"whitened_response", true}};
    j["whitening"] = {{"epsilon", 1e-5}, {"nonzero_only", false}};
    j["loss"] = {{"rec_variant", "l2"}, {"lambda_rec", 1.0},  {"lambda_corr", 12.0},
                 {"roi_size", 7},       {"proj_hidden", 64},  {"embed_dim", 64},
                 {"smooth_l1_beta", 1.0}, {"standardize_student", false},
                 {"reg_weight", 1.0},    {"proj_lr_mult", 0.05}};
    j["train"] = {{"pretrain_epochs", 24},     {"finetune_epochs", 12},
                  {"lr_pretrain", 2e-3},       {"lr_finetune", 5e-4},
                  {"beta1", 0.9},              {"beta2", 0.999},
                  {"adam_eps", 1e-8},          {"weight_decay", 1e-4},
                  {"cosine_decay", true},      {"freeze_head", false},
                  {"inherit_head", true},      {"pretrain_data_frac", 1.0},
                  {"teacher_head_epochs", 30}, {"lr_teacher_head", 5e-3},
                  {"teacher_head_max_scenes", 128}, {"unlabeled_top_k", 10}};
    j["ablation"] = {{"distill", true}, {"mask", true}, {"tgc", true}, {"n_seeds", 5}};
    return j;
}

// Recursive merge that refuses keys absent from the defaults; scalar type
// families must match (null stays assignable for optional fields).
void merge_checked(json& base, const json& user, const std::string& path) {
    if (!user.is_object())
        throw UsageError("config: expected object at " + (path.empty() ? "<root>" : path));
    for (auto it = user.begin(); it != user.end(); ++it) {
        const std::string key_path = path.empty() ? it.key() : path + "." + it.key();
        if (!base.contains(it.key())) throw UsageError("config: unknown key " + key_path);
        json& slot = base[it.key()];
        if (slot.is_object() && !slot.is_null()) {
            merge_checked(slot, it.value(), key_path);
        } else {
            slot = it.value();
        }
    }
}

void apply_override(json& base, const std::string& spec) {
    const size_t eq = spec.find('=');
    if (eq == std::string::npos || eq == 0)
        throw UsageError("override must look like key.path=value: " + spec);
    const std::string key = spec.substr(0, eq);
    const std::string value_text = spec.substr(eq + 1);
    json value;
    try {
        value = json::parse(value_text);
    } catch (const json::parse_error&) {
        value = value_text; // plain string
    }

    json* slot = &base;
    std::stringstream ss(key);
    std::string part;
    std::vector<std::string> parts;
    while (std::getline(ss, part, '.')) parts.push_back(part);
    if (parts.empty()) throw UsageError("override has empty key: " + spec);
    for (size_t k = 0; k + 1 < parts.size(); ++k) {
        if (!slot->contains(parts[k]) || !(*slot)[parts[k]].is_object())
            throw UsageError("override: unknown key " + key);
        slot = &(*slot)[parts[k]];
    }
    if (!slot->contains(parts.back())) throw UsageError("override: unknown key " + key);
    (*slot)[parts.back()] = value;
}

template <class T>
T get_field(const json& j, const char* key, const std::string& section) {
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw UsageError("config: bad value for " + section + "." + key + ": " + e.what());
    }
}

Config parse(const json& j) {
    Config cfg;
    cfg.seed = get_field<uint64_t>(j, "seed", "<root>");
    cfg.threads = get_field<int>(j, "threads", "<root>");
    if (cfg.threads < 1) throw UsageError("config: threads must be >= 1");

    const json& g = j.at("grid");
    cfg.grid.x_min = get_field<double>(g, "x_min", "grid");
    cfg.grid.x_max = get_field<double>(g, "x_max", "grid");
    cfg.grid.y_min = get_field<double>(g, "y_min", "grid");
    cfg.grid.y_max = get_field<double>(g, "y_max", "grid");
    cfg.grid.cells_x = get_field<int>(g, "cells_x", "grid");
    cfg.grid.cells_y = get_field<int>(g, "cells_y", "grid");
    try {
        cfg.grid.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(std::string("config: ") + e.what());
    }

    cfg.channels = get_field<int>(j, "channels", "<root>");
    if (cfg.channels < 2) throw UsageError("config: channels must be >= 2");

    const json& sc = j.at("scene");
    cfg.scene.min_boxes = get_field<int>(sc, "min_boxes", "scene");
    cfg.scene.max_boxes = get_field<int>(sc, "max_boxes", "scene");
    cfg.scene.class_count = get_field<int>(sc, "class_count", "scene");
    cfg.scene.edge_margin = get_field<double>(sc, "edge_margin", "scene");
    cfg.scene.min_separation = get_field<double>(sc, "min_separation", "scene");
    if (cfg.scene.min_boxes < 0 || cfg.scene.max_boxes < cfg.scene.min_boxes)
        throw UsageError("config: scene box count range is invalid");

    const json& li = j.at("lidar");
    cfg.lidar.density_scale = get_field<double>(li, "density_scale", "lidar");
    cfg.lidar.min_points_per_box = get_field<int>(li, "min_points_per_box", "lidar");
    cfg.lidar.max_points_per_box = get_field<int>(li, "max_points_per_box", "lidar");
    cfg.lidar.ground_points = get_field<int>(li, "ground_points", "lidar");
    cfg.lidar.ground_z_sd = get_field<double>(li, "ground_z_sd", "lidar");
    if (cfg.lidar.min_points_per_box < 0 ||
        cfg.lidar.max_points_per_box < cfg.lidar.min_points_per_box)
        throw UsageError("config: lidar points-per-box range is invalid");

    const json& te = j.at("teacher");
    cfg.teacher.scale_min = get_field<double>(te, "scale_min", "teacher");
    cfg.teacher.scale_max = get_field<double>(te, "scale_max", "teacher");
    cfg.teacher.background_gain = get_field<double>(te, "background_gain", "teacher");
    cfg.teacher.attribute_amplitude = get_field<double>(te, "attribute_amplitude", "teacher");
    cfg.teacher.halo_cells = get_field<double>(te, "halo_cells", "teacher");
    if (!(cfg.teacher.scale_min > 0.0) || cfg.teacher.scale_max < cfg.teacher.scale_min)
        throw UsageError("config: teacher scale range is invalid");

    const json& ca = j.at("camera");
    cfg.camera.obs_channels = get_field<int>(ca, "obs_channels", "camera");
    cfg.camera.noise_sd = get_field<double>(ca, "noise_sd", "camera");
    cfg.camera.jitter_sd_at_50m = get_field<double>(ca, "jitter_sd_at_50m", "camera");
    cfg.camera.dropout = get_field<double>(ca, "dropout", "camera");
    cfg.camera.ghost_rate = get_field<double>(ca, "ghost_rate", "camera");
    cfg.camera.ghost_range_shift = get_field<double>(ca, "ghost_range_shift", "camera");
    cfg.camera.ghost_gain = get_field<double>(ca, "ghost_gain", "camera");
    cfg.camera.ambient_gain = get_field<double>(ca, "ambient_gain", "camera");
    cfg.camera.mix_diag_boost = get_field<double>(ca, "mix_diag_boost", "camera");
    cfg.camera.attribute_amplitude = cfg.teacher.attribute_amplitude;
    cfg.camera.halo_cells = cfg.teacher.halo_cells;
    if (cfg.camera.obs_channels < 1) throw UsageError("config: camera.obs_channels must be >= 1");
    if (cfg.camera.dropout < 0.0 || cfg.camera.dropout > 1.0)
        throw UsageError("config: camera.dropout must be in [0, 1]");
    if (cfg.camera.ghost_rate < 0.0 || cfg.camera.ghost_rate > 1.0)
        throw UsageError("config: camera.ghost_rate must be in [0, 1]");

    const json& da = j.at("data");
    cfg.data.train_scenes = get_field<int>(da, "train_scenes", "data");
    cfg.data.heldout_scenes = get_field<int>(da, "heldout_scenes", "data");
    cfg.data.unlabeled_scenes = get_field<int>(da, "unlabeled_scenes", "data");
    if (cfg.data.train_scenes < 1 || cfg.data.heldout_scenes < 0 ||
        cfg.data.unlabeled_scenes < 0)
        throw UsageError("config: data scene counts are invalid");

    const json& ma = j.at("mask");
    cfg.mask.sigma = get_field<double>(ma, "sigma", "mask");
    cfg.mask.gate_quantile = get_field<double>(ma, "gate_quantile", "mask");
    if (ma.at("gate_abs").is_null())
        cfg.mask.gate_abs.reset();
    else
        cfg.mask.gate_abs = get_field<double>(ma, "gate_abs", "mask");
    try {
        cfg.mask.regularizer =
            mask::regularizer_from_string(get_field<std::string>(ma, "regularizer", "mask"));
    } catch (const std::invalid_argument& e) {
        throw UsageError(std::string("config: ") + e.what());
    }
    cfg.mask.whitened_response = get_field<bool>(ma, "whitened_response", "mask");
    if (!(cfg.mask.sigma > 0.0)) throw UsageError("config: mask.sigma must be positive");
    if (cfg.mask.gate_quantile < 0.0 || cfg.mask.gate_quantile > 1.0)
        throw UsageError("config: mask.gate_quantile must be in [0, 1]");

    const json& wh = j.at("whitening");
    cfg.whitening.epsilon = get_field<double>(wh, "epsilon", "whitening");
    cfg.whitening.nonzero_only = get_field<bool>(wh, "nonzero_only", "whitening");
    if (!(cfg.whitening.epsilon > 0.0))
        throw UsageError("config: whitening.epsilon must be positive");

    const json& lo = j.at("loss");
    try {
        cfg.loss.rec_variant =
            loss::rec_variant_from_string(get_field<std::string>(lo, "rec_variant", "loss"));
    } catch (const std::invalid_argument& e) {
        throw UsageError(std::string("config: ") + e.what());
    }
    cfg.loss.lambda_rec = get_field<double>(lo, "lambda_rec", "loss");
    cfg.loss.lambda_corr = get_field<double>(lo, "lambda_corr", "loss");
    cfg.loss.roi_size = get_field<int>(lo, "roi_size", "loss");
    cfg.loss.proj_hidden = get_field<int>(lo, "proj_hidden", "loss");
    cfg.loss.embed_dim = get_field<int>(lo, "embed_dim", "loss");
    cfg.loss.smooth_l1_beta = get_field<double>(lo, "smooth_l1_beta", "loss");
    cfg.loss.standardize_student = get_field<bool>(lo, "standardize_student", "loss");
    cfg.loss.reg_weight = get_field<double>(lo, "reg_weight", "loss");
    cfg.loss.proj_lr_mult = get_field<double>(lo, "proj_lr_mult", "loss");
    if (cfg.loss.lambda_rec < 0.0 || cfg.loss.lambda_corr < 0.0)
        throw UsageError("config: loss weights must be non-negative");
    if (cfg.loss.roi_size < 1 || cfg.loss.proj_hidden < 1 || cfg.loss.embed_dim < 1)
        throw UsageError("config: loss dims must be >= 1");
    if (!(cfg.loss.smooth_l1_beta > 0.0))
        throw UsageError("config: loss.smooth_l1_beta must be positive");

    const json& tr = j.at("train");
    cfg.train.pretrain_epochs = get_field<int>(tr, "pretrain_epochs", "train");
    cfg.train.finetune_epochs = get_field<int>(tr, "finetune_epochs", "train");
    cfg.train.lr_pretrain = get_field<double>(tr, "lr_pretrain", "train");
    cfg.train.lr_finetune = get_field<double>(tr, "lr_finetune", "train");
    cfg.train.beta1 = get_field<double>(tr, "beta1", "train");
    cfg.train.beta2 = get_field<double>(tr, "beta2", "train");
    cfg.train.adam_eps = get_field<double>(tr, "adam_eps", "train");
    cfg.train.weight_decay = get_field<double>(tr, "weight_decay", "train");
    cfg.train.cosine_decay = get_field<bool>(tr, "cosine_decay", "train");
    cfg.train.freeze_head = get_field<bool>(tr, "freeze_head", "train");
    cfg.train.inherit_head = get_field<bool>(tr, "inherit_head", "train");
    cfg.train.pretrain_data_frac = get_field<double>(tr, "pretrain_data_frac", "train");
    cfg.train.teacher_head_epochs = get_field<int>(tr, "teacher_head_epochs", "train");
    cfg.train.lr_teacher_head = get_field<double>(tr, "lr_teacher_head", "train");
    cfg.train.teacher_head_max_scenes = get_field<int>(tr, "teacher_head_max_scenes", "train");
    cfg.train.unlabeled_top_k = get_field<int>(tr, "unlabeled_top_k", "train");
    if (cfg.train.pretrain_epochs < 0 || cfg.train.finetune_epochs < 0)
        throw UsageError("config: epoch counts must be >= 0");
    if (cfg.train.pretrain_data_frac < 0.0 || cfg.train.pretrain_data_frac > 2.0)
        throw UsageError("config: train.pretrain_data_frac must be in [0, 2]");

    const json& ab = j.at("ablation");
    cfg.ablation.distill = get_field<bool>(ab, "distill", "ablation");
    cfg.ablation.mask = get_field<bool>(ab, "mask", "ablation");
    cfg.ablation.tgc = get_field<bool>(ab, "tgc", "ablation");
    cfg.ablation.n_seeds = get_field<int>(ab, "n_seeds", "ablation");
    if (cfg.ablation.n_seeds < 1) throw UsageError("config: ablation.n_seeds must be >= 1");
    return cfg;
}

json to_json(const Config& cfg) {
    json j = default_json();
    j["seed"] = cfg.seed;
    j["threads"] = cfg.threads;
    j["grid"] = {{"x_min", cfg.grid.x_min}, {"x_max", cfg.grid.x_max},
                 {"y_min", cfg.grid.y_min}, {"y_max", cfg.grid.y_max},
                 {"cells_x", cfg.grid.cells_x}, {"cells_y", cfg.grid.cells_y}};
    j["channels"] = cfg.channels;
    j["scene"] = {{"min_boxes", cfg.scene.min_boxes}, {"max_boxes", cfg.scene.max_boxes},
                  {"class_count", cfg.scene.class_count},
                  {"edge_margin", cfg.scene.edge_margin},
                  {"min_separation", cfg.scene.min_separation}};
    j["lidar"] = {{"density_scale", cfg.lidar.density_scale},
                  {"min_points_per_box", cfg.lidar.min_points_per_box},
                  {"max_points_per_box", cfg.lidar.max_points_per_box},
                  {"ground_points", cfg.lidar.ground_points},
                  {"ground_z_sd", cfg.lidar.ground_z_sd}};
    j["teacher"] = {{"scale_min", cfg.teacher.scale_min}, {"scale_max", cfg.teacher.scale_max},
                    {"background_gain", cfg.teacher.background_gain},
                    {"attribute_amplitude", cfg.teacher.attribute_amplitude},
                    {"halo_cells", cfg.teacher.halo_cells}};
    j["camera"] = {{"obs_channels", cfg.camera.obs_channels}, {"noise_sd", cfg.camera.noise_sd},
                   {"jitter_sd_at_50m", cfg.camera.jitter_sd_at_50m},
                   {"dropout", cfg.camera.dropout}, {"ghost_rate", cfg.camera.ghost_rate},
                   {"ghost_range_shift", cfg.camera.ghost_range_shift},
                   {"ghost_gain", cfg.camera.ghost_gain},
                   {"ambient_gain", cfg.camera.ambient_gain},
                   {"mix_diag_boost", cfg.camera.mix_diag_boost}};
    j["data"] = {{"train_scenes", cfg.data.train_scenes},
                 {"heldout_scenes", cfg.data.heldout_scenes},
                 {"unlabeled_scenes", cfg.data.unlabeled_scenes}};
    j["mask"] = {{"sigma", cfg.mask.sigma}, {"gate_quantile", cfg.mask.gate_quantile},
                 {"gate_abs", cfg.mask.gate_abs ? json(*cfg.mask.gate_abs) : json(nullptr)},
                 {"regularizer", mask::regularizer_to_string(cfg.mask.regularizer)},
                 {"whitened_response", cfg.mask.whitened_response}};
    j["whitening"] = {{"epsilon", cfg.whitening.epsilon},
                      {"nonzero_only", cfg.whitening.nonzero_only}};
    j["loss"] = {{"rec_variant", loss::rec_variant_to_string(cfg.loss.rec_variant)},
                 {"lambda_rec", cfg.loss.lambda_rec}, {"lambda_corr", cfg.loss.lambda_corr},
                 {"roi_size", cfg.loss.roi_size}, {"proj_hidden", cfg.loss.proj_hidden},
                 {"embed_dim", cfg.loss.embed_dim},
                 {"smooth_l1_beta", cfg.loss.smooth_l1_beta},
                 {"standardize_student", cfg.loss.standardize_student},
                 {"reg_weight", cfg.loss.reg_weight},
                 {"proj_lr_mult", cfg.loss.proj_lr_mult}};
    j["train"] = {{"pretrain_epochs", cfg.train.pretrain_epochs},
                  {"finetune_epochs", cfg.train.finetune_epochs},
                  {"lr_pretrain", cfg.train.lr_pretrain},
                  {"lr_finetune", cfg.train.lr_finetune},
                  {"beta1", cfg.train.beta1},
                  {"beta2", cfg.train.beta2},
                  {"adam_eps", cfg.train.adam_eps},
                  {"weight_decay", cfg.train.weight_decay},
                  {"cosine_decay", cfg.train.cosine_decay},
                  {"freeze_head", cfg.train.freeze_head},
                  {"inherit_head", cfg.train.inherit_head},
                  {"pretrain_data_frac", cfg.train.pretrain_data_frac},
                  {"teacher_head_epochs", cfg.train.teacher_head_epochs},
                  {"lr_teacher_head", cfg.train.lr_teacher_head},
                  {"teacher_head_max_scenes", cfg.train.teacher_head_max_scenes},
                  {"unlabeled_top_k", cfg.train.unlabeled_top_k}};
    j["ablation"] = {{"distill", cfg.ablation.distill}, {"mask", cfg.ablation.mask},
                     {"tgc", cfg.ablation.tgc}, {"n_seeds", cfg.ablation.n_seeds}};
    return j;
}

} // namespace

uint64_t fnv1a64(const std::string& text) {
    uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string hash_hex(uint64_t value) {
    char buf[17];
    snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(value));
    return buf;
}

std::string Config::config_hash() const {
    json j = to_json(*this);
    j.erase("threads");
    return hash_hex(fnv1a64(j.dump()));
}

std::string Config::data_hash() const {
    const json full = to_json(*this);
    json j;
    for (const char* key : {"seed", "grid", "channels", "scene", "lidar", "teacher",
                            "camera", "data"})
        j[key] = full.at(key);
    return hash_hex(fnv1a64(j.dump()));
}

std::string Config::mask_hash() const {
    const json full = to_json(*this);
    json j;
    j["data_hash"] = data_hash();
    j["mask"] = full.at("mask");
    j["whitening"] = full.at("whitening");
    return hash_hex(fnv1a64(j.dump()));
}

std::string Config::dump_json() const { return to_json(*this).dump(2) + "\n"; }

Config default_config() { return parse(default_json()); }

Config config_from_json_text(const std::string& text,
                             const std::vector<std::string>& overrides) {
    json merged = default_json();
    if (!text.empty()) {
        json user;
        try {
            user = json::parse(text);
        } catch (const json::parse_error& e) {
            throw UsageError(std::string("config: JSON parse error: ") + e.what());
        }
        merge_checked(merged, user, "");
    }
    for (const std::string& o : overrides) apply_override(merged, o);
    return parse(merged);
}

Config load_config(const std::string& path, const std::vector<std::string>& overrides) {
    if (path.empty()) return config_from_json_text("", overrides);
    std::ifstream is(path);
    if (!is) throw IoError("cannot open config file: " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    return config_from_json_text(ss.str(), overrides);
}

} // namespace bevkit

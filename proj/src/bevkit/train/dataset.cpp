#include "bevkit/train/dataset.hpp"

#include "bevkit/core/rng.hpp"
#include "bevkit/core/tensor_file.hpp"
#include "bevkit/errors.hpp"
#include "bevkit/synth/camera.hpp"
#include "bevkit/synth/lidar.hpp"
#include "bevkit/synth/teacher.hpp"
#include "bevkit/train/parallel.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

namespace bevkit::train {

std::vector<SceneRecord> make_scene_roster(const Config& cfg) {
    const int labeled = cfg.data.train_scenes + cfg.data.heldout_scenes;
    const int total = labeled + cfg.data.unlabeled_scenes;
    std::vector<SceneRecord> roster(total);
    for (int idx = 0; idx < total; ++idx) {
        char name[32];
        snprintf(name, sizeof(name), "scene_%06d", idx);
        roster[idx].id = name;
        roster[idx].scene_seed = hash_combine(cfg.seed, 0x5EED0000ull + idx);
        roster[idx].unlabeled = idx >= labeled;
    }
    // Held-out members: the labeled scenes with the lowest seed-stable
    // hash, so the split survives regeneration and reordering.
    std::vector<int> order(labeled);
    std::iota(order.begin(), order.end(), 0);
    std::vector<uint64_t> rank(labeled);
    for (int idx = 0; idx < labeled; ++idx)
        rank[idx] = hash_combine(cfg.seed, 0x8E1D0000ull + idx);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (rank[a] != rank[b]) return rank[a] < rank[b];
        return a < b;
    });
    for (int k = 0; k < cfg.data.heldout_scenes && k < labeled; ++k)
        roster[order[k]].heldout = true;
    return roster;
}

SynthContext make_synth_context(const Config& cfg) {
    SynthContext ctx;
    ctx.teacher_scales = synth::teacher_channel_scales(cfg.teacher, cfg.channels, cfg.seed);
    ctx.camera_mixing = synth::camera_mixing_matrix(cfg.camera, cfg.channels, cfg.seed);
    return ctx;
}

SceneArtifacts synthesize_scene(const Config& cfg, const SynthContext& ctx,
                                const SceneRecord& record) {
    SceneArtifacts art;
    art.scene = synth::generate_scene(cfg.scene, cfg.grid, record.scene_seed);
    art.cloud = synth::simulate_lidar(art.scene, cfg.lidar, hash_combine(record.scene_seed, 2));
    art.teacher = synth::render_teacher_bev(art.scene, art.cloud, cfg.grid, cfg.channels,
                                            cfg.teacher, ctx.teacher_scales);
    art.obs = synth::render_camera_observation(art.scene, cfg.grid, cfg.channels, cfg.camera,
                                               ctx.camera_mixing,
                                               hash_combine(record.scene_seed, 3));
    return art;
}

MemoryDataset::MemoryDataset(const Config& cfg, int threads) {
    records_ = make_scene_roster(cfg);
    grid_ = cfg.grid;
    channels_ = cfg.channels;
    obs_channels_ = cfg.camera.obs_channels;
    data_hash_ = cfg.data_hash();

    const SynthContext ctx = make_synth_context(cfg);
    const size_t n = records_.size();
    scenes_.resize(n);
    clouds_.resize(n);
    teachers_.resize(n);
    observations_.resize(n);
    parallel_for(n, threads, [&](size_t idx) {
        SceneArtifacts art = synthesize_scene(cfg, ctx, records_[idx]);
        scenes_[idx] = std::move(art.scene);
        clouds_[idx] = std::move(art.cloud);
        teachers_[idx] = std::move(art.teacher);
        observations_[idx] = std::move(art.obs);
    });
}

void MemoryDataset::set_masks(std::vector<WeightMask> masks) {
    if (masks.size() != records_.size())
        throw std::invalid_argument("MemoryDataset::set_masks: count mismatch");
    masks_ = std::move(masks);
    has_masks_ = true;
}

WeightMask MemoryDataset::load_mask(size_t idx) const {
    if (!has_masks_) throw UsageError("dataset has no masks; run the maskgen stage first");
    return masks_[idx];
}

namespace {

nlohmann::json read_json_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    try {
        return nlohmann::json::parse(ss.str());
    } catch (const nlohmann::json::parse_error& e) {
        throw IoError("bad JSON in " + path + ": " + e.what());
    }
}

} // namespace

DiskDataset::DiskDataset(const std::string& dir) : dir_(dir) {
    const nlohmann::json manifest = read_json_file(dir + "/manifest.json");
    try {
        data_hash_ = manifest.at("data_hash").get<std::string>();
        const auto& g = manifest.at("grid");
        grid_.x_min = g.at("x_min").get<double>();
        grid_.x_max = g.at("x_max").get<double>();
        grid_.y_min = g.at("y_min").get<double>();
        grid_.y_max = g.at("y_max").get<double>();
        grid_.cells_x = g.at("cells_x").get<int>();
        grid_.cells_y = g.at("cells_y").get<int>();
        grid_.validate();
        channels_ = manifest.at("channels").get<int>();
        obs_channels_ = manifest.at("obs_channels").get<int>();
        for (const auto& s : manifest.at("scenes")) {
            SceneRecord r;
            r.id = s.at("id").get<std::string>();
            r.scene_seed = s.at("seed").get<uint64_t>();
            r.unlabeled = s.at("unlabeled").get<bool>();
            r.heldout = s.at("heldout").get<bool>();
            records_.push_back(std::move(r));
        }
    } catch (const nlohmann::json::exception& e) {
        throw IoError("bad dataset manifest in " + dir + ": " + e.what());
    }
    std::ifstream probe(dir_ + "/masks/manifest.json");
    has_masks_ = probe.good();
}

synth::SceneTruth DiskDataset::load_scene(size_t idx) const {
    const std::string path = dir_ + "/scenes/" + records_[idx].id + ".json";
    std::ifstream is(path);
    if (!is) throw IoError("cannot open " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    return synth::scene_from_json(ss.str());
}

PointCloud DiskDataset::load_cloud(size_t idx) const {
    return read_point_cloud(dir_ + "/clouds/" + records_[idx].id + ".bdkt");
}

BevFeatureMap DiskDataset::load_teacher(size_t idx) const {
    return read_feature_map(dir_ + "/teacher/" + records_[idx].id + ".bdkt", grid_);
}

BevFeatureMap DiskDataset::load_obs(size_t idx) const {
    return read_feature_map(dir_ + "/obs/" + records_[idx].id + ".bdkt", grid_);
}

WeightMask DiskDataset::load_mask(size_t idx) const {
    if (!has_masks_)
        throw UsageError("dataset has no masks; run the maskgen stage first: " + dir_);
    return read_mask(dir_ + "/masks/" + records_[idx].id + ".bdkt", grid_);
}

std::vector<size_t> train_indices(const Dataset& data) {
    std::vector<size_t> out;
    const auto& records = data.records();
    for (size_t k = 0; k < records.size(); ++k)
        if (!records[k].unlabeled && !records[k].heldout) out.push_back(k);
    return out;
}

std::vector<size_t> heldout_indices(const Dataset& data) {
    std::vector<size_t> out;
    const auto& records = data.records();
    for (size_t k = 0; k < records.size(); ++k)
        if (records[k].heldout) out.push_back(k);
    return out;
}

std::vector<size_t> pretrain_indices(const Dataset& data, double frac) {
    if (frac < 0.0 || frac > 2.0)
        throw UsageError("pretrain data fraction must be in [0, 2]");
    const std::vector<size_t> train = train_indices(data);
    std::vector<size_t> unlabeled;
    const auto& records = data.records();
    for (size_t k = 0; k < records.size(); ++k)
        if (records[k].unlabeled) unlabeled.push_back(k);

    std::vector<size_t> out;
    const double labeled_share = std::min(frac, 1.0);
    const size_t n_labeled =
        static_cast<size_t>(std::llround(labeled_share * static_cast<double>(train.size())));
    out.insert(out.end(), train.begin(), train.begin() + std::min(n_labeled, train.size()));
    if (frac > 1.0) {
        const size_t n_extra = static_cast<size_t>(
            std::llround((frac - 1.0) * static_cast<double>(train.size())));
        if (n_extra > unlabeled.size())
            throw UsageError("pretrain data fraction needs more unlabeled scenes than the "
                             "dataset provides");
        out.insert(out.end(), unlabeled.begin(), unlabeled.begin() + n_extra);
    }
    return out;
}

} // namespace bevkit::train

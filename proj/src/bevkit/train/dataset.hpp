#pragma once

#include "bevkit/config.hpp"
#include "bevkit/core/tensor.hpp"
#include "bevkit/synth/scene.hpp"

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace bevkit::train {

struct SceneRecord {
    std::string id;
    uint64_t scene_seed = 0;
    bool unlabeled = false;
    bool heldout = false;
};

// Reads of each artifact family, used to prove the finetune stage touches
// neither point clouds nor teacher features nor masks, and that scenes
// flagged unlabeled never leak their labels into pretraining.
struct AccessSnapshot {
    uint64_t scene = 0, scene_unlabeled = 0, cloud = 0, teacher = 0, obs = 0, mask = 0;

    AccessSnapshot operator-(const AccessSnapshot& o) const {
        return {scene - o.scene, scene_unlabeled - o.scene_unlabeled, cloud - o.cloud,
                teacher - o.teacher, obs - o.obs, mask - o.mask};
    }
};

class AccessCounters {
public:
    std::atomic<uint64_t> scene{0}, scene_unlabeled{0}, cloud{0}, teacher{0}, obs{0}, mask{0};

    AccessSnapshot snapshot() const {
        return {scene, scene_unlabeled, cloud, teacher, obs, mask};
    }
};

// Scene roster plus counted access to the per-scene artifacts. Artifact
// getters return by value; callers cache what they need.
class Dataset {
public:
    virtual ~Dataset() = default;

    const std::vector<SceneRecord>& records() const { return records_; }
    const BevGridSpec& grid() const { return grid_; }
    int channels() const { return channels_; }
    int obs_channels() const { return obs_channels_; }
    const std::string& data_hash() const { return data_hash_; }
    bool has_masks() const { return has_masks_; }

    synth::SceneTruth scene(size_t idx) const {
        ++counters_.scene;
        if (records_[idx].unlabeled) ++counters_.scene_unlabeled;
        return load_scene(idx);
    }
    PointCloud cloud(size_t idx) const {
        ++counters_.cloud;
        return load_cloud(idx);
    }
    BevFeatureMap teacher(size_t idx) const {
        ++counters_.teacher;
        return load_teacher(idx);
    }
    BevFeatureMap obs(size_t idx) const {
        ++counters_.obs;
        return load_obs(idx);
    }
    WeightMask mask(size_t idx) const {
        ++counters_.mask;
        return load_mask(idx);
    }

    AccessCounters& counters() const { return counters_; }

protected:
    virtual synth::SceneTruth load_scene(size_t idx) const = 0;
    virtual PointCloud load_cloud(size_t idx) const = 0;
    virtual BevFeatureMap load_teacher(size_t idx) const = 0;
    virtual BevFeatureMap load_obs(size_t idx) const = 0;
    virtual WeightMask load_mask(size_t idx) const = 0;

    std::vector<SceneRecord> records_;
    BevGridSpec grid_;
    int channels_ = 0;
    int obs_channels_ = 0;
    std::string data_hash_;
    bool has_masks_ = false;
    mutable AccessCounters counters_;
};

// Deterministic roster for a config: labeled pool first (held-out members
// flagged by lowest seed-stable hash), then the unlabeled pool.
std::vector<SceneRecord> make_scene_roster(const Config& cfg);

// Per-scene artifact synthesis shared by the disk writer and the
// in-memory dataset.
struct SynthContext {
    std::vector<double> teacher_scales;
    std::vector<double> camera_mixing;
};
SynthContext make_synth_context(const Config& cfg);

struct SceneArtifacts {
    synth::SceneTruth scene;
    PointCloud cloud;
    BevFeatureMap teacher;
    BevFeatureMap obs;
};
SceneArtifacts synthesize_scene(const Config& cfg, const SynthContext& ctx,
                                const SceneRecord& record);

// Fully materialized in memory; masks can be attached after generation.
class MemoryDataset : public Dataset {
public:
    MemoryDataset(const Config& cfg, int threads);

    void set_masks(std::vector<WeightMask> masks);

protected:
    synth::SceneTruth load_scene(size_t idx) const override { return scenes_[idx]; }
    PointCloud load_cloud(size_t idx) const override { return clouds_[idx]; }
    BevFeatureMap load_teacher(size_t idx) const override { return teachers_[idx]; }
    BevFeatureMap load_obs(size_t idx) const override { return observations_[idx]; }
    WeightMask load_mask(size_t idx) const override;

private:
    std::vector<synth::SceneTruth> scenes_;
    std::vector<PointCloud> clouds_;
    std::vector<BevFeatureMap> teachers_;
    std::vector<BevFeatureMap> observations_;
    std::vector<WeightMask> masks_;
};

// Backed by a dataset directory written by the synth stage; masks are
// picked up from `masks/` when present.
class DiskDataset : public Dataset {
public:
    explicit DiskDataset(const std::string& dir);

    const std::string& dir() const { return dir_; }

protected:
    synth::SceneTruth load_scene(size_t idx) const override;
    PointCloud load_cloud(size_t idx) const override;
    BevFeatureMap load_teacher(size_t idx) const override;
    BevFeatureMap load_obs(size_t idx) const override;
    WeightMask load_mask(size_t idx) const override;

private:
    std::string dir_;
};

// Index helpers over the roster.
std::vector<size_t> train_indices(const Dataset& data);
std::vector<size_t> heldout_indices(const Dataset& data);
// Pretraining pool for a data fraction in [0, 2]: the first frac share of
// the labeled training scenes, then unlabeled scenes once frac exceeds 1.
std::vector<size_t> pretrain_indices(const Dataset& data, double frac);

} // namespace bevkit::train

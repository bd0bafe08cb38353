#include "bevkit/pipeline.hpp"

#include "bevkit/checkpoint.hpp"
#include "bevkit/core/tensor_file.hpp"
#include "bevkit/errors.hpp"
#include "bevkit/train/ablation.hpp"
#include "bevkit/train/dataset.hpp"
#include "bevkit/train/parallel.hpp"
#include "bevkit/train/trainer.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace bevkit::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void prepare_out_dir(const std::string& dir, bool overwrite) {
    std::error_code ec;
    if (fs::exists(dir, ec)) {
        if (!overwrite)
            throw UsageError("output already exists (pass --overwrite to replace): " + dir);
    }
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir + ": " + ec.message());
    // Catch unwritable locations up front rather than mid-run.
    const std::string probe = dir + "/.write_probe";
    {
        std::ofstream os(probe, std::ios::trunc);
        if (!os) throw IoError("output directory is not writable: " + dir);
    }
    fs::remove(probe, ec);
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream os(path, std::ios::trunc | std::ios::binary);
    if (!os) throw IoError("cannot write " + path);
    os << text;
    if (!os) throw IoError("write failed: " + path);
}

std::string read_text(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

json grid_json(const BevGridSpec& grid) {
    return {{"x_min", grid.x_min}, {"x_max", grid.x_max}, {"y_min", grid.y_min},
            {"y_max", grid.y_max}, {"cells_x", grid.cells_x}, {"cells_y", grid.cells_y}};
}

void require_data_hash(const Config& cfg, const train::Dataset& data,
                       const std::string& what) {
    if (data.data_hash() != cfg.data_hash())
        throw UsageError(what + ": dataset was generated under a different config (data hash " +
                         data.data_hash() + ", current " + cfg.data_hash() + ")");
}

whiten::ChannelStats load_stats_checked(const Config& cfg, const std::string& path) {
    json j;
    try {
        j = json::parse(read_text(path));
    } catch (const json::parse_error& e) {
        throw IoError("bad stats JSON in " + path + ": " + e.what());
    }
    if (j.contains("data_hash") && j["data_hash"].get<std::string>() != cfg.data_hash())
        throw UsageError("stats file " + path + " belongs to a different dataset config");
    return whiten::stats_from_json(j.dump());
}

json metrics_record(const train::EpochMetrics& m) {
    json j;
    j["stage"] = m.stage;
    j["epoch"] = m.epoch;
    if (m.stage == "pretrain") {
        j["l_rec"] = m.l_rec;
        j["l_corr"] = m.l_corr;
        j["l_total"] = m.l_total;
        j["heldout_masked_rec"] = m.heldout_masked_rec;
    } else {
        j["train_surrogate"] = m.train_surrogate;
        j["heldout_surrogate"] = m.heldout_surrogate;
    }
    j["lr_scale"] = m.lr_scale;
    j["wall_ms"] = m.wall_ms;
    return j;
}

void write_metrics_jsonl(const std::string& path,
                         const std::vector<train::EpochMetrics>& epochs) {
    std::ostringstream os;
    for (const train::EpochMetrics& m : epochs) os << metrics_record(m).dump() << "\n";
    write_text(path, os.str());
}

json reads_json(const train::AccessSnapshot& reads) {
    return {{"scene", reads.scene}, {"cloud", reads.cloud}, {"teacher", reads.teacher},
            {"obs", reads.obs},     {"mask", reads.mask}};
}

} // namespace

void run_synth(const Config& cfg, const std::string& out_dir, bool overwrite) {
    prepare_out_dir(out_dir, overwrite);
    for (const char* sub : {"/scenes", "/clouds", "/teacher", "/obs"}) {
        std::error_code ec;
        fs::create_directories(out_dir + sub, ec);
        if (ec) throw IoError("cannot create " + out_dir + sub);
    }

    const std::vector<train::SceneRecord> roster = train::make_scene_roster(cfg);
    const train::SynthContext ctx = train::make_synth_context(cfg);
    train::parallel_for(roster.size(), cfg.threads, [&](size_t idx) {
        const train::SceneRecord& rec = roster[idx];
        const train::SceneArtifacts art = train::synthesize_scene(cfg, ctx, rec);
        write_text(out_dir + "/scenes/" + rec.id + ".json",
                   synth::scene_to_json(art.scene) + "\n");
        write_point_cloud(out_dir + "/clouds/" + rec.id + ".bdkt", art.cloud);
        write_feature_map(out_dir + "/teacher/" + rec.id + ".bdkt", art.teacher);
        write_feature_map(out_dir + "/obs/" + rec.id + ".bdkt", art.obs);
    });

    json manifest;
    manifest["format"] = 1;
    manifest["config_hash"] = cfg.config_hash();
    manifest["data_hash"] = cfg.data_hash();
    manifest["grid"] = grid_json(cfg.grid);
    manifest["channels"] = cfg.channels;
    manifest["obs_channels"] = cfg.camera.obs_channels;
    manifest["seed"] = cfg.seed;
    json scenes = json::array();
    for (const train::SceneRecord& rec : roster)
        scenes.push_back({{"id", rec.id},
                          {"seed", rec.scene_seed},
                          {"unlabeled", rec.unlabeled},
                          {"heldout", rec.heldout}});
    manifest["scenes"] = scenes;
    write_text(out_dir + "/manifest.json", manifest.dump(2) + "\n");
}

void run_stats(const Config& cfg, const std::string& data_dir, const std::string& out_path) {
    train::DiskDataset data(data_dir);
    require_data_hash(cfg, data, "stats");
    const whiten::ChannelStats stats = train::compute_dataset_stats(cfg, data);
    json j = json::parse(whiten::stats_to_json(stats));
    j["data_hash"] = cfg.data_hash();
    write_text(out_path, j.dump(2) + "\n");
}

void run_maskgen_dataset(const Config& cfg, const std::string& data_dir,
                         const std::string& stats_path) {
    train::DiskDataset data(data_dir);
    require_data_hash(cfg, data, "maskgen");
    whiten::ChannelStats stats;
    if (cfg.mask.whitened_response) {
        if (stats_path.empty())
            throw UsageError("maskgen: whitened response needs --stats (or disable "
                             "mask.whitened_response)");
        stats = load_stats_checked(cfg, stats_path);
    }
    std::error_code ec;
    fs::create_directories(data_dir + "/masks", ec);
    if (ec) throw IoError("cannot create " + data_dir + "/masks");

    const std::vector<WeightMask> masks =
        train::compute_dataset_masks(cfg, data, stats, cfg.threads);
    for (size_t idx = 0; idx < masks.size(); ++idx)
        write_mask(data_dir + "/masks/" + data.records()[idx].id + ".bdkt", masks[idx]);

    json manifest;
    manifest["config_hash"] = cfg.config_hash();
    manifest["mask_hash"] = cfg.mask_hash();
    manifest["count"] = masks.size();
    write_text(data_dir + "/masks/manifest.json", manifest.dump(2) + "\n");
}

void run_maskgen_single(const Config& cfg, const std::string& cloud_path,
                        const std::string& teacher_path, const std::string& stats_path,
                        const std::string& out_path) {
    const PointCloud cloud = read_point_cloud(cloud_path);
    BevFeatureMap teacher = read_feature_map(teacher_path, cfg.grid);
    if (cfg.mask.whitened_response) {
        if (stats_path.empty())
            throw UsageError("maskgen: whitened response needs --stats (or pass "
                             "--raw-response)");
        const whiten::ChannelStats stats = load_stats_checked(cfg, stats_path);
        teacher = whiten::whiten(teacher, stats);
    }
    const WeightMask mask = mask::build_mask(cloud, teacher, cfg.grid, cfg.mask);
    write_mask(out_path, mask);
}

void run_pretrain(const Config& cfg, const std::string& data_dir,
                  const std::string& stats_path, const std::string& out_dir, bool overwrite) {
    prepare_out_dir(out_dir, overwrite);
    train::DiskDataset data(data_dir);
    require_data_hash(cfg, data, "pretrain");
    if (stats_path.empty()) throw UsageError("pretrain: --stats is required");
    const whiten::ChannelStats stats = load_stats_checked(cfg, stats_path);
    if (data.has_masks()) {
        const json mask_manifest = json::parse(read_text(data_dir + "/masks/manifest.json"));
        if (mask_manifest.at("mask_hash").get<std::string>() != cfg.mask_hash())
            throw UsageError("pretrain: masks in " + data_dir +
                             " were generated with different mask parameters");
    }

    train::TrainerOptions options;
    options.nan_dump_dir = out_dir + "/nan_dump";
    const train::PretrainResult result = train::pretrain(cfg, data, stats, options);

    CheckpointInfo info;
    info.stage = cfg.train.pretrain_epochs > 0 ? "pretrained" : "scratch";
    info.config_hash = cfg.config_hash();
    info.data_hash = cfg.data_hash();
    info.seed = cfg.seed;
    save_student_checkpoint(out_dir + "/checkpoint", result.model, info);
    CheckpointInfo head_info = info;
    head_info.stage = "teacher_head";
    save_teacher_head(out_dir + "/teacher_head", result.teacher_head.head, head_info);

    write_metrics_jsonl(out_dir + "/metrics.jsonl", result.epochs);
    json summary;
    summary["stage"] = info.stage;
    summary["config_hash"] = info.config_hash;
    summary["data_hash"] = info.data_hash;
    summary["seed"] = cfg.seed;
    summary["epochs"] = cfg.train.pretrain_epochs;
    summary["init_heldout_masked_rec"] = result.init_heldout_masked_rec;
    summary["final_heldout_masked_rec"] = result.final_heldout_masked_rec;
    summary["final_l_total"] = result.epochs.empty() ? 0.0 : result.epochs.back().l_total;
    summary["boxes_skipped"] = result.boxes_skipped;
    summary["teacher_head_final_loss"] = result.teacher_head.final_loss;
    summary["reads"] = reads_json(result.reads);
    write_text(out_dir + "/summary.json", summary.dump(2) + "\n");
}

void run_finetune(const Config& cfg, const std::string& data_dir,
                  const std::string& init_checkpoint, const std::string& teacher_head_dir,
                  bool inherit, const std::string& out_dir, bool overwrite) {
    prepare_out_dir(out_dir, overwrite);
    train::DiskDataset data(data_dir);
    require_data_hash(cfg, data, "finetune");

    student::StudentModel model;
    std::string init_stage = "scratch";
    if (!init_checkpoint.empty()) {
        auto [loaded, info] = load_student_checkpoint(init_checkpoint);
        if (info.data_hash != cfg.data_hash())
            throw UsageError("finetune: init checkpoint belongs to a different dataset config");
        model = std::move(loaded);
        init_stage = info.stage;
    } else {
        model = student::make_student(data.obs_channels(), data.channels(),
                                      cfg.loss.roi_size, cfg.loss.proj_hidden,
                                      cfg.loss.embed_dim, hash_combine(cfg.seed, 0x57D0ull));
    }

    student::HeadParamsT<float> teacher_head;
    const student::HeadParamsT<float>* head_ptr = nullptr;
    if (inherit) {
        if (teacher_head_dir.empty())
            throw UsageError("finetune: --inherit needs --teacher-head <dir>");
        auto [head, info] = load_teacher_head(teacher_head_dir);
        if (info.data_hash != cfg.data_hash())
            throw UsageError("finetune: teacher head belongs to a different dataset config");
        teacher_head = std::move(head);
        head_ptr = &teacher_head;
    }

    train::TrainerOptions options;
    options.nan_dump_dir = out_dir + "/nan_dump";
    const train::FinetuneResult result =
        train::finetune(cfg, data, std::move(model), head_ptr, inherit, options);

    CheckpointInfo info;
    info.stage = "finetuned";
    info.init_stage = init_stage;
    info.config_hash = cfg.config_hash();
    info.data_hash = cfg.data_hash();
    info.seed = cfg.seed;
    save_student_checkpoint(out_dir + "/checkpoint", result.model, info);

    write_metrics_jsonl(out_dir + "/metrics.jsonl", result.epochs);
    json summary;
    summary["stage"] = "finetuned";
    summary["init_stage"] = init_stage;
    summary["inherit"] = result.inherited;
    summary["config_hash"] = info.config_hash;
    summary["data_hash"] = info.data_hash;
    summary["seed"] = cfg.seed;
    summary["epochs"] = cfg.train.finetune_epochs;
    summary["init_heldout_surrogate"] = result.init_heldout_surrogate;
    summary["epoch1_heldout_surrogate"] = result.epoch1_heldout_surrogate;
    summary["final_heldout_surrogate"] = result.final_heldout_surrogate;
    summary["reads"] = reads_json(result.reads);
    write_text(out_dir + "/summary.json", summary.dump(2) + "\n");
}

void run_eval(const Config& cfg, const std::string& data_dir,
              const std::string& checkpoint_dir, const std::string& split,
              const std::string& out_path) {
    train::DiskDataset data(data_dir);
    require_data_hash(cfg, data, "eval");
    auto [model, info] = load_student_checkpoint(checkpoint_dir);
    if (info.data_hash != cfg.data_hash())
        throw UsageError("eval: checkpoint belongs to a different dataset config");

    std::vector<size_t> indices;
    if (split == "heldout") {
        indices = train::heldout_indices(data);
    } else if (split == "train") {
        indices = train::train_indices(data);
    } else if (split == "all") {
        for (size_t k = 0; k < data.records().size(); ++k)
            if (!data.records()[k].unlabeled) indices.push_back(k);
    } else {
        throw UsageError("eval: unknown split " + split + " (heldout|train|all)");
    }

    const double surrogate = train::eval_surrogate(cfg, data, model, indices);
    double masked_rec = 0.0;
    bool have_rec = false;
    const std::string stats_path = data_dir + "/stats.json";
    if (fs::exists(stats_path)) {
        const whiten::ChannelStats stats = load_stats_checked(cfg, stats_path);
        masked_rec = train::eval_masked_rec(cfg, data, stats, model, indices);
        have_rec = true;
    }

    json summary;
    summary["config_hash"] = cfg.config_hash();
    summary["data_hash"] = cfg.data_hash();
    summary["checkpoint_stage"] = info.stage;
    summary["checkpoint_init_stage"] = info.init_stage;
    summary["split"] = split;
    summary["n_scenes"] = indices.size();
    summary["surrogate_loss"] = surrogate;
    if (have_rec) summary["masked_rec_error"] = masked_rec;
    write_text(out_path, summary.dump(2) + "\n");
}

gradcheck::GradCheckReport run_gradcheck_cmd(const Config& cfg,
                                             const std::string& report_path) {
    gradcheck::GradCheckConfig gc;
    gc.seed = hash_combine(cfg.seed, 0x96ADull);
    const gradcheck::GradCheckReport report = gradcheck::run_gradcheck(gc);
    std::cout << gradcheck::report_to_text(report);
    if (!report_path.empty()) write_text(report_path, gradcheck::report_to_json(report));
    if (!report.pass) throw CheckError("gradcheck failed; see report for deviations");
    return report;
}

void run_ablate(const Config& cfg, const std::string& preset, const std::string& out_dir,
                bool overwrite) {
    prepare_out_dir(out_dir, overwrite);
    const auto rows = train::run_ablation(cfg, preset, [](const std::string& msg) {
        std::cout << "[ablate] " << msg << "\n" << std::flush;
    });
    write_text(out_dir + "/report_" + preset + ".csv", train::ablation_csv(rows));
    write_text(out_dir + "/report_" + preset + "_mean.csv",
               train::ablation_mean_csv(rows, train::preset_cells(preset, cfg)));
    json meta;
    meta["preset"] = preset;
    meta["config_hash"] = cfg.config_hash();
    meta["n_seeds"] = cfg.ablation.n_seeds;
    meta["rows"] = rows.size();
    write_text(out_dir + "/report_" + preset + ".json", meta.dump(2) + "\n");
}

} // namespace bevkit::pipeline

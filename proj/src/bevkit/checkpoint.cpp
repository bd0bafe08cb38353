#include "bevkit/checkpoint.hpp"

#include "bevkit/core/tensor_file.hpp"
#include "bevkit/errors.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

namespace bevkit {

namespace {

using nlohmann::json;

struct NamedParam {
    std::string name;
    std::vector<uint64_t> shape;
    const std::vector<float>* values;
};

void write_params(const std::string& dir, const std::vector<NamedParam>& params,
                  const CheckpointInfo& info) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create checkpoint dir " + dir + ": " + ec.message());

    json manifest;
    manifest["format"] = 1;
    manifest["stage"] = info.stage;
    if (!info.init_stage.empty()) manifest["init_stage"] = info.init_stage;
    manifest["config_hash"] = info.config_hash;
    manifest["data_hash"] = info.data_hash;
    manifest["seed"] = info.seed;
    json plist = json::array();
    for (const NamedParam& p : params) {
        uint64_t count = 1;
        for (uint64_t d : p.shape) count *= d;
        if (count != p.values->size())
            throw std::logic_error("checkpoint shape mismatch for " + p.name);
        write_tensor(dir + "/" + p.name + ".bdkt", p.shape, *p.values);
        plist.push_back({{"name", p.name}, {"shape", p.shape}, {"file", p.name + ".bdkt"}});
    }
    manifest["params"] = plist;
    std::ofstream os(dir + "/manifest.json", std::ios::trunc);
    if (!os) throw IoError("cannot write checkpoint manifest in " + dir);
    os << manifest.dump(2) << "\n";
}

json read_manifest(const std::string& dir, CheckpointInfo& info) {
    std::ifstream is(dir + "/manifest.json");
    if (!is) throw IoError("cannot open checkpoint manifest in " + dir);
    std::stringstream ss;
    ss << is.rdbuf();
    json manifest;
    try {
        manifest = json::parse(ss.str());
        info.stage = manifest.at("stage").get<std::string>();
        info.init_stage = manifest.value("init_stage", "");
        info.config_hash = manifest.at("config_hash").get<std::string>();
        info.data_hash = manifest.at("data_hash").get<std::string>();
        info.seed = manifest.at("seed").get<uint64_t>();
    } catch (const json::exception& e) {
        throw IoError("bad checkpoint manifest in " + dir + ": " + e.what());
    }
    return manifest;
}

std::vector<float> read_param(const std::string& dir, const json& manifest,
                              const std::string& name, std::vector<uint64_t>* shape_out) {
    for (const auto& p : manifest.at("params")) {
        if (p.at("name").get<std::string>() != name) continue;
        TensorData t = read_tensor(dir + "/" + p.at("file").get<std::string>());
        if (shape_out) *shape_out = t.dims;
        return std::move(t.data);
    }
    throw IoError("checkpoint is missing parameter " + name + " in " + dir);
}

void fill_projection(loss::ProjectionHeadT<float>& head, const std::string& dir,
                     const json& manifest, const std::string& prefix) {
    std::vector<uint64_t> shape;
    head.w1 = read_param(dir, manifest, prefix + "_w1", &shape);
    head.hidden_dim = static_cast<int>(shape.at(0));
    head.in_dim = static_cast<int>(shape.at(1));
    head.b1 = read_param(dir, manifest, prefix + "_b1", nullptr);
    head.w2 = read_param(dir, manifest, prefix + "_w2", &shape);
    head.out_dim = static_cast<int>(shape.at(0));
    head.b2 = read_param(dir, manifest, prefix + "_b2", nullptr);
}

} // namespace

void save_student_checkpoint(const std::string& dir, const student::StudentModel& model,
                             const CheckpointInfo& info) {
    const uint64_t D = static_cast<uint64_t>(model.view.channels);
    const uint64_t C = static_cast<uint64_t>(model.view.obs_channels);
    const uint64_t H = static_cast<uint64_t>(model.proj_student.hidden_dim);
    const uint64_t I = static_cast<uint64_t>(model.proj_student.in_dim);
    const uint64_t E = static_cast<uint64_t>(model.proj_student.out_dim);
    const std::vector<NamedParam> params = {
        {"view_affine_w", {D, C}, &model.view.affine_w},
        {"view_affine_b", {D}, &model.view.affine_b},
        {"view_mix_w", {D, D, 3, 3}, &model.view.mix_w},
        {"head_w", {student::kHeadOutputs, D}, &model.head.w},
        {"head_b", {student::kHeadOutputs}, &model.head.b},
        {"proj_student_w1", {H, I}, &model.proj_student.w1},
        {"proj_student_b1", {H}, &model.proj_student.b1},
        {"proj_student_w2", {E, H}, &model.proj_student.w2},
        {"proj_student_b2", {E}, &model.proj_student.b2},
        {"proj_teacher_w1", {H, I}, &model.proj_teacher.w1},
        {"proj_teacher_b1", {H}, &model.proj_teacher.b1},
        {"proj_teacher_w2", {E, H}, &model.proj_teacher.w2},
        {"proj_teacher_b2", {E}, &model.proj_teacher.b2},
    };
    write_params(dir, params, info);
}

std::pair<student::StudentModel, CheckpointInfo> load_student_checkpoint(
    const std::string& dir) {
    CheckpointInfo info;
    const json manifest = read_manifest(dir, info);
    student::StudentModel model;
    model.init_seed = info.seed;

    std::vector<uint64_t> shape;
    model.view.affine_w = read_param(dir, manifest, "view_affine_w", &shape);
    model.view.channels = static_cast<int>(shape.at(0));
    model.view.obs_channels = static_cast<int>(shape.at(1));
    model.view.affine_b = read_param(dir, manifest, "view_affine_b", nullptr);
    model.view.mix_w = read_param(dir, manifest, "view_mix_w", nullptr);
    model.head.w = read_param(dir, manifest, "head_w", &shape);
    model.head.channels = static_cast<int>(shape.at(1));
    model.head.b = read_param(dir, manifest, "head_b", nullptr);
    fill_projection(model.proj_student, dir, manifest, "proj_student");
    fill_projection(model.proj_teacher, dir, manifest, "proj_teacher");
    model.proj_teacher.frozen = true;
    return {std::move(model), info};
}

void save_teacher_head(const std::string& dir, const student::HeadParamsT<float>& head,
                       const CheckpointInfo& info) {
    const uint64_t D = static_cast<uint64_t>(head.channels);
    const std::vector<NamedParam> params = {
        {"head_w", {student::kHeadOutputs, D}, &head.w},
        {"head_b", {student::kHeadOutputs}, &head.b},
    };
    write_params(dir, params, info);
}

std::pair<student::HeadParamsT<float>, CheckpointInfo> load_teacher_head(
    const std::string& dir) {
    CheckpointInfo info;
    const json manifest = read_manifest(dir, info);
    student::HeadParamsT<float> head;
    std::vector<uint64_t> shape;
    head.w = read_param(dir, manifest, "head_w", &shape);
    head.channels = static_cast<int>(shape.at(1));
    head.b = read_param(dir, manifest, "head_b", nullptr);
    return {std::move(head), info};
}

} // namespace bevkit

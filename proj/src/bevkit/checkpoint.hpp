#pragma once

#include "bevkit/student/student.hpp"

#include <string>
#include <utility>

namespace bevkit {

// Checkpoint manifests carry the stage tag and the config identity so
// artifacts from different configs cannot be mixed silently.
struct CheckpointInfo {
    std::string stage;      // scratch | pretrained | finetuned | teacher_head
    std::string init_stage; // for finetuned checkpoints: scratch | pretrained
    std::string config_hash;
    std::string data_hash;
    uint64_t seed = 0;
};

void save_student_checkpoint(const std::string& dir, const student::StudentModel& model,
                             const CheckpointInfo& info);
std::pair<student::StudentModel, CheckpointInfo> load_student_checkpoint(const std::string& dir);

void save_teacher_head(const std::string& dir, const student::HeadParamsT<float>& head,
                       const CheckpointInfo& info);
std::pair<student::HeadParamsT<float>, CheckpointInfo> load_teacher_head(const std::string& dir);

} // namespace bevkit

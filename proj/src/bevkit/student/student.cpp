#include "bevkit/student/student.hpp"

namespace bevkit::student {

StudentModel make_student(int obs_channels, int channels, int roi_size, int proj_hidden,
                          int embed_dim, uint64_t seed) {
    StudentModel model;
    model.init_seed = seed;
    model.view = make_view_params<float>(obs_channels, channels, hash_combine(seed, 1));
    model.head = make_head_params<float>(channels, hash_combine(seed, 2));
    const int in_dim = channels * roi_size * roi_size;
    // Both projection heads start from the same draw; the teacher-side one
    // is then frozen, so a perfect student yields zero correlation loss at
    // step zero.
    model.proj_student =
        loss::make_projection_head<float>(in_dim, proj_hidden, embed_dim, hash_combine(seed, 3));
    model.proj_teacher = model.proj_student;
    model.proj_teacher.frozen = true;
    return model;
}

void inherit_head(StudentModel& model, const HeadParamsT<float>& teacher_head) {
    if (teacher_head.channels != model.head.channels)
        throw std::invalid_argument("inherit_head: head shape mismatch");
    model.head.w = teacher_head.w;
    model.head.b = teacher_head.b;
}

} // namespace bevkit::student

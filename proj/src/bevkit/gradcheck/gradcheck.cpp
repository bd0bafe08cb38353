#include "bevkit/gradcheck/gradcheck.hpp"

#include "bevkit/core/rng.hpp"
#include "bevkit/loss/losses.hpp"
#include "bevkit/student/detection.hpp"
#include "bevkit/student/student.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <functional>
#include <sstream>

namespace bevkit::gradcheck {

namespace {

using bevkit::FeatureMapT;
using bevkit::MaskT;
using loss::ProjectionHeadT;

struct Checker {
    const GradCheckConfig& cfg;
    std::vector<TermReport>& terms;

    TermReport& term(const std::string& name) {
        for (TermReport& t : terms)
            if (t.term == name) return t;
        terms.push_back(TermReport{name});
        return terms.back();
    }

    // Central differences against the analytic value, coordinate by
    // coordinate over one parameter buffer.
    void check_buffer(const std::string& name, std::vector<double>& values,
                      const std::vector<double>& analytic,
                      const std::function<double()>& eval) {
        TermReport& report = term(name);
        for (size_t k = 0; k < values.size(); ++k) {
            const double saved = values[k];
            values[k] = saved + cfg.fd_step;
            const double up = eval();
            values[k] = saved - cfg.fd_step;
            const double down = eval();
            values[k] = saved;
            const double fd = (up - down) / (2.0 * cfg.fd_step);
            const double dev = std::abs(fd - analytic[k]);
            const double mag = std::max(std::abs(fd), std::abs(analytic[k]));
            const double rel = mag > 0.0 ? dev / mag : 0.0;
            ++report.checks;
            report.max_abs_dev = std::max(report.max_abs_dev, dev);
            if (dev > cfg.tol_abs) report.max_rel_dev = std::max(report.max_rel_dev, rel);
            if (dev > std::max(cfg.tol_abs, cfg.tol_rel * mag)) report.pass = false;
        }
    }
};

struct Instance {
    BevGridSpec spec;
    int channels = 0;
    FeatureMapT<double> student_map;
    FeatureMapT<double> teacher_map;
    MaskT<double> weights;
    std::vector<synth::Box3D> boxes;
    ProjectionHeadT<double> proj1, proj2;
    int roi_size = 3;
};

Instance make_instance(Rng& rng, bool l1_margin) {
    Instance inst;
    inst.spec.cells_x = static_cast<int>(rng.uniform_int(4, 16));
    inst.spec.cells_y = static_cast<int>(rng.uniform_int(4, 16));
    inst.spec.x_min = -8.0;
    inst.spec.x_max = 8.0;
    inst.spec.y_min = -8.0;
    inst.spec.y_max = 8.0;
    inst.channels = static_cast<int>(rng.uniform_int(2, 8));

    inst.student_map = FeatureMapT<double>(inst.spec, inst.channels);
    inst.teacher_map = FeatureMapT<double>(inst.spec, inst.channels);
    inst.weights = MaskT<double>(inst.spec);
    for (double& v : inst.student_map.data) v = rng.normal(0.0, 1.0);
    for (size_t k = 0; k < inst.teacher_map.data.size(); ++k) {
        if (l1_margin) {
            // Keep |teacher - student| away from the L1 kink so central
            // differences never straddle it.
            const double gap = 0.05 + std::abs(rng.normal(0.0, 1.0));
            inst.teacher_map.data[k] =
                inst.student_map.data[k] + (rng.uniform() < 0.5 ? -gap : gap);
        } else {
            inst.teacher_map.data[k] = rng.normal(0.0, 1.0);
        }
    }
    for (double& v : inst.weights.data) v = rng.uniform() < 0.3 ? 0.0 : rng.uniform(0.0, 2.0);

    const int n_boxes = static_cast<int>(rng.uniform_int(1, 4));
    for (int b = 0; b < n_boxes; ++b) {
        synth::Box3D box;
        box.x = rng.uniform(-5.0, 5.0);
        box.y = rng.uniform(-5.0, 5.0);
        box.w = rng.uniform(1.0, 3.0);
        box.l = rng.uniform(1.0, 4.0);
        box.h = rng.uniform(1.0, 2.0);
        box.z = box.h * 0.5;
        box.yaw = rng.uniform(-M_PI, M_PI);
        box.class_id = static_cast<int>(rng.uniform_int(0, 2));
        inst.boxes.push_back(box);
    }

    inst.roi_size = 3;
    const int in_dim = inst.channels * inst.roi_size * inst.roi_size;
    inst.proj1 = loss::make_projection_head<double>(in_dim, 16, 8, rng.next_u64());
    inst.proj2 = loss::make_projection_head<double>(in_dim, 16, 8, rng.next_u64());
    inst.proj2.frozen = true;
    return inst;
}

void check_rec_variant(Checker& ck, Rng& rng, loss::RecVariant variant,
                       const std::string& name) {
    Instance inst = make_instance(rng, variant == loss::RecVariant::L1);
    const auto result =
        loss::reconstruction_loss(inst.student_map, inst.teacher_map, inst.weights, variant);
    auto eval = [&]() {
        return loss::reconstruction_loss(inst.student_map, inst.teacher_map, inst.weights,
                                         variant)
            .loss;
    };
    ck.check_buffer(name + " d/dS", inst.student_map.data, result.grad_student.data, eval);
}

void check_correlation(Checker& ck, Rng& rng) {
    Instance inst = make_instance(rng, false);
    const auto result =
        loss::correlation_loss(inst.student_map, inst.teacher_map, inst.boxes, inst.proj1,
                               inst.proj2, inst.roi_size, 1.0);
    auto eval = [&]() {
        return loss::correlation_loss(inst.student_map, inst.teacher_map, inst.boxes,
                                      inst.proj1, inst.proj2, inst.roi_size, 1.0)
            .loss;
    };
    ck.check_buffer("corr d/dS", inst.student_map.data, result.grad_student.data, eval);
    ck.check_buffer("corr d/dproj.w1", inst.proj1.w1, result.grad_proj1.w1, eval);
    ck.check_buffer("corr d/dproj.b1", inst.proj1.b1, result.grad_proj1.b1, eval);
    ck.check_buffer("corr d/dproj.w2", inst.proj1.w2, result.grad_proj1.w2, eval);
    ck.check_buffer("corr d/dproj.b2", inst.proj1.b2, result.grad_proj1.b2, eval);
}

void check_combined(Checker& ck, Rng& rng, bool standardize) {
    Instance inst = make_instance(rng, false);
    loss::PretrainLossConfig cfg;
    cfg.lambda_rec = rng.uniform(0.2, 2.0);
    cfg.lambda_corr = rng.uniform(0.2, 2.0);
    cfg.roi_size = inst.roi_size;
    cfg.standardize_student = standardize;
    const auto result = loss::pretrain_loss(inst.student_map, inst.teacher_map, inst.boxes,
                                            inst.weights, inst.proj1, inst.proj2, cfg);
    auto eval = [&]() {
        return loss::pretrain_loss(inst.student_map, inst.teacher_map, inst.boxes,
                                   inst.weights, inst.proj1, inst.proj2, cfg)
            .l_total;
    };
    const std::string tag = standardize ? "combined+std" : "combined";
    ck.check_buffer(tag + " d/dS", inst.student_map.data, result.grad_student.data, eval);
    ck.check_buffer(tag + " d/dproj.w1", inst.proj1.w1, result.grad_proj1.w1, eval);
    ck.check_buffer(tag + " d/dproj.b2", inst.proj1.b2, result.grad_proj1.b2, eval);
}

void check_student_forward(Checker& ck, Rng& rng) {
    // End-to-end: combined objective through the view transform.
    BevGridSpec spec;
    spec.cells_x = 8;
    spec.cells_y = 8;
    spec.x_min = spec.y_min = -8.0;
    spec.x_max = spec.y_max = 8.0;
    const int D = 4;
    const int C = 4;

    FeatureMapT<double> obs(spec, C);
    for (double& v : obs.data) v = rng.normal(0.0, 1.0);
    FeatureMapT<double> teacher(spec, D);
    for (double& v : teacher.data) v = rng.normal(0.0, 1.0);
    MaskT<double> weights(spec);
    for (double& v : weights.data) v = rng.uniform(0.0, 1.5);
    std::vector<synth::Box3D> boxes;
    synth::Box3D box;
    box.x = rng.uniform(-4.0, 4.0);
    box.y = rng.uniform(-4.0, 4.0);
    box.w = 2.0;
    box.l = 3.0;
    box.h = 1.5;
    box.z = 0.75;
    box.yaw = rng.uniform(-M_PI, M_PI);
    boxes.push_back(box);

    auto view = student::make_view_params<double>(C, D, rng.next_u64());
    const int roi = 3;
    auto proj1 = loss::make_projection_head<double>(D * roi * roi, 12, 6, rng.next_u64());
    auto proj2 = loss::make_projection_head<double>(D * roi * roi, 12, 6, rng.next_u64());
    loss::PretrainLossConfig cfg;
    cfg.roi_size = roi;

    auto eval = [&]() {
        const auto trace = student::view_forward(view, obs);
        return loss::pretrain_loss(trace.out, teacher, boxes, weights, proj1, proj2, cfg)
            .l_total;
    };
    const auto trace = student::view_forward(view, obs);
    const auto report =
        loss::pretrain_loss(trace.out, teacher, boxes, weights, proj1, proj2, cfg);
    student::ViewGrads<double> grads;
    grads.resize_like(view);
    student::view_backward(view, obs, trace, report.grad_student, grads);

    ck.check_buffer("student_forward d/daffine_w", view.affine_w, grads.affine_w, eval);
    ck.check_buffer("student_forward d/daffine_b", view.affine_b, grads.affine_b, eval);
    ck.check_buffer("student_forward d/dmix_w", view.mix_w, grads.mix_w, eval);
}

void check_head(Checker& ck, Rng& rng) {
    BevGridSpec spec;
    spec.cells_x = static_cast<int>(rng.uniform_int(4, 12));
    spec.cells_y = static_cast<int>(rng.uniform_int(4, 12));
    spec.x_min = spec.y_min = -8.0;
    spec.x_max = spec.y_max = 8.0;
    const int D = static_cast<int>(rng.uniform_int(2, 8));

    FeatureMapT<double> features(spec, D);
    for (double& v : features.data) v = rng.normal(0.0, 1.0);
    auto head = student::make_head_params<double>(D, rng.next_u64());

    synth::SceneTruth scene;
    scene.ground_extent = spec;
    const int n_boxes = static_cast<int>(rng.uniform_int(0, 3));
    for (int b = 0; b < n_boxes; ++b) {
        synth::Box3D box;
        box.x = rng.uniform(-5.0, 5.0);
        box.y = rng.uniform(-5.0, 5.0);
        box.w = rng.uniform(1.0, 2.5);
        box.l = rng.uniform(1.5, 4.0);
        box.h = 1.5;
        box.z = 0.75;
        box.yaw = rng.uniform(-M_PI, M_PI);
        scene.boxes.push_back(box);
    }
    const auto targets = student::encode_detection_targets<double>(scene, spec);

    auto eval = [&]() {
        const auto pred = student::head_forward(head, features);
        return student::detection_surrogate_loss(pred, targets, 1.0, 1.0).loss;
    };
    const auto pred = student::head_forward(head, features);
    const auto loss = student::detection_surrogate_loss(pred, targets, 1.0, 1.0);
    student::HeadGrads<double> head_grads;
    head_grads.resize_like(head);
    FeatureMapT<double> grad_features(spec, D);
    student::head_backward(head, features, loss.grad_pred, &head_grads, &grad_features);

    ck.check_buffer("head d/dw", head.w, head_grads.w, eval);
    ck.check_buffer("head d/db", head.b, head_grads.b, eval);
    ck.check_buffer("head d/dF", features.data, grad_features.data, eval);
}

} // namespace

GradCheckReport run_gradcheck(const GradCheckConfig& cfg) {
    const auto start = std::chrono::steady_clock::now();
    GradCheckReport report;
    Checker ck{cfg, report.terms};
    Rng rng(hash_combine(cfg.seed, 0x90ADC3ECull));

    for (int inst = 0; inst < cfg.instances; ++inst) {
        check_rec_variant(ck, rng, loss::RecVariant::L2, "rec_l2");
        check_rec_variant(ck, rng, loss::RecVariant::L1, "rec_l1");
        check_rec_variant(ck, rng, loss::RecVariant::KL, "rec_kl");
        check_correlation(ck, rng);
        check_combined(ck, rng, false);
        if (inst % 5 == 0) check_combined(ck, rng, true);
        check_student_forward(ck, rng);
        check_head(ck, rng);
    }

    report.pass = true;
    for (const TermReport& t : report.terms)
        if (!t.pass) report.pass = false;
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

std::string report_to_json(const GradCheckReport& report) {
    nlohmann::json j;
    j["pass"] = report.pass;
    j["wall_seconds"] = report.wall_seconds;
    nlohmann::json terms = nlohmann::json::array();
    for (const TermReport& t : report.terms)
        terms.push_back({{"term", t.term},
                         {"checks", t.checks},
                         {"max_abs_dev", t.max_abs_dev},
                         {"max_rel_dev", t.max_rel_dev},
                         {"pass", t.pass}});
    j["terms"] = terms;
    return j.dump(2) + "\n";
}

std::string report_to_text(const GradCheckReport& report) {
    std::ostringstream os;
    for (const TermReport& t : report.terms) {
        char line[160];
        snprintf(line, sizeof(line), "%-28s checks=%8llu max_abs=%.3e max_rel=%.3e %s\n",
                 t.term.c_str(), static_cast<unsigned long long>(t.checks), t.max_abs_dev,
                 t.max_rel_dev, t.pass ? "ok" : "FAIL");
        os << line;
    }
    os << (report.pass ? "gradcheck: PASS" : "gradcheck: FAIL") << " ("
       << report.wall_seconds << " s)\n";
    return os.str();
}

} // namespace bevkit::gradcheck

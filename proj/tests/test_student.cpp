#include "bevkit/core/rng.hpp"
#include "bevkit/student/detection.hpp"
#include "bevkit/train/adamw.hpp"
#include "bevkit/student/fit_head.hpp"
#include "bevkit/student/student.hpp"
#include "bevkit/synth/scene.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace bevkit;
using namespace bevkit::student;

namespace {

BevGridSpec grid(int cells = 8, double half = 4.0) {
    BevGridSpec spec;
    spec.x_min = spec.y_min = -half;
    spec.x_max = spec.y_max = half;
    spec.cells_x = spec.cells_y = cells;
    return spec;
}

} // namespace

TEST_SUITE_BEGIN("student");

TEST_CASE("zero parameters give a zero map") {
    const auto spec = grid();
    ViewParamsT<float> view = make_view_params<float>(3, 4, 1);
    std::fill(view.affine_w.begin(), view.affine_w.end(), 0.0f);
    std::fill(view.affine_b.begin(), view.affine_b.end(), 0.0f);
    std::fill(view.mix_w.begin(), view.mix_w.end(), 0.0f);
    FeatureMapT<float> obs(spec, 3);
    Rng rng(2);
    for (float& v : obs.data) v = static_cast<float>(rng.normal(0.0, 1.0));
    const auto trace = view_forward(view, obs);
    for (float v : trace.out.data) CHECK(v == 0.0f);
}

TEST_CASE("identity affine with zero mixing reproduces the observation") {
    const auto spec = grid();
    const int d = 3;
    ViewParamsT<float> view = make_view_params<float>(d, d, 1);
    std::fill(view.affine_w.begin(), view.affine_w.end(), 0.0f);
    std::fill(view.affine_b.begin(), view.affine_b.end(), 0.0f);
    std::fill(view.mix_w.begin(), view.mix_w.end(), 0.0f);
    for (int k = 0; k < d; ++k) view.affine_w[static_cast<size_t>(k) * d + k] = 1.0f;
    FeatureMapT<float> obs(spec, d);
    Rng rng(3);
    for (float& v : obs.data) v = static_cast<float>(rng.normal(0.0, 1.0));
    const auto trace = view_forward(view, obs);
    CHECK(trace.out.data == obs.data);
}

TEST_CASE("forward is deterministic for a fixed seed") {
    const auto spec = grid();
    const auto view_a = make_view_params<float>(3, 4, 77);
    const auto view_b = make_view_params<float>(3, 4, 77);
    CHECK(view_a.affine_w == view_b.affine_w);
    CHECK(view_a.mix_w == view_b.mix_w);
    FeatureMapT<float> obs(spec, 3);
    Rng rng(4);
    for (float& v : obs.data) v = static_cast<float>(rng.normal(0.0, 1.0));
    CHECK(view_forward(view_a, obs).out.data == view_forward(view_b, obs).out.data);
}

TEST_CASE("head forward: zero params and bias-only structure") {
    const auto spec = grid();
    HeadParamsT<float> head = make_head_params<float>(4, 5);
    FeatureMapT<float> features(spec, 4);
    Rng rng(5);
    for (float& v : features.data) v = static_cast<float>(rng.normal(0.0, 1.0));

    SUBCASE("zero parameters give zero predictions") {
        std::fill(head.w.begin(), head.w.end(), 0.0f);
        std::fill(head.b.begin(), head.b.end(), 0.0f);
        for (float v : head_forward(head, features).data) CHECK(v == 0.0f);
    }
    SUBCASE("zero features reproduce the bias at every cell") {
        FeatureMapT<float> zeros(spec, 4);
        const auto pred = head_forward(head, zeros);
        const size_t cells = zeros.cell_count();
        for (int k = 0; k < kHeadOutputs; ++k)
            for (size_t cell = 0; cell < cells; ++cell)
                CHECK(pred.data[k * cells + cell] == doctest::Approx(head.b[k]));
    }
}

TEST_CASE("detection targets encode centers and regression values") {
    const auto spec = grid(16, 8.0); // cell size 1
    synth::SceneTruth scene;
    scene.ground_extent = spec;
    synth::Box3D box;
    box.x = 1.3;
    box.y = -2.7;
    box.w = 1.5;
    box.l = 3.0;
    box.h = 1.5;
    box.z = 0.75;
    box.yaw = 0.9;
    scene.boxes.push_back(box);

    const auto targets = encode_detection_targets<float>(scene, spec);
    REQUIRE(targets.positives.size() == 1);
    const auto& pos = targets.positives.front();
    const auto center = spec.grid_index(box.x, box.y);
    REQUIRE(center.has_value());
    CHECK(pos.i == center->first);
    CHECK(pos.j == center->second);
    CHECK(targets.heatmap.at(pos.i, pos.j) == 1.0f);
    CHECK(pos.targets[0] == doctest::Approx((box.x - spec.cell_center_x(pos.i))));
    CHECK(pos.targets[2] == doctest::Approx(std::log(box.w)));
    CHECK(pos.targets[3] == doctest::Approx(std::log(box.l)));
    CHECK(pos.targets[4] == doctest::Approx(std::sin(box.yaw)));
    CHECK(pos.targets[5] == doctest::Approx(std::cos(box.yaw)));

    // Heatmap decays away from the center.
    CHECK(targets.heatmap.at(pos.i + 3, pos.j) < 1.0f);
    CHECK(targets.heatmap.at(pos.i + 3, pos.j) >= 0.0f);
}

TEST_CASE("surrogate loss: exact targets with saturated objectness") {
    const auto spec = grid(16, 8.0);
    synth::SceneTruth scene;
    scene.ground_extent = spec;
    synth::Box3D box;
    box.x = 0.4;
    box.y = 0.2;
    box.w = 2.0;
    box.l = 4.0;
    box.h = 1.5;
    box.z = 0.75;
    box.yaw = -0.3;
    scene.boxes.push_back(box);
    const auto targets = encode_detection_targets<float>(scene, spec);

    FeatureMapT<float> pred(spec, kHeadOutputs);
    const size_t cells = pred.cell_count();
    // Saturate objectness toward the heatmap and write exact regression.
    for (size_t cell = 0; cell < cells; ++cell)
        pred.data[cell] = targets.heatmap.data[cell] >= 1.0f ? 30.0f : -30.0f;
    for (const auto& pos : targets.positives) {
        const size_t cell = static_cast<size_t>(pos.i) * spec.cells_y + pos.j;
        for (int r = 0; r < kRegressionDims; ++r)
            pred.data[(r + 1) * cells + cell] = static_cast<float>(pos.targets[r]);
    }
    const auto result = detection_surrogate_loss(pred, targets, 1.0, 1.0);
    CHECK(result.regression == doctest::Approx(0.0));
    CHECK(result.loss < 1e-3);
}

TEST_CASE("surrogate loss: empty scene with strong negative logits is tiny") {
    const auto spec = grid(16, 8.0);
    synth::SceneTruth scene;
    scene.ground_extent = spec;
    const auto targets = encode_detection_targets<float>(scene, spec);
    FeatureMapT<float> pred(spec, kHeadOutputs);
    const size_t cells = pred.cell_count();
    for (size_t cell = 0; cell < cells; ++cell) pred.data[cell] = -10.0f;
    const auto result = detection_surrogate_loss(pred, targets, 1.0, 1.0);
    CHECK(result.n_positive == 0);
    CHECK(result.loss < 1e-3);
}

TEST_CASE("head gradients match finite differences on a 4x4 grid") {
    const auto spec = grid(4, 2.0);
    const int d = 3;
    Rng rng(6);
    FeatureMapT<double> features(spec, d);
    for (double& v : features.data) v = rng.normal(0.0, 1.0);
    auto head = make_head_params<double>(d, 7);

    synth::SceneTruth scene;
    scene.ground_extent = spec;
    synth::Box3D box;
    box.x = 0.3;
    box.y = -0.2;
    box.w = 1.0;
    box.l = 1.5;
    box.h = 1.5;
    box.z = 0.75;
    box.yaw = 0.5;
    scene.boxes.push_back(box);
    const auto targets = encode_detection_targets<double>(scene, spec);

    auto eval = [&]() {
        return detection_surrogate_loss(head_forward(head, features), targets, 1.0, 1.0).loss;
    };
    const auto loss = detection_surrogate_loss(head_forward(head, features), targets, 1.0, 1.0);
    HeadGrads<double> grads;
    grads.resize_like(head);
    FeatureMapT<double> grad_features(spec, d);
    head_backward(head, features, loss.grad_pred, &grads, &grad_features);

    const double h = 1e-5;
    for (size_t k = 0; k < head.w.size(); ++k) {
        const double saved = head.w[k];
        head.w[k] = saved + h;
        const double up = eval();
        head.w[k] = saved - h;
        const double down = eval();
        head.w[k] = saved;
        CHECK(grads.w[k] == doctest::Approx((up - down) / (2 * h)).epsilon(1e-4));
    }
}

TEST_CASE("inherit_head copies deeply and idempotently") {
    auto model = make_student(3, 4, 3, 8, 4, 99);
    auto teacher = make_head_params<float>(4, 123);

    inherit_head(model, teacher);
    CHECK(model.head.w == teacher.w);
    CHECK(model.head.b == teacher.b);

    // Functional identity on random features.
    const auto spec = grid();
    Rng rng(8);
    FeatureMapT<float> features(spec, 4);
    for (float& v : features.data) v = static_cast<float>(rng.normal(0.0, 1.0));
    const auto a = head_forward(model.head, features);
    const auto b = head_forward(teacher, features);
    CHECK(a.data == b.data);

    // Idempotent.
    inherit_head(model, teacher);
    CHECK(model.head.w == teacher.w);

    // Deep copy: perturbing the donor leaves the student untouched.
    const auto snapshot = model.head.w;
    teacher.w[0] += 1.0f;
    CHECK(model.head.w == snapshot);

    auto wrong = make_head_params<float>(5, 3);
    CHECK_THROWS_AS(inherit_head(model, wrong), std::invalid_argument);
}

TEST_CASE("decode_boxes inverts the target encoding") {
    const auto spec = grid(16, 8.0);
    synth::SceneTruth scene;
    scene.ground_extent = spec;
    synth::Box3D box;
    box.x = 2.3;
    box.y = -1.6;
    box.w = 1.4;
    box.l = 3.2;
    box.h = 1.5;
    box.z = 0.75;
    box.yaw = 0.8;
    scene.boxes.push_back(box);
    const auto targets = encode_detection_targets<float>(scene, spec);

    FeatureMapT<float> pred(spec, kHeadOutputs);
    const size_t cells = pred.cell_count();
    for (size_t cell = 0; cell < cells; ++cell) pred.data[cell] = -10.0f;
    const auto& pos = targets.positives.front();
    const size_t cell = static_cast<size_t>(pos.i) * spec.cells_y + pos.j;
    pred.data[cell] = 6.0f;
    for (int r = 0; r < kRegressionDims; ++r)
        pred.data[(r + 1) * cells + cell] = static_cast<float>(pos.targets[r]);

    const auto decoded = decode_boxes(pred, 10);
    REQUIRE(decoded.size() == 1);
    CHECK(decoded[0].x == doctest::Approx(box.x).epsilon(1e-4));
    CHECK(decoded[0].y == doctest::Approx(box.y).epsilon(1e-4));
    CHECK(decoded[0].w == doctest::Approx(box.w).epsilon(1e-3));
    CHECK(decoded[0].l == doctest::Approx(box.l).epsilon(1e-3));
    CHECK(decoded[0].yaw == doctest::Approx(box.yaw).epsilon(1e-3));
}

TEST_CASE("fit_teacher_head descends and localizes the box") {
    const auto spec = grid(16, 8.0);
    synth::SceneTruth scene;
    scene.ground_extent = spec;
    synth::Box3D box;
    box.x = 1.8;
    box.y = 2.4;
    box.w = 1.6;
    box.l = 3.5;
    box.h = 1.5;
    box.z = 0.75;
    box.yaw = -0.6;
    scene.boxes.push_back(box);

    // A teacher-like feature stack: a strong peak at the center cell.
    FeatureMapT<float> features(spec, 4);
    const auto center = spec.grid_index(box.x, box.y);
    REQUIRE(center.has_value());
    Rng rng(10);
    for (float& v : features.data) v = static_cast<float>(rng.normal(0.0, 0.05));
    for (int d = 0; d < 4; ++d) features.at(d, center->first, center->second) += 2.0f;

    FitHeadOptions options;
    options.epochs = 300;
    options.lr = 2e-2;
    options.seed = 42;
    const std::vector<HeadFitSample> samples = {{&features, &scene}};
    const auto fit = fit_teacher_head(samples, options);
    CHECK(fit.final_loss < fit.initial_loss);
    CHECK(fit.final_loss < fit.zero_head_loss);

    // The fitted head's argmax objectness cell is the box center cell.
    const auto pred = head_forward(fit.head, features);
    int best_i = -1, best_j = -1;
    float best = -1e30f;
    for (int i = 0; i < spec.cells_x; ++i)
        for (int j = 0; j < spec.cells_y; ++j)
            if (pred.at(0, i, j) > best) {
                best = pred.at(0, i, j);
                best_i = i;
                best_j = j;
            }
    CHECK(best_i == center->first);
    CHECK(best_j == center->second);

    // Determinism.
    const auto fit2 = fit_teacher_head(samples, options);
    CHECK(fit2.head.w == fit.head.w);
    CHECK(fit2.head.b == fit.head.b);

    CHECK_THROWS_AS(fit_teacher_head({}, options), std::invalid_argument);
}

TEST_SUITE_END();

TEST_CASE("detection loss descends over 50 full-batch steps on one scene") {
    const auto spec = grid(16, 8.0);
    synth::SceneConfig scene_cfg;
    scene_cfg.min_boxes = scene_cfg.max_boxes = 2;
    const synth::SceneTruth scene = synth::generate_scene(scene_cfg, spec, 5);
    const auto targets = encode_detection_targets<float>(scene, spec);

    Rng rng(77);
    FeatureMapT<float> features(spec, 4);
    for (float& v : features.data) v = static_cast<float>(rng.normal(0.0, 0.5));
    auto head = make_head_params<float>(4, 9);

    // Full batch is the single scene; harness-tuned rate, no decay.
    train::AdamW opt({4e-3, 0.9, 0.999, 1e-8, 0.0});
    HeadGrads<float> grads;
    double prev = 1e300;
    for (int step = 0; step < 50; ++step) {
        const auto pred = head_forward(head, features);
        const auto loss = detection_surrogate_loss(pred, targets, 1.0, 1.0);
        CHECK(loss.loss <= prev + 1e-9);
        prev = loss.loss;
        grads.resize_like(head);
        head_backward<float>(head, features, loss.grad_pred, &grads, nullptr);
        const train::ParamView views[2] = {{"w", head.w, grads.w}, {"b", head.b, grads.b}};
        opt.step(views);
    }
    const auto final_loss =
        detection_surrogate_loss(head_forward(head, features), targets, 1.0, 1.0);
    CHECK(final_loss.loss < prev * 1.01);
}

TEST_SUITE_END();

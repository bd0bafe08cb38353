#include "bevkit/core/rng.hpp"
#include "bevkit/mask/mask_gen.hpp"
#include "bevkit/synth/lidar.hpp"
#include "bevkit/synth/scene.hpp"
#include "bevkit/synth/teacher.hpp"

#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

using namespace bevkit;
using namespace bevkit::mask;

namespace {

BevGridSpec grid(int cells = 16, double half = 8.0) {
    BevGridSpec spec;
    spec.x_min = spec.y_min = -half;
    spec.x_max = spec.y_max = half;
    spec.cells_x = spec.cells_y = cells;
    return spec;
}

BevGridSpec paper_grid() {
    BevGridSpec spec;
    spec.x_min = spec.y_min = -51.2;
    spec.x_max = spec.y_max = 51.2;
    spec.cells_x = spec.cells_y = 128;
    return spec;
}

PointCloud cloud_of(const std::vector<std::array<double, 3>>& pts) {
    PointCloud cloud;
    cloud.extra_channels = 0;
    for (const auto& p : pts) {
        cloud.data.push_back(static_cast<float>(p[0]));
        cloud.data.push_back(static_cast<float>(p[1]));
        cloud.data.push_back(static_cast<float>(p[2]));
    }
    return cloud;
}

} // namespace

TEST_SUITE_BEGIN("mask_gen");

TEST_CASE("gaussian kernel is normalized and symmetric") {
    const GaussianKernel k = make_gaussian_kernel(1.0);
    double sum = 0.0;
    for (double w : k.weights) sum += w;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    // Quarter-turn and reflection symmetry.
    CHECK(k.at(-1, 0) == doctest::Approx(k.at(0, -1)));
    CHECK(k.at(-1, 0) == doctest::Approx(k.at(1, 0)));
    CHECK(k.at(-1, -1) == doctest::Approx(k.at(1, 1)));
    CHECK(k.at(-1, 1) == doctest::Approx(k.at(1, -1)));
    CHECK(k.at(0, 0) > k.at(0, 1));
    CHECK_THROWS_AS(make_gaussian_kernel(0.0), std::invalid_argument);
}

TEST_CASE("count_points matches grid binning") {
    const auto spec = paper_grid();
    SUBCASE("empty cloud") {
        const WeightMask counts = count_points(PointCloud{}, spec);
        for (float v : counts.data) CHECK(v == 0.0f);
    }
    SUBCASE("five identical points at the origin") {
        const auto cloud = cloud_of({{0, 0, 0}, {0, 0, 0}, {0, 0, 0}, {0, 0, 0}, {0, 0, 0}});
        const WeightMask counts = count_points(cloud, spec);
        CHECK(counts.at(64, 64) == 5.0f);
        double total = 0;
        for (float v : counts.data) total += v;
        CHECK(total == 5.0);
    }
    SUBCASE("sum equals the number of in-range points") {
        Rng rng(3);
        PointCloud cloud;
        cloud.extra_channels = 0;
        int in_range = 0;
        for (int p = 0; p < 500; ++p) {
            const double x = rng.uniform(-60.0, 60.0);
            const double y = rng.uniform(-60.0, 60.0);
            cloud.data.insert(cloud.data.end(), {static_cast<float>(x), static_cast<float>(y), 0.0f});
            if (spec.grid_index(x, y)) ++in_range;
        }
        const WeightMask counts = count_points(cloud, spec);
        double total = 0;
        for (float v : counts.data) total += v;
        CHECK(total == static_cast<double>(in_range));
    }
}

TEST_CASE("smooth_counts impulse response stamps the kernel") {
    const auto spec = grid();
    const GaussianKernel kernel = make_gaussian_kernel(1.0);
    WeightMask impulse(spec, 0.0f);
    impulse.at(7, 8) = 1.0f;
    const WeightMask smoothed = smooth_counts(impulse, kernel);
    double mass = 0.0;
    for (int i = 0; i < spec.cells_x; ++i)
        for (int j = 0; j < spec.cells_y; ++j) {
            const int di = i - 7, dj = j - 8;
            const double expected =
                (std::abs(di) <= 1 && std::abs(dj) <= 1) ? kernel.at(di, dj) : 0.0;
            CHECK(smoothed.at(i, j) == doctest::Approx(expected).epsilon(1e-6));
            mass += smoothed.at(i, j);
        }
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("smooth_counts matches a direct summation oracle and preserves mass") {
    const auto spec = grid();
    const GaussianKernel kernel = make_gaussian_kernel(1.3);
    Rng rng(11);
    WeightMask m(spec, 0.0f);
    for (float& v : m.data) v = static_cast<float>(rng.uniform_int(0, 9));
    const WeightMask smoothed = smooth_counts(m, kernel);

    double in_mass = 0.0, out_mass = 0.0;
    for (int i = 0; i < spec.cells_x; ++i) {
        for (int j = 0; j < spec.cells_y; ++j) {
            double acc = 0.0;
            for (int di = -1; di <= 1; ++di)
                for (int dj = -1; dj <= 1; ++dj) {
                    const int ii = i + di, jj = j + dj;
                    if (ii < 0 || ii >= spec.cells_x || jj < 0 || jj >= spec.cells_y) continue;
                    acc += kernel.at(di, dj) * m.at(ii, jj);
                }
            CHECK(smoothed.at(i, j) == doctest::Approx(acc).epsilon(1e-5));
            in_mass += m.at(i, j);
            out_mass += smoothed.at(i, j);
        }
    }
    // Zero padding can only leak mass outward.
    CHECK(out_mass <= in_mass + 1e-6);

    // With support away from the border the mass is preserved exactly.
    WeightMask interior(spec, 0.0f);
    for (int i = 3; i < 13; ++i)
        for (int j = 3; j < 13; ++j) interior.at(i, j) = static_cast<float>(rng.uniform_int(0, 5));
    const WeightMask smoothed_interior = smooth_counts(interior, kernel);
    double a = 0, b = 0;
    for (size_t k = 0; k < interior.data.size(); ++k) {
        a += interior.data[k];
        b += smoothed_interior.data[k];
    }
    CHECK(b == doctest::Approx(a).epsilon(1e-6));
}

TEST_CASE("feature response reduction matches the per-cell L2 oracle") {
    const auto spec = grid(4, 2.0);
    // Known single-channel map whose |values| span [0, 1].
    BevFeatureMap f(spec, 1);
    Rng rng(5);
    for (float& v : f.data) v = static_cast<float>(rng.uniform(-1.0, 1.0));
    f.data[0] = 0.0f;
    f.data[1] = -1.0f;

    SUBCASE("single channel, unit smoothed counts: c equals |f|") {
        WeightMask ones(spec, 1.0f);
        const WeightMask c = prior_response(ones, f);
        for (size_t k = 0; k < c.data.size(); ++k)
            CHECK(c.data[k] == doctest::Approx(std::abs(f.data[k])).epsilon(1e-6));
    }
    SUBCASE("zero features or zero counts give zero response") {
        BevFeatureMap zeros(spec, 3);
        WeightMask ones(spec, 1.0f);
        for (float v : prior_response(ones, zeros).data) CHECK(v == 0.0f);
        WeightMask zero_counts(spec, 0.0f);
        for (float v : prior_response(zero_counts, f).data) CHECK(v == 0.0f);
    }
    SUBCASE("multichannel reduction in min-max normalized") {
        BevFeatureMap multi(spec, 3);
        for (float& v : multi.data) v = static_cast<float>(rng.normal(0.0, 2.0));
        const WeightMask response = feature_response(multi);
        double lo = 1e300, hi = -1e300;
        for (int i = 0; i < spec.cells_x; ++i)
            for (int j = 0; j < spec.cells_y; ++j) {
                double sq = 0;
                for (int d = 0; d < 3; ++d) sq += static_cast<double>(multi.at(d, i, j)) * multi.at(d, i, j);
                lo = std::min(lo, std::sqrt(sq));
                hi = std::max(hi, std::sqrt(sq));
            }
        for (int i = 0; i < spec.cells_x; ++i)
            for (int j = 0; j < spec.cells_y; ++j) {
                double sq = 0;
                for (int d = 0; d < 3; ++d) sq += static_cast<double>(multi.at(d, i, j)) * multi.at(d, i, j);
                const double expected = (std::sqrt(sq) - lo) / (hi - lo);
                CHECK(response.at(i, j) == doctest::Approx(expected).epsilon(1e-5));
            }
    }
}

TEST_CASE("gate_mask thresholds inclusively") {
    const auto spec = grid(8, 4.0);
    Rng rng(9);
    WeightMask c(spec, 0.0f);
    for (float& v : c.data) v = static_cast<float>(rng.uniform(0.0, 1.0));

    SUBCASE("threshold zero opens everything") {
        for (float v : gate_mask(c, 0.0).data) CHECK(v == 1.0f);
    }
    SUBCASE("huge threshold closes everything") {
        for (float v : gate_mask(c, 1e30).data) CHECK(v == 0.0f);
    }
    SUBCASE("median threshold selects the upper half-set, by sort oracle") {
        std::vector<float> sorted(c.data.begin(), c.data.end());
        std::sort(sorted.begin(), sorted.end());
        const double median = sorted[sorted.size() / 2];
        const WeightMask gate = gate_mask(c, median);
        for (size_t k = 0; k < c.data.size(); ++k)
            CHECK(gate.data[k] == (c.data[k] >= median ? 1.0f : 0.0f));
    }
}

TEST_CASE("gate threshold quantile over nonzero responses") {
    const auto spec = grid(4, 2.0);
    WeightMask c(spec, 0.0f);
    // Ten nonzero values 1..10, rest zero.
    for (int k = 0; k < 10; ++k) c.data[k] = static_cast<float>(k + 1);
    CHECK(gate_threshold_quantile(c, 0.0) == doctest::Approx(1.0));
    CHECK(gate_threshold_quantile(c, 0.6) == doctest::Approx(7.0));
    CHECK(gate_threshold_quantile(c, 1.0) == doctest::Approx(10.0));
    WeightMask zeros(spec, 0.0f);
    CHECK(std::isinf(gate_threshold_quantile(zeros, 0.6)));
}

TEST_CASE("regularize_weights formulas and monotonicity") {
    const auto spec = grid(8, 4.0);
    MaskConfig cfg;

    SUBCASE("log: zero stays zero and R = 1 at e - 1") {
        WeightMask m(spec, 0.0f);
        m.data[0] = static_cast<float>(std::exp(1.0) - 1.0);
        m.data[1] = 0.0f;
        WeightMask gate(spec, 1.0f);
        cfg.regularizer = Regularizer::Log;
        const WeightMask r = regularize_weights(m, gate, cfg);
        CHECK(std::abs(r.data[0] - 1.0) < 1e-6);
        CHECK(r.data[1] == 0.0f);
    }
    SUBCASE("gated-out cells are exactly zero for every regularizer") {
        Rng rng(2);
        WeightMask m(spec, 0.0f);
        for (float& v : m.data) v = static_cast<float>(rng.uniform(0.0, 50.0));
        WeightMask gate(spec, 0.0f);
        for (size_t k = 0; k < gate.data.size(); k += 2) gate.data[k] = 1.0f;
        for (Regularizer reg : {Regularizer::None, Regularizer::Sigmoid, Regularizer::Log}) {
            cfg.regularizer = reg;
            const WeightMask r = regularize_weights(m, gate, cfg);
            for (size_t k = 0; k < r.data.size(); ++k) {
                if (gate.data[k] == 0.0f) CHECK(r.data[k] == 0.0f);
                CHECK(r.data[k] >= 0.0f);
                CHECK(std::isfinite(r.data[k]));
            }
        }
    }
    SUBCASE("monotone in the counts for fixed gating") {
        Rng rng(4);
        for (int trial = 0; trial < 200; ++trial) {
            WeightMask lo(spec, 0.0f), hi(spec, 0.0f), gate(spec, 0.0f);
            for (size_t k = 0; k < lo.data.size(); ++k) {
                lo.data[k] = static_cast<float>(rng.uniform(0.0, 20.0));
                hi.data[k] = lo.data[k] + static_cast<float>(rng.uniform(0.0, 20.0));
                gate.data[k] = rng.uniform() < 0.5 ? 1.0f : 0.0f;
            }
            for (Regularizer reg : {Regularizer::None, Regularizer::Sigmoid, Regularizer::Log}) {
                cfg.regularizer = reg;
                const WeightMask r_lo = regularize_weights(lo, gate, cfg);
                const WeightMask r_hi = regularize_weights(hi, gate, cfg);
                for (size_t k = 0; k < r_lo.data.size(); ++k)
                    CHECK(r_lo.data[k] <= r_hi.data[k] + 1e-7f);
            }
        }
    }
}

TEST_CASE("build_mask equals the step-by-step chain bit-exactly") {
    const auto spec = grid(32, 25.6);
    synth::SceneConfig scene_cfg;
    const synth::SceneTruth scene = synth::generate_scene(scene_cfg, spec, 3);
    const PointCloud cloud = synth::simulate_lidar(scene, synth::LidarConfig{}, 3);
    const auto scales = synth::teacher_channel_scales(synth::TeacherConfig{}, 6, 3);
    const BevFeatureMap teacher =
        synth::render_teacher_bev(scene, cloud, spec, 6, synth::TeacherConfig{}, scales);

    MaskConfig cfg;
    cfg.regularizer = Regularizer::Log;
    const WeightMask direct = build_mask(cloud, teacher, spec, cfg);

    const WeightMask counts = count_points(cloud, spec);
    const WeightMask smoothed = smooth_counts(counts, make_gaussian_kernel(cfg.sigma));
    const WeightMask c = prior_response(smoothed, teacher);
    const double theta = gate_threshold_quantile(c, cfg.gate_quantile);
    const WeightMask gate = gate_mask(c, theta);
    const WeightMask chained = regularize_weights(smoothed, gate, cfg);
    CHECK(direct.data == chained.data);

    SUBCASE("empty cloud gives a zero mask") {
        const WeightMask empty = build_mask(PointCloud{}, teacher, spec, cfg);
        for (float v : empty.data) CHECK(v == 0.0f);
    }
}

TEST_CASE("near boxes receive more mask weight than far boxes") {
    BevGridSpec spec;
    spec.x_min = spec.y_min = -51.2;
    spec.x_max = spec.y_max = 51.2;
    spec.cells_x = spec.cells_y = 64;

    synth::SceneTruth scene;
    scene.ground_extent = spec;
    synth::Box3D near_box;
    near_box.x = 6.0;
    near_box.y = 0.0;
    near_box.w = 2.0;
    near_box.l = 4.5;
    near_box.h = 1.6;
    near_box.z = 0.8;
    synth::Box3D far_box = near_box;
    far_box.x = 44.0;
    scene.boxes = {near_box, far_box};

    const PointCloud cloud = simulate_lidar(scene, synth::LidarConfig{}, 8);
    const auto scales = synth::teacher_channel_scales(synth::TeacherConfig{}, 6, 8);
    const BevFeatureMap teacher =
        synth::render_teacher_bev(scene, cloud, spec, 6, synth::TeacherConfig{}, scales);
    const WeightMask r = build_mask(cloud, teacher, spec, MaskConfig{});

    auto mean_around = [&](const synth::Box3D& box) {
        double total = 0.0;
        int n = 0;
        for (int i = 0; i < spec.cells_x; ++i)
            for (int j = 0; j < spec.cells_y; ++j) {
                const double dx = spec.cell_center_x(i) - box.x;
                const double dy = spec.cell_center_y(j) - box.y;
                if (std::hypot(dx, dy) <= 0.5 * std::hypot(box.w, box.l)) {
                    total += r.at(i, j);
                    ++n;
                }
            }
        return total / std::max(1, n);
    };
    CHECK(mean_around(near_box) >= mean_around(far_box));
}

TEST_SUITE_END();

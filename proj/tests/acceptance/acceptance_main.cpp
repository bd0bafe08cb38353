// Acceptance suite: one verifiable criterion per runner, each printing a
// single PASS/FAIL line. Exit status is nonzero when any selected
// criterion fails.
#include "bevkit/config.hpp"
#include "bevkit/core/rng.hpp"
#include "bevkit/gradcheck/gradcheck.hpp"
#include "bevkit/loss/footprint.hpp"
#include "bevkit/loss/losses.hpp"
#include "bevkit/loss/roi_align.hpp"
#include "bevkit/mask/mask_gen.hpp"
#include "bevkit/student/student.hpp"
#include "bevkit/synth/lidar.hpp"
#include "bevkit/synth/scene.hpp"
#include "bevkit/synth/teacher.hpp"
#include "bevkit/train/ablation.hpp"
#include "bevkit/train/dataset.hpp"
#include "bevkit/train/trainer.hpp"
#include "bevkit/whiten/whitening.hpp"

#include <bevkit.h>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

using namespace bevkit;
namespace fs = std::filesystem;

namespace {

int g_threads = 1;

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

// ---------------------------------------------------------------- C1 ----
Outcome c1_gradient_oracle() {
    const auto start = std::chrono::steady_clock::now();
    gradcheck::GradCheckConfig cfg;
    cfg.instances = 20;
    const auto report = gradcheck::run_gradcheck(cfg);
    const double wall = seconds_since(start);

    double worst_abs = 0.0;
    uint64_t checks = 0;
    bool pass = report.pass;
    for (const auto& term : report.terms) {
        worst_abs = std::max(worst_abs, term.max_abs_dev);
        checks += term.checks;
        if (!term.pass) pass = false;
    }
    if (wall >= 60.0) pass = false;
    std::ostringstream detail;
    detail << checks << " coordinate checks over " << report.terms.size()
           << " terms, max abs dev " << worst_abs << ", " << wall << " s";
    return {pass, detail.str()};
}

// ---------------------------------------------------------------- C2 ----
Outcome c2_mask_chain() {
    const auto start = std::chrono::steady_clock::now();
    bool pass = true;
    std::ostringstream detail;
    Rng rng(0xC2);

    BevGridSpec spec;
    spec.x_min = spec.y_min = -8.0;
    spec.x_max = spec.y_max = 8.0;
    spec.cells_x = spec.cells_y = 16;

    // Impulse response equals the normalized kernel.
    for (double sigma : {0.6, 1.0, 1.7}) {
        const mask::GaussianKernel kernel = mask::make_gaussian_kernel(sigma);
        WeightMask impulse(spec, 0.0f);
        impulse.at(8, 8) = 1.0f;
        const WeightMask smoothed = mask::smooth_counts(impulse, kernel);
        for (int i = 0; i < 16; ++i)
            for (int j = 0; j < 16; ++j) {
                const int di = i - 8, dj = j - 8;
                const double expected =
                    (std::abs(di) <= 1 && std::abs(dj) <= 1) ? kernel.at(di, dj) : 0.0;
                if (std::abs(smoothed.at(i, j) - expected) > 1e-6) pass = false;
            }
    }

    // R is zero on gated-out cells, monotone in the counts (1000 pairs).
    for (int trial = 0; trial < 1000; ++trial) {
        WeightMask lo(spec, 0.0f), hi(spec, 0.0f), gate(spec, 0.0f);
        for (size_t k = 0; k < lo.data.size(); ++k) {
            lo.data[k] = static_cast<float>(rng.uniform(0.0, 30.0));
            hi.data[k] = lo.data[k] + static_cast<float>(rng.uniform(0.0, 30.0));
            gate.data[k] = rng.uniform() < 0.5 ? 1.0f : 0.0f;
        }
        for (mask::Regularizer reg : {mask::Regularizer::None, mask::Regularizer::Sigmoid,
                                      mask::Regularizer::Log}) {
            mask::MaskConfig cfg;
            cfg.regularizer = reg;
            const WeightMask r_lo = mask::regularize_weights(lo, gate, cfg);
            const WeightMask r_hi = mask::regularize_weights(hi, gate, cfg);
            for (size_t k = 0; k < r_lo.data.size(); ++k) {
                if (gate.data[k] == 0.0f && (r_lo.data[k] != 0.0f || r_hi.data[k] != 0.0f))
                    pass = false;
                if (r_lo.data[k] > r_hi.data[k] + 1e-7f) pass = false;
                if (!std::isfinite(r_lo.data[k]) || r_lo.data[k] < 0.0f) pass = false;
            }
        }
    }

    // sqrt-ln identity at e - 1.
    {
        WeightMask m(spec, 0.0f), gate(spec, 1.0f);
        m.data[0] = static_cast<float>(std::exp(1.0) - 1.0);
        mask::MaskConfig cfg;
        cfg.regularizer = mask::Regularizer::Log;
        const WeightMask r = mask::regularize_weights(m, gate, cfg);
        const double dev = std::abs(static_cast<double>(r.data[0]) - 1.0);
        if (dev > 1e-6) pass = false;
        detail << "identity dev " << dev << ", ";
    }

    const double wall = seconds_since(start);
    if (wall >= 10.0) pass = false;
    detail << wall << " s";
    return {pass, detail.str()};
}

// ---------------------------------------------------------------- C3 ----
Outcome c3_whitening_closure() {
    const auto start = std::chrono::steady_clock::now();
    Config cfg = default_config();
    const int channels = cfg.channels;
    const auto scales = synth::teacher_channel_scales(cfg.teacher, channels, cfg.seed);

    std::vector<BevFeatureMap> maps;
    whiten::ChannelStats stats(channels, 1e-5);
    for (uint64_t s = 0; s < 50; ++s) {
        const synth::SceneTruth scene = synth::generate_scene(cfg.scene, cfg.grid, s);
        const PointCloud cloud = synth::simulate_lidar(scene, cfg.lidar, s);
        maps.push_back(
            synth::render_teacher_bev(scene, cloud, cfg.grid, channels, cfg.teacher, scales));
        whiten::accumulate_stats(stats, maps.back());
    }
    whiten::ChannelStats after(channels, 1e-5);
    for (const auto& m : maps) whiten::accumulate_stats(after, whiten::whiten(m, stats));

    bool pass = true;
    double worst_mean = 0.0, worst_var = 0.0;
    for (int d = 0; d < channels; ++d) {
        worst_mean = std::max(worst_mean, std::abs(after.mean[d]));
        worst_var = std::max(worst_var, std::abs(after.variance(d) - 1.0));
        if (std::abs(after.mean[d]) >= 1e-5) pass = false;
        if (std::abs(after.variance(d) - 1.0) >= 1e-3) pass = false;
    }
    const double wall = seconds_since(start);
    if (wall >= 10.0) pass = false;
    std::ostringstream detail;
    detail << "max |mean| " << worst_mean << ", max |var-1| " << worst_var << ", " << wall
           << " s";
    return {pass, detail.str()};
}

// ---------------------------------------------------------------- C4 ----
Outcome c4_roi_exactness() {
    const auto start = std::chrono::steady_clock::now();
    bool pass = true;
    Rng rng(0xC4);
    double worst = 0.0;

    // 100 random footprints: 50 aligned crops, 50 linear-map samples.
    for (int trial = 0; trial < 50; ++trial) {
        BevGridSpec spec;
        spec.cells_x = static_cast<int>(rng.uniform_int(8, 24));
        spec.cells_y = static_cast<int>(rng.uniform_int(8, 24));
        spec.x_min = rng.uniform(-20.0, 0.0);
        spec.y_min = rng.uniform(-20.0, 0.0);
        spec.x_max = spec.x_min + rng.uniform(4.0, 30.0);
        spec.y_max = spec.y_min + rng.uniform(4.0, 30.0);

        FeatureMapT<double> map(spec, 3);
        for (double& v : map.data) v = rng.normal(0.0, 2.0);
        const int k = static_cast<int>(rng.uniform_int(2, 6));
        const int i0 = static_cast<int>(rng.uniform_int(0, spec.cells_x - k));
        const int j0 = static_cast<int>(rng.uniform_int(0, spec.cells_y - k));
        loss::Footprint2D fp;
        fp.x_min = spec.x_min + i0 * spec.cell_size_x();
        fp.x_max = spec.x_min + (i0 + k) * spec.cell_size_x();
        fp.y_min = spec.y_min + j0 * spec.cell_size_y();
        fp.y_max = spec.y_min + (j0 + k) * spec.cell_size_y();
        const auto patch = loss::roi_align(map, fp, k);
        for (int d = 0; d < 3; ++d)
            for (int u = 0; u < k; ++u)
                for (int v = 0; v < k; ++v) {
                    const double dev = std::abs(patch.at(d, u, v) - map.at(d, i0 + u, j0 + v));
                    worst = std::max(worst, dev);
                    if (dev >= 1e-5) pass = false;
                }
    }
    for (int trial = 0; trial < 50; ++trial) {
        BevGridSpec spec;
        spec.cells_x = static_cast<int>(rng.uniform_int(8, 24));
        spec.cells_y = static_cast<int>(rng.uniform_int(8, 24));
        spec.x_min = spec.y_min = -10.0;
        spec.x_max = spec.y_max = 10.0;
        const double a = rng.uniform(-2.0, 2.0);
        const double b = rng.uniform(-2.0, 2.0);
        const double c = rng.uniform(-1.0, 1.0);
        FeatureMapT<double> map(spec, 1);
        for (int i = 0; i < spec.cells_x; ++i)
            for (int j = 0; j < spec.cells_y; ++j)
                map.at(0, i, j) = a * spec.cell_center_x(i) + b * spec.cell_center_y(j) + c;

        // Keep samples inside the outer ring of cell centers.
        const double margin_x = spec.cell_size_x();
        const double margin_y = spec.cell_size_y();
        loss::Footprint2D fp;
        fp.x_min = rng.uniform(spec.x_min + margin_x, spec.x_max - 3 * margin_x);
        fp.x_max = fp.x_min + rng.uniform(margin_x, spec.x_max - margin_x - fp.x_min);
        fp.y_min = rng.uniform(spec.y_min + margin_y, spec.y_max - 3 * margin_y);
        fp.y_max = fp.y_min + rng.uniform(margin_y, spec.y_max - margin_y - fp.y_min);
        const int o = static_cast<int>(rng.uniform_int(1, 7));
        const auto patch = loss::roi_align(map, fp, o);
        for (int u = 0; u < o; ++u)
            for (int v = 0; v < o; ++v) {
                const double sx = fp.x_min + (u + 0.5) * fp.width() / o;
                const double sy = fp.y_min + (v + 0.5) * fp.height() / o;
                const double dev = std::abs(patch.at(0, u, v) - (a * sx + b * sy + c));
                worst = std::max(worst, dev);
                if (dev >= 1e-5) pass = false;
            }
    }

    // Footprint corners against the brute-force rotation oracle.
    BevGridSpec big;
    big.x_min = big.y_min = -60.0;
    big.x_max = big.y_max = 60.0;
    big.cells_x = big.cells_y = 64;
    double worst_corner = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        synth::Box3D box;
        box.x = rng.uniform(-40.0, 40.0);
        box.y = rng.uniform(-40.0, 40.0);
        box.w = rng.uniform(0.4, 5.0);
        box.l = rng.uniform(0.4, 8.0);
        box.h = 1.5;
        box.z = 0.75;
        box.yaw = rng.uniform(-M_PI, M_PI);
        const auto fp = loss::axis_aligned_footprint(box, big);
        if (!fp) {
            pass = false;
            continue;
        }
        double x_lo = 1e300, x_hi = -1e300, y_lo = 1e300, y_hi = -1e300;
        for (int corner = 0; corner < 4; ++corner) {
            const double u = ((corner % 2) ? -0.5 : 0.5) * box.l;
            const double v = ((corner / 2) ? -0.5 : 0.5) * box.w;
            const double cx = box.x + std::cos(box.yaw) * u - std::sin(box.yaw) * v;
            const double cy = box.y + std::sin(box.yaw) * u + std::cos(box.yaw) * v;
            x_lo = std::min(x_lo, cx);
            x_hi = std::max(x_hi, cx);
            y_lo = std::min(y_lo, cy);
            y_hi = std::max(y_hi, cy);
        }
        const double dev = std::max({std::abs(fp->x_min - x_lo), std::abs(fp->x_max - x_hi),
                                     std::abs(fp->y_min - y_lo), std::abs(fp->y_max - y_hi)});
        worst_corner = std::max(worst_corner, dev);
        if (dev >= 1e-9) pass = false;
    }

    const double wall = seconds_since(start);
    if (wall >= 10.0) pass = false;
    std::ostringstream detail;
    detail << "max sample dev " << worst << ", max corner dev " << worst_corner << ", "
           << wall << " s";
    return {pass, detail.str()};
}

// ---------------------------------------------------------------- C5 ----
Outcome c5_overfit_oracle() {
    const auto start = std::chrono::steady_clock::now();
    Config cfg = default_config();
    cfg.threads = g_threads;
    cfg.data.train_scenes = 1;
    cfg.data.heldout_scenes = 0;
    cfg.data.unlabeled_scenes = 0;
    cfg.scene.min_boxes = 3;
    cfg.scene.max_boxes = 3;
    cfg.loss.lambda_corr = 0.0;
    cfg.train.pretrain_epochs = 500; // one scene: one step per epoch
    cfg.train.lr_pretrain = 1e-2;    // harness-tuned single-frame rate
    cfg.train.teacher_head_epochs = 1;

    train::MemoryDataset data(cfg, 1);
    const auto stats = train::compute_dataset_stats(cfg, data);
    data.set_masks(train::compute_dataset_masks(cfg, data, stats, 1));
    const std::vector<size_t> train_idx = train::train_indices(data);

    const student::StudentModel init = student::make_student(
        data.obs_channels(), data.channels(), cfg.loss.roi_size, cfg.loss.proj_hidden,
        cfg.loss.embed_dim, hash_combine(cfg.seed, 0x57D0ull));
    const double before = train::eval_masked_rec(cfg, data, stats, init, train_idx);
    const train::PretrainResult result = train::pretrain(cfg, data, stats);
    const double after = train::eval_masked_rec(cfg, data, stats, result.model, train_idx);

    const double wall = seconds_since(start);
    const bool pass = after <= 0.1 * before && wall < 120.0;
    std::ostringstream detail;
    detail << "masked rec " << before << " -> " << after << " ("
           << (before > 0 ? 100.0 * (1.0 - after / before) : 0.0) << "% reduction), " << wall
           << " s";
    return {pass, detail.str()};
}

// Shared runner for the directional criteria.
std::vector<train::AblationRow> run_preset(const std::string& preset) {
    Config cfg = default_config();
    cfg.threads = g_threads;
    return train::run_ablation(cfg, preset, [](const std::string& msg) {
        std::cout << "    [" << msg << "]\n" << std::flush;
    });
}

std::map<std::string, std::vector<double>> column_by_cell(
    const std::vector<train::AblationRow>& rows,
    const std::function<double(const train::AblationRow&)>& pick) {
    std::map<std::string, std::vector<double>> out;
    for (const auto& row : rows) out[row.cell].push_back(pick(row));
    return out;
}

double mean_of(const std::vector<double>& values) {
    double total = 0.0;
    for (double v : values) total += v;
    return values.empty() ? 0.0 : total / static_cast<double>(values.size());
}

// ---------------------------------------------------------------- C6 ----
Outcome c6_component_ordering() {
    const auto start = std::chrono::steady_clock::now();
    const auto rows = run_preset("components");
    const auto by_cell = column_by_cell(
        rows, [](const train::AblationRow& r) { return r.heldout_surrogate_final; });

    const auto& scratch = by_cell.at("scratch");
    const auto& distill = by_cell.at("distill");
    const auto& with_mask = by_cell.at("distill+mask");
    const auto& full = by_cell.at("distill+mask+corr");

    const double m_scratch = mean_of(scratch);
    const double m_distill = mean_of(distill);
    const double m_mask = mean_of(with_mask);
    const double m_full = mean_of(full);

    bool pass = m_scratch > m_distill && m_distill >= m_mask && m_mask >= m_full;
    int agree = 0;
    for (size_t s = 0; s < scratch.size(); ++s)
        if (scratch[s] > full[s]) ++agree;
    if (agree != static_cast<int>(scratch.size())) pass = false;

    const double wall = seconds_since(start);
    if (wall >= 1800.0) pass = false;
    std::ostringstream detail;
    detail << "means: scratch " << m_scratch << " > distill " << m_distill << " >= +mask "
           << m_mask << " >= +corr " << m_full << "; scratch>full on " << agree << "/"
           << scratch.size() << " seeds, " << wall << " s";
    return {pass, detail.str()};
}

// ---------------------------------------------------------------- C7 ----
Outcome c7_data_scale() {
    const auto start = std::chrono::steady_clock::now();
    const auto rows = run_preset("data-scale");
    const auto by_cell = column_by_cell(
        rows, [](const train::AblationRow& r) { return r.heldout_surrogate_final; });

    const std::vector<std::string> ladder = {"frac_0%", "frac_50%", "frac_100%", "frac_200%"};
    bool pass = true;
    std::ostringstream means_text;
    double prev = 0.0;
    for (size_t k = 0; k < ladder.size(); ++k) {
        const double m = mean_of(by_cell.at(ladder[k]));
        means_text << (k ? " -> " : "") << m;
        if (k > 0 && m > prev) pass = false;
        prev = m;
    }

    const auto& zero = by_cell.at("frac_0%");
    const auto& two = by_cell.at("frac_200%");
    int agree = 0;
    for (size_t s = 0; s < zero.size(); ++s)
        if (zero[s] > two[s]) ++agree;
    if (agree < 4) pass = false;

    const double wall = seconds_since(start);
    if (wall >= 2700.0) pass = false;
    std::ostringstream detail;
    detail << "means " << means_text.str() << "; 0%>200% on " << agree << "/" << zero.size()
           << " seeds, " << wall << " s";
    return {pass, detail.str()};
}

// ---------------------------------------------------------------- C8 ----
Outcome c8_head_inheritance() {
    const auto start = std::chrono::steady_clock::now();
    const auto rows = run_preset("head-inherit");
    const auto by_cell = column_by_cell(
        rows, [](const train::AblationRow& r) { return r.heldout_surrogate_epoch1; });

    const auto& random_head = by_cell.at("random-head");
    const auto& inherited = by_cell.at("inherit-head");
    bool pass = true;
    int agree = 0;
    for (size_t s = 0; s < random_head.size(); ++s) {
        if (inherited[s] <= random_head[s])
            ++agree;
        else
            pass = false;
    }
    const double wall = seconds_since(start);
    std::ostringstream detail;
    detail << "epoch-1 means: inherit " << mean_of(inherited) << " vs random "
           << mean_of(random_head) << "; inherit<=random on " << agree << "/"
           << random_head.size() << " seeds, " << wall << " s";
    return {pass, detail.str()};
}

// ---------------------------------------------------------------- C9 ----
Outcome c9_protocol_contract() {
    Config cfg = default_config();
    cfg.threads = g_threads;
    cfg.data.train_scenes = 24;
    cfg.data.heldout_scenes = 4;
    cfg.data.unlabeled_scenes = 0;
    cfg.train.pretrain_epochs = 2;
    cfg.train.finetune_epochs = 2;
    cfg.train.teacher_head_epochs = 5;

    train::MemoryDataset data(cfg, cfg.threads);
    const auto stats = train::compute_dataset_stats(cfg, data);
    data.set_masks(train::compute_dataset_masks(cfg, data, stats, cfg.threads));
    const train::PretrainResult pre = train::pretrain(cfg, data, stats);

    const auto before = data.counters().snapshot();
    const train::FinetuneResult tuned =
        train::finetune(cfg, data, pre.model, &pre.teacher_head.head, true);
    const auto delta = data.counters().snapshot() - before;

    const bool pass = delta.cloud == 0 && delta.teacher == 0 && delta.mask == 0 &&
                      delta.obs > 0 && tuned.reads.cloud == 0;
    std::ostringstream detail;
    detail << "finetune reads: cloud " << delta.cloud << ", teacher " << delta.teacher
           << ", mask " << delta.mask << ", obs " << delta.obs << ", labels " << delta.scene;
    return {pass, detail.str()};
}

// --------------------------------------------------------------- C10 ----
std::string read_file(const fs::path& path) {
    std::ifstream is(path, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

std::string strip_wall_ms(const std::string& jsonl) {
    std::istringstream is(jsonl);
    std::ostringstream os;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line);
        j.erase("wall_ms");
        os << j.dump() << "\n";
    }
    return os.str();
}

Outcome c10_reproducibility() {
    const auto start = std::chrono::steady_clock::now();
    const char* overrides[] = {
        "data.train_scenes=24",      "data.heldout_scenes=4",
        "data.unlabeled_scenes=8",   "train.pretrain_epochs=3",
        "train.finetune_epochs=3",   "train.teacher_head_epochs=5",
        "train.pretrain_data_frac=1.25",
    };
    const size_t n_overrides = sizeof(overrides) / sizeof(overrides[0]);

    const fs::path root = fs::temp_directory_path() / "bevkit_acceptance_c10";
    fs::remove_all(root);

    auto run_once = [&](const fs::path& dir) -> bool {
        bevkit_config* cfg = nullptr;
        if (bevkit_config_default(overrides, n_overrides, &cfg) != BEVKIT_OK) return false;
        const std::string data_dir = (dir / "data").string();
        const std::string stats = data_dir + "/stats.json";
        const std::string pre = (dir / "pre").string();
        const std::string tune = (dir / "tune").string();
        bool ok = bevkit_synth(cfg, data_dir.c_str(), 1) == BEVKIT_OK &&
                  bevkit_stats(cfg, data_dir.c_str(), stats.c_str()) == BEVKIT_OK &&
                  bevkit_maskgen(cfg, data_dir.c_str(), stats.c_str()) == BEVKIT_OK &&
                  bevkit_pretrain(cfg, data_dir.c_str(), stats.c_str(), pre.c_str(), 1) ==
                      BEVKIT_OK &&
                  bevkit_finetune(cfg, data_dir.c_str(), (pre + "/checkpoint").c_str(),
                                  (pre + "/teacher_head").c_str(), 1, tune.c_str(),
                                  1) == BEVKIT_OK &&
                  bevkit_eval(cfg, data_dir.c_str(), (tune + "/checkpoint").c_str(),
                              "heldout", (dir / "eval.json").string().c_str()) == BEVKIT_OK;
        if (!ok) std::cout << "    [c10 error: " << bevkit_last_error() << "]\n";
        bevkit_config_free(cfg);
        return ok;
    };

    bool pass = run_once(root / "a") && run_once(root / "b");
    std::ostringstream detail;
    if (pass) {
        const std::vector<std::string> byte_exact = {"pre/summary.json", "tune/summary.json",
                                                     "eval.json", "data/manifest.json",
                                                     "data/stats.json"};
        for (const std::string& rel : byte_exact) {
            if (read_file(root / "a" / rel) != read_file(root / "b" / rel)) {
                pass = false;
                detail << rel << " differs; ";
            }
        }
        for (const std::string& rel : {"pre/metrics.jsonl", "tune/metrics.jsonl"}) {
            if (strip_wall_ms(read_file(root / "a" / rel)) !=
                strip_wall_ms(read_file(root / "b" / rel))) {
                pass = false;
                detail << rel << " differs; ";
            }
        }
        if (pass) detail << "summaries, metrics and eval byte-identical across runs; ";
    } else {
        detail << "pipeline run failed; ";
    }
    fs::remove_all(root);
    detail << seconds_since(start) << " s";
    return {pass, detail.str()};
}

struct Criterion {
    int number;
    const char* name;
    std::function<Outcome()> run;
};

} // namespace

int main(int argc, char** argv) {
    int only = 0;
    for (int a = 1; a < argc; ++a) {
        if (std::strcmp(argv[a], "--only") == 0 && a + 1 < argc) only = std::atoi(argv[++a]);
        if (std::strcmp(argv[a], "--threads") == 0 && a + 1 < argc)
            g_threads = std::max(1, std::atoi(argv[++a]));
    }
    if (const char* env = std::getenv("BEVKIT_ACCEPT_THREADS"))
        g_threads = std::max(1, std::atoi(env));

    const std::vector<Criterion> criteria = {
        {1, "gradient-oracle", c1_gradient_oracle},
        {2, "mask-chain", c2_mask_chain},
        {3, "whitening-closure", c3_whitening_closure},
        {4, "roi-exactness", c4_roi_exactness},
        {5, "overfit-oracle", c5_overfit_oracle},
        {6, "component-ordering", c6_component_ordering},
        {7, "data-scale", c7_data_scale},
        {8, "head-inheritance", c8_head_inheritance},
        {9, "protocol-contract", c9_protocol_contract},
        {10, "reproducibility", c10_reproducibility},
    };

    bool all_pass = true;
    for (const Criterion& criterion : criteria) {
        if (only != 0 && criterion.number != only) continue;
        Outcome outcome;
        try {
            outcome = criterion.run();
        } catch (const std::exception& e) {
            outcome = {false, std::string("exception: ") + e.what()};
        }
        std::cout << "C" << criterion.number << " " << criterion.name << ": "
                  << (outcome.pass ? "PASS" : "FAIL") << " (" << outcome.detail << ")\n"
                  << std::flush;
        if (!outcome.pass) all_pass = false;
    }
    return all_pass ? 0 : 1;
}

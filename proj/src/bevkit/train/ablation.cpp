#include "bevkit/train/ablation.hpp"

#include "bevkit/core/rng.hpp"
#include "bevkit/errors.hpp"
#include "bevkit/train/dataset.hpp"
#include "bevkit/train/trainer.hpp"

#include <cstdio>
#include <sstream>

namespace bevkit::train {

std::vector<AblationCell> preset_cells(const std::string& preset, const Config& base) {
    const bool inherit = base.train.inherit_head;
    if (preset == "components") {
        return {
            {"scratch", false, false, false, false, 1.0},
            {"distill", true, false, false, inherit, 1.0},
            {"distill+mask", true, true, false, inherit, 1.0},
            {"distill+mask+corr", true, true, true, inherit, 1.0},
        };
    }
    if (preset == "data-scale") {
        std::vector<AblationCell> cells;
        for (double frac : {0.0, 0.1, 0.5, 1.0, 2.0}) {
            AblationCell cell;
            char name[32];
            snprintf(name, sizeof(name), "frac_%.0f%%", frac * 100.0);
            cell.name = name;
            cell.distill = frac > 0.0;
            cell.mask = base.ablation.mask;
            cell.tgc = base.ablation.tgc;
            cell.inherit = cell.distill && inherit;
            cell.pretrain_frac = frac;
            cells.push_back(cell);
        }
        return cells;
    }
    if (preset == "head-inherit") {
        return {
            {"random-head", true, base.ablation.mask, base.ablation.tgc, false, 1.0},
            {"inherit-head", true, base.ablation.mask, base.ablation.tgc, true, 1.0},
        };
    }
    throw UsageError("unknown ablation preset: " + preset +
                     " (expected components, data-scale or head-inherit)");
}

std::vector<AblationRow> run_ablation(const Config& base, const std::string& preset,
                                      const AblationProgress& progress) {
    const std::vector<AblationCell> cells = preset_cells(preset, base);
    std::vector<AblationRow> rows;

    for (int s = 0; s < base.ablation.n_seeds; ++s) {
        Config seed_cfg = base;
        seed_cfg.seed = hash_combine(base.seed, 0xAB1A7E00ull + s);
        if (progress)
            progress("seed " + std::to_string(s + 1) + "/" +
                     std::to_string(base.ablation.n_seeds) + ": generating dataset");
        MemoryDataset data(seed_cfg, seed_cfg.threads);
        const whiten::ChannelStats stats = compute_dataset_stats(seed_cfg, data);
        data.set_masks(compute_dataset_masks(seed_cfg, data, stats, seed_cfg.threads));

        for (const AblationCell& cell : cells) {
            if (progress) progress("  cell " + cell.name);
            Config cfg = seed_cfg;
            cfg.ablation.distill = cell.distill;
            cfg.ablation.mask = cell.mask;
            cfg.ablation.tgc = cell.tgc;
            cfg.train.inherit_head = cell.inherit;
            cfg.train.pretrain_data_frac = cell.pretrain_frac;

            AblationRow row;
            row.preset = preset;
            row.cell = cell.name;
            row.seed = cfg.seed;
            row.switches = cell;

            FinetuneResult tuned;
            if (cell.distill) {
                PretrainResult pre = pretrain(cfg, data, stats);
                tuned = finetune(cfg, data, std::move(pre.model), &pre.teacher_head.head,
                                 cell.inherit);
            } else {
                student::StudentModel scratch = student::make_student(
                    data.obs_channels(), data.channels(), cfg.loss.roi_size,
                    cfg.loss.proj_hidden, cfg.loss.embed_dim,
                    hash_combine(cfg.seed, 0x57D0ull));
                tuned = finetune(cfg, data, std::move(scratch), nullptr, false);
            }

            row.heldout_surrogate_epoch1 = tuned.epoch1_heldout_surrogate;
            row.heldout_surrogate_final = tuned.final_heldout_surrogate;
            const std::vector<size_t> heldout = heldout_indices(data);
            row.heldout_masked_rec_final =
                eval_masked_rec(cfg, data, stats, tuned.model, heldout);
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

std::string ablation_mean_csv(const std::vector<AblationRow>& rows,
                              const std::vector<AblationCell>& cells) {
    std::ostringstream os;
    os << "preset,cell,seeds,distill,mask,tgc,inherit,pretrain_frac,"
          "heldout_surrogate_epoch1,heldout_surrogate_final,heldout_masked_rec_final\n";
    for (const AblationCell& cell : cells) {
        double epoch1 = 0.0, final_loss = 0.0, rec = 0.0;
        int n = 0;
        std::string preset;
        for (const AblationRow& r : rows) {
            if (r.cell != cell.name) continue;
            epoch1 += r.heldout_surrogate_epoch1;
            final_loss += r.heldout_surrogate_final;
            rec += r.heldout_masked_rec_final;
            preset = r.preset;
            ++n;
        }
        if (n == 0) continue;
        char line[320];
        snprintf(line, sizeof(line), "%s,%s,%d,%d,%d,%d,%d,%.3f,%.9g,%.9g,%.9g\n",
                 preset.c_str(), cell.name.c_str(), n, cell.distill ? 1 : 0,
                 cell.mask ? 1 : 0, cell.tgc ? 1 : 0, cell.inherit ? 1 : 0,
                 cell.pretrain_frac, epoch1 / n, final_loss / n, rec / n);
        os << line;
    }
    return os.str();
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
    std::ostringstream os;
    os << "preset,cell,seed,distill,mask,tgc,inherit,pretrain_frac,"
          "heldout_surrogate_epoch1,heldout_surrogate_final,heldout_masked_rec_final\n";
    for (const AblationRow& r : rows) {
        char line[320];
        snprintf(line, sizeof(line), "%s,%s,%llu,%d,%d,%d,%d,%.3f,%.9g,%.9g,%.9g\n",
                 r.preset.c_str(), r.cell.c_str(), static_cast<unsigned long long>(r.seed),
                 r.switches.distill ? 1 : 0, r.switches.mask ? 1 : 0, r.switches.tgc ? 1 : 0,
                 r.switches.inherit ? 1 : 0, r.switches.pretrain_frac,
                 r.heldout_surrogate_epoch1, r.heldout_surrogate_final,
                 r.heldout_masked_rec_final);
        os << line;
    }
    return os.str();
}

} // namespace bevkit::train

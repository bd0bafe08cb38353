#pragma once

#include "bevkit/config.hpp"

#include <functional>
#include <string>
#include <vector>

namespace bevkit::train {

// One switch setting in an ablation matrix. Cells within a preset share
// seeds and datasets; only the switches differ.
struct AblationCell {
    std::string name;
    bool distill = true;
    bool mask = true;
    bool tgc = true;
    bool inherit = true;
    double pretrain_frac = 1.0;
};

// Presets:
//   components  - scratch baseline, then distill / +mask / +correlation
//   data-scale  - pretraining data fraction 0 / 0.1 / 0.5 / 1.0 / 2.0
//   head-inherit- pretrained, with and without head inheritance
std::vector<AblationCell> preset_cells(const std::string& preset, const Config& base);

struct AblationRow {
    std::string preset;
    std::string cell;
    uint64_t seed = 0;
    AblationCell switches;
    double heldout_surrogate_epoch1 = 0.0;
    double heldout_surrogate_final = 0.0;
    double heldout_masked_rec_final = 0.0;
};

using AblationProgress = std::function<void(const std::string&)>;

// Runs the full matrix (cells x seeds) on in-memory datasets; one dataset
// per seed, shared read-only across that seed's cells.
std::vector<AblationRow> run_ablation(const Config& base, const std::string& preset,
                                      const AblationProgress& progress = nullptr);

// Stable column order: preset,cell,seed,distill,mask,tgc,inherit,
// pretrain_frac,heldout_surrogate_epoch1,heldout_surrogate_final,
// heldout_masked_rec_final
std::string ablation_csv(const std::vector<AblationRow>& rows);

// One row per cell in preset order, metrics averaged over seeds.
std::string ablation_mean_csv(const std::vector<AblationRow>& rows,
                              const std::vector<AblationCell>& cells);

} // namespace bevkit::train

#pragma once

#include "bevkit/config.hpp"
#include "bevkit/gradcheck/gradcheck.hpp"

#include <string>

namespace bevkit::pipeline {

// Dataset generation: scenes, point clouds, teacher maps, observations and
// a manifest keyed by the config hashes. Byte-identical on rerun.
void run_synth(const Config& cfg, const std::string& out_dir, bool overwrite);

// Whitening statistics over the pretraining pool of a dataset.
void run_stats(const Config& cfg, const std::string& data_dir, const std::string& out_path);

// Masks for every scene of a dataset (written under <data_dir>/masks).
void run_maskgen_dataset(const Config& cfg, const std::string& data_dir,
                         const std::string& stats_path);

// Single-file mode: point cloud + teacher features -> mask tensor.
void run_maskgen_single(const Config& cfg, const std::string& cloud_path,
                        const std::string& teacher_path, const std::string& stats_path,
                        const std::string& out_path);

void run_pretrain(const Config& cfg, const std::string& data_dir,
                  const std::string& stats_path, const std::string& out_dir, bool overwrite);

// Init checkpoint empty -> scratch initialization. Teacher head path empty
// -> inheritance only possible when disabled.
void run_finetune(const Config& cfg, const std::string& data_dir,
                  const std::string& init_checkpoint, const std::string& teacher_head_dir,
                  bool inherit, const std::string& out_dir, bool overwrite);

void run_eval(const Config& cfg, const std::string& data_dir,
              const std::string& checkpoint_dir, const std::string& split,
              const std::string& out_path);

// Returns the report; throws CheckError when a gradient deviates.
gradcheck::GradCheckReport run_gradcheck_cmd(const Config& cfg,
                                             const std::string& report_path);

void run_ablate(const Config& cfg, const std::string& preset, const std::string& out_dir,
                bool overwrite);

} // namespace bevkit::pipeline

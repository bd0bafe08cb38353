// bevkit command-line front end. Links against the public C API only; all
// pipeline work happens inside libbevkit.
#include <bevkit.h>

#include <CLI11.hpp>

#include <cstdio>
#include <string>
#include <vector>

namespace {

struct GlobalArgs {
    std::string config_path;
    std::vector<std::string> overrides;
    std::string seed;
    std::string threads;
    bool overwrite = false;
};

// Status codes collapse onto the CLI contract: 0 success, 1 property
// failure, 2 everything the caller can fix.
int exit_code(bevkit_status status) {
    if (status == BEVKIT_OK) return 0;
    if (status == BEVKIT_E_CHECK) return 1;
    return 2;
}

int report(bevkit_status status) {
    if (status != BEVKIT_OK) std::fprintf(stderr, "error: %s\n", bevkit_last_error());
    return exit_code(status);
}

struct ConfigHandle {
    bevkit_config* ptr = nullptr;
    ~ConfigHandle() { bevkit_config_free(ptr); }
};

bevkit_status make_config(const GlobalArgs& args, ConfigHandle& out) {
    std::vector<std::string> overrides = args.overrides;
    if (!args.seed.empty()) overrides.push_back("seed=" + args.seed);
    if (!args.threads.empty()) overrides.push_back("threads=" + args.threads);
    std::vector<const char*> raw;
    raw.reserve(overrides.size());
    for (const std::string& o : overrides) raw.push_back(o.c_str());
    if (args.config_path.empty())
        return bevkit_config_default(raw.data(), raw.size(), &out.ptr);
    return bevkit_config_load(args.config_path.c_str(), raw.data(), raw.size(), &out.ptr);
}

void add_global_options(CLI::App* cmd, GlobalArgs& args) {
    cmd->add_option("--config", args.config_path, "JSON config file (defaults built in)");
    cmd->add_option("--set", args.overrides, "Config override key.path=value (repeatable)");
    cmd->add_option("--seed", args.seed, "Override the config seed");
    cmd->add_option("--threads", args.threads, "Worker threads for data-parallel stages");
    cmd->add_flag("--overwrite", args.overwrite, "Replace existing outputs");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"bevkit - LiDAR-guided BEV pretraining sandbox"};
    app.require_subcommand(1);
    GlobalArgs args;

    // synth
    auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
    std::string synth_out;
    synth->add_option("--out", synth_out, "Dataset output directory")->required();
    add_global_options(synth, args);

    // stats
    auto* stats = app.add_subcommand("stats", "Compute whitening statistics for a dataset");
    std::string stats_data, stats_out;
    bool stats_nonzero = false;
    stats->add_option("--data", stats_data, "Dataset directory")->required();
    stats->add_option("--out", stats_out, "Output stats JSON (default <data>/stats.json)");
    stats->add_flag("--nonzero-only", stats_nonzero, "Accumulate nonzero cells only");
    add_global_options(stats, args);

    // maskgen
    auto* maskgen = app.add_subcommand("maskgen", "Generate LiDAR-guided weight masks");
    std::string mg_data, mg_cloud, mg_teacher, mg_stats, mg_out;
    std::string mg_sigma, mg_quantile, mg_abs, mg_reg;
    bool mg_raw = false;
    maskgen->add_option("--data", mg_data, "Dataset directory (writes <data>/masks)");
    maskgen->add_option("--cloud", mg_cloud, "Point cloud tensor (single-file mode)");
    maskgen->add_option("--teacher", mg_teacher, "Teacher feature tensor (single-file mode)");
    maskgen->add_option("--stats", mg_stats, "Whitening stats JSON");
    maskgen->add_option("--out", mg_out, "Output mask tensor (single-file mode)");
    maskgen->add_option("--sigma", mg_sigma, "Smoothing kernel sigma (cells)");
    maskgen->add_option("--gate-quantile", mg_quantile, "Gate at this quantile of nonzero responses");
    maskgen->add_option("--gate-abs", mg_abs, "Gate at an absolute response value");
    maskgen->add_option("--regularizer", mg_reg, "Weight regularizer: none|sigmoid|log");
    maskgen->add_flag("--raw-response", mg_raw, "Use the raw teacher map for the response");
    add_global_options(maskgen, args);

    // pretrain
    auto* pretrain = app.add_subcommand("pretrain", "Stage 1: cross-modal pretraining");
    std::string pt_data, pt_stats, pt_out;
    pretrain->add_option("--data", pt_data, "Dataset directory")->required();
    pretrain->add_option("--stats", pt_stats, "Whitening stats JSON (default <data>/stats.json)");
    pretrain->add_option("--out", pt_out, "Run output directory")->required();
    add_global_options(pretrain, args);

    // finetune
    auto* finetune = app.add_subcommand("finetune", "Stage 2: detection finetuning");
    std::string ft_data, ft_init, ft_head, ft_out;
    bool ft_inherit = false, ft_no_inherit = false, ft_freeze = false;
    finetune->add_option("--data", ft_data, "Dataset directory")->required();
    finetune->add_option("--init", ft_init, "Initial student checkpoint (default: scratch)");
    finetune->add_option("--teacher-head", ft_head, "Teacher head checkpoint directory");
    finetune->add_flag("--inherit", ft_inherit, "Inherit the teacher head (needs --teacher-head)");
    finetune->add_flag("--no-inherit", ft_no_inherit, "Start from the current student head");
    finetune->add_flag("--freeze-head", ft_freeze, "Do not update head parameters");
    finetune->add_option("--out", ft_out, "Run output directory")->required();
    add_global_options(finetune, args);

    // gradcheck
    auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference gradient verification");
    std::string gc_report;
    gradcheck->add_option("--report", gc_report, "Write the JSON report here");
    add_global_options(gradcheck, args);

    // eval
    auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset split");
    std::string ev_data, ev_ckpt, ev_split = "heldout", ev_out;
    eval->add_option("--data", ev_data, "Dataset directory")->required();
    eval->add_option("--ckpt", ev_ckpt, "Checkpoint directory")->required();
    eval->add_option("--split", ev_split, "heldout|train|all (default heldout)");
    eval->add_option("--out", ev_out, "Output summary JSON")->required();
    add_global_options(eval, args);

    // ablate
    auto* ablate = app.add_subcommand("ablate", "Run an ablation preset");
    std::string ab_preset, ab_out;
    ablate->add_option("--preset", ab_preset, "components|data-scale|head-inherit")->required();
    ablate->add_option("--out", ab_out, "Report output directory")->required();
    add_global_options(ablate, args);

    CLI11_PARSE(app, argc, argv);

    if (maskgen->parsed()) {
        if (!mg_sigma.empty()) args.overrides.push_back("mask.sigma=" + mg_sigma);
        if (!mg_quantile.empty())
            args.overrides.push_back("mask.gate_quantile=" + mg_quantile);
        if (!mg_abs.empty()) args.overrides.push_back("mask.gate_abs=" + mg_abs);
        if (!mg_reg.empty()) args.overrides.push_back("mask.regularizer=" + mg_reg);
        if (mg_raw) args.overrides.push_back("mask.whitened_response=false");
    }
    if (stats->parsed() && stats_nonzero)
        args.overrides.push_back("whitening.nonzero_only=true");
    if (finetune->parsed() && ft_freeze) args.overrides.push_back("train.freeze_head=true");

    ConfigHandle cfg;
    if (bevkit_status status = make_config(args, cfg); status != BEVKIT_OK)
        return report(status);

    if (synth->parsed())
        return report(bevkit_synth(cfg.ptr, synth_out.c_str(), args.overwrite ? 1 : 0));

    if (stats->parsed()) {
        const std::string out = stats_out.empty() ? stats_data + "/stats.json" : stats_out;
        return report(bevkit_stats(cfg.ptr, stats_data.c_str(), out.c_str()));
    }

    if (maskgen->parsed()) {
        const bool single = !mg_cloud.empty() || !mg_teacher.empty() || !mg_out.empty();
        if (single) {
            if (mg_cloud.empty() || mg_teacher.empty() || mg_out.empty()) {
                std::fprintf(stderr,
                             "error: single-file maskgen needs --cloud, --teacher and --out\n");
                return 2;
            }
            return report(bevkit_maskgen_file(cfg.ptr, mg_cloud.c_str(), mg_teacher.c_str(),
                                              mg_stats.empty() ? nullptr : mg_stats.c_str(),
                                              mg_out.c_str()));
        }
        if (mg_data.empty()) {
            std::fprintf(stderr, "error: maskgen needs --data or --cloud/--teacher/--out\n");
            return 2;
        }
        std::string stats_path = mg_stats;
        if (stats_path.empty() && !mg_raw) stats_path = mg_data + "/stats.json";
        return report(bevkit_maskgen(cfg.ptr, mg_data.c_str(),
                                     stats_path.empty() ? nullptr : stats_path.c_str()));
    }

    if (pretrain->parsed()) {
        const std::string stats_path = pt_stats.empty() ? pt_data + "/stats.json" : pt_stats;
        return report(bevkit_pretrain(cfg.ptr, pt_data.c_str(), stats_path.c_str(),
                                      pt_out.c_str(), args.overwrite ? 1 : 0));
    }

    if (finetune->parsed()) {
        if (ft_inherit && ft_no_inherit) {
            std::fprintf(stderr, "error: --inherit conflicts with --no-inherit\n");
            return 2;
        }
        // Default: inherit whenever a teacher head is supplied.
        const bool inherit = ft_inherit || (!ft_head.empty() && !ft_no_inherit);
        return report(bevkit_finetune(cfg.ptr, ft_data.c_str(),
                                      ft_init.empty() ? nullptr : ft_init.c_str(),
                                      ft_head.empty() ? nullptr : ft_head.c_str(),
                                      inherit ? 1 : 0, ft_out.c_str(),
                                      args.overwrite ? 1 : 0));
    }

    if (gradcheck->parsed())
        return report(
            bevkit_gradcheck(cfg.ptr, gc_report.empty() ? nullptr : gc_report.c_str()));

    if (eval->parsed())
        return report(bevkit_eval(cfg.ptr, ev_data.c_str(), ev_ckpt.c_str(),
                                  ev_split.c_str(), ev_out.c_str()));

    if (ablate->parsed())
        return report(bevkit_ablate(cfg.ptr, ab_preset.c_str(), ab_out.c_str(),
                                    args.overwrite ? 1 : 0));

    return 2;
}

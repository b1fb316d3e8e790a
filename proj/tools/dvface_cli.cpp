// Command-line front end; all work goes through the shared-library C API.

#include "dvface.h"

#include "CLI11.hpp"

#include <cstdio>
#include <string>

int main(int argc, char** argv) {
    CLI::App app{"dvface: one-step diffusion video face restoration (desk scale)"};
    app.require_subcommand(1);

    std::string config_path, out_dir, priors, suite = "all";
    std::string restore_in, restore_out;
    uint64_t seed = 0;
    bool have_seed = false, force = false;
    double tstar = 0.0;
    bool have_tstar = false;

    app.add_option("--config", config_path, "run configuration file (JSON)");
    app.add_option("--out", out_dir, "output directory");
    auto* seed_opt = app.add_option("--seed", seed, "override the run seed");
    app.add_option("--priors", priors, "prior mode: none|spatial|temporal|both");
    auto* tstar_opt = app.add_option("--tstar", tstar, "fixed one-step timestep in (0,1]");
    app.add_flag("--force", force, "allow checkpoint/config hash mismatch at eval");

    app.add_subcommand("gen-data", "generate the toy train/test datasets");
    app.add_subcommand("train-stage0", "pretrain the latent autoencoder");
    app.add_subcommand("train-stage1", "learn the dual codebooks from HQ reconstruction");
    app.add_subcommand("train-stage1p", "train the code predictors on LQ inputs");
    app.add_subcommand("train-stage2", "train the one-step restorer");
    auto* restore = app.add_subcommand("restore", "restore a clip file or dataset directory");
    restore->add_option("in", restore_in, "input clip/array file or dataset dir")->required();
    restore->add_option("out", restore_out, "output file or dir")->required();
    auto* eval = app.add_subcommand("eval", "restore the test split and report metrics");
    (void)eval;
    auto* check = app.add_subcommand("check", "run property-check suites");
    check->add_option("suite", suite, "algebra|gradients|oracles|freeze|all");

    CLI11_PARSE(app, argc, argv);
    have_seed = seed_opt->count() > 0;
    have_tstar = tstar_opt->count() > 0;

    dvf_ctx* ctx = dvf_create();
    if (!ctx) {
        std::fprintf(stderr, "error: could not create context\n");
        return 1;
    }
    int rc = 0;
    auto step = [&](int code) {
        if (rc == 0 && code != 0) {
            std::fprintf(stderr, "error: %s\n", dvf_last_error(ctx));
            rc = code;
        }
    };

    if (!config_path.empty()) step(dvf_load_config(ctx, config_path.c_str()));
    if (!out_dir.empty()) step(dvf_set_out_dir(ctx, out_dir.c_str()));
    if (have_seed) step(dvf_set_seed(ctx, seed));
    if (!priors.empty()) step(dvf_set_priors(ctx, priors.c_str()));
    if (have_tstar) step(dvf_set_tstar(ctx, tstar));
    if (force) step(dvf_set_allow_hash_mismatch(ctx, 1));

    if (rc == 0) {
        const std::string cmd = app.get_subcommands().front()->get_name();
        if (cmd == "gen-data") step(dvf_gen_data(ctx));
        else if (cmd == "train-stage0") step(dvf_train_stage0(ctx));
        else if (cmd == "train-stage1") step(dvf_train_stage1(ctx));
        else if (cmd == "train-stage1p") step(dvf_train_stage1p(ctx));
        else if (cmd == "train-stage2") step(dvf_train_stage2(ctx));
        else if (cmd == "restore") step(dvf_restore(ctx, restore_in.c_str(), restore_out.c_str()));
        else if (cmd == "eval") step(dvf_eval(ctx));
        else if (cmd == "check") step(dvf_check(ctx, suite.c_str()));
    }
    dvf_destroy(ctx);
    return rc;
}

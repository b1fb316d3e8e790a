#include "dvface.h"

#include "core/serialize.hpp"
#include "harness/checks.hpp"
#include "harness/config.hpp"
#include "harness/train.hpp"

#include <filesystem>
#include <iostream>
#include <string>

namespace fs = std::filesystem;
using namespace dvface;

struct dvf_ctx {
    RunConfig cfg = RunConfig::desk_default();
    bool allow_hash_mismatch = false;
    std::string last_error;
};

namespace {

int fail(dvf_ctx* ctx, int code, const std::string& msg) {
    if (ctx) ctx->last_error = msg;
    return code;
}

template <typename Fn>
int guarded(dvf_ctx* ctx, Fn&& fn) {
    if (!ctx) return DVF_ERR_BAD_ARG;
    try {
        ctx->last_error.clear();
        return fn();
    } catch (const ConfigError& e) {
        return fail(ctx, DVF_ERR_CONFIG, e.what());
    } catch (const IoError& e) {
        return fail(ctx, DVF_ERR_IO, e.what());
    } catch (const ShapeError& e) {
        return fail(ctx, DVF_ERR_SHAPE, e.what());
    } catch (const std::exception& e) {
        return fail(ctx, DVF_ERR_RUNTIME, e.what());
    }
}

Dataset load_split(const dvf_ctx* ctx, const std::string& split) {
    return load_dataset(ctx->cfg.out_dir + "/" + split);
}

}  // namespace

extern "C" {

dvf_ctx* dvf_create(void) {
    try {
        return new dvf_ctx();
    } catch (...) {
        return nullptr;
    }
}

void dvf_destroy(dvf_ctx* ctx) { delete ctx; }

const char* dvf_last_error(const dvf_ctx* ctx) { return ctx ? ctx->last_error.c_str() : ""; }

int dvf_load_config(dvf_ctx* ctx, const char* path) {
    if (!path) return fail(ctx, DVF_ERR_BAD_ARG, "null config path");
    return guarded(ctx, [&] {
        ctx->cfg = RunConfig::load(path);
        return DVF_OK;
    });
}

int dvf_set_seed(dvf_ctx* ctx, uint64_t seed) {
    return guarded(ctx, [&] {
        ctx->cfg.seed = seed;
        ctx->cfg.data.seed = seed * 2 + 1;
        ctx->cfg.data.degrade.seed = seed * 2 + 2;
        ctx->cfg.stdc.seed = seed + 1;
        ctx->cfg.restorer.seed = seed + 2;
        return DVF_OK;
    });
}

int dvf_set_out_dir(dvf_ctx* ctx, const char* dir) {
    if (!dir) return fail(ctx, DVF_ERR_BAD_ARG, "null output dir");
    return guarded(ctx, [&] {
        ctx->cfg.out_dir = dir;
        return DVF_OK;
    });
}

int dvf_set_priors(dvf_ctx* ctx, const char* mode) {
    if (!mode) return fail(ctx, DVF_ERR_BAD_ARG, "null prior mode");
    return guarded(ctx, [&] {
        ctx->cfg.restorer.priors = prior_mode_from_string(mode);
        return DVF_OK;
    });
}

int dvf_set_tstar(dvf_ctx* ctx, double tstar) {
    return guarded(ctx, [&] {
        if (tstar <= 0.0 || tstar > 1.0)
            throw ConfigError("t* must lie in (0, 1]");
        ctx->cfg.restorer.tstar = tstar;
        return DVF_OK;
    });
}

int dvf_set_allow_hash_mismatch(dvf_ctx* ctx, int enabled) {
    if (!ctx) return DVF_ERR_BAD_ARG;
    ctx->allow_hash_mismatch = enabled != 0;
    return DVF_OK;
}

int dvf_gen_data(dvf_ctx* ctx) {
    return guarded(ctx, [&] {
        ctx->cfg.derive();
        ctx->cfg.validate();
        Dataset train = generate_toy_dataset(ctx->cfg.data);
        Dataset test = generate_test_dataset(ctx->cfg);
        save_dataset(train, ctx->cfg.out_dir + "/train");
        save_dataset(test, ctx->cfg.out_dir + "/test");
        ctx->cfg.save(ctx->cfg.out_dir + "/config.json");
        return DVF_OK;
    });
}

int dvf_train_stage0(dvf_ctx* ctx) {
    return guarded(ctx, [&] {
        ctx->cfg.derive();
        train_stage0(ctx->cfg, load_split(ctx, "train"), ctx->cfg.out_dir);
        return DVF_OK;
    });
}

int dvf_train_stage1(dvf_ctx* ctx) {
    return guarded(ctx, [&] {
        ctx->cfg.derive();
        train_stage1(ctx->cfg, load_split(ctx, "train"), ctx->cfg.out_dir);
        return DVF_OK;
    });
}

int dvf_train_stage1p(dvf_ctx* ctx) {
    return guarded(ctx, [&] {
        ctx->cfg.derive();
        train_stage1p(ctx->cfg, load_split(ctx, "train"), ctx->cfg.out_dir + "/stage1.ckpt",
                      ctx->cfg.out_dir);
        return DVF_OK;
    });
}

int dvf_train_stage2(dvf_ctx* ctx) {
    return guarded(ctx, [&] {
        ctx->cfg.derive();
        train_stage2(ctx->cfg, load_split(ctx, "train"), ctx->cfg.out_dir + "/stage1p.ckpt",
                     ctx->cfg.out_dir + "/stage0.ckpt", ctx->cfg.out_dir);
        return DVF_OK;
    });
}

int dvf_restore(dvf_ctx* ctx, const char* in_path, const char* out_path) {
    if (!in_path || !out_path) return fail(ctx, DVF_ERR_BAD_ARG, "null restore path");
    return guarded(ctx, [&] {
        ctx->cfg.derive();
        std::string ckpt = ctx->cfg.out_dir + "/stage2.ckpt";
        if (fs::is_directory(in_path)) {
            Dataset ds = load_dataset(in_path);
            fs::create_directories(out_path);
            for (size_t i = 0; i < ds.size(); ++i) {
                VideoClip restored = restore_clip(ctx->cfg, ckpt, ds.lq[i]);
                save_array_file(std::string(out_path) + "/" + restored.name + "_restored.dvar",
                                {restored.T, restored.H, restored.W, restored.C}, restored.data);
            }
        } else {
            Shape shape;
            std::vector<double> data;
            load_array_file(in_path, shape, data);
            if (shape.size() != 4 || shape[3] != 3)
                throw ShapeError("restore input must be a [T,H,W,3] clip array");
            VideoClip clip;
            clip.T = shape[0];
            clip.H = shape[1];
            clip.W = shape[2];
            clip.C = shape[3];
            clip.data = std::move(data);
            clip.name = fs::path(in_path).stem().string();
            VideoClip restored = restore_clip(ctx->cfg, ckpt, clip);
            save_array_file(out_path, {restored.T, restored.H, restored.W, restored.C},
                            restored.data);
        }
        return DVF_OK;
    });
}

int dvf_eval(dvf_ctx* ctx) {
    return guarded(ctx, [&] {
        ctx->cfg.derive();
        evaluate(ctx->cfg, load_split(ctx, "test"), ctx->cfg.out_dir + "/stage2.ckpt",
                 ctx->cfg.out_dir + "/eval", ctx->allow_hash_mismatch);
        return DVF_OK;
    });
}

int dvf_check(dvf_ctx* ctx, const char* suite) {
    if (!suite) return fail(ctx, DVF_ERR_BAD_ARG, "null suite name");
    return guarded(ctx, [&] {
        int failed = run_checks(suite, std::cout);
        if (failed != 0) {
            ctx->last_error = std::to_string(failed) + " check(s) failed";
            return DVF_ERR_CHECK_FAILED;
        }
        return DVF_OK;
    });
}

}  // extern "C"

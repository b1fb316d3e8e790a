// Exercises the shared-library C interface end to end on a micro run.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "dvface.h"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

namespace fs = std::filesystem;

namespace {

std::string write_micro_config(const std::string& dir) {
    std::string path = dir + "/config.json";
    std::ofstream os(path);
    os << R"({
  "data": {"n_clips": 2, "test_clips": 1, "T": 4, "H": 16, "W": 16, "seed": 7,
           "blur_sigma": [0.6, 1.2], "noise_sigma": [0.01, 0.04],
           "downscale_factors": [2], "quality": [60, 90], "degrade_seed": 11},
  "stdc": {"d": 8, "K": 8, "spatial_stride": 4, "temporal_stride": 1,
           "enc_width": 8, "attn_heads": 1, "tf_layers": 1, "tf_heads": 1, "tf_width": 16},
  "restorer": {"vae_dv": 8, "vae_stride": 4, "vae_width": 8,
               "dit_width": 16, "dit_blocks": 1, "dit_heads": 1,
               "tstar": 1.0, "priors": "both"},
  "stage0": {"iterations": 3, "lr": 0.001, "batch": 1},
  "stage1": {"iterations": 3, "lr": 0.001, "batch": 1},
  "stage1p": {"iterations": 3, "lr": 0.001, "batch": 1},
  "stage2": {"iterations": 3, "lr": 0.001, "batch": 1},
  "seed": 1
})";
    return path;
}

}  // namespace

TEST_CASE("context creation and error reporting") {
    dvf_ctx* ctx = dvf_create();
    REQUIRE(ctx != nullptr);
    CHECK(std::string(dvf_last_error(ctx)).empty());
    CHECK(dvf_load_config(ctx, "/nonexistent/file.json") == DVF_ERR_IO);
    CHECK(!std::string(dvf_last_error(ctx)).empty());
    CHECK(dvf_load_config(ctx, nullptr) == DVF_ERR_BAD_ARG);
    CHECK(dvf_set_priors(ctx, "bogus") == DVF_ERR_RUNTIME);
    CHECK(dvf_set_tstar(ctx, 0.0) == DVF_ERR_CONFIG);
    CHECK(dvf_set_tstar(ctx, 0.5) == DVF_OK);
    dvf_destroy(ctx);
}

TEST_CASE("invalid configs are rejected with a config error") {
    std::string dir = (fs::temp_directory_path() / "dvface_capi_badcfg").string();
    fs::create_directories(dir);
    std::string path = dir + "/bad.json";
    {
        std::ofstream os(path);
        os << R"({"data": {"H": 18}})";  // stride cannot tile 18
    }
    dvf_ctx* ctx = dvf_create();
    CHECK(dvf_load_config(ctx, path.c_str()) == DVF_ERR_CONFIG);
    dvf_destroy(ctx);
}

TEST_CASE("check suites run through the C interface") {
    dvf_ctx* ctx = dvf_create();
    CHECK(dvf_check(ctx, "algebra") == DVF_OK);
    CHECK(dvf_check(ctx, "no-such-suite") == DVF_ERR_CHECK_FAILED);
    CHECK(dvf_check(ctx, nullptr) == DVF_ERR_BAD_ARG);
    dvf_destroy(ctx);
}

TEST_CASE("full pipeline through the C interface") {
    std::string dir = (fs::temp_directory_path() / "dvface_capi_pipe").string();
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::string cfg = write_micro_config(dir);

    dvf_ctx* ctx = dvf_create();
    REQUIRE(dvf_load_config(ctx, cfg.c_str()) == DVF_OK);
    REQUIRE(dvf_set_out_dir(ctx, dir.c_str()) == DVF_OK);

    // training stages demand their prerequisites
    CHECK(dvf_train_stage0(ctx) == DVF_ERR_IO);  // no dataset yet

    REQUIRE(dvf_gen_data(ctx) == DVF_OK);
    CHECK(fs::exists(dir + "/train/manifest.json"));
    CHECK(fs::exists(dir + "/test/manifest.json"));
    CHECK(fs::exists(dir + "/config.json"));

    CHECK(dvf_train_stage2(ctx) == DVF_ERR_IO);  // stage-1'/0 checkpoints missing

    REQUIRE(dvf_train_stage0(ctx) == DVF_OK);
    REQUIRE(dvf_train_stage1(ctx) == DVF_OK);
    REQUIRE(dvf_train_stage1p(ctx) == DVF_OK);
    REQUIRE(dvf_train_stage2(ctx) == DVF_OK);
    CHECK(fs::exists(dir + "/stage2.ckpt"));

    REQUIRE(dvf_eval(ctx) == DVF_OK);
    CHECK(fs::exists(dir + "/eval/summary.json"));

    // restore a dataset directory
    std::string rdir = dir + "/restored";
    REQUIRE(dvf_restore(ctx, (dir + "/test").c_str(), rdir.c_str()) == DVF_OK);
    bool any = false;
    for (const auto& e : fs::directory_iterator(rdir)) any |= e.path().extension() == ".dvar";
    CHECK(any);

    // restore a single clip file (reuse an LQ array from the dataset)
    std::string lq_file;
    for (const auto& e : fs::directory_iterator(dir + "/test"))
        if (e.path().string().find("lq") != std::string::npos &&
            e.path().extension() == ".dvar") {
            lq_file = e.path().string();
            break;
        }
    REQUIRE(!lq_file.empty());
    std::string out_file = dir + "/one.dvar";
    CHECK(dvf_restore(ctx, lq_file.c_str(), out_file.c_str()) == DVF_OK);
    CHECK(fs::exists(out_file));
    CHECK(dvf_restore(ctx, nullptr, out_file.c_str()) == DVF_ERR_BAD_ARG);

    dvf_destroy(ctx);
}

#include "harness/config.hpp"

#include "core/serialize.hpp"

#include <fstream>

namespace dvface {

void RunConfig::derive() {
    if (data.T % stdc.temporal_stride != 0)
        throw ConfigError("config: T not divisible by the prior temporal stride");
    if (data.H % stdc.spatial_stride != 0 || data.W % stdc.spatial_stride != 0)
        throw ConfigError("config: H/W not divisible by the prior spatial stride");
    if (data.H % restorer.vae_stride != 0 || data.W % restorer.vae_stride != 0)
        throw ConfigError("config: H/W not divisible by the VAE stride");
    stdc.grid_t = data.T / stdc.temporal_stride;
    stdc.grid_h = data.H / stdc.spatial_stride;
    stdc.grid_w = data.W / stdc.spatial_stride;
    restorer.grid_t = data.T;  // per-frame VAE, temporal stride 1
    restorer.grid_h = data.H / restorer.vae_stride;
    restorer.grid_w = data.W / restorer.vae_stride;
    restorer.d_prior = stdc.d;
    // prior tokens must map 1:1 onto backbone tokens — fail at construction,
    // never resample
    if (stdc.grid_t * stdc.grid_h * stdc.grid_w !=
        restorer.grid_t * restorer.grid_h * restorer.grid_w)
        throw ConfigError("config: prior token grid does not match the backbone token grid");
}

void RunConfig::validate() const {
    for (const StageSchedule* s : {&stage0, &stage1, &stage1p, &stage2}) {
        if (s->iterations <= 0) throw ConfigError("config: iteration count must be positive");
        if (s->lr <= 0.0) throw ConfigError("config: learning rate must be positive");
        if (s->batch <= 0) throw ConfigError("config: batch size must be positive");
    }
    if (weights.beta < 0 || weights.lambda_adv < 0 || weights.lambda_ce < 0 ||
        weights.lambda_temp < 0)
        throw ConfigError("config: loss weights must be non-negative");
    if (data.n_clips <= 0 || test_clips < 0) throw ConfigError("config: bad clip counts");
    data.degrade.validate(data.H, data.W);
}

namespace {

nlohmann::json sched_json(const StageSchedule& s) {
    return {{"iterations", s.iterations}, {"lr", s.lr}, {"batch", s.batch}};
}

StageSchedule sched_from(const nlohmann::json& j, StageSchedule d) {
    d.iterations = j.value("iterations", d.iterations);
    d.lr = j.value("lr", d.lr);
    d.batch = j.value("batch", d.batch);
    return d;
}

}  // namespace

nlohmann::json RunConfig::to_json() const {
    nlohmann::json j;
    j["data"] = {{"n_clips", data.n_clips},
                 {"test_clips", test_clips},
                 {"T", data.T},
                 {"H", data.H},
                 {"W", data.W},
                 {"seed", data.seed},
                 {"blur_sigma", {data.degrade.blur_sigma_lo, data.degrade.blur_sigma_hi}},
                 {"noise_sigma", {data.degrade.noise_sigma_lo, data.degrade.noise_sigma_hi}},
                 {"downscale_factors", data.degrade.downscale_factors},
                 {"quality", {data.degrade.quality_lo, data.degrade.quality_hi}},
                 {"degrade_seed", data.degrade.seed}};
    j["stdc"] = {{"d", stdc.d},
                 {"K", stdc.K},
                 {"spatial_stride", stdc.spatial_stride},
                 {"temporal_stride", stdc.temporal_stride},
                 {"enc_width", stdc.enc_width},
                 {"attn_heads", stdc.attn_heads},
                 {"tf_layers", stdc.tf_layers},
                 {"tf_heads", stdc.tf_heads},
                 {"tf_width", stdc.tf_width}};
    j["restorer"] = {{"vae_dv", restorer.vae_dv},
                     {"vae_stride", restorer.vae_stride},
                     {"vae_width", restorer.vae_width},
                     {"dit_width", restorer.dit_width},
                     {"dit_blocks", restorer.dit_blocks},
                     {"dit_heads", restorer.dit_heads},
                     {"tstar", restorer.tstar},
                     {"priors", prior_mode_to_string(restorer.priors)},
                     {"shared_modulation", restorer.shared_modulation},
                     {"simple_spatial", restorer.simple_spatial}};
    j["weights"] = {{"beta", weights.beta},
                    {"lambda_adv", weights.lambda_adv},
                    {"lambda_ce", weights.lambda_ce},
                    {"lambda_temp", weights.lambda_temp}};
    j["stage0"] = sched_json(stage0);
    j["stage1"] = sched_json(stage1);
    j["stage1p"] = sched_json(stage1p);
    j["stage2"] = sched_json(stage2);
    j["seed"] = seed;
    j["out_dir"] = out_dir;
    return j;
}

RunConfig RunConfig::from_json(const nlohmann::json& j) {
    RunConfig c = RunConfig::desk_default();
    if (j.contains("data")) {
        const auto& d = j.at("data");
        c.data.n_clips = d.value("n_clips", c.data.n_clips);
        c.test_clips = d.value("test_clips", c.test_clips);
        c.data.T = d.value("T", c.data.T);
        c.data.H = d.value("H", c.data.H);
        c.data.W = d.value("W", c.data.W);
        c.data.seed = d.value("seed", c.data.seed);
        if (d.contains("blur_sigma")) {
            c.data.degrade.blur_sigma_lo = d.at("blur_sigma").at(0).get<double>();
            c.data.degrade.blur_sigma_hi = d.at("blur_sigma").at(1).get<double>();
        }
        if (d.contains("noise_sigma")) {
            c.data.degrade.noise_sigma_lo = d.at("noise_sigma").at(0).get<double>();
            c.data.degrade.noise_sigma_hi = d.at("noise_sigma").at(1).get<double>();
        }
        if (d.contains("downscale_factors"))
            c.data.degrade.downscale_factors = d.at("downscale_factors").get<std::vector<int>>();
        if (d.contains("quality")) {
            c.data.degrade.quality_lo = d.at("quality").at(0).get<int>();
            c.data.degrade.quality_hi = d.at("quality").at(1).get<int>();
        }
        c.data.degrade.seed = d.value("degrade_seed", c.data.degrade.seed);
    }
    if (j.contains("stdc")) {
        const auto& s = j.at("stdc");
        c.stdc.d = s.value("d", c.stdc.d);
        c.stdc.K = s.value("K", c.stdc.K);
        c.stdc.spatial_stride = s.value("spatial_stride", c.stdc.spatial_stride);
        c.stdc.temporal_stride = s.value("temporal_stride", c.stdc.temporal_stride);
        c.stdc.enc_width = s.value("enc_width", c.stdc.enc_width);
        c.stdc.attn_heads = s.value("attn_heads", c.stdc.attn_heads);
        c.stdc.tf_layers = s.value("tf_layers", c.stdc.tf_layers);
        c.stdc.tf_heads = s.value("tf_heads", c.stdc.tf_heads);
        c.stdc.tf_width = s.value("tf_width", c.stdc.tf_width);
    }
    if (j.contains("restorer")) {
        const auto& r = j.at("restorer");
        c.restorer.vae_dv = r.value("vae_dv", c.restorer.vae_dv);
        c.restorer.vae_stride = r.value("vae_stride", c.restorer.vae_stride);
        c.restorer.vae_width = r.value("vae_width", c.restorer.vae_width);
        c.restorer.dit_width = r.value("dit_width", c.restorer.dit_width);
        c.restorer.dit_blocks = r.value("dit_blocks", c.restorer.dit_blocks);
        c.restorer.dit_heads = r.value("dit_heads", c.restorer.dit_heads);
        c.restorer.tstar = r.value("tstar", c.restorer.tstar);
        if (r.contains("priors"))
            c.restorer.priors = prior_mode_from_string(r.at("priors").get<std::string>());
        c.restorer.shared_modulation = r.value("shared_modulation", c.restorer.shared_modulation);
        c.restorer.simple_spatial = r.value("simple_spatial", c.restorer.simple_spatial);
    }
    if (j.contains("weights")) {
        const auto& w = j.at("weights");
        c.weights.beta = w.value("beta", c.weights.beta);
        c.weights.lambda_adv = w.value("lambda_adv", c.weights.lambda_adv);
        c.weights.lambda_ce = w.value("lambda_ce", c.weights.lambda_ce);
        c.weights.lambda_temp = w.value("lambda_temp", c.weights.lambda_temp);
    }
    if (j.contains("stage0")) c.stage0 = sched_from(j.at("stage0"), c.stage0);
    if (j.contains("stage1")) c.stage1 = sched_from(j.at("stage1"), c.stage1);
    if (j.contains("stage1p")) c.stage1p = sched_from(j.at("stage1p"), c.stage1p);
    if (j.contains("stage2")) c.stage2 = sched_from(j.at("stage2"), c.stage2);
    c.seed = j.value("seed", c.seed);
    c.out_dir = j.value("out_dir", c.out_dir);
    c.derive();
    c.validate();
    return c;
}

uint64_t RunConfig::hash() const {
    // nlohmann::json objects iterate in sorted key order, so dump() is a
    // canonical form independent of construction order
    std::string s = to_json().dump();
    return fnv1a(s.data(), s.size());
}

RunConfig RunConfig::load(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open config file: " + path);
    nlohmann::json j;
    is >> j;
    return from_json(j);
}

void RunConfig::save(const std::string& path) const {
    std::ofstream os(path);
    if (!os) throw IoError("cannot write config file: " + path);
    os << to_json().dump(2) << "\n";
}

RunConfig RunConfig::desk_default() {
    RunConfig c;
    c.data.n_clips = 8;
    c.test_clips = 4;
    c.data.T = 4;
    c.data.H = 16;
    c.data.W = 16;
    c.data.seed = 7;
    c.data.degrade.blur_sigma_lo = 0.6;
    c.data.degrade.blur_sigma_hi = 1.2;
    c.data.degrade.noise_sigma_lo = 0.01;
    c.data.degrade.noise_sigma_hi = 0.04;
    c.data.degrade.downscale_factors = {2};
    c.data.degrade.quality_lo = 60;
    c.data.degrade.quality_hi = 90;
    c.data.degrade.seed = 11;

    c.stdc.d = 16;
    c.stdc.K = 32;
    c.stdc.spatial_stride = 4;
    c.stdc.temporal_stride = 1;
    c.stdc.enc_width = 24;
    c.stdc.attn_heads = 2;
    c.stdc.tf_layers = 2;
    c.stdc.tf_heads = 2;
    c.stdc.tf_width = 48;

    c.restorer.vae_dv = 8;
    c.restorer.vae_stride = 4;
    c.restorer.vae_width = 24;
    c.restorer.dit_width = 64;
    c.restorer.dit_blocks = 2;
    c.restorer.dit_heads = 2;

    c.stage0 = {1200, 1e-3, 2};
    c.stage1 = {2000, 8e-5, 2};
    c.stage1p = {1500, 8e-5, 2};
    c.stage2 = {400, 3e-5, 2};
    c.derive();
    return c;
}

}  // namespace dvface

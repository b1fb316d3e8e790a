#include "harness/train.hpp"

#include "harness/plots.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

namespace dvface {

namespace fs = std::filesystem;

std::vector<Tensor> params_with_prefixes(const ParamStore& ps,
                                         const std::vector<std::string>& prefixes) {
    std::vector<Tensor> out;
    for (const auto& [name, t] : ps.all())
        for (const auto& p : prefixes)
            if (name.rfind(p, 0) == 0) {
                out.push_back(t);
                break;
            }
    return out;
}

void freeze_with_prefixes(ParamStore& ps, const std::vector<std::string>& prefixes) {
    for (const auto& [name, t] : ps.all())
        for (const auto& p : prefixes)
            if (name.rfind(p, 0) == 0) {
                Tensor h = t;
                h.set_requires_grad(false);
                break;
            }
}

namespace {

void save_opt(Checkpoint& ck, AdamW& opt, const std::string& tag) {
    ck.put("opt." + tag + ".m", {int(opt.moment1().size())}, opt.moment1());
    ck.put("opt." + tag + ".v", {int(opt.moment2().size())}, opt.moment2());
    ck.put_scalar("opt." + tag + ".t", double(opt.iteration()));
}

void load_opt(const Checkpoint& ck, AdamW& opt, const std::string& tag) {
    const auto& m = ck.arrays.at("opt." + tag + ".m").second;
    const auto& v = ck.arrays.at("opt." + tag + ".v").second;
    if (int64_t(m.size()) != opt.state_size())
        throw IoError("optimizer state size mismatch on resume");
    opt.moment1() = m;
    opt.moment2() = v;
    opt.set_iteration(int64_t(ck.get_scalar("opt." + tag + ".t")));
}

// Loads only the checkpoint entries for parameters whose name starts with
// `name_prefix` (used to pull the VAE out of a Stage-0 checkpoint without
// touching freshly initialized DiT/fusion parameters).
void load_params_subset(ParamStore& ps, const Checkpoint& ck, const std::string& ckpt_prefix,
                        const std::string& name_prefix) {
    for (const auto& [name, t] : ps.all()) {
        if (name.rfind(name_prefix, 0) != 0) continue;
        auto it = ck.arrays.find(ckpt_prefix + name);
        if (it == ck.arrays.end())
            throw IoError("checkpoint missing parameter: " + ckpt_prefix + name);
        if (it->second.first != t.shape())
            throw IoError("checkpoint shape mismatch for " + ckpt_prefix + name);
        Tensor h = t;
        h.data() = it->second.second;
    }
}

void guard_finite(double total, const std::string& stage, int it) {
    if (!std::isfinite(total))
        throw std::runtime_error(stage + " diverged at iteration " + std::to_string(it) +
                                 " (non-finite loss)");
}

void write_history(const std::string& out_dir, const std::string& stage,
                   const std::vector<std::map<std::string, double>>& history) {
    fs::create_directories(out_dir);
    std::ofstream os(out_dir + "/" + stage + "_history.jsonl");
    std::vector<std::pair<std::string, std::vector<double>>> series;
    for (size_t i = 0; i < history.size(); ++i) {
        nlohmann::json j(history[i]);
        j["iter"] = i;
        os << j.dump() << "\n";
        for (const auto& [k, v] : history[i]) {
            auto it = std::find_if(series.begin(), series.end(),
                                   [&](const auto& s) { return s.first == k; });
            if (it == series.end()) {
                series.push_back({k, {}});
                it = series.end() - 1;
            }
            it->second.push_back(v);
        }
    }
    if (!history.empty()) plot_loss_curves(out_dir + "/" + stage + "_loss.png", series);
}

Tensor clip_to_tensor(const VideoClip& c) {
    return Tensor::from_data({c.T, c.H, c.W, c.C}, c.data);
}

Tensor tokens2d(const Tensor& grid) {
    int d = grid.shape().back();
    return reshape(grid, {int(grid.size() / d), d});
}

}  // namespace

Stage1Forward stage1_forward(const StdcModel& m, const VideoClip& hq) {
    Stage1Forward f;
    f.z_l = m.encode(hq);
    f.z_t = m.temporal_interaction(f.z_l);
    f.z_s = m.spatial_path(f.z_l);
    f.qs = quantize(f.z_s, m.codebook_spatial());
    f.qt = quantize(f.z_t, m.codebook_temporal());
    f.z_h = concat0({tokens2d(f.z_s), tokens2d(f.z_t)});
    f.z_q = concat0({tokens2d(f.qs.values), tokens2d(f.qt.values)});
    f.x_hat = m.decode(add(f.qs.ste, f.qt.ste));
    return f;
}

void hq_code_targets(const StdcModel& ref, const VideoClip& hq, std::vector<int>& target_s,
                     std::vector<int>& target_t) {
    Tensor z_l = ref.encode(hq);
    target_s = nearest_codes(ref.spatial_path(z_l), ref.codebook_spatial());
    target_t = nearest_codes(ref.temporal_interaction(z_l), ref.codebook_temporal());
}

Stage1pForward stage1p_forward(const StdcModel& m, const VideoClip& lq,
                               const std::vector<int>& target_s,
                               const std::vector<int>& target_t) {
    Stage1pForward f;
    f.target_s = target_s;
    f.target_t = target_t;
    Tensor z_l = m.encode(lq);
    Tensor z_s = m.spatial_path(z_l);
    Tensor z_t = m.temporal_interaction(z_l);
    f.logits_s = m.predict_codes(z_s, StdcModel::Which::spatial);
    f.logits_t = m.predict_codes(z_t, StdcModel::Which::temporal);
    f.z_l_tokens = concat0({tokens2d(z_s), tokens2d(z_t)});
    // target codebook rows; detached by the loss, the codebooks are frozen
    auto rows = [&](const Tensor& cb, const std::vector<int>& idx) {
        int d = cb.dim(1);
        std::vector<double> v(idx.size() * size_t(d));
        for (size_t i = 0; i < idx.size(); ++i)
            for (int j = 0; j < d; ++j)
                v[i * size_t(d) + size_t(j)] = cb.data()[size_t(int64_t(idx[i]) * d + j)];
        return Tensor::from_data({int(idx.size()), d}, std::move(v));
    };
    f.z_q_tokens = concat0({rows(m.codebook_spatial(), target_s),
                            rows(m.codebook_temporal(), target_t)});
    auto acc = [](const Tensor& logits, const std::vector<int>& tgt) {
        int K = logits.dim(1);
        int hit = 0;
        for (size_t i = 0; i < tgt.size(); ++i) {
            const double* row = logits.data().data() + int64_t(i) * K;
            int best = 0;
            for (int k = 1; k < K; ++k)
                if (row[k] > row[best]) best = k;
            if (best == tgt[i]) ++hit;
        }
        return double(hit) / double(tgt.size());
    };
    f.acc_s = acc(f.logits_s, target_s);
    f.acc_t = acc(f.logits_t, target_t);
    return f;
}

TrainResult train_stage0(const RunConfig& cfg, const Dataset& ds, const std::string& out_dir,
                         const std::string& resume) {
    RestorerModel model(cfg.restorer);
    AdamW::Hyper h;
    h.lr = cfg.stage0.lr;
    AdamW opt(params_with_prefixes(model.params(), {"vae."}), h);
    int start = 0;
    if (!resume.empty()) {
        Checkpoint rc = Checkpoint::load(resume);
        model.load(rc);
        load_opt(rc, opt, "g");
        start = int(rc.get_scalar("state.iter"));
    }
    TrainResult res;
    int n = int(ds.size());
    for (int it = start; it < cfg.stage0.iterations; ++it) {
        opt.zero_grad();
        Tensor total;
        for (int j = 0; j < cfg.stage0.batch; ++j) {
            const VideoClip& hq = ds.hq[size_t((int64_t(it) * cfg.stage0.batch + j) % n)];
            Tensor x = clip_to_tensor(hq);
            Tensor rec = model.vae_decode(model.vae_encode(x));
            Tensor l = mse(rec, x);
            total = total.defined() ? add(total, l) : l;
        }
        total = scale(total, 1.0 / cfg.stage0.batch);
        guard_finite(total.item(), "stage0", it);
        backward(total);
        opt.step();
        res.history.push_back({{"total", total.item()}});
    }
    fs::create_directories(out_dir);
    Checkpoint ck;
    ck.config_hash = cfg.hash();
    model.save(ck);
    save_opt(ck, opt, "g");
    ck.put_scalar("state.iter", double(cfg.stage0.iterations));
    res.ckpt_path = out_dir + "/stage0.ckpt";
    ck.save(res.ckpt_path);
    write_history(out_dir, "stage0", res.history);
    return res;
}

TrainResult train_stage1(const RunConfig& cfg, const Dataset& ds, const std::string& out_dir,
                         const std::string& resume) {
    StdcModel model(cfg.stdc);
    Discriminator disc(cfg.seed * 1315423911ULL + 99);
    FeatureExtractor fe;
    AdamW::Hyper hg;
    hg.lr = cfg.stage1.lr;
    AdamW opt_g(params_with_prefixes(model.params(), {"enc.", "tattn.", "spath.", "cb.", "dec."}),
                hg);
    AdamW::Hyper hd;
    hd.lr = cfg.stage1.lr;
    AdamW opt_d(disc.params().tensors(), hd);
    int start = 0;
    if (!resume.empty()) {
        Checkpoint rc = Checkpoint::load(resume);
        model.load(rc);
        load_params(disc.params(), rc, "disc.");
        load_opt(rc, opt_g, "g");
        load_opt(rc, opt_d, "d");
        start = int(rc.get_scalar("state.iter"));
    }
    TrainResult res;
    int n = int(ds.size());
    for (int it = start; it < cfg.stage1.iterations; ++it) {
        // discriminator update on detached generator outputs
        std::vector<Stage1Forward> fwd;
        opt_d.zero_grad();
        Tensor d_total;
        for (int j = 0; j < cfg.stage1.batch; ++j) {
            const VideoClip& hq = ds.hq[size_t((int64_t(it) * cfg.stage1.batch + j) % n)];
            fwd.push_back(stage1_forward(model, hq));
            Tensor dl = discriminator_step_loss(clip_to_tensor(hq), fwd.back().x_hat, disc);
            d_total = d_total.defined() ? add(d_total, dl) : dl;
        }
        d_total = scale(d_total, 1.0 / cfg.stage1.batch);
        guard_finite(d_total.item(), "stage1[d]", it);
        backward(d_total);
        opt_d.step();

        // generator update against the refreshed discriminator
        opt_g.zero_grad();
        Tensor g_total;
        std::map<std::string, double> row;
        for (int j = 0; j < cfg.stage1.batch; ++j) {
            const VideoClip& hq = ds.hq[size_t((int64_t(it) * cfg.stage1.batch + j) % n)];
            LossReport r = stage1_loss(fwd[size_t(j)].x_hat, clip_to_tensor(hq), fwd[size_t(j)].z_h,
                                       fwd[size_t(j)].z_q, disc, fe, cfg.weights);
            g_total = g_total.defined() ? add(g_total, r.total) : r.total;
            for (const auto& [k, v] : r.values()) row[k] += v / cfg.stage1.batch;
        }
        g_total = scale(g_total, 1.0 / cfg.stage1.batch);
        guard_finite(g_total.item(), "stage1", it);
        backward(g_total);
        opt_g.step();
        row["adv_d"] = d_total.item();
        res.history.push_back(row);
    }
    fs::create_directories(out_dir);
    Checkpoint ck;
    ck.config_hash = cfg.hash();
    model.save(ck);
    save_params(disc.params(), ck, "disc.");
    save_opt(ck, opt_g, "g");
    save_opt(ck, opt_d, "d");
    ck.put_scalar("state.iter", double(cfg.stage1.iterations));
    res.ckpt_path = out_dir + "/stage1.ckpt";
    ck.save(res.ckpt_path);
    write_history(out_dir, "stage1", res.history);
    return res;
}

TrainResult train_stage1p(const RunConfig& cfg, const Dataset& ds, const std::string& stage1_ckpt,
                          const std::string& out_dir, const std::string& resume) {
    Checkpoint base = Checkpoint::load(stage1_ckpt);
    StdcModel model(cfg.stdc);
    model.load(base);
    StdcModel ref(cfg.stdc);  // fixed Stage-1 weights generate the code targets
    ref.load(base);
    freeze_with_prefixes(ref.params(), {""});
    // decoder and both codebooks stay fixed in this stage
    freeze_with_prefixes(model.params(), {"cb.", "dec."});

    // per-clip HQ targets under the fixed reference model
    std::vector<std::vector<int>> tgt_s(ds.size()), tgt_t(ds.size());
    for (size_t i = 0; i < ds.size(); ++i) hq_code_targets(ref, ds.hq[i], tgt_s[i], tgt_t[i]);

    AdamW::Hyper h;
    h.lr = cfg.stage1p.lr;
    AdamW opt(params_with_prefixes(model.params(), {"enc.", "tattn.", "spath.", "tf."}), h);
    int start = 0;
    if (!resume.empty()) {
        Checkpoint rc = Checkpoint::load(resume);
        model.load(rc);
        load_opt(rc, opt, "g");
        start = int(rc.get_scalar("state.iter"));
    }
    TrainResult res;
    int n = int(ds.size());
    for (int it = start; it < cfg.stage1p.iterations; ++it) {
        opt.zero_grad();
        Tensor total;
        std::map<std::string, double> row;
        for (int j = 0; j < cfg.stage1p.batch; ++j) {
            size_t idx = size_t((int64_t(it) * cfg.stage1p.batch + j) % n);
            Stage1pForward f = stage1p_forward(model, ds.lq[idx], tgt_s[idx], tgt_t[idx]);
            LossReport r = stage1p_loss(f.logits_s, f.logits_t, f.target_s, f.target_t,
                                        f.z_l_tokens, f.z_q_tokens, cfg.weights);
            total = total.defined() ? add(total, r.total) : r.total;
            for (const auto& [k, v] : r.values()) row[k] += v / cfg.stage1p.batch;
            row["acc_s"] += f.acc_s / cfg.stage1p.batch;
            row["acc_t"] += f.acc_t / cfg.stage1p.batch;
        }
        total = scale(total, 1.0 / cfg.stage1p.batch);
        guard_finite(total.item(), "stage1p", it);
        backward(total);
        opt.step();
        res.history.push_back(row);
    }
    fs::create_directories(out_dir);
    Checkpoint ck;
    ck.config_hash = cfg.hash();
    model.save(ck);
    save_opt(ck, opt, "g");
    ck.put_scalar("state.iter", double(cfg.stage1p.iterations));
    res.ckpt_path = out_dir + "/stage1p.ckpt";
    ck.save(res.ckpt_path);
    write_history(out_dir, "stage1p", res.history);
    return res;
}

TrainResult train_stage2(const RunConfig& cfg, const Dataset& ds, const std::string& stdc_ckpt,
                         const std::string& vae_ckpt, const std::string& out_dir,
                         const std::string& resume) {
    StdcModel stdc(cfg.stdc);
    stdc.load(Checkpoint::load(stdc_ckpt));
    freeze_with_prefixes(stdc.params(), {""});  // prior extractor fixed

    RestorerModel model(cfg.restorer);
    load_params_subset(model.params(), Checkpoint::load(vae_ckpt), "restorer.", "vae.");
    freeze_with_prefixes(model.params(), {"vae.enc."});
    FeatureExtractor fe;

    AdamW::Hyper h;
    h.lr = cfg.stage2.lr;
    AdamW opt(params_with_prefixes(model.params(), {"dit.", "fusion.", "vae.dec."}), h);
    int start = 0;
    if (!resume.empty()) {
        Checkpoint rc = Checkpoint::load(resume);
        model.load(rc);
        load_opt(rc, opt, "g");
        start = int(rc.get_scalar("state.iter"));
    }
    TrainResult res;
    int n = int(ds.size());
    for (int it = start; it < cfg.stage2.iterations; ++it) {
        opt.zero_grad();
        Tensor total;
        std::map<std::string, double> row;
        for (int j = 0; j < cfg.stage2.batch; ++j) {
            size_t idx = size_t((int64_t(it) * cfg.stage2.batch + j) % n);
            auto rt = model.restore_training(ds.lq[idx], stdc);
            Tensor x_hq = clip_to_tensor(ds.hq[idx]);
            Tensor z_hq = detach(model.vae_encode(x_hq));  // encoder frozen
            LossReport r =
                stage2_loss(rt.z_hat, z_hq, rt.x_hat, x_hq, ds.flows[idx], fe, cfg.weights);
            total = total.defined() ? add(total, r.total) : r.total;
            for (const auto& [k, v] : r.values()) row[k] += v / cfg.stage2.batch;
        }
        total = scale(total, 1.0 / cfg.stage2.batch);
        guard_finite(total.item(), "stage2", it);
        backward(total);
        opt.step();
        res.history.push_back(row);
    }
    fs::create_directories(out_dir);
    Checkpoint ck;
    ck.config_hash = cfg.hash();
    model.save(ck);
    stdc.save(ck);
    save_opt(ck, opt, "g");
    ck.put_scalar("state.iter", double(cfg.stage2.iterations));
    res.ckpt_path = out_dir + "/stage2.ckpt";
    ck.save(res.ckpt_path);
    write_history(out_dir, "stage2", res.history);
    return res;
}

EvalReport evaluate(const RunConfig& cfg, const Dataset& test, const std::string& stage2_ckpt,
                    const std::string& out_dir, bool allow_hash_mismatch) {
    Checkpoint ck = Checkpoint::load(stage2_ckpt);
    if (!allow_hash_mismatch && ck.config_hash != cfg.hash())
        throw IoError("checkpoint config hash does not match the supplied config "
                      "(pass the override to evaluate anyway)");
    StdcModel stdc(cfg.stdc);
    stdc.load(ck);
    RestorerModel model(cfg.restorer);
    model.load(ck);

    EvalReport restored_rep, lq_rep;
    fs::create_directories(out_dir);
    for (size_t i = 0; i < test.size(); ++i) {
        VideoClip restored = model.one_step_restore(test.lq[i], stdc);
        ClipMetrics cm;
        cm.name = test.hq[i].name;
        cm.psnr = psnr(restored, test.hq[i]);
        cm.ssim = ssim(restored, test.hq[i]);
        cm.ewarp = warping_error(restored, test.flows[i]);
        restored_rep.clips.push_back(cm);
        ClipMetrics lm;
        lm.name = test.hq[i].name;
        lm.psnr = psnr(test.lq[i], test.hq[i]);
        lm.ssim = ssim(test.lq[i], test.hq[i]);
        lm.ewarp = warping_error(test.lq[i], test.flows[i]);
        lq_rep.clips.push_back(lm);
        if (i == 0) plot_temporal_strip(out_dir + "/restored_strip.png", restored);
    }
    restored_rep.finalize();
    lq_rep.finalize();
    restored_rep.meta["config_hash"] = std::to_string(cfg.hash());
    restored_rep.meta["lq_psnr"] = std::to_string(lq_rep.aggregate.psnr);
    restored_rep.meta["lq_ewarp"] = std::to_string(lq_rep.aggregate.ewarp);
    restored_rep.meta["priors"] = prior_mode_to_string(cfg.restorer.priors);
    restored_rep.write_jsonl(out_dir + "/report.jsonl");
    restored_rep.write_summary(out_dir + "/summary.json");
    lq_rep.write_jsonl(out_dir + "/report_lq.jsonl");
    lq_rep.write_summary(out_dir + "/summary_lq.json");
    std::vector<double> bars;
    for (const auto& c : restored_rep.clips) bars.push_back(c.psnr);
    plot_metric_bars(out_dir + "/psnr_bars.png", bars, 0.0, 50.0);
    return restored_rep;
}

VideoClip restore_clip(const RunConfig& cfg, const std::string& stage2_ckpt, const VideoClip& lq) {
    Checkpoint ck = Checkpoint::load(stage2_ckpt);
    StdcModel stdc(cfg.stdc);
    stdc.load(ck);
    RestorerModel model(cfg.restorer);
    model.load(ck);
    return model.one_step_restore(lq, stdc);
}

Dataset generate_test_dataset(const RunConfig& cfg) {
    DatasetParams p = cfg.data;
    p.n_clips = cfg.test_clips;
    p.seed = cfg.data.seed + 9001;  // disjoint content stream from the train split
    p.degrade.seed = cfg.data.degrade.seed + 9001;
    return generate_toy_dataset(p);
}

}  // namespace dvface

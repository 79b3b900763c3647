#include "commands.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "feinfn/config.hpp"
#include "feinfn/data.hpp"
#include "feinfn/image.hpp"
#include "feinfn/metrics.hpp"
#include "feinfn/model.hpp"
#include "feinfn/report.hpp"
#include "feinfn/rng.hpp"

namespace fs = std::filesystem;

namespace feinfn::cli {

namespace {

constexpr const char* kToolVersion = "0.1.0";

std::string resolve_data_root(const CommonOpts& opts) {
    if (!opts.data_root.empty()) return opts.data_root;
    if (const char* env = std::getenv("FEINFN_DATA_ROOT")) return env;
    return "";
}

i64 integer_scale(double scale) {
    const i64 s = static_cast<i64>(std::llround(scale));
    if (s < 1 || std::abs(scale - double(s)) > 1e-12) {
        throw ConfigError("the data pipeline needs an integer scale, got " +
                          std::to_string(scale));
    }
    return s;
}

// ---------------------------------------------------------------------------
// configuration sections beyond the model itself

struct DataSettings {
    DatasetOptions opts;
    SplitSpec split;  // side is set per load
    std::string srf_csv;
    double blur_sigma = -1.0;
    PadMode pad = PadMode::kReflect;
};

PadMode pad_from_string(const std::string& s) {
    if (s == "reflect") return PadMode::kReflect;
    if (s == "periodic") return PadMode::kPeriodic;
    throw ConfigError("unknown pad mode '" + s + "' (expected reflect or periodic)");
}

std::string to_string(PadMode p) { return p == PadMode::kReflect ? "reflect" : "periodic"; }

DataSettings read_data_settings(const ConfigMap& cfg, i64 scale) {
    DataSettings d;
    d.opts.layout = layout_from_string(cfg.get_str("data", "layout", "synthetic"));
    d.opts.synthetic.count = cfg.get_int("data", "synthetic_count", 4);
    d.opts.synthetic.height = cfg.get_int("data", "synthetic_height", 48);
    d.opts.synthetic.width = cfg.get_int("data", "synthetic_width", 48);
    d.opts.synthetic.bands = cfg.get_int("data", "synthetic_bands", 31);
    d.opts.synthetic.seed = static_cast<std::uint64_t>(cfg.get_int("data", "synthetic_seed", 0));
    d.opts.crop_top_left = cfg.get_int("data", "crop_top_left", 0);
    d.opts.round_to_multiple = cfg.get_int("data", "round_to_multiple", 0);
    if (d.opts.round_to_multiple == 0) d.opts.round_to_multiple = scale;

    const std::string split_file = cfg.get_str("data", "split_file", "");
    if (!split_file.empty()) {
        d.split = SplitSpec::from_json_file(split_file);
    } else {
        d.split.train_count = cfg.get_int("data", "train_count", -1);
        d.split.seed = static_cast<std::uint64_t>(cfg.get_int("data", "split_seed", 0));
    }
    d.srf_csv = cfg.get_str("data", "srf_csv", "");
    d.blur_sigma = cfg.get_double("data", "blur_sigma", -1.0);
    d.pad = pad_from_string(cfg.get_str("data", "pad", "reflect"));
    return d;
}

struct TrainSettings {
    i64 steps = 500;
    i64 batch_size = 1;
    i64 patch_hr = 32;
    i64 patch_count = 64;
    i64 queries_per_sample = 256;  // 0: every HR pixel of the patch
    i64 eval_every = 100;          // 0: only the final evaluation
    i64 eval_scenes = 2;
    i64 checkpoint_every = 0;  // 0: final checkpoint only
};

TrainSettings read_train_settings(const ConfigMap& cfg) {
    TrainSettings t;
    t.steps = cfg.get_int("train", "steps", t.steps);
    t.batch_size = cfg.get_int("train", "batch_size", t.batch_size);
    t.patch_hr = cfg.get_int("train", "patch_hr", t.patch_hr);
    t.patch_count = cfg.get_int("train", "patch_count", t.patch_count);
    t.queries_per_sample = cfg.get_int("train", "queries_per_sample", t.queries_per_sample);
    t.eval_every = cfg.get_int("train", "eval_every", t.eval_every);
    t.eval_scenes = cfg.get_int("train", "eval_scenes", t.eval_scenes);
    t.checkpoint_every = cfg.get_int("train", "checkpoint_every", t.checkpoint_every);
    if (t.steps < 1) throw ConfigError("train.steps must be positive");
    if (t.batch_size < 1) throw ConfigError("train.batch_size must be positive");
    if (t.patch_count < 1) throw ConfigError("train.patch_count must be positive");
    return t;
}

void reject_unknown_keys(const ConfigMap& cfg) {
    const auto leftover = cfg.unconsumed();
    if (leftover.empty()) return;
    std::string msg = "unknown config keys:";
    for (const auto& k : leftover) msg += " " + k;
    throw ConfigError(msg);
}

/// Every effective value, defaults included, so the manifest records the
/// full recipe even when the config file left gaps.
std::string effective_config_text(const FusionConfig& mc, const DataSettings& ds,
                                  const TrainSettings& ts) {
    ConfigMap out;
    mc.write_to(out);
    out.set("data", "layout", feinfn::to_string(ds.opts.layout));
    out.set_int("data", "synthetic_count", ds.opts.synthetic.count);
    out.set_int("data", "synthetic_height", ds.opts.synthetic.height);
    out.set_int("data", "synthetic_width", ds.opts.synthetic.width);
    out.set_int("data", "synthetic_bands", ds.opts.synthetic.bands);
    out.set_int("data", "synthetic_seed", static_cast<long long>(ds.opts.synthetic.seed));
    out.set_int("data", "crop_top_left", ds.opts.crop_top_left);
    out.set_int("data", "round_to_multiple", ds.opts.round_to_multiple);
    out.set_int("data", "train_count", ds.split.train_count);
    out.set_int("data", "split_seed", static_cast<long long>(ds.split.seed));
    out.set("data", "srf_csv", ds.srf_csv);
    out.set_double("data", "blur_sigma", ds.blur_sigma);
    out.set("data", "pad", to_string(ds.pad));
    out.set_int("train", "steps", ts.steps);
    out.set_int("train", "batch_size", ts.batch_size);
    out.set_int("train", "patch_hr", ts.patch_hr);
    out.set_int("train", "patch_count", ts.patch_count);
    out.set_int("train", "queries_per_sample", ts.queries_per_sample);
    out.set_int("train", "eval_every", ts.eval_every);
    out.set_int("train", "eval_scenes", ts.eval_scenes);
    out.set_int("train", "checkpoint_every", ts.checkpoint_every);
    return out.serialize();
}

// ---------------------------------------------------------------------------
// dataset plumbing

std::vector<HyperspectralImage> load_side(const std::string& root, const DataSettings& ds,
                                          SplitSpec::Side side) {
    if (ds.opts.layout != DatasetLayout::kSynthetic && root.empty()) {
        throw DataError("no data root given (use --data-root or FEINFN_DATA_ROOT)");
    }
    SplitSpec split = ds.split;
    split.side = side;
    return load_dataset(root, ds.opts, split);
}

SpectralResponse make_srf(const DataSettings& ds, i64 msi_bands, i64 hsi_bands) {
    if (!ds.srf_csv.empty()) {
        SpectralResponse srf = SpectralResponse::from_csv(ds.srf_csv);
        if (srf.msi_bands() != msi_bands || srf.hsi_bands() != hsi_bands) {
            throw DataError("spectral response is " + std::to_string(srf.msi_bands()) + "x" +
                            std::to_string(srf.hsi_bands()) + " but the model expects " +
                            std::to_string(msi_bands) + "x" + std::to_string(hsi_bands));
        }
        return srf;
    }
    return SpectralResponse::grouped(msi_bands, hsi_bands);
}

void check_bands(const std::vector<HyperspectralImage>& imgs, i64 expected) {
    for (const auto& img : imgs) {
        if (img.bands() != expected) {
            throw DataError("scene '" + img.name + "' has " + std::to_string(img.bands()) +
                            " bands but the model expects " + std::to_string(expected));
        }
    }
}

struct EvalPair {
    HyperspectralImage lr, msi;
    const HyperspectralImage* gt;
};

std::vector<EvalPair> simulate_eval_pairs(const std::vector<HyperspectralImage>& scenes,
                                          i64 scale, const SpectralResponse& srf,
                                          const DataSettings& ds) {
    std::vector<EvalPair> pairs;
    pairs.reserve(scenes.size());
    for (const auto& gt : scenes) {
        auto [lr, msi] = wald_simulate(gt, scale, srf, ds.blur_sigma, ds.pad);
        pairs.push_back({std::move(lr), std::move(msi), &gt});
    }
    return pairs;
}

double mean_eval_psnr(const FusionModel& model, const std::vector<EvalPair>& pairs) {
    if (pairs.empty()) return std::numeric_limits<double>::quiet_NaN();
    double acc = 0.0;
    for (const auto& p : pairs) {
        const HyperspectralImage pred = model.forward_image(p.lr, p.msi, true);
        acc += psnr(pred.data, p.gt->data);
    }
    return acc / double(pairs.size());
}

// ---------------------------------------------------------------------------
// the shared training loop (cmd_train and every ablation variant)

struct TrainOutcome {
    std::string checkpoint_path;
    i64 parameter_count = 0;
    MetricReport eval_report;  // final metrics on the evaluation scenes
};

TrainOutcome run_training(const FusionConfig& mc, const DataSettings& ds, const TrainSettings& ts,
                          const std::string& data_root, const std::string& out_dir,
                          bool deterministic,
                          const std::map<std::string, std::string>& extra_notes) {
    const i64 scale = integer_scale(mc.scale);
    if (ts.patch_hr % scale != 0) {
        throw ConfigError("train.patch_hr must be a multiple of the scale");
    }

    std::vector<HyperspectralImage> train_scenes = load_side(data_root, ds, SplitSpec::Side::kTrain);
    if (train_scenes.empty()) throw DataError("the training split selected no scenes");
    check_bands(train_scenes, mc.bands);
    std::vector<HyperspectralImage> eval_scenes = load_side(data_root, ds, SplitSpec::Side::kTest);
    if (eval_scenes.empty()) {
        // No held-out side configured: monitor progress on the first train scene.
        eval_scenes.push_back(train_scenes.front());
    }
    if (static_cast<i64>(eval_scenes.size()) > ts.eval_scenes) {
        eval_scenes.resize(static_cast<std::size_t>(ts.eval_scenes));
    }
    check_bands(eval_scenes, mc.bands);

    const SpectralResponse srf = make_srf(ds, mc.msi_bands, mc.bands);
    std::vector<FusionTriplet> patches =
        sample_patches(train_scenes, ts.patch_hr, scale, srf, ts.patch_count, mc.seed + 1,
                       ds.blur_sigma, ds.pad);
    const std::vector<EvalPair> eval_pairs = simulate_eval_pairs(eval_scenes, scale, srf, ds);

    fs::create_directories(out_dir);
    FusionModel model(mc);
    Trainer trainer(model);
    Rng order_rng(mc.seed + 2);

    RunManifest manifest;
    manifest.config_text = effective_config_text(mc, ds, ts);
    manifest.seed = mc.seed;
    manifest.deterministic = deterministic;
    manifest.started_at = now_utc_iso8601();
    for (const auto& img : train_scenes) {
        manifest.dataset_fingerprints[img.name] = fingerprint_tensor(img.data);
    }
    for (const auto& img : eval_scenes) {
        manifest.dataset_fingerprints[img.name] = fingerprint_tensor(img.data);
    }
    manifest.notes["parameter_count"] = std::to_string(model.parameter_count());
    manifest.notes["spatial_branch"] = mc.spatial_branch ? "true" : "false";
    manifest.notes["frequency_branch"] = mc.frequency_branch ? "true" : "false";
    manifest.notes["activation"] = feinfn::to_string(mc.activation);
    manifest.notes["upsample"] = feinfn::to_string(mc.upsample);
    for (const auto& [k, v] : extra_notes) manifest.notes[k] = v;

    const i64 rows_per_patch = ts.patch_hr * ts.patch_hr;
    auto finalize = [&](bool aborted) {
        const std::string csv = (fs::path(out_dir) / "history.csv").string();
        write_history_csv(csv, manifest.history);
        manifest.add_artifact(csv);
        if (aborted) manifest.notes["aborted"] = "non-finite loss";
        manifest.finished_at = now_utc_iso8601();
        manifest.save((fs::path(out_dir) / "manifest.json").string());
    };

    try {
        for (i64 t = 0; t < ts.steps; ++t) {
            std::vector<FusionTriplet> batch;
            std::vector<std::vector<i64>> rows;
            for (i64 b = 0; b < ts.batch_size; ++b) {
                const auto& pick =
                    patches[static_cast<std::size_t>(order_rng.uniform_int(
                        static_cast<i64>(patches.size())))];
                batch.push_back(pick);
                if (ts.queries_per_sample > 0) {
                    std::vector<i64> qs(static_cast<std::size_t>(ts.queries_per_sample));
                    for (auto& q : qs) q = order_rng.uniform_int(rows_per_patch);
                    rows.push_back(std::move(qs));
                }
            }
            const TrainStepResult res =
                trainer.step(batch, ts.queries_per_sample > 0 ? &rows : nullptr);

            const bool eval_now =
                (ts.eval_every > 0 && res.step % ts.eval_every == 0) || res.step == ts.steps;
            if (eval_now) {
                const double ep = mean_eval_psnr(model, eval_pairs);
                manifest.add_history(res.step, res.loss, ep);
                std::printf("[train] step %lld/%lld  loss %.6f  lr %.3e  eval_psnr %.3f\n",
                            static_cast<long long>(res.step), static_cast<long long>(ts.steps),
                            res.loss, res.lr, ep);
            } else {
                manifest.add_history(res.step, res.loss,
                                     std::numeric_limits<double>::quiet_NaN());
            }
            if (ts.checkpoint_every > 0 && res.step % ts.checkpoint_every == 0 &&
                res.step < ts.steps) {
                const std::string p =
                    (fs::path(out_dir) / ("ckpt_step_" + std::to_string(res.step) + ".fec"))
                        .string();
                model.save(p, order_rng.state(), kToolVersion);
                manifest.add_checkpoint(p);
            }
        }
    } catch (const NonFiniteLossError&) {
        finalize(true);
        throw;
    }

    const std::string final_ckpt = (fs::path(out_dir) / "ckpt_final.fec").string();
    model.save(final_ckpt, order_rng.state(), kToolVersion);
    manifest.add_checkpoint(final_ckpt);

    TrainOutcome outcome;
    outcome.checkpoint_path = final_ckpt;
    outcome.parameter_count = model.parameter_count();
    for (const auto& p : eval_pairs) {
        const HyperspectralImage pred = model.forward_image(p.lr, p.msi, true);
        outcome.eval_report.per_scene.push_back(
            evaluate_scene(p.gt->name, pred.data, p.gt->data, scale));
    }
    finalize(false);
    return outcome;
}

struct ParsedRun {
    FusionConfig model_cfg;
    DataSettings data;
    TrainSettings train;
};

ParsedRun parse_run_config(const CommonOpts& opts) {
    if (opts.config_path.empty()) throw ConfigError("--config is required");
    const ConfigMap cfg = ConfigMap::parse_file(opts.config_path);
    ParsedRun run;
    run.model_cfg = FusionConfig::read_from(cfg);
    if (opts.seed_set) run.model_cfg.seed = opts.seed;
    if (opts.scale_set) run.model_cfg.scale = opts.scale;
    run.model_cfg.validate();
    run.data = read_data_settings(cfg, integer_scale(run.model_cfg.scale));
    run.train = read_train_settings(cfg);
    reject_unknown_keys(cfg);
    return run;
}

}  // namespace

// ---------------------------------------------------------------------------
// train

int cmd_train(const CommonOpts& opts) {
    if (opts.out_dir.empty()) throw ConfigError("--out is required");
    const ParsedRun run = parse_run_config(opts);
    const TrainOutcome outcome =
        run_training(run.model_cfg, run.data, run.train, resolve_data_root(opts), opts.out_dir,
                     opts.deterministic, {});
    std::printf("%s", outcome.eval_report.to_table().c_str());
    std::printf("[train] checkpoint %s\n", outcome.checkpoint_path.c_str());
    return 0;
}

// ---------------------------------------------------------------------------
// eval

namespace {

SplitSpec::Side side_from_string(const std::string& s) {
    if (s == "train") return SplitSpec::Side::kTrain;
    if (s == "test") return SplitSpec::Side::kTest;
    if (s == "all") return SplitSpec::Side::kAll;
    throw ConfigError("unknown split '" + s + "' (expected train, test, or all)");
}

}  // namespace

int cmd_eval(const CommonOpts& opts, const std::string& checkpoint, const std::string& split,
             bool bicubic_only) {
    if (opts.out_dir.empty()) throw ConfigError("--out is required");
    const SplitSpec::Side side = side_from_string(split);

    // Model first: a bad checkpoint must fail before any data is touched.
    const FusionModel* model = nullptr;
    std::optional<LoadedModel> loaded;
    if (!bicubic_only) {
        if (checkpoint.empty()) throw ConfigError("--checkpoint is required without --bicubic-only");
        try {
            loaded.emplace(FusionModel::load(checkpoint));
        } catch (const std::exception& e) {
            throw ToolError{1, std::string("cannot load checkpoint: ") + e.what()};
        }
        model = &loaded->model;
    }

    double scale_d = model ? model->config().scale : 4.0;
    if (opts.scale_set) scale_d = opts.scale;
    const i64 scale = integer_scale(scale_d);

    DataSettings ds;
    i64 msi_bands = model ? model->config().msi_bands : 3;
    if (!opts.config_path.empty()) {
        const ConfigMap cfg = ConfigMap::parse_file(opts.config_path);
        if (model) {
            FusionConfig::read_from(cfg);  // consume [model]/[optimizer]/[scheduler] if present
        } else {
            const FusionConfig file_cfg = FusionConfig::read_from(cfg);
            msi_bands = file_cfg.msi_bands;
        }
        ds = read_data_settings(cfg, scale);
        read_train_settings(cfg);  // tolerated so train configs can be reused
        reject_unknown_keys(cfg);
    } else {
        ds.opts.round_to_multiple = scale;
    }

    std::vector<HyperspectralImage> scenes = load_side(resolve_data_root(opts), ds, side);
    if (scenes.empty()) throw DataError("the requested split selected no scenes");
    if (model) check_bands(scenes, model->config().bands);
    const i64 bands = scenes.front().bands();
    check_bands(scenes, bands);
    const SpectralResponse srf = make_srf(ds, msi_bands, bands);

    fs::create_directories(opts.out_dir);
    RunManifest manifest;
    manifest.seed = opts.seed;
    manifest.deterministic = opts.deterministic;
    manifest.started_at = now_utc_iso8601();
    manifest.notes["mode"] = bicubic_only ? "bicubic" : "model";
    if (!bicubic_only) manifest.notes["checkpoint"] = checkpoint;
    manifest.notes["split"] = split;
    manifest.notes["scale"] = std::to_string(scale);
    if (model) manifest.notes["parameter_count"] = std::to_string(model->parameter_count());

    MetricReport report;
    for (const auto& gt : scenes) {
        manifest.dataset_fingerprints[gt.name] = fingerprint_tensor(gt.data);
        auto [lr, msi] = wald_simulate(gt, scale, srf, ds.blur_sigma, ds.pad);
        HyperspectralImage pred =
            model ? model->forward_image(lr, msi, true)
                  : bicubic_resample(lr, gt.height(), gt.width());
        report.per_scene.push_back(evaluate_scene(gt.name, pred.data, gt.data, scale));

        const std::string err_png = (fs::path(opts.out_dir) / (gt.name + "_error.png")).string();
        save_gray_png(err_png, error_map(pred.data, gt.data), true);
        manifest.add_artifact(err_png);
        const std::string pred_png = (fs::path(opts.out_dir) / (gt.name + "_pred.png")).string();
        save_rgb_png(pred_png, pseudo_color(pred));
        manifest.add_artifact(pred_png);
        const std::string gt_png = (fs::path(opts.out_dir) / (gt.name + "_ref.png")).string();
        save_rgb_png(gt_png, pseudo_color(gt));
        manifest.add_artifact(gt_png);
    }

    const std::string report_json = (fs::path(opts.out_dir) / "report.json").string();
    {
        std::ofstream f(report_json);
        if (!f) throw ToolError{1, "cannot write " + report_json};
        f << report.to_json() << "\n";
    }
    manifest.add_artifact(report_json);
    const std::string report_txt = (fs::path(opts.out_dir) / "report.txt").string();
    {
        std::ofstream f(report_txt);
        if (!f) throw ToolError{1, "cannot write " + report_txt};
        f << report.to_table();
    }
    manifest.add_artifact(report_txt);

    manifest.finished_at = now_utc_iso8601();
    manifest.save((fs::path(opts.out_dir) / "manifest.json").string());
    std::printf("%s", report.to_table().c_str());
    return 0;
}

// ---------------------------------------------------------------------------
// ablate

namespace {

struct VariantSpec {
    std::string group;
    std::string member;
};

const std::vector<std::string>& group_members(const std::string& group) {
    static const std::vector<std::string> upsample = {"bilinear", "bicubic", "pixel_shuffle",
                                                      "inr"};
    static const std::vector<std::string> domain = {"spatial_only", "frequency_only", "both"};
    static const std::vector<std::string> activation = {"relu", "gelu", "leaky_relu", "gabor"};
    if (group == "upsample") return upsample;
    if (group == "domain") return domain;
    if (group == "activation") return activation;
    throw ConfigError("unknown ablation group '" + group + "'");
}

FusionConfig apply_variant(FusionConfig mc, const VariantSpec& v) {
    if (v.group == "upsample") {
        mc.upsample = upsample_from_string(v.member);
    } else if (v.group == "domain") {
        mc.upsample = UpsampleKind::kInr;
        mc.spatial_branch = v.member != "frequency_only";
        mc.frequency_branch = v.member != "spatial_only";
    } else if (v.group == "activation") {
        mc.upsample = UpsampleKind::kInr;
        mc.activation = decoder_activation_from_string(v.member);
    } else {
        throw ConfigError("unknown ablation group '" + v.group + "'");
    }
    return mc;
}

std::vector<VariantSpec> select_variants(const std::string& variant) {
    std::vector<VariantSpec> out;
    auto add_group = [&](const std::string& g) {
        for (const auto& m : group_members(g)) out.push_back({g, m});
    };
    if (variant == "all" || variant.empty()) {
        add_group("upsample");
        add_group("domain");
        add_group("activation");
        return out;
    }
    const auto colon = variant.find(':');
    if (colon == std::string::npos) {
        add_group(variant);
        return out;
    }
    const std::string group = variant.substr(0, colon);
    const std::string member = variant.substr(colon + 1);
    const auto& members = group_members(group);
    if (std::find(members.begin(), members.end(), member) == members.end()) {
        throw ConfigError("unknown ablation variant '" + variant + "'");
    }
    out.push_back({group, member});
    return out;
}

std::string aggregate_cell(double mean, double std) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4f ± %.4f", mean, std);
    std::string s = buf;
    s.resize(std::max<std::size_t>(s.size(), 22), ' ');
    return s;
}

std::string pad_cell(std::string s, std::size_t w) {
    s.resize(std::max(s.size(), w), ' ');
    return s;
}

std::string variant_row_label(const VariantSpec& v) {
    if (v.group != "domain") return v.member;
    if (v.member == "spatial_only") return "yes  no ";
    if (v.member == "frequency_only") return "no   yes";
    return "yes  yes";
}

std::string group_table(const std::string& group,
                        const std::vector<std::pair<VariantSpec, MetricReport>>& rows) {
    std::ostringstream os;
    const std::size_t label_w = group == "domain" ? 10 : 15;
    if (group == "domain") {
        os << pad_cell("spa  fre", label_w);
    } else if (group == "upsample") {
        os << pad_cell("method", label_w);
    } else {
        os << pad_cell("activation", label_w);
    }
    os << pad_cell("PSNR(dB)", 22) << pad_cell("SAM(deg)", 22) << pad_cell("ERGAS", 22)
       << "SSIM\n";
    for (const auto& [v, rep] : rows) {
        if (v.group != group) continue;
        const SceneMetrics m = rep.mean(), s = rep.stddev();
        os << pad_cell(variant_row_label(v), label_w) << aggregate_cell(m.psnr, s.psnr)
           << aggregate_cell(m.sam, s.sam) << aggregate_cell(m.ergas, s.ergas)
           << aggregate_cell(m.ssim, s.ssim).substr(0, 17) << "\n";
    }
    return os.str();
}

}  // namespace

int cmd_ablate(const CommonOpts& opts, const std::string& variant) {
    if (opts.out_dir.empty()) throw ConfigError("--out is required");
    const ParsedRun run = parse_run_config(opts);
    const std::vector<VariantSpec> variants = select_variants(variant);
    const std::string data_root = resolve_data_root(opts);

    fs::create_directories(opts.out_dir);
    RunManifest top;
    top.config_text = effective_config_text(run.model_cfg, run.data, run.train);
    top.seed = run.model_cfg.seed;
    top.deterministic = opts.deterministic;
    top.started_at = now_utc_iso8601();
    top.notes["variant"] = variant.empty() ? "all" : variant;

    std::vector<std::pair<VariantSpec, MetricReport>> rows;
    nlohmann::json combined;
    for (const auto& v : variants) {
        const FusionConfig mc = apply_variant(run.model_cfg, v);
        const std::string run_dir =
            (fs::path(opts.out_dir) / (v.group + "_" + v.member)).string();
        std::printf("[ablate] %s:%s -> %s\n", v.group.c_str(), v.member.c_str(), run_dir.c_str());
        const TrainOutcome outcome =
            run_training(mc, run.data, run.train, data_root, run_dir, opts.deterministic,
                         {{"variant", v.group + ":" + v.member}});
        const SceneMetrics m = outcome.eval_report.mean();
        const SceneMetrics s = outcome.eval_report.stddev();
        combined[v.group][v.member] = {
            {"psnr", {{"mean", m.psnr}, {"std", s.psnr}}},
            {"sam", {{"mean", m.sam}, {"std", s.sam}}},
            {"ergas", {{"mean", m.ergas}, {"std", s.ergas}}},
            {"ssim", {{"mean", m.ssim}, {"std", s.ssim}}},
            {"parameter_count", outcome.parameter_count},
            {"run_dir", run_dir},
        };
        rows.emplace_back(v, outcome.eval_report);
    }

    std::vector<std::string> groups;
    for (const auto& v : variants) {
        if (std::find(groups.begin(), groups.end(), v.group) == groups.end()) {
            groups.push_back(v.group);
        }
    }
    for (const auto& g : groups) {
        const std::string table = group_table(g, rows);
        const std::string path =
            (fs::path(opts.out_dir) / ("ablation_" + g + ".txt")).string();
        std::ofstream f(path);
        if (!f) throw ToolError{1, "cannot write " + path};
        f << table;
        top.add_artifact(path);
        std::printf("\n== %s ==\n%s", g.c_str(), table.c_str());
    }
    const std::string json_path = (fs::path(opts.out_dir) / "ablation.json").string();
    {
        std::ofstream f(json_path);
        if (!f) throw ToolError{1, "cannot write " + json_path};
        f << combined.dump(2) << "\n";
    }
    top.add_artifact(json_path);
    top.finished_at = now_utc_iso8601();
    top.save((fs::path(opts.out_dir) / "manifest.json").string());
    return 0;
}

// ---------------------------------------------------------------------------
// plot

namespace {

std::string run_label(const std::string& dir) {
    fs::path p(dir);
    if (p.filename().string().empty()) p = p.parent_path();
    return p.filename().string();
}

}  // namespace

int cmd_plot(const std::vector<std::string>& run_dirs, const std::string& out_dir) {
    if (out_dir.empty()) throw ConfigError("--out is required");
    if (run_dirs.empty()) throw ConfigError("plot needs at least one run directory");

    struct RunInfo {
        std::string dir, label;
        RunManifest manifest;
    };
    std::vector<RunInfo> runs;
    for (const auto& dir : run_dirs) {
        RunInfo info;
        info.dir = dir;
        info.label = run_label(dir);
        try {
            info.manifest = RunManifest::from_json_file((fs::path(dir) / "manifest.json").string());
        } catch (const std::exception& e) {
            throw ToolError{1, std::string("unreadable manifest in ") + dir + ": " + e.what()};
        }
        runs.push_back(std::move(info));
    }

    fs::create_directories(out_dir);
    RunManifest plot_manifest;
    plot_manifest.started_at = now_utc_iso8601();
    plot_manifest.notes["runs"] = std::to_string(runs.size());

    std::vector<Series> loss_series, psnr_series;
    for (const auto& run : runs) {
        Series loss{run.label, {}, {}};
        Series ep{run.label, {}, {}};
        for (const auto& p : run.manifest.history) {
            loss.x.push_back(double(p.step));
            loss.y.push_back(p.train_loss);
            if (std::isfinite(p.eval_psnr)) {
                ep.x.push_back(double(p.step));
                ep.y.push_back(p.eval_psnr);
            }
        }
        if (!loss.x.empty()) loss_series.push_back(std::move(loss));
        if (!ep.x.empty()) psnr_series.push_back(std::move(ep));
    }
    if (!loss_series.empty()) {
        const std::string path = (fs::path(out_dir) / "loss_curves.png").string();
        render_line_chart(path, loss_series, "Training loss", "step", "loss");
        plot_manifest.add_artifact(path);
    }
    if (!psnr_series.empty()) {
        const std::string path = (fs::path(out_dir) / "psnr_curves.png").string();
        render_line_chart(path, psnr_series, "Evaluation PSNR", "step", "PSNR (dB)");
        plot_manifest.add_artifact(path);
    }

    // Quality scatter from each run's evaluation report, marker area driven
    // by the parameter count.
    std::vector<ScatterPoint> points;
    for (const auto& run : runs) {
        const fs::path rp = fs::path(run.dir) / "report.json";
        double psnr_v = std::numeric_limits<double>::quiet_NaN();
        double ssim_v = std::numeric_limits<double>::quiet_NaN();
        if (fs::exists(rp)) {
            std::ifstream f(rp);
            nlohmann::json j;
            try {
                f >> j;
                psnr_v = j.at("aggregate").at("psnr").at("mean").get<double>();
                ssim_v = j.at("aggregate").at("ssim").at("mean").get<double>();
            } catch (const std::exception&) {
                // malformed report: fall through to the history fallback
            }
        }
        if (!std::isfinite(psnr_v)) {
            for (auto it = run.manifest.history.rbegin(); it != run.manifest.history.rend();
                 ++it) {
                if (std::isfinite(it->eval_psnr)) {
                    psnr_v = it->eval_psnr;
                    break;
                }
            }
        }
        if (!std::isfinite(psnr_v) || !std::isfinite(ssim_v)) continue;
        double size = 1.0;
        const auto it = run.manifest.notes.find("parameter_count");
        if (it != run.manifest.notes.end()) size = std::max(1.0, std::atof(it->second.c_str()));
        points.push_back({run.label, ssim_v, psnr_v, size});
    }
    if (!points.empty()) {
        const std::string path = (fs::path(out_dir) / "quality_scatter.png").string();
        render_scatter(path, points, "Quality (marker area ~ parameters)", "SSIM", "PSNR (dB)");
        plot_manifest.add_artifact(path);
    }

    // Spectrum panels from the first run with a loadable final checkpoint:
    // amplitude/phase of the middle band of a fixed synthetic probe, for the
    // reference scene and the model's reconstruction.
    for (const auto& run : runs) {
        if (run.manifest.checkpoints.empty()) continue;
        std::optional<LoadedModel> lm;
        try {
            lm.emplace(FusionModel::load(run.manifest.checkpoints.back()));
        } catch (const std::exception&) {
            continue;
        }
        const FusionConfig& mc = lm->model.config();
        i64 scale = 0;
        try {
            scale = integer_scale(mc.scale);
        } catch (const ConfigError&) {
            continue;
        }
        SyntheticSpec spec;
        spec.count = 1;
        spec.height = 32;
        spec.width = 32;
        spec.bands = mc.bands;
        spec.seed = 123;
        const HyperspectralImage probe = make_synthetic_scenes(spec).front();
        const SpectralResponse srf = SpectralResponse::grouped(mc.msi_bands, mc.bands);
        auto [lr, msi] = wald_simulate(probe, scale, srf);
        const HyperspectralImage pred = lm->model.forward_image(lr, msi, true);

        const i64 band = mc.bands / 2;
        auto band_map = [&](const HyperspectralImage& img) {
            Tensor m({img.height(), img.width()});
            for (i64 p = 0; p < img.height() * img.width(); ++p) {
                m[p] = img.data[p * img.bands() + band];
            }
            return m;
        };
        const auto [ref_amp, ref_phase] = amplitude_phase_panels(band_map(probe));
        const auto [pred_amp, pred_phase] = amplitude_phase_panels(band_map(pred));
        const std::vector<std::pair<std::string, const Tensor*>> panels = {
            {"spectrum_ref_amplitude.png", &ref_amp},
            {"spectrum_ref_phase.png", &ref_phase},
            {"spectrum_pred_amplitude.png", &pred_amp},
            {"spectrum_pred_phase.png", &pred_phase},
        };
        for (const auto& [name, tensor] : panels) {
            const std::string path = (fs::path(out_dir) / name).string();
            save_gray_png(path, *tensor, false);
            plot_manifest.add_artifact(path);
        }
        break;
    }

    plot_manifest.finished_at = now_utc_iso8601();
    plot_manifest.save((fs::path(out_dir) / "plot_manifest.json").string());
    std::printf("[plot] wrote %zu artifact(s) to %s\n", plot_manifest.artifacts.size(),
                out_dir.c_str());
    return 0;
}

}  // namespace feinfn::cli

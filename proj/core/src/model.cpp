#include "feinfn/model.hpp"

#include <json.hpp>

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace feinfn {

using nn::Var;

LossKind loss_from_string(const std::string& s) {
    if (s == "l1") return LossKind::kL1;
    if (s == "l2") return LossKind::kL2;
    throw std::invalid_argument("unknown loss: " + s);
}

UpsampleKind upsample_from_string(const std::string& s) {
    if (s == "inr") return UpsampleKind::kInr;
    if (s == "bilinear") return UpsampleKind::kBilinear;
    if (s == "bicubic") return UpsampleKind::kBicubic;
    if (s == "pixel_shuffle") return UpsampleKind::kPixelShuffle;
    throw std::invalid_argument("unknown upsample kind: " + s);
}

std::string to_string(LossKind k) { return k == LossKind::kL1 ? "l1" : "l2"; }

std::string to_string(UpsampleKind k) {
    switch (k) {
        case UpsampleKind::kInr: return "inr";
        case UpsampleKind::kBilinear: return "bilinear";
        case UpsampleKind::kBicubic: return "bicubic";
        case UpsampleKind::kPixelShuffle: return "pixel_shuffle";
    }
    return "?";
}

void FusionConfig::validate() const {
    if (!(scale > 0.0)) throw std::invalid_argument("scale must be positive");
    if (bands < 1 || msi_bands < 1) throw std::invalid_argument("band counts must be positive");
    if (iff_hidden < 1 || decoder_channels < 1) throw std::invalid_argument("widths must be positive");
    if (pe_levels < 1) throw std::invalid_argument("pe_levels must be positive");
    if (query_chunk < 1) throw std::invalid_argument("query_chunk must be positive");
    if (!spatial_branch && !frequency_branch) {
        throw std::invalid_argument("at least one fusion branch must stay enabled");
    }
    EncoderConfig e = encoder;
    e.in_channels = bands;
    e.validate();
    gabor.validate();
    if (!(optimizer.lr > 0.0) || optimizer.weight_decay < 0.0) {
        throw std::invalid_argument("optimizer settings out of range");
    }
    if (scheduler.t_max < 1 || scheduler.eta_min < 0.0) {
        throw std::invalid_argument("scheduler settings out of range");
    }
}

void FusionConfig::write_to(ConfigMap& cfg) const {
    cfg.set_double("model", "scale", scale);
    cfg.set_int("model", "bands", bands);
    cfg.set_int("model", "msi_bands", msi_bands);
    cfg.set_int("model", "encoder_channels", encoder.base_channels);
    cfg.set_int("model", "encoder_blocks", encoder.num_residual_blocks);
    cfg.set_int("model", "encoder_kernel", encoder.kernel_size);
    cfg.set("model", "encoder_padding", encoder.padding == nn::Padding::kZero ? "zero" : "periodic");
    cfg.set_int("model", "iff_hidden", iff_hidden);
    cfg.set_int("model", "decoder_channels", decoder_channels);
    cfg.set_double("model", "gabor_omega0", gabor.omega0);
    cfg.set_double("model", "gabor_upsilon0", gabor.upsilon0);
    cfg.set_bool("model", "gabor_trainable", gabor.trainable);
    cfg.set_int("model", "pe_levels", pe_levels);
    cfg.set("model", "loss", to_string(loss));
    cfg.set_int("model", "seed", static_cast<long long>(seed));
    cfg.set_int("model", "query_chunk", query_chunk);
    cfg.set("model", "activation", to_string(activation));
    cfg.set("model", "upsample", to_string(upsample));
    cfg.set_bool("model", "spatial_branch", spatial_branch);
    cfg.set_bool("model", "frequency_branch", frequency_branch);
    cfg.set_double("optimizer", "lr", optimizer.lr);
    cfg.set_double("optimizer", "weight_decay", optimizer.weight_decay);
    cfg.set_double("optimizer", "beta1", optimizer.beta1);
    cfg.set_double("optimizer", "beta2", optimizer.beta2);
    cfg.set_double("optimizer", "eps", optimizer.eps);
    cfg.set_int("scheduler", "t_max", scheduler.t_max);
    cfg.set_double("scheduler", "eta_min", scheduler.eta_min);
}

FusionConfig FusionConfig::read_from(const ConfigMap& cfg) {
    FusionConfig c;
    c.scale = cfg.get_double("model", "scale", c.scale);
    c.bands = cfg.get_int("model", "bands", c.bands);
    c.msi_bands = cfg.get_int("model", "msi_bands", c.msi_bands);
    c.encoder.base_channels = cfg.get_int("model", "encoder_channels", c.encoder.base_channels);
    c.encoder.num_residual_blocks = cfg.get_int("model", "encoder_blocks", c.encoder.num_residual_blocks);
    c.encoder.kernel_size = cfg.get_int("model", "encoder_kernel", c.encoder.kernel_size);
    const std::string pad = cfg.get_str("model", "encoder_padding", "zero");
    if (pad == "zero") c.encoder.padding = nn::Padding::kZero;
    else if (pad == "periodic") c.encoder.padding = nn::Padding::kPeriodic;
    else throw ConfigError("unknown encoder_padding: " + pad);
    c.iff_hidden = cfg.get_int("model", "iff_hidden", c.iff_hidden);
    c.decoder_channels = cfg.get_int("model", "decoder_channels", c.decoder_channels);
    c.gabor.omega0 = cfg.get_double("model", "gabor_omega0", c.gabor.omega0);
    c.gabor.upsilon0 = cfg.get_double("model", "gabor_upsilon0", c.gabor.upsilon0);
    c.gabor.trainable = cfg.get_bool("model", "gabor_trainable", c.gabor.trainable);
    c.pe_levels = static_cast<int>(cfg.get_int("model", "pe_levels", c.pe_levels));
    c.loss = loss_from_string(cfg.get_str("model", "loss", to_string(c.loss)));
    c.seed = static_cast<std::uint64_t>(cfg.get_int("model", "seed", static_cast<long long>(c.seed)));
    c.query_chunk = cfg.get_int("model", "query_chunk", c.query_chunk);
    c.activation = decoder_activation_from_string(cfg.get_str("model", "activation", to_string(c.activation)));
    c.upsample = upsample_from_string(cfg.get_str("model", "upsample", to_string(c.upsample)));
    c.spatial_branch = cfg.get_bool("model", "spatial_branch", c.spatial_branch);
    c.frequency_branch = cfg.get_bool("model", "frequency_branch", c.frequency_branch);
    c.optimizer.lr = cfg.get_double("optimizer", "lr", c.optimizer.lr);
    c.optimizer.weight_decay = cfg.get_double("optimizer", "weight_decay", c.optimizer.weight_decay);
    c.optimizer.beta1 = cfg.get_double("optimizer", "beta1", c.optimizer.beta1);
    c.optimizer.beta2 = cfg.get_double("optimizer", "beta2", c.optimizer.beta2);
    c.optimizer.eps = cfg.get_double("optimizer", "eps", c.optimizer.eps);
    c.scheduler.t_max = cfg.get_int("scheduler", "t_max", c.scheduler.t_max);
    c.scheduler.eta_min = cfg.get_double("scheduler", "eta_min", c.scheduler.eta_min);
    c.validate();
    return c;
}

FusionModel::FusionModel(const FusionConfig& config) : config_(config) {
    config_.validate();
    Rng rng(config_.seed);
    has_inr_ = config_.upsample == UpsampleKind::kInr;

    EncoderConfig spe = config_.encoder;
    spe.in_channels = config_.bands;
    spectral_enc_ = ResidualEncoder::create(params_, "enc_spe", spe, rng);

    EncoderConfig spa = config_.encoder;
    spa.in_channels = config_.bands + config_.msi_bands;
    spatial_enc_ = ResidualEncoder::create(params_, "enc_spa", spa, rng);

    const i64 c = config_.encoder.base_channels;
    if (has_inr_) {
        IffConfig ic;
        ic.latent_channels = c;
        ic.out_bands = config_.decoder_channels;
        ic.hidden = config_.iff_hidden;
        ic.pe_levels = config_.pe_levels;
        ic.spatial_branch = config_.spatial_branch;
        ic.frequency_branch = config_.frequency_branch;
        iff_ = IffParams::create(params_, "iff", ic, rng);
        decoder_ = SfidDecoder::create(params_, "decoder", config_.decoder_channels, config_.bands,
                                       config_.gabor, config_.activation, rng);
    } else {
        if (config_.upsample == UpsampleKind::kPixelShuffle) {
            const i64 r = static_cast<i64>(std::llround(config_.scale));
            if (r < 1 || std::abs(config_.scale - static_cast<double>(r)) > 1e-12) {
                throw std::invalid_argument("pixel_shuffle head needs an integer scale");
            }
            shuffle_head_ = nn::Conv2d::create(params_, "head.shuffle", 3, 3, c, c * r * r, rng,
                                               config_.encoder.padding);
        }
        fuse1_ = nn::Conv2d::create(params_, "head.fuse1", 1, 1, 2 * c, c, rng, nn::Padding::kZero);
        fuse2_ = nn::Conv2d::create(params_, "head.fuse2", 1, 1, c, config_.bands, rng,
                                    nn::Padding::kZero);
    }
}

std::string FusionModel::summary() const {
    i64 enc_spe = 0, enc_spa = 0, fusion = 0, decoder = 0, head = 0;
    for (const auto& name : params_.names()) {
        const i64 n = params_.get(name).value().size();
        if (name.rfind("enc_spe", 0) == 0) enc_spe += n;
        else if (name.rfind("enc_spa", 0) == 0) enc_spa += n;
        else if (name.rfind("iff", 0) == 0) fusion += n;
        else if (name.rfind("decoder", 0) == 0) decoder += n;
        else if (name.rfind("head", 0) == 0) head += n;
    }
    std::ostringstream os;
    os << "spectral encoder: " << enc_spe << " parameters\n"
       << "spatial encoder:  " << enc_spa << " parameters\n";
    if (has_inr_) {
        os << "fusion function:  " << fusion << " parameters\n"
           << "decoder:          " << decoder << " parameters\n";
    } else {
        os << "upsampling head (" << to_string(config_.upsample) << "): " << head << " parameters\n";
    }
    os << "total:            " << parameter_count() << " parameters";
    return os.str();
}

FusionModel::Encoded FusionModel::encode(const Tensor& lr_hwc, const Tensor& msi_hwc, i64 out_h,
                                         i64 out_w) const {
    if (lr_hwc.rank() != 3 || lr_hwc.dim(2) != config_.bands) {
        throw std::invalid_argument("LR cube must be (h, w, " + std::to_string(config_.bands) + ")");
    }
    if (msi_hwc.rank() != 3 || msi_hwc.dim(2) != config_.msi_bands) {
        throw std::invalid_argument("MSI cube must be (H, W, " + std::to_string(config_.msi_bands) + ")");
    }
    if (msi_hwc.dim(0) != out_h || msi_hwc.dim(1) != out_w) {
        throw std::invalid_argument("MSI spatial shape must match the requested output grid");
    }
    const i64 h = lr_hwc.dim(0), w = lr_hwc.dim(1);
    if (out_h < h || out_w < w) {
        throw std::invalid_argument("output grid is smaller than the LR input (scale inconsistency)");
    }
    if (h < 3 || w < 3) throw std::invalid_argument("LR input must be at least 3x3");

    Encoded enc;
    // Clipped bicubic: the residual base and the spatial encoder's first input.
    enc.up = bicubic_resample_raw(lr_hwc, out_h, out_w);
    double* p = enc.up.data();
    for (i64 i = 0; i < enc.up.size(); ++i) p[i] = std::min(1.0, std::max(0.0, p[i]));

    Tensor lr_b = lr_hwc;
    lr_b.reshape_in_place({1, h, w, config_.bands});
    Tensor up_b = enc.up;
    up_b.reshape_in_place({1, out_h, out_w, config_.bands});
    Tensor msi_b = msi_hwc;
    msi_b.reshape_in_place({1, out_h, out_w, config_.msi_bands});

    enc.z_spe = spectral_enc_.apply(nn::constant(std::move(lr_b)));
    Var spa_in = nn::concat({nn::constant(std::move(up_b)), nn::constant(std::move(msi_b))}, 3);
    enc.z_spa = spatial_enc_.apply(spa_in);
    enc.lr_grid = make_coord_grid(h, w);
    enc.hr_grid = make_coord_grid(out_h, out_w);
    return enc;
}

FusionModel::Prediction FusionModel::predict_rows(const Encoded& enc, const std::vector<i64>& rows) const {
    const i64 q = static_cast<i64>(rows.size());
    const i64 s = config_.bands;
    const i64 hw = enc.hr_grid.width;

    Prediction pred;
    pred.base = Tensor({q, s});
    for (i64 i = 0; i < q; ++i) {
        const double* src = enc.up.data() + rows[static_cast<std::size_t>(i)] * s;
        std::copy(src, src + s, pred.base.data() + i * s);
    }

    if (has_inr_) {
        std::vector<std::array<double, 2>> queries(static_cast<std::size_t>(q));
        for (i64 i = 0; i < q; ++i) {
            const i64 r = rows[static_cast<std::size_t>(i)] / hw;
            const i64 c = rows[static_cast<std::size_t>(i)] % hw;
            queries[static_cast<std::size_t>(i)] = {enc.hr_grid.coords.at({r, c, 0}),
                                                    enc.hr_grid.coords.at({r, c, 1})};
        }
        QueryBatch batch = build_query_batch(queries, enc.lr_grid, enc.hr_grid, config_.pe_levels);
        QueryCodes codes = gather_codes(batch, enc.z_spe, enc.z_spa);
        IffOutput iff = spa_fre_iff(batch, codes, iff_);
        pred.residual = decoder_.apply(iff.eps_s, iff.eps_f);
    } else {
        const i64 h = enc.lr_grid.height, w = enc.lr_grid.width;
        const i64 oh = enc.hr_grid.height, ow = enc.hr_grid.width;
        const i64 c = config_.encoder.base_channels;
        Var up_lat;
        if (config_.upsample == UpsampleKind::kPixelShuffle) {
            const i64 r = static_cast<i64>(std::llround(config_.scale));
            if (oh != h * r || ow != w * r) {
                throw std::invalid_argument("pixel_shuffle head requires output = scale * input");
            }
            up_lat = nn::pixel_shuffle(shuffle_head_.apply(enc.z_spe), r);
        } else {
            const bool cubic = config_.upsample == UpsampleKind::kBicubic;
            const nn::ResamplePlan plan = nn::make_resample_plan(h, w, oh, ow, cubic);
            Var flat = nn::reshape(enc.z_spe, {h, w, c});
            up_lat = nn::reshape(nn::resample2d(flat, plan), {1, oh, ow, c});
        }
        Var fused = fuse2_.apply(nn::relu(fuse1_.apply(nn::concat({up_lat, enc.z_spa}, 3))));
        pred.residual = nn::gather_rows(nn::reshape(fused, {oh * ow, s}), rows);
    }

    pred.output = nn::add(pred.residual, nn::constant(pred.base));
    return pred;
}

FusionModel::Prediction FusionModel::predict(const Tensor& lr_hwc, const Tensor& msi_hwc, i64 out_h,
                                             i64 out_w, const std::vector<i64>* query_rows) const {
    Encoded enc = encode(lr_hwc, msi_hwc, out_h, out_w);
    std::vector<i64> rows;
    if (query_rows) {
        rows = *query_rows;
        for (i64 r : rows) {
            if (r < 0 || r >= out_h * out_w) throw std::invalid_argument("query row out of range");
        }
    } else {
        rows.resize(static_cast<std::size_t>(out_h * out_w));
        for (i64 i = 0; i < out_h * out_w; ++i) rows[static_cast<std::size_t>(i)] = i;
    }
    return predict_rows(enc, rows);
}

Tensor FusionModel::forward_tensor(const Tensor& lr_hwc, const Tensor& msi_hwc, i64 out_h, i64 out_w,
                                   bool clip) const {
    nn::NoGradGuard ng;
    Encoded enc = encode(lr_hwc, msi_hwc, out_h, out_w);
    Tensor out({out_h, out_w, config_.bands});
    const i64 total = out_h * out_w;
    const i64 chunk = config_.query_chunk;
    for (i64 start = 0; start < total; start += chunk) {
        const i64 len = std::min(chunk, total - start);
        std::vector<i64> rows(static_cast<std::size_t>(len));
        for (i64 i = 0; i < len; ++i) rows[static_cast<std::size_t>(i)] = start + i;
        Prediction p = predict_rows(enc, rows);
        std::copy(p.output.value().data(), p.output.value().data() + len * config_.bands,
                  out.data() + start * config_.bands);
    }
    if (clip) {
        double* p = out.data();
        for (i64 i = 0; i < out.size(); ++i) p[i] = std::min(1.0, std::max(0.0, p[i]));
    }
    return out;
}

HyperspectralImage FusionModel::forward_image(const HyperspectralImage& lr_hsi,
                                              const HyperspectralImage& hr_msi, bool clip) const {
    Tensor out = forward_tensor(lr_hsi.data, hr_msi.data, hr_msi.height(), hr_msi.width(), clip);
    HyperspectralImage img;
    img.data = std::move(out);
    img.band_wavelengths = lr_hsi.band_wavelengths;
    img.name = lr_hsi.name;
    return img;
}

// ---------------------------------------------------------------------------
// checkpoint serialization

namespace {

constexpr std::uint32_t kCheckpointMagic = 0x31434546u;  // "FEC1"
constexpr std::uint32_t kCheckpointFormat = 1;

void write_u32(std::ostream& os, std::uint32_t v) { os.write(reinterpret_cast<const char*>(&v), 4); }
void write_u64(std::ostream& os, std::uint64_t v) { os.write(reinterpret_cast<const char*>(&v), 8); }
void write_string(std::ostream& os, const std::string& s) {
    write_u64(os, s.size());
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::uint32_t read_u32(std::istream& is) {
    std::uint32_t v = 0;
    is.read(reinterpret_cast<char*>(&v), 4);
    return v;
}
std::uint64_t read_u64(std::istream& is) {
    std::uint64_t v = 0;
    is.read(reinterpret_cast<char*>(&v), 8);
    return v;
}
std::string read_string(std::istream& is) {
    const std::uint64_t n = read_u64(is);
    std::string s(n, '\0');
    is.read(s.data(), static_cast<std::streamsize>(n));
    return s;
}

}  // namespace

void FusionModel::save(const std::string& path, const std::string& rng_state,
                       const std::string& version) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write checkpoint: " + path);
    write_u32(os, kCheckpointMagic);
    write_u32(os, kCheckpointFormat);
    ConfigMap cfg;
    config_.write_to(cfg);
    write_string(os, cfg.serialize());
    write_string(os, version);
    write_string(os, rng_state);
    write_u64(os, params_.names().size());
    for (const auto& name : params_.names()) {
        const Tensor& t = params_.get(name).value();
        write_string(os, name);
        write_u32(os, static_cast<std::uint32_t>(t.rank()));
        for (i64 d : t.shape()) write_u64(os, static_cast<std::uint64_t>(d));
        os.write(reinterpret_cast<const char*>(t.data()),
                 static_cast<std::streamsize>(t.size() * static_cast<i64>(sizeof(double))));
    }
    if (!os) throw std::runtime_error("short write while saving checkpoint: " + path);
    os.close();

    nlohmann::json sidecar;
    sidecar["checkpoint_format"] = kCheckpointFormat;
    sidecar["version"] = version;
    sidecar["parameter_count"] = parameter_count();
    sidecar["parameter_tensors"] = params_.names().size();
    nlohmann::json jc;
    for (const auto& [section, kv] : cfg.sections()) {
        for (const auto& [key, value] : kv) jc[section][key] = value;
    }
    sidecar["config"] = jc;
    nlohmann::json jp = nlohmann::json::array();
    for (const auto& name : params_.names()) {
        const Tensor& t = params_.get(name).value();
        jp.push_back({{"name", name}, {"shape", t.shape()}});
    }
    sidecar["parameters"] = jp;
    std::ofstream js(path + ".json");
    if (!js) throw std::runtime_error("cannot write checkpoint sidecar: " + path + ".json");
    js << sidecar.dump(2) << "\n";
}

LoadedModel FusionModel::load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open checkpoint: " + path);
    if (read_u32(is) != kCheckpointMagic) throw std::runtime_error("not a checkpoint file: " + path);
    const std::uint32_t format = read_u32(is);
    if (format != kCheckpointFormat) {
        throw std::runtime_error("unsupported checkpoint format " + std::to_string(format));
    }
    const std::string config_text = read_string(is);
    const std::string version = read_string(is);
    const std::string rng_state = read_string(is);
    FusionConfig config = FusionConfig::read_from(ConfigMap::parse(config_text));

    LoadedModel loaded{FusionModel(config), rng_state, version};
    FusionModel& model = loaded.model;
    const std::uint64_t count = read_u64(is);
    if (count != model.params_.names().size()) {
        throw std::runtime_error("checkpoint parameter list does not match its configuration");
    }
    for (std::uint64_t k = 0; k < count; ++k) {
        const std::string name = read_string(is);
        if (name != model.params_.names()[k]) {
            throw std::runtime_error("checkpoint parameter order mismatch at " + name);
        }
        Var p = model.params_.get(name);
        const std::uint32_t rank = read_u32(is);
        std::vector<i64> shape(rank);
        for (auto& d : shape) d = static_cast<i64>(read_u64(is));
        if (shape != p.value().shape()) {
            throw std::runtime_error("checkpoint shape mismatch for " + name);
        }
        is.read(reinterpret_cast<char*>(p.value().data()),
                static_cast<std::streamsize>(p.value().size() * static_cast<i64>(sizeof(double))));
    }
    if (!is) throw std::runtime_error("truncated checkpoint: " + path);
    return loaded;
}

// ---------------------------------------------------------------------------
// loss and training

nn::Var fusion_loss(const nn::Var& pred, const Tensor& target, LossKind kind) {
    if (pred.value().shape() != target.shape()) {
        throw std::invalid_argument("loss: prediction shape " + shape_to_string(pred.shape()) +
                                    " does not match target " + shape_to_string(target.shape()));
    }
    Var diff = nn::sub(pred, nn::constant(target));
    return kind == LossKind::kL1 ? nn::mean_all(nn::abs(diff)) : nn::mean_all(nn::square(diff));
}

Trainer::Trainer(FusionModel& model)
    : model_(model),
      opt_(model.params(),
           nn::AdamWConfig{model.config().optimizer.lr, model.config().optimizer.beta1,
                           model.config().optimizer.beta2, model.config().optimizer.eps,
                           model.config().optimizer.weight_decay}),
      sched_{model.config().optimizer.lr, model.config().scheduler.eta_min,
             model.config().scheduler.t_max} {}

TrainStepResult Trainer::step(const std::vector<FusionTriplet>& batch,
                              const std::vector<std::vector<i64>>* query_rows_per_sample) {
    if (batch.empty()) throw std::invalid_argument("training batch is empty");
    if (query_rows_per_sample && query_rows_per_sample->size() != batch.size()) {
        throw std::invalid_argument("query subsets must match the batch size");
    }
    model_.params().zero_grads();
    const double inv = 1.0 / static_cast<double>(batch.size());
    double total = 0.0;
    for (std::size_t k = 0; k < batch.size(); ++k) {
        const FusionTriplet& t = batch[k];
        const i64 oh = t.gt.height(), ow = t.gt.width();
        const std::vector<i64>* rows =
            query_rows_per_sample ? &(*query_rows_per_sample)[k] : nullptr;
        FusionModel::Prediction pred =
            model_.predict(t.lr_hsi.data, t.hr_msi.data, oh, ow, rows);
        Tensor target;
        if (rows) {
            target = Tensor({static_cast<i64>(rows->size()), t.gt.bands()});
            for (std::size_t i = 0; i < rows->size(); ++i) {
                const double* src = t.gt.data.data() + (*rows)[i] * t.gt.bands();
                std::copy(src, src + t.gt.bands(), target.data() + static_cast<i64>(i) * t.gt.bands());
            }
        } else {
            target = t.gt.data;
            target.reshape_in_place({oh * ow, t.gt.bands()});
        }
        Var loss = nn::mul_scalar(fusion_loss(pred.output, target, model_.config().loss), inv);
        total += loss.value().data()[0] * static_cast<double>(batch.size());
        loss.backward();
    }
    const double mean_loss = total * inv;
    if (!std::isfinite(mean_loss)) {
        throw NonFiniteLossError("non-finite training loss " + std::to_string(mean_loss) +
                                 " at step " + std::to_string(opt_.steps_taken() + 1));
    }
    const double lr = sched_.lr_at(opt_.steps_taken());
    opt_.step(lr);
    return {opt_.steps_taken(), mean_loss, lr};
}

}  // namespace feinfn

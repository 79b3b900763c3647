#include "feinfn/metrics.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace feinfn {

namespace {

constexpr double kPi = 3.14159265358979323846;

void check_shapes(const Tensor& pred, const Tensor& gt, const char* op) {
    if (pred.rank() != 3 || gt.rank() != 3 || pred.shape() != gt.shape()) {
        throw std::invalid_argument(std::string(op) + ": shape mismatch " +
                                    shape_to_string(pred.shape()) + " vs " +
                                    shape_to_string(gt.shape()));
    }
}

}  // namespace

double psnr(const Tensor& pred, const Tensor& gt, double peak) {
    check_shapes(pred, gt, "psnr");
    if (!(peak > 0.0)) throw std::invalid_argument("psnr: peak must be positive");
    double mse = 0.0;
    for (i64 i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - gt[i];
        mse += d * d;
    }
    mse /= static_cast<double>(pred.size());
    if (mse < 1e-10) return 100.0;
    return std::min(100.0, 10.0 * std::log10(peak * peak / mse));
}

SamResult sam_detailed(const Tensor& pred, const Tensor& gt) {
    check_shapes(pred, gt, "sam");
    const i64 pixels = pred.dim(0) * pred.dim(1);
    const i64 bands = pred.dim(2);
    SamResult res;
    double sum = 0.0;
    i64 used = 0;
    for (i64 p = 0; p < pixels; ++p) {
        const double* a = pred.data() + p * bands;
        const double* b = gt.data() + p * bands;
        double dot = 0.0, na = 0.0, nb = 0.0;
        for (i64 k = 0; k < bands; ++k) {
            dot += a[k] * b[k];
            na += a[k] * a[k];
            nb += b[k] * b[k];
        }
        if (na == 0.0 || nb == 0.0) {
            ++res.skipped;
            continue;
        }
        const double c = std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
        sum += std::acos(c);
        ++used;
    }
    res.skip_fraction = static_cast<double>(res.skipped) / static_cast<double>(pixels);
    res.degrees = used > 0 ? sum / static_cast<double>(used) * 180.0 / kPi : 0.0;
    return res;
}

double sam(const Tensor& pred, const Tensor& gt) { return sam_detailed(pred, gt).degrees; }

ErgasResult ergas_detailed(const Tensor& pred, const Tensor& gt, double ratio) {
    check_shapes(pred, gt, "ergas");
    if (!(ratio > 0.0)) throw std::invalid_argument("ergas: ratio must be positive");
    const i64 pixels = pred.dim(0) * pred.dim(1);
    const i64 bands = pred.dim(2);
    ErgasResult res;
    double acc = 0.0;
    i64 used = 0;
    for (i64 b = 0; b < bands; ++b) {
        double mse = 0.0, mean = 0.0;
        for (i64 p = 0; p < pixels; ++p) {
            const double g = gt[p * bands + b];
            const double d = pred[p * bands + b] - g;
            mse += d * d;
            mean += g;
        }
        mse /= static_cast<double>(pixels);
        mean /= static_cast<double>(pixels);
        if (mean == 0.0) {
            ++res.excluded_bands;
            continue;
        }
        acc += mse / (mean * mean);
        ++used;
    }
    res.value = used > 0 ? 100.0 * ratio * std::sqrt(acc / static_cast<double>(used)) : 0.0;
    return res;
}

double ergas(const Tensor& pred, const Tensor& gt, double ratio) {
    return ergas_detailed(pred, gt, ratio).value;
}

namespace {

/// 11-tap Gaussian window, sigma 1.5, normalized.
const std::vector<double>& ssim_window() {
    static const std::vector<double> taps = [] {
        std::vector<double> t(11);
        double sum = 0.0;
        for (int k = -5; k <= 5; ++k) {
            t[static_cast<std::size_t>(k + 5)] = std::exp(-k * k / (2.0 * 1.5 * 1.5));
            sum += t[static_cast<std::size_t>(k + 5)];
        }
        for (double& v : t) v /= sum;
        return t;
    }();
    return taps;
}

/// Separable 11x11 Gaussian filter of one band, valid region only:
/// out is (h-10, w-10).
std::vector<double> filter_valid(const std::vector<double>& band, i64 h, i64 w) {
    const auto& taps = ssim_window();
    const i64 vw = w - 10;
    std::vector<double> rowpass(static_cast<std::size_t>(h * vw), 0.0);
    for (i64 y = 0; y < h; ++y) {
        for (i64 x = 0; x < vw; ++x) {
            double acc = 0.0;
            for (int k = 0; k < 11; ++k) acc += taps[static_cast<std::size_t>(k)] * band[static_cast<std::size_t>(y * w + x + k)];
            rowpass[static_cast<std::size_t>(y * vw + x)] = acc;
        }
    }
    const i64 vh = h - 10;
    std::vector<double> out(static_cast<std::size_t>(vh * vw), 0.0);
    for (i64 y = 0; y < vh; ++y) {
        for (i64 x = 0; x < vw; ++x) {
            double acc = 0.0;
            for (int k = 0; k < 11; ++k) acc += taps[static_cast<std::size_t>(k)] * rowpass[static_cast<std::size_t>((y + k) * vw + x)];
            out[static_cast<std::size_t>(y * vw + x)] = acc;
        }
    }
    return out;
}

}  // namespace

double ssim(const Tensor& pred, const Tensor& gt, double peak) {
    check_shapes(pred, gt, "ssim");
    const i64 h = pred.dim(0), w = pred.dim(1), bands = pred.dim(2);
    if (h < 11 || w < 11) throw std::invalid_argument("ssim: spatial extent must be at least 11");
    const double c1 = (0.01 * peak) * (0.01 * peak);
    const double c2 = (0.03 * peak) * (0.03 * peak);

    double total = 0.0;
    std::vector<double> x(static_cast<std::size_t>(h * w)), y(static_cast<std::size_t>(h * w));
    std::vector<double> xx(x.size()), yy(x.size()), xy(x.size());
    for (i64 b = 0; b < bands; ++b) {
        for (i64 p = 0; p < h * w; ++p) {
            x[static_cast<std::size_t>(p)] = pred[p * bands + b];
            y[static_cast<std::size_t>(p)] = gt[p * bands + b];
            xx[static_cast<std::size_t>(p)] = x[static_cast<std::size_t>(p)] * x[static_cast<std::size_t>(p)];
            yy[static_cast<std::size_t>(p)] = y[static_cast<std::size_t>(p)] * y[static_cast<std::size_t>(p)];
            xy[static_cast<std::size_t>(p)] = x[static_cast<std::size_t>(p)] * y[static_cast<std::size_t>(p)];
        }
        const auto mu_x = filter_valid(x, h, w);
        const auto mu_y = filter_valid(y, h, w);
        const auto m_xx = filter_valid(xx, h, w);
        const auto m_yy = filter_valid(yy, h, w);
        const auto m_xy = filter_valid(xy, h, w);
        double band_sum = 0.0;
        for (std::size_t i = 0; i < mu_x.size(); ++i) {
            const double mx = mu_x[i], my = mu_y[i];
            const double vx = m_xx[i] - mx * mx;
            const double vy = m_yy[i] - my * my;
            const double cxy = m_xy[i] - mx * my;
            band_sum += ((2.0 * mx * my + c1) * (2.0 * cxy + c2)) /
                        ((mx * mx + my * my + c1) * (vx + vy + c2));
        }
        total += band_sum / static_cast<double>(mu_x.size());
    }
    return total / static_cast<double>(bands);
}

Tensor error_map(const Tensor& pred, const Tensor& gt) {
    check_shapes(pred, gt, "error_map");
    const i64 h = pred.dim(0), w = pred.dim(1), bands = pred.dim(2);
    Tensor out = Tensor::zeros({h, w});
    for (i64 p = 0; p < h * w; ++p) {
        double acc = 0.0;
        for (i64 b = 0; b < bands; ++b) acc += std::abs(pred[p * bands + b] - gt[p * bands + b]);
        out[p] = acc / static_cast<double>(bands);
    }
    return out;
}

SceneMetrics evaluate_scene(const std::string& name, const Tensor& pred, const Tensor& gt,
                            i64 scale) {
    SceneMetrics m;
    m.name = name;
    m.psnr = psnr(pred, gt);
    m.sam = sam(pred, gt);
    m.ergas = ergas(pred, gt, 1.0 / static_cast<double>(scale));
    m.ssim = ssim(pred, gt);
    return m;
}

namespace {

SceneMetrics fold(const std::vector<SceneMetrics>& rows, bool want_std) {
    SceneMetrics mean;
    const double n = static_cast<double>(rows.size());
    if (rows.empty()) return mean;
    for (const auto& r : rows) {
        mean.psnr += r.psnr;
        mean.sam += r.sam;
        mean.ergas += r.ergas;
        mean.ssim += r.ssim;
    }
    mean.psnr /= n;
    mean.sam /= n;
    mean.ergas /= n;
    mean.ssim /= n;
    if (!want_std) return mean;
    SceneMetrics sd;
    if (rows.size() < 2) return sd;
    for (const auto& r : rows) {
        sd.psnr += (r.psnr - mean.psnr) * (r.psnr - mean.psnr);
        sd.sam += (r.sam - mean.sam) * (r.sam - mean.sam);
        sd.ergas += (r.ergas - mean.ergas) * (r.ergas - mean.ergas);
        sd.ssim += (r.ssim - mean.ssim) * (r.ssim - mean.ssim);
    }
    sd.psnr = std::sqrt(sd.psnr / (n - 1.0));
    sd.sam = std::sqrt(sd.sam / (n - 1.0));
    sd.ergas = std::sqrt(sd.ergas / (n - 1.0));
    sd.ssim = std::sqrt(sd.ssim / (n - 1.0));
    return sd;
}

}  // namespace

SceneMetrics MetricReport::mean() const { return fold(per_scene, false); }
SceneMetrics MetricReport::stddev() const { return fold(per_scene, true); }

std::string MetricReport::to_json() const {
    nlohmann::json j;
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : per_scene) {
        rows.push_back({{"name", r.name},
                        {"psnr", r.psnr},
                        {"sam", r.sam},
                        {"ergas", r.ergas},
                        {"ssim", r.ssim}});
    }
    j["per_scene"] = rows;
    const SceneMetrics m = mean(), s = stddev();
    j["aggregate"] = {{"psnr", {{"mean", m.psnr}, {"std", s.psnr}}},
                      {"sam", {{"mean", m.sam}, {"std", s.sam}}},
                      {"ergas", {{"mean", m.ergas}, {"std", s.ergas}}},
                      {"ssim", {{"mean", m.ssim}, {"std", s.ssim}}}};
    return j.dump(2);
}

std::string MetricReport::to_table() const {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    std::size_t name_w = 10;
    for (const auto& r : per_scene) name_w = std::max(name_w, r.name.size());
    auto pad = [&](const std::string& s) {
        std::string p = s;
        p.resize(name_w + 2, ' ');
        return p;
    };
    os << pad("scene") << "PSNR(dB)     SAM(deg)     ERGAS        SSIM\n";
    os.precision(4);
    for (const auto& r : per_scene) {
        std::ostringstream line;
        line.setf(std::ios::fixed);
        line.precision(4);
        line << pad(r.name);
        for (double v : {r.psnr, r.sam, r.ergas, r.ssim}) {
            std::ostringstream cell;
            cell.setf(std::ios::fixed);
            cell.precision(4);
            cell << v;
            std::string c = cell.str();
            c.resize(std::max<std::size_t>(c.size(), 13), ' ');
            line << c;
        }
        os << line.str() << "\n";
    }
    const SceneMetrics m = mean(), s = stddev();
    os << pad("mean ± std");
    std::ostringstream agg;
    agg.setf(std::ios::fixed);
    agg.precision(4);
    agg << m.psnr << " ± " << s.psnr << "   " << m.sam << " ± " << s.sam << "   " << m.ergas
        << " ± " << s.ergas << "   " << m.ssim << " ± " << s.ssim;
    os << agg.str() << "\n";
    return os.str();
}

}  // namespace feinfn

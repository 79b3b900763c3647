#include "feinfn/report.hpp"

#include <json.hpp>
#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "feinfn/fourier.hpp"

namespace feinfn {

std::string fingerprint_tensor(const Tensor& t) {
    std::uint64_t h = 14695981039346656037ull;
    const auto* bytes = reinterpret_cast<const unsigned char*>(t.data());
    const std::size_t n = static_cast<std::size_t>(t.size()) * sizeof(double);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= bytes[i];
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string now_utc_iso8601() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void RunManifest::add_history(i64 step, double train_loss, double eval_psnr) {
    history.push_back({step, train_loss, eval_psnr});
}

void RunManifest::add_checkpoint(const std::string& path) { checkpoints.push_back(path); }

void RunManifest::add_artifact(const std::string& path) { artifacts.push_back(path); }

std::string RunManifest::to_json() const {
    nlohmann::json j;
    j["config"] = config_text;
    j["seed"] = seed;
    j["deterministic"] = deterministic;
    j["started_at"] = started_at;
    j["finished_at"] = finished_at;
    j["dataset_fingerprints"] = dataset_fingerprints;
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& p : history) {
        nlohmann::json row = {{"step", p.step}, {"train_loss", p.train_loss}};
        if (std::isfinite(p.eval_psnr)) {
            row["eval_psnr"] = p.eval_psnr;
        } else {
            row["eval_psnr"] = nullptr;
        }
        rows.push_back(row);
    }
    j["history"] = rows;
    j["checkpoints"] = checkpoints;
    j["artifacts"] = artifacts;
    j["notes"] = notes;
    return j.dump(2);
}

void RunManifest::save(const std::string& path) const {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write manifest " + path);
    f << to_json() << "\n";
}

RunManifest RunManifest::from_json_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open manifest " + path);
    nlohmann::json j;
    try {
        f >> j;
    } catch (const std::exception& e) {
        throw std::runtime_error("manifest " + path + ": " + e.what());
    }
    RunManifest m;
    m.config_text = j.value("config", "");
    m.seed = j.value("seed", std::uint64_t{0});
    m.deterministic = j.value("deterministic", false);
    m.started_at = j.value("started_at", "");
    m.finished_at = j.value("finished_at", "");
    if (j.contains("dataset_fingerprints")) {
        m.dataset_fingerprints = j["dataset_fingerprints"].get<std::map<std::string, std::string>>();
    }
    if (j.contains("history")) {
        for (const auto& row : j["history"]) {
            MetricPoint p;
            p.step = row.value("step", i64{0});
            p.train_loss = row.value("train_loss", 0.0);
            p.eval_psnr = row.contains("eval_psnr") && !row["eval_psnr"].is_null()
                              ? row["eval_psnr"].get<double>()
                              : std::numeric_limits<double>::quiet_NaN();
            m.history.push_back(p);
        }
    }
    if (j.contains("checkpoints")) m.checkpoints = j["checkpoints"].get<std::vector<std::string>>();
    if (j.contains("artifacts")) m.artifacts = j["artifacts"].get<std::vector<std::string>>();
    if (j.contains("notes")) m.notes = j["notes"].get<std::map<std::string, std::string>>();
    return m;
}

void write_history_csv(const std::string& path, const std::vector<MetricPoint>& history) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << "step,train_loss,eval_psnr\n";
    f.precision(10);
    for (const auto& p : history) {
        f << p.step << "," << p.train_loss << ",";
        if (std::isfinite(p.eval_psnr)) f << p.eval_psnr;
        f << "\n";
    }
}

namespace {

cv::Mat tensor_to_gray8(const Tensor& map, bool normalize) {
    if (map.rank() != 2) throw std::invalid_argument("grayscale export expects an (h, w) map");
    double mx = 0.0;
    if (normalize) {
        for (i64 i = 0; i < map.size(); ++i) mx = std::max(mx, std::abs(map[i]));
    }
    const double div = normalize && mx > 0.0 ? mx : 1.0;
    cv::Mat m(static_cast<int>(map.dim(0)), static_cast<int>(map.dim(1)), CV_8UC1);
    for (i64 y = 0; y < map.dim(0); ++y) {
        for (i64 x = 0; x < map.dim(1); ++x) {
            const double v = std::clamp(map[y * map.dim(1) + x] / div, 0.0, 1.0);
            m.at<std::uint8_t>(static_cast<int>(y), static_cast<int>(x)) =
                static_cast<std::uint8_t>(std::lround(v * 255.0));
        }
    }
    return m;
}

}  // namespace

void save_gray_png(const std::string& path, const Tensor& map, bool normalize) {
    if (!cv::imwrite(path, tensor_to_gray8(map, normalize))) {
        throw std::runtime_error("cannot write " + path);
    }
}

void save_rgb_png(const std::string& path, const Tensor& rgb) {
    if (rgb.rank() != 3 || rgb.dim(2) != 3) {
        throw std::invalid_argument("RGB export expects an (h, w, 3) tensor");
    }
    cv::Mat m(static_cast<int>(rgb.dim(0)), static_cast<int>(rgb.dim(1)), CV_8UC3);
    for (i64 y = 0; y < rgb.dim(0); ++y) {
        for (i64 x = 0; x < rgb.dim(1); ++x) {
            const double* px = rgb.data() + (y * rgb.dim(1) + x) * 3;
            auto& out = m.at<cv::Vec3b>(static_cast<int>(y), static_cast<int>(x));
            for (int c = 0; c < 3; ++c) {  // RGB -> BGR
                out[2 - c] = static_cast<std::uint8_t>(
                    std::lround(std::clamp(px[c], 0.0, 1.0) * 255.0));
            }
        }
    }
    if (!cv::imwrite(path, m)) throw std::runtime_error("cannot write " + path);
}

Tensor pseudo_color(const HyperspectralImage& img, double red_nm, double green_nm, double blue_nm) {
    const i64 bands = img.bands();
    if (bands < 1) throw std::invalid_argument("pseudo_color: empty image");
    i64 picks[3];
    if (!img.band_wavelengths.empty()) {
        const double targets[3] = {red_nm, green_nm, blue_nm};
        for (int c = 0; c < 3; ++c) {
            i64 best = 0;
            double best_d = std::abs(img.band_wavelengths[0] - targets[c]);
            for (i64 b = 1; b < bands; ++b) {
                const double d = std::abs(img.band_wavelengths[static_cast<std::size_t>(b)] - targets[c]);
                if (d < best_d) {
                    best = b;
                    best_d = d;
                }
            }
            picks[c] = best;
        }
    } else {
        picks[0] = bands - 1;
        picks[1] = bands / 2;
        picks[2] = 0;
    }
    Tensor out = Tensor::zeros({img.height(), img.width(), 3});
    for (i64 p = 0; p < img.height() * img.width(); ++p) {
        for (int c = 0; c < 3; ++c) out[p * 3 + c] = img.data[p * bands + picks[c]];
    }
    return out;
}

std::pair<Tensor, Tensor> amplitude_phase_panels(const Tensor& map2d) {
    if (map2d.rank() != 2) throw std::invalid_argument("amplitude_phase_panels expects (h, w)");
    const i64 h = map2d.dim(0), w = map2d.dim(1);
    std::vector<double> re, im;
    detail::dft2(map2d.data(), static_cast<const double*>(nullptr), h, w, 1, re, im, false);

    Tensor amp = Tensor::zeros({h, w});
    Tensor phase = Tensor::zeros({h, w});
    double mx = 0.0;
    for (i64 y = 0; y < h; ++y) {
        for (i64 x = 0; x < w; ++x) {
            const i64 src = y * w + x;
            const i64 dst = ((y + h / 2) % h) * w + (x + w / 2) % w;  // center the DC bin
            const double a = std::log1p(std::hypot(re[static_cast<std::size_t>(src)],
                                                   im[static_cast<std::size_t>(src)]));
            amp[dst] = a;
            mx = std::max(mx, a);
            const double ph = std::atan2(im[static_cast<std::size_t>(src)],
                                         re[static_cast<std::size_t>(src)]);
            phase[dst] = (ph + 3.14159265358979323846) / (2.0 * 3.14159265358979323846);
        }
    }
    if (mx > 0.0) {
        for (i64 i = 0; i < amp.size(); ++i) amp[i] /= mx;
    }
    return {std::move(amp), std::move(phase)};
}

// ---------------------------------------------------------------------------
// chart rendering

namespace {

constexpr int kChartW = 900, kChartH = 600;
constexpr int kMarginL = 80, kMarginR = 170, kMarginT = 50, kMarginB = 60;

const std::vector<cv::Scalar>& palette() {
    static const std::vector<cv::Scalar> p = {
        cv::Scalar(180, 90, 20),  cv::Scalar(40, 60, 200),  cv::Scalar(60, 160, 40),
        cv::Scalar(160, 40, 160), cv::Scalar(20, 150, 210), cv::Scalar(120, 120, 30),
    };
    return p;
}

struct Bounds {
    double x_lo = 0.0, x_hi = 1.0, y_lo = 0.0, y_hi = 1.0;

    void expand(double x, double y, bool first) {
        if (first) {
            x_lo = x_hi = x;
            y_lo = y_hi = y;
            return;
        }
        x_lo = std::min(x_lo, x);
        x_hi = std::max(x_hi, x);
        y_lo = std::min(y_lo, y);
        y_hi = std::max(y_hi, y);
    }

    void pad() {
        if (x_hi - x_lo < 1e-12) {
            x_lo -= 1.0;
            x_hi += 1.0;
        }
        if (y_hi - y_lo < 1e-12) {
            y_lo -= 1.0;
            y_hi += 1.0;
        }
        const double dx = 0.05 * (x_hi - x_lo), dy = 0.05 * (y_hi - y_lo);
        x_lo -= dx;
        x_hi += dx;
        y_lo -= dy;
        y_hi += dy;
    }

    cv::Point to_px(double x, double y) const {
        const double fx = (x - x_lo) / (x_hi - x_lo);
        const double fy = (y - y_lo) / (y_hi - y_lo);
        return {kMarginL + static_cast<int>(std::lround(fx * (kChartW - kMarginL - kMarginR))),
                kChartH - kMarginB - static_cast<int>(std::lround(fy * (kChartH - kMarginT - kMarginB)))};
    }
};

std::string tick_label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

cv::Mat chart_frame(const Bounds& b, const std::string& title, const std::string& x_label,
                    const std::string& y_label) {
    cv::Mat canvas(kChartH, kChartW, CV_8UC3, cv::Scalar(255, 255, 255));
    const cv::Scalar axis(60, 60, 60), grid(225, 225, 225), text(30, 30, 30);
    for (int k = 0; k <= 5; ++k) {
        const double xv = b.x_lo + (b.x_hi - b.x_lo) * k / 5.0;
        const double yv = b.y_lo + (b.y_hi - b.y_lo) * k / 5.0;
        const cv::Point px = b.to_px(xv, b.y_lo), py = b.to_px(b.x_lo, yv);
        cv::line(canvas, {px.x, kMarginT}, {px.x, kChartH - kMarginB}, grid, 1);
        cv::line(canvas, {kMarginL, py.y}, {kChartW - kMarginR, py.y}, grid, 1);
        cv::putText(canvas, tick_label(xv), {px.x - 18, kChartH - kMarginB + 20},
                    cv::FONT_HERSHEY_SIMPLEX, 0.4, text, 1, cv::LINE_AA);
        cv::putText(canvas, tick_label(yv), {8, py.y + 4}, cv::FONT_HERSHEY_SIMPLEX, 0.4, text, 1,
                    cv::LINE_AA);
    }
    cv::rectangle(canvas, {kMarginL, kMarginT}, {kChartW - kMarginR, kChartH - kMarginB}, axis, 1);
    cv::putText(canvas, title, {kMarginL, 30}, cv::FONT_HERSHEY_SIMPLEX, 0.7, text, 1, cv::LINE_AA);
    cv::putText(canvas, x_label, {kChartW / 2 - 40, kChartH - 14}, cv::FONT_HERSHEY_SIMPLEX, 0.5,
                text, 1, cv::LINE_AA);
    cv::putText(canvas, y_label, {10, kMarginT - 12}, cv::FONT_HERSHEY_SIMPLEX, 0.5, text, 1,
                cv::LINE_AA);
    return canvas;
}

void write_chart(const std::string& path, const cv::Mat& canvas) {
    if (!cv::imwrite(path, canvas)) throw std::runtime_error("cannot write " + path);
}

}  // namespace

void render_line_chart(const std::string& path, const std::vector<Series>& series,
                       const std::string& title, const std::string& x_label,
                       const std::string& y_label) {
    if (series.empty()) throw std::invalid_argument("line chart needs at least one series");
    Bounds b;
    bool first = true;
    for (const auto& s : series) {
        if (s.x.size() != s.y.size()) {
            throw std::invalid_argument("series '" + s.label + "' has mismatched x/y lengths");
        }
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
            b.expand(s.x[i], s.y[i], first);
            first = false;
        }
    }
    if (first) throw std::invalid_argument("line chart has no finite points");
    b.pad();
    cv::Mat canvas = chart_frame(b, title, x_label, y_label);
    for (std::size_t si = 0; si < series.size(); ++si) {
        const cv::Scalar color = palette()[si % palette().size()];
        const auto& s = series[si];
        cv::Point prev;
        bool has_prev = false;
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) {
                has_prev = false;
                continue;
            }
            const cv::Point cur = b.to_px(s.x[i], s.y[i]);
            if (has_prev) cv::line(canvas, prev, cur, color, 2, cv::LINE_AA);
            prev = cur;
            has_prev = true;
        }
        const int ly = kMarginT + 18 + static_cast<int>(si) * 20;
        cv::line(canvas, {kChartW - kMarginR + 10, ly - 4}, {kChartW - kMarginR + 34, ly - 4}, color,
                 2, cv::LINE_AA);
        cv::putText(canvas, s.label, {kChartW - kMarginR + 40, ly}, cv::FONT_HERSHEY_SIMPLEX, 0.45,
                    cv::Scalar(30, 30, 30), 1, cv::LINE_AA);
    }
    write_chart(path, canvas);
}

void render_scatter(const std::string& path, const std::vector<ScatterPoint>& points,
                    const std::string& title, const std::string& x_label,
                    const std::string& y_label) {
    if (points.empty()) throw std::invalid_argument("scatter needs at least one point");
    Bounds b;
    bool first = true;
    double max_size = 0.0;
    for (const auto& p : points) {
        b.expand(p.x, p.y, first);
        first = false;
        max_size = std::max(max_size, p.size);
    }
    b.pad();
    cv::Mat canvas = chart_frame(b, title, x_label, y_label);
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto& p = points[i];
        const cv::Scalar color = palette()[i % palette().size()];
        const int radius =
            5 + static_cast<int>(std::lround(12.0 * std::sqrt(max_size > 0.0 ? p.size / max_size : 0.0)));
        const cv::Point c = b.to_px(p.x, p.y);
        cv::circle(canvas, c, radius, color, 2, cv::LINE_AA);
        cv::putText(canvas, p.label, {c.x + radius + 4, c.y + 4}, cv::FONT_HERSHEY_SIMPLEX, 0.45,
                    cv::Scalar(30, 30, 30), 1, cv::LINE_AA);
    }
    write_chart(path, canvas);
}

}  // namespace feinfn

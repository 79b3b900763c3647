#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "feinfn/image.hpp"
#include "feinfn/tensor.hpp"

namespace feinfn {

/// FNV-1a over the raw sample bytes; stable content fingerprint for manifests.
std::string fingerprint_tensor(const Tensor& t);

std::string now_utc_iso8601();

struct MetricPoint {
    i64 step = 0;
    double train_loss = 0.0;
    double eval_psnr = 0.0;  // NaN when this step recorded no evaluation
};

/// Append-only record of one run: the exact configuration, inputs, metric
/// history, and every file the run wrote.
struct RunManifest {
    std::string config_text;
    std::uint64_t seed = 0;
    bool deterministic = false;
    std::string started_at, finished_at;
    std::map<std::string, std::string> dataset_fingerprints;  // scene -> hash
    std::vector<MetricPoint> history;
    std::vector<std::string> checkpoints;
    std::vector<std::string> artifacts;
    std::map<std::string, std::string> notes;  // variant flags, parameter counts

    void add_history(i64 step, double train_loss, double eval_psnr);
    void add_checkpoint(const std::string& path);
    void add_artifact(const std::string& path);

    std::string to_json() const;
    void save(const std::string& path) const;
    static RunManifest from_json_file(const std::string& path);
};

/// step,train_loss,eval_psnr rows (evaluation column empty when NaN).
void write_history_csv(const std::string& path, const std::vector<MetricPoint>& history);

/// (h, w) map to an 8-bit grayscale PNG; normalize=true rescales by the map
/// maximum so small-magnitude error maps stay visible.
void save_gray_png(const std::string& path, const Tensor& map, bool normalize);

/// (h, w, 3) RGB in [0,1] to PNG.
void save_rgb_png(const std::string& path, const Tensor& rgb);

/// RGB preview from the bands nearest the requested wavelengths (default
/// 620/550/450 nm). Falls back to last/middle/first bands when the image
/// carries no wavelengths.
Tensor pseudo_color(const HyperspectralImage& img, double red_nm = 620.0, double green_nm = 550.0,
                    double blue_nm = 450.0);

/// Centered-spectrum visualization of one 2-D map: log-scaled amplitude and
/// wrapped phase, both normalized to [0,1].
std::pair<Tensor, Tensor> amplitude_phase_panels(const Tensor& map2d);

struct Series {
    std::string label;
    std::vector<double> x, y;
};

/// Polyline chart (axes, ticks, legend) written as a PNG; deterministic for
/// identical inputs.
void render_line_chart(const std::string& path, const std::vector<Series>& series,
                       const std::string& title, const std::string& x_label,
                       const std::string& y_label);

struct ScatterPoint {
    std::string label;
    double x = 0.0, y = 0.0;
    double size = 1.0;  // marker area driver (e.g. parameter count)
};

void render_scatter(const std::string& path, const std::vector<ScatterPoint>& points,
                    const std::string& title, const std::string& x_label,
                    const std::string& y_label);

}  // namespace feinfn

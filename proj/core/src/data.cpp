#include "feinfn/data.hpp"

#include <json.hpp>
#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "feinfn/rng.hpp"

namespace fs = std::filesystem;

namespace feinfn {

void SpectralResponse::validate() const {
    if (matrix.rank() != 2 || matrix.dim(0) < 1 || matrix.dim(1) < 1) {
        throw std::invalid_argument("spectral response must be a (msi_bands, hsi_bands) matrix");
    }
    for (i64 r = 0; r < matrix.dim(0); ++r) {
        double sum = 0.0;
        for (i64 c = 0; c < matrix.dim(1); ++c) {
            const double v = matrix.at({r, c});
            if (v < 0.0) throw std::invalid_argument("spectral response has a negative weight");
            sum += v;
        }
        if (std::abs(sum - 1.0) > 1e-9) {
            throw std::invalid_argument("spectral response row " + std::to_string(r) +
                                        " sums to " + std::to_string(sum) + ", expected 1");
        }
    }
}

SpectralResponse SpectralResponse::grouped(i64 msi_bands, i64 hsi_bands) {
    if (msi_bands < 1 || hsi_bands < msi_bands) {
        throw std::invalid_argument("grouped response needs 1 <= msi_bands <= hsi_bands");
    }
    SpectralResponse srf;
    srf.matrix = Tensor::zeros({msi_bands, hsi_bands});
    for (i64 g = 0; g < msi_bands; ++g) {
        const i64 lo = g * hsi_bands / msi_bands;
        const i64 hi = (g + 1) * hsi_bands / msi_bands;
        for (i64 b = lo; b < hi; ++b) srf.matrix.at({g, b}) = 1.0 / static_cast<double>(hi - lo);
    }
    srf.validate();
    return srf;
}

SpectralResponse SpectralResponse::from_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw DataError("cannot open spectral response file " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    int line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                std::size_t used = 0;
                row.push_back(std::stod(cell, &used));
                while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used]))) ++used;
                if (used != cell.size()) throw std::invalid_argument(cell);
            } catch (const std::exception&) {
                throw DataError(path + ":" + std::to_string(line_no) + ": bad number '" + cell + "'");
            }
        }
        if (row.empty()) continue;
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw DataError(path + ":" + std::to_string(line_no) + ": ragged row");
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw DataError(path + ": empty spectral response");
    SpectralResponse srf;
    srf.matrix = Tensor::zeros({static_cast<i64>(rows.size()), static_cast<i64>(rows.front().size())});
    for (i64 r = 0; r < srf.matrix.dim(0); ++r) {
        for (i64 c = 0; c < srf.matrix.dim(1); ++c) {
            srf.matrix.at({r, c}) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
        }
    }
    try {
        srf.validate();
    } catch (const std::invalid_argument& e) {
        throw DataError(path + ": " + e.what());
    }
    return srf;
}

namespace {

i64 pad_index(i64 i, i64 n, PadMode pad) {
    if (n == 1) return 0;
    if (pad == PadMode::kPeriodic) return ((i % n) + n) % n;
    while (i < 0 || i >= n) {  // edge-inclusive mirror, folded until in range
        if (i < 0) i = -i - 1;
        if (i >= n) i = 2 * n - i - 1;
    }
    return i;
}

std::vector<double> gaussian_taps(double sigma) {
    const i64 radius = static_cast<i64>(std::floor(2.0 * sigma));
    std::vector<double> taps(static_cast<std::size_t>(2 * radius + 1));
    double sum = 0.0;
    for (i64 k = -radius; k <= radius; ++k) {
        const double v = std::exp(-static_cast<double>(k * k) / (2.0 * sigma * sigma));
        taps[static_cast<std::size_t>(k + radius)] = v;
        sum += v;
    }
    for (double& t : taps) t /= sum;
    return taps;
}

}  // namespace

Tensor gaussian_blur(const Tensor& hwc, double sigma, PadMode pad) {
    if (hwc.rank() != 3) throw std::invalid_argument("gaussian_blur expects an (h, w, bands) cube");
    if (!(sigma > 0.0)) throw std::invalid_argument("gaussian_blur needs sigma > 0");
    const i64 h = hwc.dim(0), w = hwc.dim(1), c = hwc.dim(2);
    const std::vector<double> taps = gaussian_taps(sigma);
    const i64 radius = (static_cast<i64>(taps.size()) - 1) / 2;

    Tensor tmp = Tensor::zeros({h, w, c});
    for (i64 y = 0; y < h; ++y) {
        for (i64 x = 0; x < w; ++x) {
            double* out = tmp.data() + (y * w + x) * c;
            for (i64 k = -radius; k <= radius; ++k) {
                const double t = taps[static_cast<std::size_t>(k + radius)];
                const double* in = hwc.data() + (y * w + pad_index(x + k, w, pad)) * c;
                for (i64 b = 0; b < c; ++b) out[b] += t * in[b];
            }
        }
    }
    Tensor out = Tensor::zeros({h, w, c});
    for (i64 y = 0; y < h; ++y) {
        for (i64 x = 0; x < w; ++x) {
            double* dst = out.data() + (y * w + x) * c;
            for (i64 k = -radius; k <= radius; ++k) {
                const double t = taps[static_cast<std::size_t>(k + radius)];
                const double* in = tmp.data() + (pad_index(y + k, h, pad) * w + x) * c;
                for (i64 b = 0; b < c; ++b) dst[b] += t * in[b];
            }
        }
    }
    return out;
}

std::pair<HyperspectralImage, HyperspectralImage> wald_simulate(const HyperspectralImage& gt,
                                                                i64 scale,
                                                                const SpectralResponse& srf,
                                                                double blur_sigma, PadMode pad) {
    if (scale < 1) throw std::invalid_argument("wald_simulate: scale must be >= 1");
    const i64 h = gt.height(), w = gt.width(), c = gt.bands();
    if (h % scale != 0 || w % scale != 0) {
        throw std::invalid_argument("wald_simulate: " + gt.name + " dimensions " +
                                    std::to_string(h) + "x" + std::to_string(w) +
                                    " are not divisible by scale " + std::to_string(scale));
    }
    srf.validate();
    if (srf.hsi_bands() != c) {
        throw std::invalid_argument("wald_simulate: spectral response covers " +
                                    std::to_string(srf.hsi_bands()) + " bands, image has " +
                                    std::to_string(c));
    }
    const double sigma = blur_sigma < 0.0 ? static_cast<double>(scale) / 2.0 : blur_sigma;

    Tensor blurred = gaussian_blur(gt.data, sigma, pad);
    const i64 lh = h / scale, lw = w / scale;
    const i64 offset = (scale - 1) / 2;
    HyperspectralImage lr;
    lr.data = Tensor::zeros({lh, lw, c});
    for (i64 y = 0; y < lh; ++y) {
        for (i64 x = 0; x < lw; ++x) {
            const double* src = blurred.data() + ((y * scale + offset) * w + x * scale + offset) * c;
            double* dst = lr.data.data() + (y * lw + x) * c;
            for (i64 b = 0; b < c; ++b) dst[b] = std::min(1.0, std::max(0.0, src[b]));
        }
    }
    lr.band_wavelengths = gt.band_wavelengths;
    lr.name = gt.name;
    lr.normalization_scale = gt.normalization_scale;

    const i64 m = srf.msi_bands();
    HyperspectralImage msi;
    msi.data = Tensor::zeros({h, w, m});
    for (i64 p = 0; p < h * w; ++p) {
        const double* px = gt.data.data() + p * c;
        double* dst = msi.data.data() + p * m;
        for (i64 g = 0; g < m; ++g) {
            double acc = 0.0;
            const double* row = srf.matrix.data() + g * c;
            for (i64 b = 0; b < c; ++b) acc += row[b] * px[b];
            dst[g] = std::min(1.0, std::max(0.0, acc));
        }
    }
    if (!gt.band_wavelengths.empty()) {
        std::vector<double> centers(static_cast<std::size_t>(m));
        for (i64 g = 0; g < m; ++g) {
            double acc = 0.0;
            for (i64 b = 0; b < c; ++b) {
                acc += srf.matrix.at({g, b}) * gt.band_wavelengths[static_cast<std::size_t>(b)];
            }
            centers[static_cast<std::size_t>(g)] = acc;
        }
        bool increasing = true;
        for (std::size_t g = 1; g < centers.size(); ++g) {
            if (!(centers[g] > centers[g - 1])) increasing = false;
        }
        if (increasing) msi.band_wavelengths = centers;
    }
    msi.name = gt.name;
    msi.normalization_scale = gt.normalization_scale;

    lr.validate();
    msi.validate();
    return {std::move(lr), std::move(msi)};
}

HyperspectralImage crop_image(const HyperspectralImage& img, i64 top, i64 left, i64 height,
                              i64 width) {
    if (top < 0 || left < 0 || height < 1 || width < 1 || top + height > img.height() ||
        left + width > img.width()) {
        throw std::invalid_argument("crop outside image bounds for " + img.name);
    }
    HyperspectralImage out;
    const i64 c = img.bands();
    out.data = Tensor::zeros({height, width, c});
    for (i64 y = 0; y < height; ++y) {
        const double* src = img.data.data() + ((top + y) * img.width() + left) * c;
        std::copy(src, src + width * c, out.data.data() + y * width * c);
    }
    out.band_wavelengths = img.band_wavelengths;
    out.name = img.name;
    out.normalization_scale = img.normalization_scale;
    return out;
}

std::vector<HyperspectralImage> make_synthetic_scenes(const SyntheticSpec& spec) {
    if (spec.count < 0 || spec.height < 1 || spec.width < 1 || spec.bands < 1) {
        throw std::invalid_argument("synthetic spec out of range");
    }
    std::vector<HyperspectralImage> scenes;
    scenes.reserve(static_cast<std::size_t>(spec.count));
    Rng rng(spec.seed);
    const i64 h = spec.height, w = spec.width, nb = spec.bands;
    constexpr double kPi = 3.14159265358979323846;

    for (i64 s = 0; s < spec.count; ++s) {
        // Endmember spectra: smooth sinusoids in [0.15, 0.85].
        double freq[3], phase[3];
        for (int k = 0; k < 3; ++k) {
            freq[k] = 0.5 + rng.uniform();
            phase[k] = rng.uniform();
        }
        // Abundance layout: an oriented sigmoid edge, a blob, a texture.
        const double theta = 2.0 * kPi * rng.uniform();
        const double ex = 0.3 + 0.4 * rng.uniform(), ey = 0.3 + 0.4 * rng.uniform();
        const double sharp = 12.0 + 8.0 * rng.uniform();
        const double bx = 0.2 + 0.6 * rng.uniform(), by = 0.2 + 0.6 * rng.uniform();
        const double bw = 0.08 + 0.12 * rng.uniform();
        const double fx = 1.0 + 2.0 * rng.uniform(), fy = 1.0 + 2.0 * rng.uniform();

        std::vector<double> spectra(static_cast<std::size_t>(3 * nb));
        for (int k = 0; k < 3; ++k) {
            for (i64 b = 0; b < nb; ++b) {
                const double t = nb > 1 ? static_cast<double>(b) / static_cast<double>(nb - 1) : 0.5;
                spectra[static_cast<std::size_t>(k * nb + b)] =
                    0.5 + 0.35 * std::sin(2.0 * kPi * (freq[k] * t + phase[k]));
            }
        }

        HyperspectralImage img;
        img.data = Tensor::zeros({h, w, nb});
        for (i64 y = 0; y < h; ++y) {
            for (i64 x = 0; x < w; ++x) {
                const double u = w > 1 ? static_cast<double>(x) / static_cast<double>(w - 1) : 0.5;
                const double v = h > 1 ? static_cast<double>(y) / static_cast<double>(h - 1) : 0.5;
                double a[3];
                const double d = (u - ex) * std::cos(theta) + (v - ey) * std::sin(theta);
                a[0] = 1.0 / (1.0 + std::exp(-sharp * d));
                const double r2 = (u - bx) * (u - bx) + (v - by) * (v - by);
                a[1] = std::exp(-r2 / (2.0 * bw * bw));
                a[2] = 0.5 + 0.5 * std::sin(2.0 * kPi * fx * u) * std::sin(2.0 * kPi * fy * v);
                double total = 0.0;
                for (double& ak : a) {
                    ak += 0.05;
                    total += ak;
                }
                double* px = img.data.data() + (y * w + x) * nb;
                for (i64 b = 0; b < nb; ++b) {
                    double val = 0.0;
                    for (int k = 0; k < 3; ++k) {
                        val += a[k] / total * spectra[static_cast<std::size_t>(k * nb + b)];
                    }
                    px[b] = std::min(1.0, std::max(0.0, val));
                }
            }
        }
        char name[32];
        std::snprintf(name, sizeof(name), "synthetic_%02lld", static_cast<long long>(s));
        img.name = name;
        if (nb >= 2) {
            img.band_wavelengths.resize(static_cast<std::size_t>(nb));
            for (i64 b = 0; b < nb; ++b) {
                img.band_wavelengths[static_cast<std::size_t>(b)] =
                    400.0 + 300.0 * static_cast<double>(b) / static_cast<double>(nb - 1);
            }
        }
        img.validate();
        scenes.push_back(std::move(img));
    }
    return scenes;
}

DatasetLayout layout_from_string(const std::string& s) {
    if (s == "band_pngs") return DatasetLayout::kBandPngs;
    if (s == "multiband_tiff") return DatasetLayout::kMultibandTiff;
    if (s == "synthetic") return DatasetLayout::kSynthetic;
    throw std::invalid_argument("unknown dataset layout: " + s);
}

std::string to_string(DatasetLayout layout) {
    switch (layout) {
        case DatasetLayout::kBandPngs: return "band_pngs";
        case DatasetLayout::kMultibandTiff: return "multiband_tiff";
        case DatasetLayout::kSynthetic: return "synthetic";
    }
    return "?";
}

SplitSpec SplitSpec::from_json_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw DataError("cannot open split file " + path);
    nlohmann::json j;
    try {
        f >> j;
    } catch (const std::exception& e) {
        throw DataError("split file " + path + ": " + e.what());
    }
    SplitSpec spec;
    try {
        if (j.contains("train") && j["train"].is_array()) {
            spec.train_names = j["train"].get<std::vector<std::string>>();
        }
        if (j.contains("test") && j["test"].is_array()) {
            spec.test_names = j["test"].get<std::vector<std::string>>();
        }
        if (j.contains("train_count")) spec.train_count = j["train_count"].get<i64>();
        if (j.contains("seed")) spec.seed = j["seed"].get<std::uint64_t>();
    } catch (const std::exception& e) {
        throw DataError("split file " + path + ": " + e.what());
    }
    if (!spec.train_names.empty() && spec.train_count >= 0) {
        throw DataError("split file " + path + ": give either train names or train_count, not both");
    }
    return spec;
}

std::pair<std::vector<std::string>, std::vector<std::string>> split_scene_names(
    std::vector<std::string> names, const SplitSpec& spec) {
    std::sort(names.begin(), names.end());
    const std::set<std::string> available(names.begin(), names.end());

    auto check_listed = [&](const std::vector<std::string>& listed, const char* side) {
        std::set<std::string> seen;
        for (const auto& n : listed) {
            if (!available.count(n)) {
                throw DataError(std::string(side) + " split names unknown scene '" + n + "'");
            }
            if (!seen.insert(n).second) {
                throw DataError(std::string(side) + " split lists scene '" + n + "' twice");
            }
        }
    };

    std::vector<std::string> train, test;
    if (!spec.train_names.empty() || !spec.test_names.empty()) {
        check_listed(spec.train_names, "train");
        check_listed(spec.test_names, "test");
        const std::set<std::string> train_set(spec.train_names.begin(), spec.train_names.end());
        for (const auto& n : spec.test_names) {
            if (train_set.count(n)) {
                throw DataError("scene '" + n + "' appears in both split sides");
            }
        }
        if (!spec.train_names.empty()) {
            train.assign(spec.train_names.begin(), spec.train_names.end());
        }
        if (!spec.test_names.empty()) {
            test.assign(spec.test_names.begin(), spec.test_names.end());
        } else {
            for (const auto& n : names) {
                if (!train_set.count(n)) test.push_back(n);
            }
        }
        if (spec.train_names.empty()) {
            const std::set<std::string> test_set(test.begin(), test.end());
            for (const auto& n : names) {
                if (!test_set.count(n)) train.push_back(n);
            }
        }
    } else if (spec.train_count >= 0) {
        if (spec.train_count > static_cast<i64>(names.size())) {
            throw DataError("split asks for " + std::to_string(spec.train_count) +
                            " training scenes but only " + std::to_string(names.size()) + " exist");
        }
        std::vector<std::string> shuffled = names;
        Rng rng(spec.seed);
        for (i64 i = static_cast<i64>(shuffled.size()) - 1; i > 0; --i) {
            const i64 j = rng.uniform_int(i + 1);
            std::swap(shuffled[static_cast<std::size_t>(i)], shuffled[static_cast<std::size_t>(j)]);
        }
        train.assign(shuffled.begin(), shuffled.begin() + spec.train_count);
        test.assign(shuffled.begin() + spec.train_count, shuffled.end());
    } else {
        train = names;
    }
    std::sort(train.begin(), train.end());
    std::sort(test.begin(), test.end());
    return {std::move(train), std::move(test)};
}

namespace {

double depth_divisor(int depth, const std::string& file) {
    switch (depth) {
        case CV_8U: return 255.0;
        case CV_16U: return 65535.0;
        case CV_32F: return 1.0;
        case CV_64F: return 1.0;
        default: throw DataError("unsupported pixel depth in " + file);
    }
}

void copy_band(const cv::Mat& m, Tensor& cube, i64 band, const std::string& file) {
    if (m.channels() != 1) {
        throw DataError(file + " is not single-channel (bands must be grayscale)");
    }
    const double div = depth_divisor(m.depth(), file);
    const i64 h = cube.dim(0), w = cube.dim(1), c = cube.dim(2);
    if (m.rows != h || m.cols != w) {
        throw DataError(file + " has shape " + std::to_string(m.rows) + "x" +
                        std::to_string(m.cols) + ", scene expects " + std::to_string(h) + "x" +
                        std::to_string(w));
    }
    for (i64 y = 0; y < h; ++y) {
        for (i64 x = 0; x < w; ++x) {
            double v = 0.0;
            switch (m.depth()) {
                case CV_8U: v = m.at<std::uint8_t>(static_cast<int>(y), static_cast<int>(x)); break;
                case CV_16U: v = m.at<std::uint16_t>(static_cast<int>(y), static_cast<int>(x)); break;
                case CV_32F: v = m.at<float>(static_cast<int>(y), static_cast<int>(x)); break;
                case CV_64F: v = m.at<double>(static_cast<int>(y), static_cast<int>(x)); break;
                default: break;
            }
            cube.data()[(y * w + x) * c + band] = v / div;
        }
    }
}

bool has_image_extension(const fs::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
    return ext == ".png" || ext == ".bmp" || ext == ".jpg" || ext == ".jpeg" || ext == ".tif" ||
           ext == ".tiff";
}

/// Trailing digit run of the stem, or -1 when there is none.
i64 numeric_suffix(const fs::path& p) {
    const std::string stem = p.stem().string();
    std::size_t pos = stem.size();
    while (pos > 0 && std::isdigit(static_cast<unsigned char>(stem[pos - 1]))) --pos;
    if (pos == stem.size()) return -1;
    return std::stoll(stem.substr(pos));
}

HyperspectralImage load_band_png_scene(const fs::path& dir, const std::string& name) {
    std::vector<std::pair<i64, fs::path>> bands;
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
        if (!entry.is_regular_file() || !has_image_extension(entry.path())) continue;
        const i64 suffix = numeric_suffix(entry.path());
        if (suffix < 0) continue;  // thumbnails and other non-band files
        bands.emplace_back(suffix, entry.path());
    }
    if (bands.empty()) throw DataError("scene " + name + " has no numbered band files under " + dir.string());
    std::sort(bands.begin(), bands.end());
    for (std::size_t i = 1; i < bands.size(); ++i) {
        if (bands[i].first == bands[i - 1].first) {
            throw DataError("scene " + name + " has duplicate band index in " +
                            bands[i].second.string());
        }
        if (bands[i].first != bands[i - 1].first + 1) {
            throw DataError("scene " + name + " is missing band " +
                            std::to_string(bands[i - 1].first + 1) + " (next file is " +
                            bands[i].second.string() + ")");
        }
    }

    cv::Mat first = cv::imread(bands.front().second.string(), cv::IMREAD_UNCHANGED);
    if (first.empty()) throw DataError("cannot read " + bands.front().second.string());
    HyperspectralImage img;
    img.data = Tensor::zeros({first.rows, first.cols, static_cast<i64>(bands.size())});
    copy_band(first, img.data, 0, bands.front().second.string());
    for (std::size_t i = 1; i < bands.size(); ++i) {
        cv::Mat m = cv::imread(bands[i].second.string(), cv::IMREAD_UNCHANGED);
        if (m.empty()) throw DataError("cannot read " + bands[i].second.string());
        copy_band(m, img.data, static_cast<i64>(i), bands[i].second.string());
    }
    img.name = name;
    return img;
}

HyperspectralImage load_multiband_scene(const fs::path& file, const std::string& name) {
    std::string ext = file.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
    if (ext == ".hsi") {
        HyperspectralImage img;
        try {
            img = load_raw_container(file.string());
        } catch (const std::exception& e) {
            throw DataError(e.what());
        }
        img.name = name;
        return img;
    }
    std::vector<cv::Mat> pages;
    if (!cv::imreadmulti(file.string(), pages, cv::IMREAD_UNCHANGED) || pages.empty()) {
        throw DataError("cannot read multiband image " + file.string());
    }
    HyperspectralImage img;
    img.data = Tensor::zeros({pages.front().rows, pages.front().cols, static_cast<i64>(pages.size())});
    for (std::size_t i = 0; i < pages.size(); ++i) {
        copy_band(pages[i], img.data, static_cast<i64>(i), file.string() + " (page " +
                                                               std::to_string(i) + ")");
    }
    img.name = name;
    return img;
}

void normalize_scene(HyperspectralImage& img) {
    double mx = 0.0;
    for (i64 i = 0; i < img.data.size(); ++i) mx = std::max(mx, img.data[i]);
    if (mx > 0.0) {
        for (i64 i = 0; i < img.data.size(); ++i) {
            img.data[i] = std::min(1.0, std::max(0.0, img.data[i] / mx));
        }
        img.normalization_scale = mx;
    }
}

}  // namespace

std::vector<HyperspectralImage> load_dataset(const std::string& root, const DatasetOptions& opts,
                                             const SplitSpec& split) {
    struct SceneRef {
        std::string name;
        fs::path path;  // unused for synthetic
    };
    std::vector<SceneRef> refs;
    std::vector<HyperspectralImage> synthetic;

    if (opts.layout == DatasetLayout::kSynthetic) {
        synthetic = make_synthetic_scenes(opts.synthetic);
        for (const auto& img : synthetic) refs.push_back({img.name, {}});
    } else {
        const fs::path base(root);
        if (!fs::is_directory(base)) throw DataError("dataset root is not a directory: " + root);
        if (opts.layout == DatasetLayout::kBandPngs) {
            for (const auto& entry : fs::directory_iterator(base)) {
                if (entry.is_directory()) {
                    refs.push_back({entry.path().filename().string(), entry.path()});
                }
            }
        } else {
            for (const auto& entry : fs::directory_iterator(base)) {
                if (!entry.is_regular_file()) continue;
                std::string ext = entry.path().extension().string();
                std::transform(ext.begin(), ext.end(), ext.begin(),
                               [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
                if (ext != ".tif" && ext != ".tiff" && ext != ".hsi") continue;
                refs.push_back({entry.path().stem().string(), entry.path()});
            }
        }
        std::sort(refs.begin(), refs.end(),
                  [](const SceneRef& a, const SceneRef& b) { return a.name < b.name; });
        for (std::size_t i = 1; i < refs.size(); ++i) {
            if (refs[i].name == refs[i - 1].name) {
                throw DataError("two scenes share the name '" + refs[i].name + "' under " + root);
            }
        }
    }

    std::vector<std::string> names;
    names.reserve(refs.size());
    for (const auto& r : refs) names.push_back(r.name);
    auto [train, test] = split_scene_names(names, split);
    const std::vector<std::string>* selected = nullptr;
    switch (split.side) {
        case SplitSpec::Side::kAll: selected = &names; break;
        case SplitSpec::Side::kTrain: selected = &train; break;
        case SplitSpec::Side::kTest: selected = &test; break;
    }

    std::vector<HyperspectralImage> out;
    out.reserve(selected->size());
    for (const auto& name : *selected) {
        HyperspectralImage img;
        if (opts.layout == DatasetLayout::kSynthetic) {
            for (auto& s : synthetic) {
                if (s.name == name) {
                    img = s;
                    break;
                }
            }
        } else {
            const auto it = std::find_if(refs.begin(), refs.end(),
                                         [&](const SceneRef& r) { return r.name == name; });
            img = opts.layout == DatasetLayout::kBandPngs
                      ? load_band_png_scene(it->path, name)
                      : load_multiband_scene(it->path, name);
            normalize_scene(img);
            if (img.bands() == 31 && img.band_wavelengths.empty()) {
                img.band_wavelengths.resize(31);
                for (i64 b = 0; b < 31; ++b) {
                    img.band_wavelengths[static_cast<std::size_t>(b)] = 400.0 + 10.0 * static_cast<double>(b);
                }
            }
        }
        if (opts.crop_top_left > 0 && (img.height() > opts.crop_top_left || img.width() > opts.crop_top_left)) {
            img = crop_image(img, 0, 0, std::min(img.height(), opts.crop_top_left),
                             std::min(img.width(), opts.crop_top_left));
        }
        if (opts.round_to_multiple > 1) {
            const i64 m = opts.round_to_multiple;
            const i64 nh = img.height() / m * m, nw = img.width() / m * m;
            if (nh < 1 || nw < 1) {
                throw DataError("scene " + name + " is smaller than one multiple of " +
                                std::to_string(m));
            }
            if (nh != img.height() || nw != img.width()) {
                img = crop_image(img, (img.height() - nh) / 2, (img.width() - nw) / 2, nh, nw);
            }
        }
        try {
            img.validate();
        } catch (const std::exception& e) {
            throw DataError("scene " + name + ": " + e.what());
        }
        out.push_back(std::move(img));
    }
    return out;
}

std::vector<FusionTriplet> sample_patches(const std::vector<HyperspectralImage>& images,
                                          i64 patch_hr, i64 scale, const SpectralResponse& srf,
                                          i64 count, std::uint64_t seed, double blur_sigma,
                                          PadMode pad) {
    if (count < 0) throw std::invalid_argument("sample_patches: negative count");
    if (scale < 1 || patch_hr < scale || patch_hr % scale != 0) {
        throw std::invalid_argument("sample_patches: patch size must be a positive multiple of scale");
    }
    if (images.empty() && count > 0) throw std::invalid_argument("sample_patches: no source images");
    for (const auto& img : images) {
        if (img.height() < patch_hr || img.width() < patch_hr) {
            throw std::invalid_argument("sample_patches: patch " + std::to_string(patch_hr) +
                                        " exceeds image " + img.name);
        }
    }

    Rng rng(seed);
    std::vector<FusionTriplet> out;
    out.reserve(static_cast<std::size_t>(count));
    for (i64 k = 0; k < count; ++k) {
        const auto& src = images[static_cast<std::size_t>(rng.uniform_int(static_cast<i64>(images.size())))];
        const i64 top = rng.uniform_int(src.height() - patch_hr + 1);
        const i64 left = rng.uniform_int(src.width() - patch_hr + 1);
        FusionTriplet t;
        t.gt = crop_image(src, top, left, patch_hr, patch_hr);
        t.gt.name = src.name + "_p" + std::to_string(k);
        auto [lr, msi] = wald_simulate(t.gt, scale, srf, blur_sigma, pad);
        t.lr_hsi = std::move(lr);
        t.hr_msi = std::move(msi);
        out.push_back(std::move(t));
    }
    return out;
}

}  // namespace feinfn

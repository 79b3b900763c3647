#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace oracle {

double mse(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw std::runtime_error("oracle::mse size mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc / static_cast<double>(a.size());
}

double psnr(const std::vector<double>& a, const std::vector<double>& b, double peak) {
  const double m = mse(a, b);
  if (m < 1e-10) return 100.0;
  return std::min(100.0, 10.0 * std::log10(peak * peak / m));
}

double sam_mean_deg(const std::vector<double>& pred, const std::vector<double>& gt, int64_t pixels,
                    int64_t bands) {
  double acc = 0.0;
  int64_t used = 0;
  for (int64_t p = 0; p < pixels; ++p) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (int64_t k = 0; k < bands; ++k) {
      const double va = pred[p * bands + k];
      const double vb = gt[p * bands + k];
      dot += va * vb;
      na += va * va;
      nb += vb * vb;
    }
    na = std::sqrt(na);
    nb = std::sqrt(nb);
    if (na == 0.0 || nb == 0.0) continue;
    double c = dot / (na * nb);
    c = std::max(-1.0, std::min(1.0, c));
    acc += std::acos(c);
    ++used;
  }
  if (used == 0) return 0.0;
  return acc / static_cast<double>(used) * 180.0 / M_PI;
}

double ergas(const std::vector<double>& pred, const std::vector<double>& gt, int64_t pixels,
             int64_t bands, double ratio) {
  double acc = 0.0;
  int64_t used = 0;
  for (int64_t k = 0; k < bands; ++k) {
    double band_mse = 0.0, band_mean = 0.0;
    for (int64_t p = 0; p < pixels; ++p) {
      const double d = pred[p * bands + k] - gt[p * bands + k];
      band_mse += d * d;
      band_mean += gt[p * bands + k];
    }
    band_mse /= static_cast<double>(pixels);
    band_mean /= static_cast<double>(pixels);
    if (band_mean == 0.0) continue;
    acc += band_mse / (band_mean * band_mean);
    ++used;
  }
  if (used == 0) return 0.0;
  return 100.0 * ratio * std::sqrt(acc / static_cast<double>(used));
}

double ssim_band(const std::vector<double>& x, const std::vector<double>& y, int64_t h, int64_t w,
                 double peak) {
  const int64_t win = 11;
  const double sigma = 1.5;
  // Explicit 2-D mask; normalization makes it identical to the separable form.
  double mask[11][11];
  double msum = 0.0;
  for (int64_t i = 0; i < win; ++i) {
    for (int64_t j = 0; j < win; ++j) {
      const double di = static_cast<double>(i) - 5.0;
      const double dj = static_cast<double>(j) - 5.0;
      mask[i][j] = std::exp(-(di * di + dj * dj) / (2.0 * sigma * sigma));
      msum += mask[i][j];
    }
  }
  for (int64_t i = 0; i < win; ++i)
    for (int64_t j = 0; j < win; ++j) mask[i][j] /= msum;

  const double c1 = (0.01 * peak) * (0.01 * peak);
  const double c2 = (0.03 * peak) * (0.03 * peak);
  double acc = 0.0;
  int64_t count = 0;
  for (int64_t top = 0; top + win <= h; ++top) {
    for (int64_t left = 0; left + win <= w; ++left) {
      double mx = 0.0, my = 0.0;
      for (int64_t i = 0; i < win; ++i)
        for (int64_t j = 0; j < win; ++j) {
          mx += mask[i][j] * x[(top + i) * w + (left + j)];
          my += mask[i][j] * y[(top + i) * w + (left + j)];
        }
      double vx = 0.0, vy = 0.0, cov = 0.0;
      for (int64_t i = 0; i < win; ++i)
        for (int64_t j = 0; j < win; ++j) {
          const double dx = x[(top + i) * w + (left + j)] - mx;
          const double dy = y[(top + i) * w + (left + j)] - my;
          vx += mask[i][j] * dx * dx;
          vy += mask[i][j] * dy * dy;
          cov += mask[i][j] * dx * dy;
        }
      const double num = (2.0 * mx * my + c1) * (2.0 * cov + c2);
      const double den = (mx * mx + my * my + c1) * (vx + vy + c2);
      acc += num / den;
      ++count;
    }
  }
  if (count == 0) throw std::runtime_error("oracle::ssim_band image smaller than window");
  return acc / static_cast<double>(count);
}

void dft2(const std::vector<double>& re_in, const std::vector<double>& im_in, int64_t h, int64_t w,
          bool inverse, std::vector<double>& re_out, std::vector<double>& im_out) {
  re_out.assign(static_cast<std::size_t>(h * w), 0.0);
  im_out.assign(static_cast<std::size_t>(h * w), 0.0);
  const double sign = inverse ? 1.0 : -1.0;
  for (int64_t u = 0; u < h; ++u) {
    for (int64_t v = 0; v < w; ++v) {
      double re = 0.0, im = 0.0;
      for (int64_t y = 0; y < h; ++y) {
        for (int64_t x = 0; x < w; ++x) {
          // Reduce the phase to r/(h*w) turns and use exact trig values at
          // quarter turns so mathematically-real bins stay exactly real.
          const int64_t n = h * w;
          const int64_t r = (u * y * w + v * x * h) % n;
          double cr, ci;
          if ((4 * r) % n == 0) {
            switch ((4 * r) / n) {
              case 0: cr = 1.0; ci = 0.0; break;
              case 1: cr = 0.0; ci = sign; break;
              case 2: cr = -1.0; ci = 0.0; break;
              default: cr = 0.0; ci = -sign; break;
            }
          } else {
            const double ang =
                sign * 2.0 * M_PI * static_cast<double>(r) / static_cast<double>(n);
            cr = std::cos(ang);
            ci = std::sin(ang);
          }
          const double xr = re_in[y * w + x];
          const double xi = im_in.empty() ? 0.0 : im_in[y * w + x];
          re += xr * cr - xi * ci;
          im += xr * ci + xi * cr;
        }
      }
      if (inverse) {
        re /= static_cast<double>(h * w);
        im /= static_cast<double>(h * w);
      }
      re_out[u * w + v] = re;
      im_out[u * w + v] = im;
    }
  }
}

std::vector<double> conv2d(const std::vector<double>& x, int64_t n, int64_t h, int64_t w,
                           int64_t cin, const std::vector<double>& weight, int64_t kh, int64_t kw,
                           int64_t cout, const std::vector<double>& bias, bool periodic) {
  std::vector<double> out(static_cast<std::size_t>(n * h * w * cout), 0.0);
  const int64_t ph = (kh - 1) / 2;
  const int64_t pw = (kw - 1) / 2;
  for (int64_t b = 0; b < n; ++b) {
    for (int64_t y = 0; y < h; ++y) {
      for (int64_t xx = 0; xx < w; ++xx) {
        for (int64_t co = 0; co < cout; ++co) {
          double acc = bias.empty() ? 0.0 : bias[co];
          for (int64_t i = 0; i < kh; ++i) {
            for (int64_t j = 0; j < kw; ++j) {
              int64_t sy = y + i - ph;
              int64_t sx = xx + j - pw;
              if (periodic) {
                sy = ((sy % h) + h) % h;
                sx = ((sx % w) + w) % w;
              }
              const bool inside = sy >= 0 && sy < h && sx >= 0 && sx < w;
              for (int64_t ci = 0; ci < cin; ++ci) {
                const double px = inside ? x[((b * h + sy) * w + sx) * cin + ci] : 0.0;
                acc += px * weight[((i * kw + j) * cin + ci) * cout + co];
              }
            }
          }
          out[((b * h + y) * w + xx) * cout + co] = acc;
        }
      }
    }
  }
  return out;
}

std::vector<double> box3_mean(const std::vector<double>& x, int64_t h, int64_t w, int64_t c) {
  std::vector<double> out(static_cast<std::size_t>(h * w * c), 0.0);
  for (int64_t y = 0; y < h; ++y) {
    for (int64_t xx = 0; xx < w; ++xx) {
      for (int64_t k = 0; k < c; ++k) {
        double acc = 0.0;
        int64_t taps = 0;
        for (int64_t dy = -1; dy <= 1; ++dy) {
          for (int64_t dx = -1; dx <= 1; ++dx) {
            const int64_t sy = y + dy;
            const int64_t sx = xx + dx;
            if (sy < 0 || sy >= h || sx < 0 || sx >= w) continue;
            acc += x[(sy * w + sx) * c + k];
            ++taps;
          }
        }
        out[(y * w + xx) * c + k] = acc / static_cast<double>(taps);
      }
    }
  }
  return out;
}

double keys_cubic(double t) {
  const double a = -0.5;
  const double at = std::fabs(t);
  if (at <= 1.0) return (a + 2.0) * at * at * at - (a + 3.0) * at * at + 1.0;
  if (at < 2.0) return a * at * at * at - 5.0 * a * at * at + 8.0 * a * at - 4.0 * a;
  return 0.0;
}

double bicubic_sample(const std::vector<double>& band, int64_t h, int64_t w, double y, double x) {
  const int64_t fy = static_cast<int64_t>(std::floor(y));
  const int64_t fx = static_cast<int64_t>(std::floor(x));
  double acc = 0.0;
  for (int64_t i = -1; i <= 2; ++i) {
    for (int64_t j = -1; j <= 2; ++j) {
      const int64_t sy = std::max<int64_t>(0, std::min(h - 1, fy + i));
      const int64_t sx = std::max<int64_t>(0, std::min(w - 1, fx + j));
      const double wy = keys_cubic(y - static_cast<double>(fy + i));
      const double wx = keys_cubic(x - static_cast<double>(fx + j));
      acc += band[sy * w + sx] * wy * wx;
    }
  }
  return acc;
}

namespace {

int64_t fold_reflect(int64_t i, int64_t n) {
  // Edge-inclusive mirror: ..., 1, 0, 0, 1, ..., n-1, n-1, n-2, ...
  if (n == 1) return 0;
  const int64_t period = 2 * n;
  int64_t m = ((i % period) + period) % period;
  if (m >= n) m = period - 1 - m;
  return m;
}

}  // namespace

std::vector<double> gaussian_blur(const std::vector<double>& x, int64_t h, int64_t w, int64_t c,
                                  double sigma, bool periodic) {
  const int64_t radius = static_cast<int64_t>(std::floor(2.0 * sigma));
  std::vector<double> taps(static_cast<std::size_t>(2 * radius + 1));
  double tsum = 0.0;
  for (int64_t k = -radius; k <= radius; ++k) {
    taps[k + radius] = std::exp(-static_cast<double>(k * k) / (2.0 * sigma * sigma));
    tsum += taps[k + radius];
  }
  for (double& t : taps) t /= tsum;

  auto index = [&](int64_t i, int64_t n) {
    if (periodic) return ((i % n) + n) % n;
    return fold_reflect(i, n);
  };

  std::vector<double> rows(x.size(), 0.0);
  for (int64_t y = 0; y < h; ++y)
    for (int64_t xx = 0; xx < w; ++xx)
      for (int64_t ch = 0; ch < c; ++ch) {
        double acc = 0.0;
        for (int64_t k = -radius; k <= radius; ++k)
          acc += taps[k + radius] * x[(y * w + index(xx + k, w)) * c + ch];
        rows[(y * w + xx) * c + ch] = acc;
      }
  std::vector<double> out(x.size(), 0.0);
  for (int64_t y = 0; y < h; ++y)
    for (int64_t xx = 0; xx < w; ++xx)
      for (int64_t ch = 0; ch < c; ++ch) {
        double acc = 0.0;
        for (int64_t k = -radius; k <= radius; ++k)
          acc += taps[k + radius] * rows[(index(y + k, h) * w + xx) * c + ch];
        out[(y * w + xx) * c + ch] = acc;
      }
  return out;
}

std::array<double, 4> softmax4(const std::array<double, 4>& v) {
  double mx = v[0];
  for (double e : v) mx = std::max(mx, e);
  std::array<double, 4> out{};
  double sum = 0.0;
  for (int i = 0; i < 4; ++i) {
    out[i] = std::exp(v[i] - mx);
    sum += out[i];
  }
  for (int i = 0; i < 4; ++i) out[i] /= sum;
  return out;
}

std::vector<double> linear(const std::vector<double>& x, int64_t rows, int64_t in,
                           const std::vector<double>& w, int64_t out,
                           const std::vector<double>& b) {
  std::vector<double> y(static_cast<std::size_t>(rows * out), 0.0);
  for (int64_t r = 0; r < rows; ++r)
    for (int64_t o = 0; o < out; ++o) {
      double acc = b.empty() ? 0.0 : b[o];
      for (int64_t i = 0; i < in; ++i) acc += x[r * in + i] * w[i * out + o];
      y[r * out + o] = acc;
    }
  return y;
}

std::vector<double> relu(std::vector<double> v) {
  for (double& e : v) e = std::max(0.0, e);
  return v;
}

}  // namespace oracle

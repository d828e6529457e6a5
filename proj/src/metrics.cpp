#include "swinoir/metrics.hpp"

#include <cmath>
#include <limits>

namespace swinoir {

namespace {

void require_same_size(const char* op, const Image& x, const Image& y) {
  if (x.height != y.height || x.width != y.width || x.channels != y.channels) {
    throw std::invalid_argument(std::string(op) + ": image sizes differ (" +
                                std::to_string(x.height) + "x" + std::to_string(x.width) +
                                "x" + std::to_string(x.channels) + " vs " +
                                std::to_string(y.height) + "x" + std::to_string(y.width) +
                                "x" + std::to_string(y.channels) + ")");
  }
}

Image prepare(const Image& img, const MetricConfig& cfg) {
  Image out = cfg.channel_mode == ChannelMode::kLuminance ? to_luminance(img) : img;
  if (cfg.border_shave > 0) {
    const int s = cfg.border_shave;
    if (out.height <= 2 * s || out.width <= 2 * s) {
      throw std::invalid_argument("border_shave " + std::to_string(s) +
                                  " leaves no pixels in a " + std::to_string(out.height) +
                                  "x" + std::to_string(out.width) + " image");
    }
    out = crop_image(out, s, s, out.height - 2 * s, out.width - 2 * s);
  }
  return out;
}

std::vector<double> window_weights(const MetricConfig& cfg) {
  const int n = cfg.window_size;
  std::vector<double> w(static_cast<size_t>(n) * n);
  if (cfg.window == SsimWindow::kUniform) {
    const double v = 1.0 / (n * n);
    for (double& x : w) x = v;
    return w;
  }
  const double center = (n - 1) / 2.0;
  double sum = 0.0;
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      const double dy = y - center, dx = x - center;
      const double v = std::exp(-(dy * dy + dx * dx) / (2.0 * cfg.gaussian_sigma * cfg.gaussian_sigma));
      w[static_cast<size_t>(y) * n + x] = v;
      sum += v;
    }
  }
  for (double& x : w) x /= sum;
  return w;
}

}  // namespace

Image to_metric_scale(const Image& image, const MetricConfig& cfg) {
  Image out = image;
  for (double& v : out.pixels) v *= cfg.max_value;
  return out;
}

double psnr(const Image& x, const Image& y, const MetricConfig& cfg) {
  require_same_size("psnr", x, y);
  const Image a = prepare(x, cfg);
  const Image b = prepare(y, cfg);
  double mse = 0.0;
  for (size_t i = 0; i < a.pixels.size(); ++i) {
    const double d = a.pixels[i] - b.pixels[i];
    mse += d * d;
  }
  mse /= static_cast<double>(a.pixels.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(cfg.max_value * cfg.max_value / mse);
}

double ssim(const Image& x, const Image& y, const MetricConfig& cfg) {
  require_same_size("ssim", x, y);
  const Image a = prepare(x, cfg);
  const Image b = prepare(y, cfg);
  const int n = cfg.window_size;
  if (n < 1 || a.height < n || a.width < n) {
    throw std::invalid_argument("ssim: image " + std::to_string(a.height) + "x" +
                                std::to_string(a.width) + " smaller than window " +
                                std::to_string(n));
  }
  const std::vector<double> w = window_weights(cfg);
  const double c1 = cfg.c1(), c2 = cfg.c2();
  double total = 0.0;
  long long count = 0;
  for (int c = 0; c < a.channels; ++c) {
    for (int y0 = 0; y0 + n <= a.height; ++y0) {
      for (int x0 = 0; x0 + n <= a.width; ++x0) {
        double mu_x = 0.0, mu_y = 0.0;
        for (int dy = 0; dy < n; ++dy)
          for (int dx = 0; dx < n; ++dx) {
            const double wv = w[static_cast<size_t>(dy) * n + dx];
            mu_x += wv * a.at(y0 + dy, x0 + dx, c);
            mu_y += wv * b.at(y0 + dy, x0 + dx, c);
          }
        double var_x = 0.0, var_y = 0.0, cov = 0.0;
        for (int dy = 0; dy < n; ++dy)
          for (int dx = 0; dx < n; ++dx) {
            const double wv = w[static_cast<size_t>(dy) * n + dx];
            const double da = a.at(y0 + dy, x0 + dx, c) - mu_x;
            const double db = b.at(y0 + dy, x0 + dx, c) - mu_y;
            var_x += wv * da * da;
            var_y += wv * db * db;
            cov += wv * da * db;
          }
        const double numer = (2.0 * mu_x * mu_y + c1) * (2.0 * cov + c2);
        const double denom = (mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2);
        total += numer / denom;
        ++count;
      }
    }
  }
  return total / static_cast<double>(count);
}

}  // namespace swinoir

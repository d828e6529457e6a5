#pragma once

#include "swinoir/image.hpp"

namespace swinoir {

enum class SsimWindow { kUniform, kGaussian };
enum class ChannelMode { kLuminance, kRgbMean };

// Measurement conventions. Images handed to psnr()/ssim() must already be on
// the [0, max_value] scale.
struct MetricConfig {
  double max_value = 255.0;
  double k1 = 0.01;  // c1 = (k1 * max_value)^2
  double k2 = 0.03;  // c2 = (k2 * max_value)^2
  SsimWindow window = SsimWindow::kUniform;
  int window_size = 8;
  double gaussian_sigma = 1.5;
  ChannelMode channel_mode = ChannelMode::kLuminance;
  int border_shave = 0;  // pixels cropped from each side before measuring

  double c1() const { return (k1 * max_value) * (k1 * max_value); }
  double c2() const { return (k2 * max_value) * (k2 * max_value); }
};

// 10 * log10(max^2 / MSE) in dB after border shaving and channel conversion.
// Identical images give +infinity.
double psnr(const Image& x, const Image& y, const MetricConfig& cfg = {});

// Mean over stride-1 sliding windows of the per-window similarity computed
// from window-local means, variances and covariance. Result is in [-1, 1].
double ssim(const Image& x, const Image& y, const MetricConfig& cfg = {});

// Rescales a [0, 1] image onto the metric scale.
Image to_metric_scale(const Image& image, const MetricConfig& cfg = {});

}  // namespace swinoir

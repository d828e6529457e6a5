#pragma once

#include <string>
#include <vector>

#include "swinoir/tensor.hpp"

namespace swinoir {

// Row-major interleaved image with double pixels. File I/O uses 8-bit binary
// PPM (P6, RGB) and PGM (P5, grayscale); in memory values live in [0, 1]
// after reading and are clamped and quantized on write.
struct Image {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<double> pixels;  // height * width * channels

  double at(int y, int x, int c) const {
    return pixels[(static_cast<size_t>(y) * width + x) * channels + c];
  }
  double& at(int y, int x, int c) {
    return pixels[(static_cast<size_t>(y) * width + x) * channels + c];
  }
  bool empty() const { return pixels.empty(); }
};

Image make_image(int height, int width, int channels, double fill = 0.0);

Image read_image(const std::string& path);                // P5 or P6
void write_image(const Image& image, const std::string& path);

// Conversions between images and (H, W, C) tensors; values pass unchanged.
Tensor image_to_tensor(const Image& image);
Image tensor_to_image(const Tensor& t);

// Clamp all pixels into [lo, hi].
Image clamp_image(const Image& image, double lo = 0.0, double hi = 1.0);

// Round-trip through the 8-bit representation used by the file writer.
Image quantize_8bit(const Image& image);

// BT.601 luma: 0.299 R + 0.587 G + 0.114 B. Grayscale input passes through.
Image to_luminance(const Image& image);

// Catmull-Rom bicubic resampling with clamped edges; downscaling widens the
// kernel support so the result is antialiased.
Image resize_bicubic(const Image& image, int out_height, int out_width);

// Mirror padding (edge pixels included in the reflection, so any pad amount
// is valid for any image size).
Image pad_symmetric(const Image& image, int top, int bottom, int left, int right);

// Pads on the bottom/right so both dimensions become multiples of `multiple`.
Image pad_to_multiple(const Image& image, int multiple);

Image crop_image(const Image& image, int y, int x, int height, int width);

}  // namespace swinoir

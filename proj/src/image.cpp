#include "swinoir/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace swinoir {

namespace {

// Catmull-Rom kernel (a = -0.5).
double cubic_weight(double t) {
  constexpr double a = -0.5;
  t = std::fabs(t);
  if (t <= 1.0) return ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0;
  if (t < 2.0) return ((a * t - 5.0 * a) * t + 8.0 * a) * t - 4.0 * a;
  return 0.0;
}

int clamp_index(int i, int n) { return std::clamp(i, 0, n - 1); }

// One separable resampling pass along x; callers transpose for y.
Image resample_rows(const Image& src, int out_width) {
  Image dst = make_image(src.height, out_width, src.channels);
  const double scale = static_cast<double>(out_width) / src.width;
  const double kscale = std::min(scale, 1.0);  // widen support when shrinking
  const double support = 2.0 / kscale;
  std::vector<double> weights;
  for (int ox = 0; ox < out_width; ++ox) {
    const double center = (ox + 0.5) / scale - 0.5;
    const int lo = static_cast<int>(std::floor(center - support)) + 1;
    const int hi = static_cast<int>(std::floor(center + support));
    weights.clear();
    double wsum = 0.0;
    for (int i = lo; i <= hi; ++i) {
      const double w = cubic_weight((center - i) * kscale);
      weights.push_back(w);
      wsum += w;
    }
    if (wsum == 0.0) wsum = 1.0;
    for (int y = 0; y < src.height; ++y) {
      for (int c = 0; c < src.channels; ++c) {
        double acc = 0.0;
        for (int i = lo; i <= hi; ++i) {
          acc += weights[static_cast<size_t>(i - lo)] *
                 src.at(y, clamp_index(i, src.width), c);
        }
        dst.at(y, ox, c) = acc / wsum;
      }
    }
  }
  return dst;
}

Image transpose_image(const Image& src) {
  Image dst = make_image(src.width, src.height, src.channels);
  for (int y = 0; y < src.height; ++y)
    for (int x = 0; x < src.width; ++x)
      for (int c = 0; c < src.channels; ++c) dst.at(x, y, c) = src.at(y, x, c);
  return dst;
}

// Mirror index into [0, n). Edge pixels are included, so the map is total.
int symmetric_index(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * n;
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - 1 - i;
}

}  // namespace

Image make_image(int height, int width, int channels, double fill) {
  if (height < 1 || width < 1 || channels < 1) {
    throw std::invalid_argument("image dimensions must be positive");
  }
  Image img;
  img.height = height;
  img.width = width;
  img.channels = channels;
  img.pixels.assign(static_cast<size_t>(height) * width * channels, fill);
  return img;
}

Image read_image(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open image " + path);
  std::string magic;
  in >> magic;
  if (magic != "P6" && magic != "P5") {
    throw std::runtime_error(path + ": expected binary PPM (P6) or PGM (P5)");
  }
  const int channels = magic == "P6" ? 3 : 1;
  // Header tokens may be separated by whitespace and '#' comments.
  auto next_int = [&in, &path]() {
    int value = 0;
    while (true) {
      int ch = in.peek();
      if (ch == '#') {
        std::string line;
        std::getline(in, line);
        continue;
      }
      if (std::isspace(ch)) {
        in.get();
        continue;
      }
      break;
    }
    if (!(in >> value)) throw std::runtime_error(path + ": malformed header");
    return value;
  };
  const int width = next_int();
  const int height = next_int();
  const int maxval = next_int();
  if (width < 1 || height < 1 || maxval != 255) {
    throw std::runtime_error(path + ": unsupported image header");
  }
  in.get();  // single whitespace before pixel data
  std::vector<unsigned char> raw(static_cast<size_t>(width) * height * channels);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!in) throw std::runtime_error(path + ": truncated pixel data");
  Image img = make_image(height, width, channels);
  for (size_t i = 0; i < raw.size(); ++i) img.pixels[i] = raw[i] / 255.0;
  return img;
}

void write_image(const Image& image, const std::string& path) {
  if (image.channels != 1 && image.channels != 3) {
    throw std::invalid_argument("write_image: only 1- or 3-channel images supported");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << (image.channels == 3 ? "P6\n" : "P5\n")
      << image.width << " " << image.height << "\n255\n";
  std::vector<unsigned char> raw(image.pixels.size());
  for (size_t i = 0; i < raw.size(); ++i) {
    const double v = std::clamp(image.pixels[i], 0.0, 1.0);
    raw[i] = static_cast<unsigned char>(std::lround(v * 255.0));
  }
  out.write(reinterpret_cast<const char*>(raw.data()),
            static_cast<std::streamsize>(raw.size()));
  if (!out) throw std::runtime_error("failed writing image " + path);
}

Tensor image_to_tensor(const Image& image) {
  return Tensor::from_data({image.height, image.width, image.channels}, image.pixels);
}

Image tensor_to_image(const Tensor& t) {
  if (t.ndim() != 3) {
    throw ShapeError("tensor_to_image: expected (H, W, C), got " +
                     shape_to_string(t.shape()));
  }
  Image img = make_image(t.dim(0), t.dim(1), t.dim(2));
  const auto data = t.data();
  img.pixels.assign(data.begin(), data.end());
  return img;
}

Image clamp_image(const Image& image, double lo, double hi) {
  Image out = image;
  for (double& v : out.pixels) v = std::clamp(v, lo, hi);
  return out;
}

Image quantize_8bit(const Image& image) {
  Image out = image;
  for (double& v : out.pixels) {
    v = std::lround(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0;
  }
  return out;
}

Image to_luminance(const Image& image) {
  if (image.channels == 1) return image;
  if (image.channels != 3) {
    throw std::invalid_argument("to_luminance: expected 1 or 3 channels");
  }
  Image out = make_image(image.height, image.width, 1);
  for (int y = 0; y < image.height; ++y)
    for (int x = 0; x < image.width; ++x)
      out.at(y, x, 0) = 0.299 * image.at(y, x, 0) + 0.587 * image.at(y, x, 1) +
                        0.114 * image.at(y, x, 2);
  return out;
}

Image resize_bicubic(const Image& image, int out_height, int out_width) {
  if (out_height < 1 || out_width < 1) {
    throw std::invalid_argument("resize_bicubic: target size must be positive");
  }
  Image horizontal = resample_rows(image, out_width);
  return transpose_image(resample_rows(transpose_image(horizontal), out_height));
}

Image pad_symmetric(const Image& image, int top, int bottom, int left, int right) {
  if (top < 0 || bottom < 0 || left < 0 || right < 0) {
    throw std::invalid_argument("pad_symmetric: negative padding");
  }
  Image out = make_image(image.height + top + bottom, image.width + left + right,
                         image.channels);
  for (int y = 0; y < out.height; ++y) {
    const int sy = symmetric_index(y - top, image.height);
    for (int x = 0; x < out.width; ++x) {
      const int sx = symmetric_index(x - left, image.width);
      for (int c = 0; c < image.channels; ++c) out.at(y, x, c) = image.at(sy, sx, c);
    }
  }
  return out;
}

Image pad_to_multiple(const Image& image, int multiple) {
  if (multiple < 1) throw std::invalid_argument("pad_to_multiple: multiple must be >= 1");
  const int pad_h = (multiple - image.height % multiple) % multiple;
  const int pad_w = (multiple - image.width % multiple) % multiple;
  if (pad_h == 0 && pad_w == 0) return image;
  return pad_symmetric(image, 0, pad_h, 0, pad_w);
}

Image crop_image(const Image& image, int y, int x, int height, int width) {
  if (y < 0 || x < 0 || height < 1 || width < 1 || y + height > image.height ||
      x + width > image.width) {
    throw std::invalid_argument("crop_image: rect out of bounds");
  }
  Image out = make_image(height, width, image.channels);
  for (int yy = 0; yy < height; ++yy)
    for (int xx = 0; xx < width; ++xx)
      for (int c = 0; c < image.channels; ++c)
        out.at(yy, xx, c) = image.at(y + yy, x + xx, c);
  return out;
}

}  // namespace swinoir

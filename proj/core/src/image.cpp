#include "fishforge/image.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fishforge/error.hpp"

namespace fishforge {

Plane::Plane(int width, int height, double fill)
    : width_(width),
      height_(height),
      data_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height),
            fill) {
  if (width < 0 || height < 0) throw ConfigError("negative plane dimensions");
}

double Plane::sample_bilinear(double x, double y) const {
  const double fx = std::floor(x);
  const double fy = std::floor(y);
  const int x0 = static_cast<int>(fx);
  const int y0 = static_cast<int>(fy);
  const double ax = x - fx;
  const double ay = y - fy;
  const double v00 = at_or_zero(x0, y0);
  const double v10 = at_or_zero(x0 + 1, y0);
  const double v01 = at_or_zero(x0, y0 + 1);
  const double v11 = at_or_zero(x0 + 1, y0 + 1);
  return (1.0 - ay) * ((1.0 - ax) * v00 + ax * v10) +
         ay * ((1.0 - ax) * v01 + ax * v11);
}

double Plane::sum() const {
  return std::accumulate(data_.begin(), data_.end(), 0.0);
}

void Plane::clamp(double lo, double hi) {
  for (double& v : data_) v = std::clamp(v, lo, hi);
}

bool Patch::in_unit_range() const {
  for (const Plane& p : channels) {
    for (double v : p.values()) {
      if (!(v >= 0.0 && v <= 1.0)) return false;
    }
  }
  return true;
}

std::vector<std::uint8_t> quantize_rgb8(const Patch& patch) {
  const int w = patch.width();
  const int h = patch.height();
  std::vector<std::uint8_t> out(static_cast<std::size_t>(w) * h * 3);
  std::size_t k = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        const double v = std::clamp(patch.channels[c](x, y), 0.0, 1.0);
        out[k++] = static_cast<std::uint8_t>(std::lround(v * 255.0));
      }
    }
  }
  return out;
}

Patch dequantize_rgb8(std::span<const std::uint8_t> rgb, int width, int height) {
  if (rgb.size() != static_cast<std::size_t>(width) * height * 3) {
    throw IoError("RGB buffer size does not match image dimensions");
  }
  Patch patch(width, height);
  std::size_t k = 0;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      for (int c = 0; c < 3; ++c) {
        patch.channels[c](x, y) = rgb[k++] / 255.0;
      }
    }
  }
  return patch;
}

Patch downsample_area(const Patch& patch, int factor) {
  if (factor < 1 || patch.width() % factor != 0 ||
      patch.height() % factor != 0) {
    throw ConfigError("downsample factor must divide the patch size");
  }
  if (factor == 1) return patch;
  const int w = patch.width() / factor;
  const int h = patch.height() / factor;
  const double inv = 1.0 / (factor * factor);
  Patch out(w, h);
  for (int c = 0; c < 3; ++c) {
    const Plane& src = patch.channels[c];
    Plane& dst = out.channels[c];
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double acc = 0.0;
        for (int dy = 0; dy < factor; ++dy) {
          for (int dx = 0; dx < factor; ++dx) {
            acc += src(x * factor + dx, y * factor + dy);
          }
        }
        dst(x, y) = acc * inv;
      }
    }
  }
  return out;
}

std::vector<double> flatten_chw(const Patch& patch) {
  std::vector<double> out;
  out.reserve(patch.channels[0].size() * 3);
  for (const Plane& p : patch.channels) {
    out.insert(out.end(), p.values().begin(), p.values().end());
  }
  return out;
}

}  // namespace fishforge

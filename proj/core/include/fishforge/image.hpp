#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace fishforge {

/// Single-channel image of doubles, row-major, x = column, y = row.
class Plane {
 public:
  Plane() = default;
  Plane(int width, int height, double fill = 0.0);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(int x, int y) { return data_[index(x, y)]; }
  double operator()(int x, int y) const { return data_[index(x, y)]; }

  /// Value at (x, y), or 0 outside the image.
  double at_or_zero(int x, int y) const {
    return contains(x, y) ? (*this)(x, y) : 0.0;
  }
  bool contains(int x, int y) const {
    return x >= 0 && y >= 0 && x < width_ && y < height_;
  }

  /// Bilinear sample at continuous pixel coordinates; zero outside.
  double sample_bilinear(double x, double y) const;

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  double sum() const;
  void clamp(double lo = 0.0, double hi = 1.0);

  friend bool operator==(const Plane&, const Plane&) = default;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<double> data_;
};

enum class Channel : int { kRed = 0, kGreen = 1, kBlue = 2 };

/// RGB patch: red = reference probe, green = target probe, blue = nucleus.
struct Patch {
  std::array<Plane, 3> channels;

  Patch() = default;
  Patch(int width, int height)
      : channels{Plane(width, height), Plane(width, height),
                 Plane(width, height)} {}

  int width() const { return channels[0].width(); }
  int height() const { return channels[0].height(); }

  Plane& operator[](Channel c) { return channels[static_cast<int>(c)]; }
  const Plane& operator[](Channel c) const {
    return channels[static_cast<int>(c)];
  }

  /// True when every value lies in [0, 1].
  bool in_unit_range() const;

  friend bool operator==(const Patch&, const Patch&) = default;
};

/// Round to 8 bits per channel, interleaved RGB, row-major.
std::vector<std::uint8_t> quantize_rgb8(const Patch& patch);
/// Inverse of quantize_rgb8 (values k/255).
Patch dequantize_rgb8(std::span<const std::uint8_t> rgb, int width, int height);

/// Block-average downsampling by an integer factor (area preserving mean).
Patch downsample_area(const Patch& patch, int factor);

/// Channel-major flattening: all red values, then green, then blue.
std::vector<double> flatten_chw(const Patch& patch);

}  // namespace fishforge

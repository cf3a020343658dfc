#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>

#include "fishforge/error.hpp"
#include "fishforge/png_io.hpp"
#include "fishforge/synthgen.hpp"

namespace fishforge {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kEdgeSoftnessPx = 3.0;

double smoothstep(double t) { return t * t * (3.0 - 2.0 * t); }

// Random values on a coarse lattice, smoothstep-interpolated.
Plane value_noise(Rng& rng, int size, int step) {
  const int nodes = size / step + 2;
  std::vector<double> lattice(static_cast<std::size_t>(nodes) * nodes);
  for (double& v : lattice) v = rng.uniform();
  auto node = [&](int i, int j) {
    return lattice[static_cast<std::size_t>(j) * nodes + i];
  };
  Plane out(size, size);
  for (int y = 0; y < size; ++y) {
    const double gy = static_cast<double>(y) / step;
    const int j = static_cast<int>(gy);
    const double ty = smoothstep(gy - j);
    for (int x = 0; x < size; ++x) {
      const double gx = static_cast<double>(x) / step;
      const int i = static_cast<int>(gx);
      const double tx = smoothstep(gx - i);
      const double top = (1 - tx) * node(i, j) + tx * node(i + 1, j);
      const double bottom = (1 - tx) * node(i, j + 1) + tx * node(i + 1, j + 1);
      out(x, y) = (1 - ty) * top + ty * bottom;
    }
  }
  return out;
}

// Euclidean distance to the nearest non-mask pixel, saturating at `limit`.
Plane inner_distance(const Plane& mask, int limit) {
  Plane out(mask.width(), mask.height());
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (mask(x, y) < 0.5) continue;
      double best = limit;
      for (int dy = -limit; dy <= limit; ++dy) {
        for (int dx = -limit; dx <= limit; ++dx) {
          if (mask.at_or_zero(x + dx, y + dy) >= 0.5) continue;
          best = std::min(best, std::hypot(dx, dy));
        }
      }
      out(x, y) = best;
    }
  }
  return out;
}

// Blue-channel texture: two octaves of value noise, attenuated towards the
// nuclear envelope.
Plane nucleus_texture(const Plane& mask, Rng& rng) {
  const int size = mask.width();
  const Plane coarse = value_noise(rng, size, 8);
  const Plane fine = value_noise(rng, size, 3);
  const double base = rng.uniform(0.35, 0.55);
  const Plane dist =
      inner_distance(mask, static_cast<int>(std::ceil(kEdgeSoftnessPx)));
  Plane intensity(size, size);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      if (mask(x, y) < 0.5) continue;
      const double texture = 0.7 * coarse(x, y) + 0.3 * fine(x, y);
      const double edge =
          smoothstep(std::clamp(dist(x, y) / kEdgeSoftnessPx, 0.0, 1.0));
      intensity(x, y) =
          std::clamp((base + 0.35 * (texture - 0.5)) * edge, 0.0, 1.0);
    }
  }
  return intensity;
}

}  // namespace

bool NucleusTemplate::inside(double x, double y) const {
  const int px = static_cast<int>(std::floor(x + 0.5));
  const int py = static_cast<int>(std::floor(y + 0.5));
  return mask.at_or_zero(px, py) > 0.5;
}

NucleusTemplate make_nucleus(Rng& rng, int size) {
  if (size < kMinNucleusSize) {
    throw ConfigError("patch size " + std::to_string(size) +
                      " is below the minimum of " +
                      std::to_string(kMinNucleusSize));
  }
  const double center = (size - 1) / 2.0;
  const double semi_major = rng.uniform(0.34, 0.42) * size;
  const double semi_minor = semi_major * rng.uniform(0.7, 1.0);
  const double tilt = rng.uniform(0.0, std::numbers::pi);

  // Low-frequency radial boundary perturbation, harmonics 2..5.
  constexpr int kHarmonics = 4;
  std::array<double, kHarmonics> amp{};
  std::array<double, kHarmonics> phase{};
  for (int k = 0; k < kHarmonics; ++k) {
    amp[k] = rng.uniform(-0.03, 0.03);
    phase[k] = rng.uniform(0.0, kTwoPi);
  }

  const double ct = std::cos(tilt);
  const double st = std::sin(tilt);
  Plane mask(size, size);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double dx = x - center;
      const double dy = y - center;
      const double u = dx * ct + dy * st;
      const double v = -dx * st + dy * ct;
      const double alpha = std::atan2(v, u);
      const double ca = std::cos(alpha) / semi_major;
      const double sa = std::sin(alpha) / semi_minor;
      double radius = 1.0 / std::sqrt(ca * ca + sa * sa);
      const double theta = std::atan2(dy, dx);
      double perturb = 1.0;
      for (int k = 0; k < kHarmonics; ++k) {
        perturb += amp[k] * std::cos((k + 2) * theta + phase[k]);
      }
      radius *= perturb;
      if (std::hypot(dx, dy) <= radius) mask(x, y) = 1.0;
    }
  }

  NucleusTemplate nucleus;
  nucleus.mask = largest_component(mask);
  nucleus.intensity = nucleus_texture(nucleus.mask, rng);
  nucleus.source = NucleusSource::kProcedural;
  return nucleus;
}

NucleusLibrary NucleusLibrary::from_directory(const std::filesystem::path& dir,
                                              int size) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) {
    throw IoError("nucleus directory not found: " + dir.string());
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".png") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) {
    throw ConfigError("nucleus directory has no PNG masks: " + dir.string());
  }

  NucleusLibrary library;
  for (const fs::path& file : files) {
    const Patch image = read_png(file);
    if (image.width() != size || image.height() != size) {
      throw ConfigError("nucleus mask " + file.filename().string() +
                        " is not " + std::to_string(size) + "x" +
                        std::to_string(size));
    }
    Plane mask(size, size);
    for (int y = 0; y < size; ++y) {
      for (int x = 0; x < size; ++x) {
        const bool on = image.channels[0](x, y) > 0 ||
                        image.channels[1](x, y) > 0 ||
                        image.channels[2](x, y) > 0;
        mask(x, y) = on ? 1.0 : 0.0;
      }
    }
    mask = largest_component(mask);
    if (mask.sum() == 0.0) {
      throw ConfigError("nucleus mask is empty: " + file.filename().string());
    }
    library.masks_.push_back(std::move(mask));
  }
  return library;
}

NucleusTemplate NucleusLibrary::draw(Rng& rng, int size) const {
  if (masks_.empty()) return make_nucleus(rng, size);
  const auto pick = rng.uniform_int(0, static_cast<std::int64_t>(masks_.size()) - 1);
  NucleusTemplate nucleus;
  nucleus.mask = masks_[static_cast<std::size_t>(pick)];
  if (nucleus.mask.width() != size) {
    throw ConfigError("nucleus library size does not match patch size");
  }
  nucleus.intensity = nucleus_texture(nucleus.mask, rng);
  nucleus.source = NucleusSource::kFile;
  return nucleus;
}

namespace {

// Labels 4-connected components; returns the label image (0 = background)
// and the size of each label (index 0 unused).
std::pair<std::vector<int>, std::vector<int>> label_components(
    const Plane& mask) {
  const int w = mask.width();
  const int h = mask.height();
  std::vector<int> labels(static_cast<std::size_t>(w) * h, 0);
  std::vector<int> sizes{0};
  std::queue<std::pair<int, int>> frontier;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (mask(x, y) < 0.5 || labels[y * w + x] != 0) continue;
      const int label = static_cast<int>(sizes.size());
      sizes.push_back(0);
      labels[y * w + x] = label;
      frontier.emplace(x, y);
      while (!frontier.empty()) {
        const auto [cx, cy] = frontier.front();
        frontier.pop();
        ++sizes[label];
        constexpr int kDx[4] = {1, -1, 0, 0};
        constexpr int kDy[4] = {0, 0, 1, -1};
        for (int k = 0; k < 4; ++k) {
          const int nx = cx + kDx[k];
          const int ny = cy + kDy[k];
          if (!mask.contains(nx, ny) || mask(nx, ny) < 0.5) continue;
          if (labels[ny * w + nx] != 0) continue;
          labels[ny * w + nx] = label;
          frontier.emplace(nx, ny);
        }
      }
    }
  }
  return {std::move(labels), std::move(sizes)};
}

}  // namespace

Plane largest_component(const Plane& mask) {
  const auto [labels, sizes] = label_components(mask);
  Plane out(mask.width(), mask.height());
  if (sizes.size() <= 1) return out;
  const int best = static_cast<int>(
      std::max_element(sizes.begin() + 1, sizes.end()) - sizes.begin());
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (labels[y * mask.width() + x] == best) out(x, y) = 1.0;
    }
  }
  return out;
}

int count_components(const Plane& mask) {
  return static_cast<int>(label_components(mask).second.size()) - 1;
}

Plane erode_disk(const Plane& mask, int radius) {
  Plane out(mask.width(), mask.height());
  const int r2 = radius * radius;
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (mask(x, y) < 0.5) continue;
      bool keep = true;
      for (int dy = -radius; dy <= radius && keep; ++dy) {
        for (int dx = -radius; dx <= radius; ++dx) {
          if (dx * dx + dy * dy > r2) continue;
          if (mask.at_or_zero(x + dx, y + dy) < 0.5) {
            keep = false;
            break;
          }
        }
      }
      if (keep) out(x, y) = 1.0;
    }
  }
  return out;
}

}  // namespace fishforge

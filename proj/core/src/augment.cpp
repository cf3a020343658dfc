#include "fishforge/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fishforge/error.hpp"
#include "json_util.hpp"

namespace fishforge {

AugmentPreset AugmentPreset::heavy() {
  AugmentPreset p;
  p.name = "heavy";
  p.rotation_deg = {0.0, 360.0};
  p.flip_probability = 0.5;
  p.scale = {0.8, 1.2};
  p.blur_sigma_px = {0.0, 1.5};
  p.intensity = {0.5, 1.5};
  p.noise_sigma = {0.0, 0.08};
  p.gradient_amplitude = {0.0, 0.3};
  p.enabled = kAllTransforms;
  return p;
}

AugmentPreset AugmentPreset::light() {
  AugmentPreset p;
  p.name = "light";
  p.rotation_deg = {0.0, 360.0};
  p.flip_probability = 0.5;
  p.scale = {0.9, 1.1};
  p.blur_sigma_px = {0.0, 0.8};
  p.intensity = {0.8, 1.2};
  p.noise_sigma = {0.0, 0.03};
  p.gradient_amplitude = {0.0, 0.15};
  p.enabled = kAllTransforms;
  return p;
}

AugmentPreset AugmentPreset::none() {
  AugmentPreset p;
  p.name = "none";
  p.enabled = 0;
  return p;
}

AugmentPreset AugmentPreset::named(std::string_view name) {
  if (name == "heavy") return heavy();
  if (name == "light") return light();
  if (name == "none") return none();
  throw ConfigError("unknown augmentation preset '" + std::string(name) +
                    "' (expected heavy, light or none)");
}

AugmentPreset AugmentPreset::without(unsigned transforms) const {
  AugmentPreset p = *this;
  p.enabled &= ~transforms;
  return p;
}

void AugmentPreset::validate() const {
  auto ordered = [](const Range& r) { return r.lo <= r.hi; };
  if (!ordered(rotation_deg) || !ordered(scale) || !ordered(blur_sigma_px) ||
      !ordered(intensity) || !ordered(noise_sigma) ||
      !ordered(gradient_amplitude)) {
    throw ConfigError("augmentation preset '" + name + "': range with lo > hi");
  }
  if (!(scale.lo > 0.0)) throw ConfigError("augmentation scale must be > 0");
  if (!(intensity.lo > 0.0)) {
    throw ConfigError("augmentation intensity factors must be > 0");
  }
  if (blur_sigma_px.lo < 0.0 || noise_sigma.lo < 0.0 ||
      gradient_amplitude.lo < 0.0) {
    throw ConfigError("blur, noise and gradient ranges must be nonnegative");
  }
  if (!(flip_probability >= 0.0 && flip_probability <= 1.0)) {
    throw ConfigError("flip_probability must lie in [0, 1]");
  }
}

namespace {

struct NamedTransform {
  std::string_view name;
  unsigned bit;
};
constexpr NamedTransform kTransformNames[] = {
    {"affine", kAffine}, {"blur", kBlur},   {"flip", kFlip},
    {"gradient", kGradient}, {"noise", kNoise}, {"intensity", kIntensity},
};

Range parse_range(const detail::json& j, const char* key, Range fallback) {
  if (!j.contains(key)) return fallback;
  const auto& a = j.at(key);
  if (!a.is_array() || a.size() != 2 || !a[0].is_number() || !a[1].is_number()) {
    throw ConfigError(std::string("preset.") + key + ": expected [lo, hi]");
  }
  return {a[0].get<double>(), a[1].get<double>()};
}

}  // namespace

AugmentPreset preset_from_json(std::string_view json_text,
                               const AugmentPreset& base) {
  const detail::json j = detail::parse_json(json_text, "preset");
  detail::require_object(j, "preset");
  detail::check_keys(j,
                     {"name", "rotation_deg", "flip_probability", "scale",
                      "blur_sigma_px", "intensity", "noise_sigma",
                      "gradient_amplitude", "enabled"},
                     "preset");
  AugmentPreset p = base;
  try {
    p.name = detail::get_or<std::string>(j, "name", p.name, "preset");
    p.rotation_deg = parse_range(j, "rotation_deg", p.rotation_deg);
    p.flip_probability = detail::get_or<double>(j, "flip_probability",
                                                p.flip_probability, "preset");
    p.scale = parse_range(j, "scale", p.scale);
    p.blur_sigma_px = parse_range(j, "blur_sigma_px", p.blur_sigma_px);
    p.intensity = parse_range(j, "intensity", p.intensity);
    p.noise_sigma = parse_range(j, "noise_sigma", p.noise_sigma);
    p.gradient_amplitude =
        parse_range(j, "gradient_amplitude", p.gradient_amplitude);
    if (j.contains("enabled")) {
      p.enabled = 0;
      for (const auto& item : j.at("enabled")) {
        const auto name = item.get<std::string>();
        auto it = std::find_if(std::begin(kTransformNames),
                               std::end(kTransformNames),
                               [&](const NamedTransform& t) { return t.name == name; });
        if (it == std::end(kTransformNames)) {
          throw ConfigError("preset.enabled: unknown transform '" + name + "'");
        }
        p.enabled |= it->bit;
      }
    }
  } catch (const detail::json::exception& e) {
    throw ConfigError(std::string("preset: ") + e.what());
  }
  p.validate();
  return p;
}

std::string preset_to_json(const AugmentPreset& p) {
  detail::ordered_json j;
  j["name"] = p.name;
  j["rotation_deg"] = {p.rotation_deg.lo, p.rotation_deg.hi};
  j["flip_probability"] = p.flip_probability;
  j["scale"] = {p.scale.lo, p.scale.hi};
  j["blur_sigma_px"] = {p.blur_sigma_px.lo, p.blur_sigma_px.hi};
  j["intensity"] = {p.intensity.lo, p.intensity.hi};
  j["noise_sigma"] = {p.noise_sigma.lo, p.noise_sigma.hi};
  j["gradient_amplitude"] = {p.gradient_amplitude.lo, p.gradient_amplitude.hi};
  j["enabled"] = detail::ordered_json::array();
  for (const NamedTransform& t : kTransformNames) {
    if (p.enabled & t.bit) j["enabled"].push_back(t.name);
  }
  return j.dump(2);
}

std::vector<std::pair<std::string, AugmentPreset>> ablation_presets(
    const AugmentPreset& all) {
  AugmentPreset none = all.without(kAllTransforms);
  none.name = "none";
  return {
      {"None", none},
      {"All", all},
      {"-Affine", all.without(kAffine)},
      {"-Blur", all.without(kBlur)},
      {"-Flip", all.without(kFlip)},
      {"-Grad", all.without(kGradient)},
      {"-Noise", all.without(kNoise)},
      {"-Int", all.without(kIntensity)},
      {"-Grad&Noise", all.without(kGradient | kNoise)},
  };
}

bool TransformSpec::is_identity() const { return *this == TransformSpec{}; }

TransformSpec sample_transform(const AugmentPreset& preset, Rng& rng) {
  // Every field is drawn regardless of the enabled set so that ablations
  // consume the same random stream.
  TransformSpec t;
  t.rotation_deg = rng.uniform(preset.rotation_deg.lo, preset.rotation_deg.hi);
  t.flip_h = rng.bernoulli(preset.flip_probability);
  t.flip_v = rng.bernoulli(preset.flip_probability);
  t.scale = rng.uniform(preset.scale.lo, preset.scale.hi);
  t.blur_sigma_px = rng.uniform(preset.blur_sigma_px.lo, preset.blur_sigma_px.hi);
  for (double& s : t.intensity_scale) {
    s = rng.uniform(preset.intensity.lo, preset.intensity.hi);
  }
  t.noise_sigma = rng.uniform(preset.noise_sigma.lo, preset.noise_sigma.hi);
  t.gradient_direction_deg = rng.uniform(0.0, 360.0);
  t.gradient_amplitude =
      rng.uniform(preset.gradient_amplitude.lo, preset.gradient_amplitude.hi);

  const TransformSpec identity;
  if (!preset.is_enabled(kAffine)) {
    t.rotation_deg = identity.rotation_deg;
    t.scale = identity.scale;
  }
  if (!preset.is_enabled(kAffine | kFlip)) {
    t.flip_h = t.flip_v = false;
  }
  if (!preset.is_enabled(kBlur)) t.blur_sigma_px = identity.blur_sigma_px;
  if (!preset.is_enabled(kIntensity)) t.intensity_scale = identity.intensity_scale;
  if (!preset.is_enabled(kNoise)) t.noise_sigma = identity.noise_sigma;
  if (!preset.is_enabled(kGradient)) {
    t.gradient_direction_deg = identity.gradient_direction_deg;
    t.gradient_amplitude = identity.gradient_amplitude;
  }
  return t;
}

namespace {

template <typename Map>
Patch resample(const Patch& patch, Map source_of) {
  Patch out(patch.width(), patch.height());
  for (int y = 0; y < patch.height(); ++y) {
    for (int x = 0; x < patch.width(); ++x) {
      const auto [sx, sy] = source_of(x, y);
      for (int c = 0; c < 3; ++c) {
        out.channels[c](x, y) = patch.channels[c].sample_bilinear(sx, sy);
      }
    }
  }
  return out;
}

}  // namespace

Patch rotate(const Patch& patch, double degrees) {
  if (std::fmod(degrees, 360.0) == 0.0) return patch;
  const double cx = (patch.width() - 1) / 2.0;
  const double cy = (patch.height() - 1) / 2.0;
  const double rad = degrees * std::numbers::pi / 180.0;
  const double c = std::cos(rad);
  const double s = std::sin(rad);
  return resample(patch, [&](int x, int y) {
    const double dx = x - cx;
    const double dy = y - cy;
    return std::pair{cx + c * dx + s * dy, cy - s * dx + c * dy};
  });
}

Patch flip(const Patch& patch, bool horizontal, bool vertical) {
  if (!horizontal && !vertical) return patch;
  const int w = patch.width();
  const int h = patch.height();
  Patch out(w, h);
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const int sx = horizontal ? w - 1 - x : x;
        const int sy = vertical ? h - 1 - y : y;
        out.channels[c](x, y) = patch.channels[c](sx, sy);
      }
    }
  }
  return out;
}

Patch rescale(const Patch& patch, double factor) {
  if (!(factor > 0.0)) throw ConfigError("scale factor must be > 0");
  if (factor == 1.0) return patch;
  const double cx = (patch.width() - 1) / 2.0;
  const double cy = (patch.height() - 1) / 2.0;
  const double inv = 1.0 / factor;
  return resample(patch, [&](int x, int y) {
    return std::pair{cx + (x - cx) * inv, cy + (y - cy) * inv};
  });
}

Plane gaussian_blur(const Plane& plane, double sigma_px) {
  if (!(sigma_px > 0.0)) return plane;
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma_px)));
  std::vector<double> kernel(2 * radius + 1);
  double total = 0.0;
  for (int k = -radius; k <= radius; ++k) {
    kernel[k + radius] = std::exp(-(k * k) / (2.0 * sigma_px * sigma_px));
    total += kernel[k + radius];
  }
  for (double& v : kernel) v /= total;

  const int w = plane.width();
  const int h = plane.height();
  Plane tmp(w, h);
  Plane out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k) {
        acc += kernel[k + radius] * plane(std::clamp(x + k, 0, w - 1), y);
      }
      tmp(x, y) = acc;
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k) {
        acc += kernel[k + radius] * tmp(x, std::clamp(y + k, 0, h - 1));
      }
      out(x, y) = acc;
    }
  }
  return out;
}

Patch apply_transform(const TransformSpec& t, const Patch& patch, Rng& rng) {
  Patch out = rotate(patch, t.rotation_deg);
  out = flip(out, t.flip_h, t.flip_v);
  out = rescale(out, t.scale);

  const int w = out.width();
  const int h = out.height();
  for (int c = 0; c < 3; ++c) {
    Plane& p = out.channels[c];
    if (t.blur_sigma_px > 0.0) p = gaussian_blur(p, t.blur_sigma_px);
    if (t.intensity_scale[c] != 1.0) {
      for (double& v : p.values()) v *= t.intensity_scale[c];
    }
  }
  if (t.noise_sigma > 0.0) {
    for (Plane& p : out.channels) {
      for (double& v : p.values()) v += t.noise_sigma * rng.normal();
    }
  }
  if (t.gradient_amplitude > 0.0) {
    const double rad = t.gradient_direction_deg * std::numbers::pi / 180.0;
    const double dx = std::cos(rad);
    const double dy = std::sin(rad);
    const double cx = (w - 1) / 2.0;
    const double cy = (h - 1) / 2.0;
    const double half = 0.5 * (std::abs(dx) * (w - 1) + std::abs(dy) * (h - 1));
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const double proj = (x - cx) * dx + (y - cy) * dy;
        const double g =
            half > 0.0 ? t.gradient_amplitude * (proj + half) / (2.0 * half) : 0.0;
        for (Plane& p : out.channels) p(x, y) += g;
      }
    }
  }
  for (Plane& p : out.channels) p.clamp(0.0, 1.0);
  return out;
}

std::pair<Patch, Patch> augment_pair(const Patch& patch,
                                     const AugmentPreset& preset, Rng& rng) {
  const TransformSpec first = sample_transform(preset, rng);
  Patch a = apply_transform(first, patch, rng);
  const TransformSpec second = sample_transform(preset, rng);
  Patch b = apply_transform(second, patch, rng);
  return {std::move(a), std::move(b)};
}

}  // namespace fishforge

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fishforge/image.hpp"
#include "fishforge/rng.hpp"

namespace fishforge {

/// Toggleable transform families. kAffine covers rotation, flips and scale;
/// kFlip covers flips only, so a flip happens only when both are enabled.
enum Transform : unsigned {
  kAffine = 1u << 0,
  kBlur = 1u << 1,
  kFlip = 1u << 2,
  kGradient = 1u << 3,
  kNoise = 1u << 4,
  kIntensity = 1u << 5,
};
inline constexpr unsigned kAllTransforms =
    kAffine | kBlur | kFlip | kGradient | kNoise | kIntensity;

struct Range {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double v) const { return v >= lo && v <= hi; }
};

struct AugmentPreset {
  std::string name = "none";
  Range rotation_deg{0.0, 360.0};
  double flip_probability = 0.5;
  Range scale{1.0, 1.0};
  Range blur_sigma_px{0.0, 0.0};
  Range intensity{1.0, 1.0};
  Range noise_sigma{0.0, 0.0};
  Range gradient_amplitude{0.0, 0.0};
  unsigned enabled = 0;

  static AugmentPreset heavy();
  static AugmentPreset light();
  static AugmentPreset none();
  /// Preset by name: "heavy", "light" or "none".
  static AugmentPreset named(std::string_view name);

  bool is_enabled(unsigned transforms) const {
    return (enabled & transforms) == transforms;
  }
  /// Copy with the given transform families disabled.
  AugmentPreset without(unsigned transforms) const;

  void validate() const;
};

/// Overrides fields of `base` from a JSON document; unspecified fields keep
/// their value. Keys: name, rotation_deg, flip_probability, scale,
/// blur_sigma_px, intensity, noise_sigma, gradient_amplitude ([lo, hi] pairs)
/// and enabled (list of affine/blur/flip/gradient/noise/intensity).
AugmentPreset preset_from_json(std::string_view json_text,
                               const AugmentPreset& base);
std::string preset_to_json(const AugmentPreset& preset);

/// Ablation columns in order: None, All, -Affine, -Blur, -Flip,
/// -Grad, -Noise, -Int, -Grad&Noise. `all` is the full preset.
std::vector<std::pair<std::string, AugmentPreset>> ablation_presets(
    const AugmentPreset& all);

struct TransformSpec {
  double rotation_deg = 0.0;
  bool flip_h = false;
  bool flip_v = false;
  double scale = 1.0;
  double blur_sigma_px = 0.0;
  std::array<double, 3> intensity_scale{1.0, 1.0, 1.0};
  double noise_sigma = 0.0;
  double gradient_direction_deg = 0.0;
  double gradient_amplitude = 0.0;

  bool is_identity() const;
  friend bool operator==(const TransformSpec&, const TransformSpec&) = default;
};

/// Draws every field independently from the preset's ranges; disabled
/// families get their identity value.
TransformSpec sample_transform(const AugmentPreset& preset, Rng& rng);

/// Applies rotation, flips, scale, blur, per-channel intensity, Gaussian
/// noise and a linear gradient, in that order, then clamps to [0, 1].
/// `rng` supplies the noise realization.
Patch apply_transform(const TransformSpec& t, const Patch& patch, Rng& rng);

/// Two independent draws of the preset applied to the same patch.
std::pair<Patch, Patch> augment_pair(const Patch& patch,
                                     const AugmentPreset& preset, Rng& rng);

// Individual stages, exposed for tests and previews.
Patch rotate(const Patch& patch, double degrees);
Patch flip(const Patch& patch, bool horizontal, bool vertical);
Patch rescale(const Patch& patch, double factor);
Plane gaussian_blur(const Plane& plane, double sigma_px);

}  // namespace fishforge

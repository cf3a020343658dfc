#pragma once

// Synthetic FISH patch generation: nucleus background, signal placement,
// Gaussian rendering and elastic warping of the signal channels.

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fishforge/image.hpp"
#include "fishforge/rng.hpp"

namespace fishforge {

inline constexpr int kNumClasses = 3;
inline constexpr int kMinNucleusSize = 32;

enum class ClassId : int { kNormal = 0, kGain = 1, kAmplified = 2 };

std::string_view class_name(ClassId id);
/// Accepts "Normal"/"Gain"/"Amplified" (case-insensitive) or "0".."2".
ClassId parse_class(std::string_view text);
ClassId class_from_index(int index);
inline int class_index(ClassId id) { return static_cast<int>(id); }

/// Diagnostic class implied by a target (green) signal count:
/// 2 -> Normal, 3..7 -> Gain, >= 8 -> Amplified. Counts below 2 have no class.
std::optional<ClassId> class_for_green_count(int n_green);

enum class SignalKind { kDiscrete, kCluster };
enum class AmplifiedVariant { kSignals, kCluster };

struct SignalSpec {
  SignalKind kind = SignalKind::kDiscrete;
  int count = 1;
  double sigma_px = 1.5;
  double cluster_spread_px = 0.0;
  double amplitude_lo = 0.7;
  double amplitude_hi = 1.0;

  /// Throws ConfigError when an invariant is violated.
  void validate() const;
  /// Pixels kept clear between a discrete center and the mask border.
  int erosion_margin() const;
};

/// A SignalSpec whose count is drawn per patch from [count_min, count_max].
/// A drawn count of zero contributes no signals.
struct SignalRange {
  SignalSpec spec;
  int count_min = 1;
  int count_max = 1;
};

struct ClassConfig {
  ClassId class_id = ClassId::kNormal;
  std::vector<SignalRange> green;
  SignalRange red;
  std::optional<AmplifiedVariant> variant;
  /// Relative frequency among the configs sharing a class.
  double weight = 1.0;

  /// Validates every SignalSpec and that all reachable green totals fall
  /// inside this class's count boundaries.
  void validate() const;
  int min_green() const;
  int max_green() const;
};

/// Default configurations for the three diagnostic classes: Normal,
/// Gain, Amplified/Signals and Amplified/Cluster.
std::vector<ClassConfig> default_class_configs();

enum class NucleusSource { kProcedural, kFile };

struct NucleusTemplate {
  Plane mask;       // 1 inside the nucleus, 0 outside
  Plane intensity;  // blue-channel texture, zero outside the mask
  NucleusSource source = NucleusSource::kProcedural;

  double mask_area() const { return mask.sum(); }
  bool inside(double x, double y) const;
};

/// Procedural nucleus: perturbed ellipse with a soft-edged value-noise
/// texture, centered in a size x size patch. Throws ConfigError when
/// size < kMinNucleusSize.
NucleusTemplate make_nucleus(Rng& rng, int size);

/// Source of nucleus backgrounds: procedural, or a directory of PNG masks
/// (nonzero pixels = nucleus; largest connected component is kept).
class NucleusLibrary {
 public:
  NucleusLibrary() = default;
  static NucleusLibrary from_directory(const std::filesystem::path& dir,
                                       int size);

  NucleusTemplate draw(Rng& rng, int size) const;
  bool procedural() const { return masks_.empty(); }
  std::size_t file_count() const { return masks_.size(); }

 private:
  std::vector<Plane> masks_;
};

/// Keeps the largest 4-connected component of a binary mask.
Plane largest_component(const Plane& mask);
/// Number of 4-connected components with value > 0.5.
int count_components(const Plane& mask);
/// Mask pixels whose whole Euclidean disk of `radius` lies inside the mask.
Plane erode_disk(const Plane& mask, int radius);

struct Point {
  double x = 0.0;
  double y = 0.0;
};

/// Signal centers inside the nucleus. Discrete: uniform over the eroded
/// mask with sub-pixel jitter. Cluster: one eroded-mask anchor plus
/// Gaussian offsets, each member rejection-resampled into the mask.
/// Throws GenerationError when the eroded mask is empty.
std::vector<Point> place_signals(const NucleusTemplate& nucleus,
                                 const SignalSpec& spec, Rng& rng);

/// Gaussian support radius in pixels (3 sigma).
double gaussian_support(double sigma_px);

/// Adds one isotropic Gaussian per center (amplitude drawn uniformly from
/// the SignalSpec amplitude range) to `canvas` and clamps to [0, 1].
Plane render_gaussians(std::span<const Point> centers, const SignalSpec& spec,
                       Plane canvas, Rng& rng);

/// Elastic warp: displacement components uniform in [-max_disp, max_disp]
/// on a coarse grid of `grid_step_px`, smoothly interpolated, applied by
/// inverse mapping with bilinear sampling. max_disp == 0 is the identity.
Plane warp_signals(const Plane& channel, Rng& rng, double max_disp_px,
                   int grid_step_px);

struct WarpSpec {
  double max_disp_px = 1.5;
  int grid_step_px = 16;
};

struct SignalCenter {
  double x = 0.0;
  double y = 0.0;
  Channel channel = Channel::kGreen;
};

struct PatchLabel {
  ClassId class_id = ClassId::kNormal;
  int n_green = 0;
  int n_red = 0;
  std::vector<SignalCenter> centers;
  std::uint64_t seed = 0;
};

struct GeneratedPatch {
  Patch patch;
  PatchLabel label;
  NucleusTemplate nucleus;
};

struct PatchOptions {
  int size = 64;
  WarpSpec warp;
  int max_retries = 10;
};

/// Synthesizes one labeled patch. Placement failures are retried with a
/// fresh nucleus up to `max_retries` times before GenerationError.
GeneratedPatch generate_patch(const ClassConfig& config,
                              const NucleusLibrary& nuclei,
                              const PatchOptions& options, Rng& rng);

struct GenerationSpec {
  std::vector<ClassConfig> classes = default_class_configs();
  int patch_size = 64;
  std::array<int, kNumClasses> counts{10, 10, 10};
  std::uint64_t master_seed = 0;
  WarpSpec warp;
  std::optional<std::filesystem::path> nucleus_dir;
  int max_retries = 10;

  void validate() const;
  int total() const { return counts[0] + counts[1] + counts[2]; }
};

GenerationSpec generation_spec_from_json(std::string_view json_text);
std::string generation_spec_to_json(const GenerationSpec& spec);

struct IndexedPatch {
  std::int64_t index = 0;
  GeneratedPatch generated;
};

/// Class of the patch at `index`: classes occupy contiguous index blocks
/// in Normal, Gain, Amplified order.
ClassId class_at(const GenerationSpec& spec, std::int64_t index);

/// Regenerates the patch at `index` from (spec, index) alone.
GeneratedPatch generate_indexed(const GenerationSpec& spec,
                                const NucleusLibrary& nuclei,
                                std::int64_t index);

}  // namespace fishforge

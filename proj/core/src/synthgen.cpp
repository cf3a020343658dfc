#include "fishforge/synthgen.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "fishforge/error.hpp"

namespace fishforge {

std::string_view class_name(ClassId id) {
  switch (id) {
    case ClassId::kNormal:
      return "Normal";
    case ClassId::kGain:
      return "Gain";
    case ClassId::kAmplified:
      return "Amplified";
  }
  return "?";
}

ClassId class_from_index(int index) {
  if (index < 0 || index >= kNumClasses) {
    throw ConfigError("class index out of range: " + std::to_string(index));
  }
  return static_cast<ClassId>(index);
}

ClassId parse_class(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (lower == "normal" || lower == "0") return ClassId::kNormal;
  if (lower == "gain" || lower == "1") return ClassId::kGain;
  if (lower == "amplified" || lower == "2") return ClassId::kAmplified;
  throw ConfigError("unknown class: '" + std::string(text) + "'");
}

std::optional<ClassId> class_for_green_count(int n_green) {
  if (n_green == 2) return ClassId::kNormal;
  if (n_green >= 3 && n_green <= 7) return ClassId::kGain;
  if (n_green >= 8) return ClassId::kAmplified;
  return std::nullopt;
}

void SignalSpec::validate() const {
  if (count < 1) throw ConfigError("signal count must be positive");
  if (!(sigma_px > 0.0)) throw ConfigError("sigma_px must be positive");
  if (!(cluster_spread_px >= 0.0)) {
    throw ConfigError("cluster_spread_px must be nonnegative");
  }
  if (!(amplitude_lo > 0.0 && amplitude_lo <= amplitude_hi &&
        amplitude_hi <= 1.0)) {
    throw ConfigError("amplitude_range must satisfy 0 < lo <= hi <= 1");
  }
  if (kind == SignalKind::kCluster && count < 2) {
    throw ConfigError("a cluster needs at least 2 members");
  }
}

int SignalSpec::erosion_margin() const {
  return static_cast<int>(std::ceil(2.0 * sigma_px));
}

int ClassConfig::min_green() const {
  int total = 0;
  for (const SignalRange& r : green) total += r.count_min;
  return total;
}

int ClassConfig::max_green() const {
  int total = 0;
  for (const SignalRange& r : green) total += r.count_max;
  return total;
}

namespace {

void validate_range(const SignalRange& range, std::string_view what) {
  if (range.count_min < 0 || range.count_max < range.count_min) {
    throw ConfigError(std::string(what) +
                      ": count range must satisfy 0 <= min <= max");
  }
  if (range.count_max < 1) {
    throw ConfigError(std::string(what) + ": count range never yields a signal");
  }
  if (range.spec.kind == SignalKind::kCluster && range.count_min < 2) {
    throw ConfigError(std::string(what) +
                      ": cluster count range must start at 2 or more");
  }
  SignalSpec probe = range.spec;
  probe.count = std::max(range.count_max, 1);
  probe.validate();
}

}  // namespace

void ClassConfig::validate() const {
  const std::string name(class_name(class_id));
  if (green.empty()) throw ConfigError(name + ": no green signal groups");
  for (const SignalRange& r : green) validate_range(r, name + " green");
  validate_range(red, name + " red");
  if (red.count_min != red.count_max) {
    throw ConfigError(name + ": reference (red) count must be fixed");
  }
  if (variant && class_id != ClassId::kAmplified) {
    throw ConfigError(name + ": variant applies to Amplified only");
  }
  if (!(weight > 0.0)) throw ConfigError(name + ": weight must be positive");

  const int lo = min_green();
  const int hi = max_green();
  bool ok = false;
  switch (class_id) {
    case ClassId::kNormal:
      ok = lo == 2 && hi == 2;
      break;
    case ClassId::kGain:
      ok = lo >= 3 && hi <= 7;
      break;
    case ClassId::kAmplified:
      ok = lo >= 8;
      break;
  }
  if (!ok) {
    throw ConfigError(name + ": green count range [" + std::to_string(lo) +
                      ", " + std::to_string(hi) +
                      "] crosses the class boundaries (Normal 2, Gain 3-7, "
                      "Amplified >= 8)");
  }
}

std::vector<ClassConfig> default_class_configs() {
  SignalSpec discrete;
  discrete.kind = SignalKind::kDiscrete;
  discrete.sigma_px = 1.5;
  discrete.amplitude_lo = 0.7;
  discrete.amplitude_hi = 1.0;

  SignalSpec cluster = discrete;
  cluster.kind = SignalKind::kCluster;
  cluster.count = 2;
  cluster.cluster_spread_px = 3.0;

  const SignalRange red{discrete, 2, 2};

  ClassConfig normal;
  normal.class_id = ClassId::kNormal;
  normal.green = {SignalRange{discrete, 2, 2}};
  normal.red = red;

  ClassConfig gain;
  gain.class_id = ClassId::kGain;
  gain.green = {SignalRange{discrete, 3, 7}};
  gain.red = red;

  ClassConfig amp_signals;
  amp_signals.class_id = ClassId::kAmplified;
  amp_signals.variant = AmplifiedVariant::kSignals;
  amp_signals.green = {SignalRange{discrete, 8, 20}};
  amp_signals.red = red;

  ClassConfig amp_cluster;
  amp_cluster.class_id = ClassId::kAmplified;
  amp_cluster.variant = AmplifiedVariant::kCluster;
  amp_cluster.green = {SignalRange{cluster, 8, 30},
                       SignalRange{discrete, 0, 2}};
  amp_cluster.red = red;

  return {normal, gain, amp_signals, amp_cluster};
}

std::vector<Point> place_signals(const NucleusTemplate& nucleus,
                                 const SignalSpec& spec, Rng& rng) {
  spec.validate();
  if (nucleus.mask.empty() || nucleus.mask_area() <= 0.0) {
    throw GenerationError("nucleus mask is empty");
  }
  const Plane eroded = erode_disk(nucleus.mask, spec.erosion_margin());
  std::vector<std::pair<int, int>> interior;
  for (int y = 0; y < eroded.height(); ++y) {
    for (int x = 0; x < eroded.width(); ++x) {
      if (eroded(x, y) > 0.5) interior.emplace_back(x, y);
    }
  }
  if (interior.empty()) {
    throw GenerationError(
        "no room for signals: nucleus mask eroded by " +
        std::to_string(spec.erosion_margin()) +
        " px is empty; retry with another nucleus or lower sigma_px");
  }

  auto draw_interior = [&]() {
    const auto k =
        rng.uniform_int(0, static_cast<std::int64_t>(interior.size()) - 1);
    const auto [px, py] = interior[static_cast<std::size_t>(k)];
    return Point{px + rng.uniform(-0.5, 0.5), py + rng.uniform(-0.5, 0.5)};
  };

  std::vector<Point> centers;
  centers.reserve(static_cast<std::size_t>(spec.count));
  if (spec.kind == SignalKind::kDiscrete) {
    for (int i = 0; i < spec.count; ++i) centers.push_back(draw_interior());
    return centers;
  }

  constexpr int kMaxRejections = 1000;
  const Point anchor = draw_interior();
  for (int i = 0; i < spec.count; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < kMaxRejections; ++attempt) {
      const Point p{anchor.x + spec.cluster_spread_px * rng.normal(),
                    anchor.y + spec.cluster_spread_px * rng.normal()};
      if (nucleus.inside(p.x, p.y)) {
        centers.push_back(p);
        placed = true;
        break;
      }
    }
    if (!placed) {
      throw GenerationError("cluster member could not be placed inside the "
                            "nucleus; lower cluster_spread_px");
    }
  }
  return centers;
}

double gaussian_support(double sigma_px) { return 3.0 * sigma_px; }

Plane render_gaussians(std::span<const Point> centers, const SignalSpec& spec,
                       Plane canvas, Rng& rng) {
  const double sigma = spec.sigma_px;
  const double inv_two_var = 1.0 / (2.0 * sigma * sigma);
  const double support = gaussian_support(sigma);
  const double support2 = support * support;
  for (const Point& c : centers) {
    const double amplitude = rng.uniform(spec.amplitude_lo, spec.amplitude_hi);
    const int x0 = std::max(0, static_cast<int>(std::floor(c.x - support)));
    const int x1 = std::min(canvas.width() - 1,
                            static_cast<int>(std::ceil(c.x + support)));
    const int y0 = std::max(0, static_cast<int>(std::floor(c.y - support)));
    const int y1 = std::min(canvas.height() - 1,
                            static_cast<int>(std::ceil(c.y + support)));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const double d2 = (x - c.x) * (x - c.x) + (y - c.y) * (y - c.y);
        if (d2 > support2) continue;
        canvas(x, y) += amplitude * std::exp(-d2 * inv_two_var);
      }
    }
  }
  canvas.clamp(0.0, 1.0);
  return canvas;
}

Plane warp_signals(const Plane& channel, Rng& rng, double max_disp_px,
                   int grid_step_px) {
  if (!(max_disp_px >= 0.0)) throw ConfigError("max_disp_px must be >= 0");
  if (grid_step_px < 1) throw ConfigError("grid_step_px must be >= 1");
  if (max_disp_px == 0.0) return channel;

  const int w = channel.width();
  const int h = channel.height();
  const int nx = (w - 1 + grid_step_px - 1) / grid_step_px + 1;
  const int ny = (h - 1 + grid_step_px - 1) / grid_step_px + 1;
  const auto nodes = static_cast<std::size_t>(nx) * ny;
  std::vector<double> gdx(nodes);
  std::vector<double> gdy(nodes);
  for (std::size_t k = 0; k < nodes; ++k) {
    gdx[k] = rng.uniform(-max_disp_px, max_disp_px);
    gdy[k] = rng.uniform(-max_disp_px, max_disp_px);
  }

  // Smoothstep weights keep the field C1 and within the node bounds.
  auto interpolate = [&](const std::vector<double>& grid, int x, int y) {
    const double gx = static_cast<double>(x) / grid_step_px;
    const double gy = static_cast<double>(y) / grid_step_px;
    const int i = std::min(static_cast<int>(gx), nx - 2 < 0 ? 0 : nx - 2);
    const int j = std::min(static_cast<int>(gy), ny - 2 < 0 ? 0 : ny - 2);
    auto s = [](double t) {
      t = std::clamp(t, 0.0, 1.0);
      return t * t * (3.0 - 2.0 * t);
    };
    const double tx = nx > 1 ? s(gx - i) : 0.0;
    const double ty = ny > 1 ? s(gy - j) : 0.0;
    const int i1 = std::min(i + 1, nx - 1);
    const int j1 = std::min(j + 1, ny - 1);
    auto at = [&](int a, int b) {
      return grid[static_cast<std::size_t>(b) * nx + a];
    };
    const double top = (1 - tx) * at(i, j) + tx * at(i1, j);
    const double bottom = (1 - tx) * at(i, j1) + tx * at(i1, j1);
    return (1 - ty) * top + ty * bottom;
  };

  Plane out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double dx = interpolate(gdx, x, y);
      const double dy = interpolate(gdy, x, y);
      out(x, y) = channel.sample_bilinear(x + dx, y + dy);
    }
  }
  return out;
}

namespace {

struct DrawnGroup {
  SignalSpec spec;
  std::vector<Point> centers;
};

std::vector<SignalSpec> draw_counts(const std::vector<SignalRange>& ranges,
                                    Rng& rng) {
  std::vector<SignalSpec> specs;
  for (const SignalRange& r : ranges) {
    const auto n = static_cast<int>(rng.uniform_int(r.count_min, r.count_max));
    if (n == 0) continue;
    SignalSpec s = r.spec;
    s.count = n;
    specs.push_back(s);
  }
  return specs;
}

}  // namespace

GeneratedPatch generate_patch(const ClassConfig& config,
                              const NucleusLibrary& nuclei,
                              const PatchOptions& options, Rng& rng) {
  config.validate();
  if (options.max_retries < 1) throw ConfigError("max_retries must be >= 1");

  // Counts are drawn once so that retries cannot bias the count distribution.
  const std::vector<SignalSpec> green_specs = draw_counts(config.green, rng);
  const std::vector<SignalSpec> red_specs = draw_counts({config.red}, rng);

  std::string last_error;
  for (int attempt = 0; attempt < options.max_retries; ++attempt) {
    NucleusTemplate nucleus = nuclei.draw(rng, options.size);
    std::vector<DrawnGroup> green;
    std::vector<DrawnGroup> red;
    try {
      for (const SignalSpec& s : green_specs) {
        green.push_back({s, place_signals(nucleus, s, rng)});
      }
      for (const SignalSpec& s : red_specs) {
        red.push_back({s, place_signals(nucleus, s, rng)});
      }
    } catch (const GenerationError& e) {
      last_error = e.what();
      continue;
    }

    GeneratedPatch out;
    out.patch = Patch(options.size, options.size);
    out.label.class_id = config.class_id;

    auto render_channel = [&](const std::vector<DrawnGroup>& groups,
                              Channel channel, int& count) {
      Plane canvas(options.size, options.size);
      for (const DrawnGroup& g : groups) {
        canvas = render_gaussians(g.centers, g.spec, std::move(canvas), rng);
        for (const Point& p : g.centers) {
          out.label.centers.push_back({p.x, p.y, channel});
        }
        count += static_cast<int>(g.centers.size());
      }
      return warp_signals(canvas, rng, options.warp.max_disp_px,
                          options.warp.grid_step_px);
    };

    out.patch[Channel::kRed] =
        render_channel(red, Channel::kRed, out.label.n_red);
    out.patch[Channel::kGreen] =
        render_channel(green, Channel::kGreen, out.label.n_green);
    out.patch[Channel::kBlue] = nucleus.intensity;
    out.nucleus = std::move(nucleus);
    return out;
  }
  throw GenerationError("patch generation failed after " +
                        std::to_string(options.max_retries) +
                        " attempts: " + last_error);
}

void GenerationSpec::validate() const {
  if (patch_size < kMinNucleusSize) {
    throw ConfigError("patch_size must be >= " +
                      std::to_string(kMinNucleusSize));
  }
  for (int c = 0; c < kNumClasses; ++c) {
    if (counts[c] < 1) {
      throw ConfigError("count for class " +
                        std::string(class_name(class_from_index(c))) +
                        " must be >= 1");
    }
    const bool present =
        std::any_of(classes.begin(), classes.end(), [c](const ClassConfig& k) {
          return class_index(k.class_id) == c;
        });
    if (!present) {
      throw ConfigError("no ClassConfig for class " +
                        std::string(class_name(class_from_index(c))));
    }
  }
  for (const ClassConfig& k : classes) k.validate();
  if (!(warp.max_disp_px >= 0.0)) throw ConfigError("warp.max_disp_px < 0");
  if (warp.grid_step_px < 1) throw ConfigError("warp.grid_step_px < 1");
  if (max_retries < 1) throw ConfigError("max_retries must be >= 1");
}

ClassId class_at(const GenerationSpec& spec, std::int64_t index) {
  std::int64_t offset = index;
  for (int c = 0; c < kNumClasses; ++c) {
    if (offset < spec.counts[c]) return class_from_index(c);
    offset -= spec.counts[c];
  }
  throw ConfigError("patch index " + std::to_string(index) +
                    " beyond the dataset size");
}

GeneratedPatch generate_indexed(const GenerationSpec& spec,
                                const NucleusLibrary& nuclei,
                                std::int64_t index) {
  const std::uint64_t seed =
      derive_seed(spec.master_seed, static_cast<std::uint64_t>(index));
  Rng rng(seed);
  const ClassId cls = class_at(spec, index);

  std::vector<const ClassConfig*> candidates;
  double total_weight = 0.0;
  for (const ClassConfig& k : spec.classes) {
    if (k.class_id == cls) {
      candidates.push_back(&k);
      total_weight += k.weight;
    }
  }
  double pick = rng.uniform() * total_weight;
  const ClassConfig* chosen = candidates.back();
  for (const ClassConfig* k : candidates) {
    if (pick < k->weight) {
      chosen = k;
      break;
    }
    pick -= k->weight;
  }

  PatchOptions options;
  options.size = spec.patch_size;
  options.warp = spec.warp;
  options.max_retries = spec.max_retries;
  GeneratedPatch out = generate_patch(*chosen, nuclei, options, rng);
  out.label.seed = seed;
  return out;
}

}  // namespace fishforge

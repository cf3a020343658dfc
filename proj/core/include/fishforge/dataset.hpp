#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "fishforge/image.hpp"
#include "fishforge/synthgen.hpp"

namespace fishforge {

inline constexpr std::string_view kManifestFileName = "manifest.jsonl";

struct ManifestEntry {
  std::int64_t id = 0;
  std::string file;
  PatchLabel label;
};

/// JSON Lines manifest, one object per patch with fields in the fixed order
/// id, file, class_id, n_green, n_red, centers, seed.
struct DatasetManifest {
  std::vector<ManifestEntry> entries;

  std::string to_jsonl() const;
  static DatasetManifest from_jsonl(std::string_view text);

  void write(const std::filesystem::path& path) const;
  static DatasetManifest read(const std::filesystem::path& path);

  /// Entry with the given id; throws ConfigError when absent.
  const ManifestEntry& find(std::int64_t id) const;
};

/// `{class}_{index:06}.png`
std::string patch_file_name(ClassId cls, std::int64_t index);

struct GenerateOptions {
  bool force = false;
  /// Worker threads; 0 selects std::thread::hardware_concurrency().
  unsigned threads = 1;
};

/// Writes one PNG per patch plus manifest.jsonl into `out_dir`. Output is a
/// pure function of `spec`: patches are generated in parallel but written
/// and listed in index order.
DatasetManifest generate_dataset(const GenerationSpec& spec,
                                 const std::filesystem::path& out_dir,
                                 const GenerateOptions& options = {});

/// Runs `fn(index)` for index in [0, count) on `threads` workers, rethrowing
/// the first exception.
void parallel_for_index(std::int64_t count, unsigned threads,
                        const std::function<void(std::int64_t)>& fn);

struct Sample {
  std::int64_t id = 0;
  ClassId label = ClassId::kNormal;
  int n_green = 0;
  Patch patch;
};

struct Dataset {
  std::filesystem::path root;
  DatasetManifest manifest;
  std::vector<Sample> samples;

  std::size_t size() const { return samples.size(); }
};

/// Loads manifest.jsonl and every referenced PNG from `dir`.
Dataset load_dataset(const std::filesystem::path& dir);

/// Builds an in-memory dataset without touching the filesystem. Pixels are
/// quantized to 8 bits, exactly as a PNG round trip would.
Dataset generate_in_memory(const GenerationSpec& spec, unsigned threads = 1);

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};

enum class SplitPart { kTrain, kVal, kTest, kAll };
SplitPart parse_split_part(std::string_view text);

/// Stratified 60/20/20 split, seeded. Indices refer to Dataset::samples and
/// are sorted ascending within each part.
Split split_dataset(const Dataset& data, std::uint64_t seed,
                    double train_fraction = 0.6, double val_fraction = 0.2);

std::vector<std::size_t> split_indices(const Split& split, SplitPart part,
                                       std::size_t dataset_size);

}  // namespace fishforge

#include "fishforge/dataset.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <regex>
#include <sstream>
#include <thread>

#include "fishforge/error.hpp"
#include "fishforge/png_io.hpp"
#include "json_util.hpp"

namespace fishforge {
namespace fs = std::filesystem;

std::string patch_file_name(ClassId cls, std::int64_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "_%06lld.png", static_cast<long long>(index));
  return std::string(class_name(cls)) + buf;
}

std::string DatasetManifest::to_jsonl() const {
  std::string out;
  for (const ManifestEntry& e : entries) {
    detail::ordered_json j;
    j["id"] = e.id;
    j["file"] = e.file;
    j["class_id"] = class_index(e.label.class_id);
    j["n_green"] = e.label.n_green;
    j["n_red"] = e.label.n_red;
    j["centers"] = detail::ordered_json::array();
    for (const SignalCenter& c : e.label.centers) {
      j["centers"].push_back({c.x, c.y, static_cast<int>(c.channel)});
    }
    j["seed"] = e.label.seed;
    out += j.dump();
    out += '\n';
  }
  return out;
}

DatasetManifest DatasetManifest::from_jsonl(std::string_view text) {
  DatasetManifest manifest;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;

    const std::string where = "manifest line " + std::to_string(line_no);
    const detail::json j = detail::parse_json(line, where);
    try {
      ManifestEntry e;
      e.id = j.at("id").get<std::int64_t>();
      e.file = j.at("file").get<std::string>();
      e.label.class_id = class_from_index(j.at("class_id").get<int>());
      e.label.n_green = j.at("n_green").get<int>();
      e.label.n_red = j.at("n_red").get<int>();
      for (const auto& c : j.at("centers")) {
        const int ch = c.at(2).get<int>();
        if (ch < 0 || ch > 2) throw ConfigError(where + ": bad center channel");
        e.label.centers.push_back(
            {c.at(0).get<double>(), c.at(1).get<double>(), static_cast<Channel>(ch)});
      }
      e.label.seed = j.at("seed").get<std::uint64_t>();
      manifest.entries.push_back(std::move(e));
    } catch (const detail::json::exception& ex) {
      throw ConfigError(where + ": " + ex.what());
    }
  }
  return manifest;
}

void DatasetManifest::write(const fs::path& path) const {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot write manifest: " + path.string());
  const std::string text = to_jsonl();
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!os) throw IoError("manifest write failed: " + path.string());
}

DatasetManifest DatasetManifest::read(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot read manifest: " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return from_jsonl(ss.str());
}

const ManifestEntry& DatasetManifest::find(std::int64_t id) const {
  // Manifests written by generate_dataset are sorted by id.
  auto it = std::lower_bound(
      entries.begin(), entries.end(), id,
      [](const ManifestEntry& e, std::int64_t v) { return e.id < v; });
  if (it != entries.end() && it->id == id) return *it;
  for (const ManifestEntry& e : entries) {
    if (e.id == id) return e;
  }
  throw ConfigError("id " + std::to_string(id) + " not found in manifest");
}

void parallel_for_index(std::int64_t count, unsigned threads,
                        const std::function<void(std::int64_t)>& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(
      std::min<std::int64_t>(threads, std::max<std::int64_t>(count, 1)));
  if (threads <= 1) {
    for (std::int64_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::int64_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&]() {
    while (!failed.load()) {
      const std::int64_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        failed.store(true);
      }
    }
  };
  std::vector<std::jthread> pool;
  for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  pool.clear();
  if (error) std::rethrow_exception(error);
}

namespace {

NucleusLibrary library_for(const GenerationSpec& spec) {
  if (spec.nucleus_dir) {
    return NucleusLibrary::from_directory(*spec.nucleus_dir, spec.patch_size);
  }
  return {};
}

void prepare_output_dir(const fs::path& out_dir, bool force) {
  std::error_code ec;
  if (fs::exists(out_dir, ec)) {
    if (!fs::is_directory(out_dir, ec)) {
      throw IoError("output path exists and is not a directory: " +
                    out_dir.string());
    }
    if (!fs::is_empty(out_dir, ec)) {
      if (!force) {
        throw IoError("output directory is not empty: " + out_dir.string() +
                      " (use --force to overwrite)");
      }
      // Only remove files this generator writes.
      static const std::regex kPatchName(R"((Normal|Gain|Amplified)_\d{6}\.png)");
      for (const auto& entry : fs::directory_iterator(out_dir)) {
        const std::string name = entry.path().filename().string();
        if (entry.is_regular_file() &&
            (name == kManifestFileName || std::regex_match(name, kPatchName))) {
          fs::remove(entry.path());
        }
      }
    }
  }
  fs::create_directories(out_dir, ec);
  if (ec) {
    throw IoError("cannot create output directory " + out_dir.string() + ": " +
                  ec.message());
  }
}

}  // namespace

DatasetManifest generate_dataset(const GenerationSpec& spec,
                                 const fs::path& out_dir,
                                 const GenerateOptions& options) {
  spec.validate();
  const NucleusLibrary nuclei = library_for(spec);
  prepare_output_dir(out_dir, options.force);

  DatasetManifest manifest;
  manifest.entries.resize(static_cast<std::size_t>(spec.total()));
  parallel_for_index(spec.total(), options.threads, [&](std::int64_t i) {
    GeneratedPatch g = generate_indexed(spec, nuclei, i);
    ManifestEntry& e = manifest.entries[static_cast<std::size_t>(i)];
    e.id = i;
    e.file = patch_file_name(g.label.class_id, i);
    write_png(out_dir / e.file, g.patch);
    e.label = std::move(g.label);
  });
  manifest.write(out_dir / std::string(kManifestFileName));
  return manifest;
}

Dataset generate_in_memory(const GenerationSpec& spec, unsigned threads) {
  spec.validate();
  const NucleusLibrary nuclei = library_for(spec);
  Dataset data;
  data.manifest.entries.resize(static_cast<std::size_t>(spec.total()));
  data.samples.resize(static_cast<std::size_t>(spec.total()));
  parallel_for_index(spec.total(), threads, [&](std::int64_t i) {
    GeneratedPatch g = generate_indexed(spec, nuclei, i);
    const auto k = static_cast<std::size_t>(i);
    Sample& s = data.samples[k];
    s.id = i;
    s.label = g.label.class_id;
    s.n_green = g.label.n_green;
    s.patch = dequantize_rgb8(quantize_rgb8(g.patch), g.patch.width(),
                              g.patch.height());
    ManifestEntry& e = data.manifest.entries[k];
    e.id = i;
    e.file = patch_file_name(g.label.class_id, i);
    e.label = std::move(g.label);
  });
  return data;
}

Dataset load_dataset(const fs::path& dir) {
  Dataset data;
  data.root = dir;
  data.manifest = DatasetManifest::read(dir / std::string(kManifestFileName));
  if (data.manifest.entries.empty()) {
    throw ConfigError("dataset is empty: " + dir.string());
  }
  data.samples.reserve(data.manifest.entries.size());
  for (const ManifestEntry& e : data.manifest.entries) {
    Sample s;
    s.id = e.id;
    s.label = e.label.class_id;
    s.n_green = e.label.n_green;
    s.patch = read_png(dir / e.file);
    data.samples.push_back(std::move(s));
  }
  return data;
}

SplitPart parse_split_part(std::string_view text) {
  if (text == "train") return SplitPart::kTrain;
  if (text == "val") return SplitPart::kVal;
  if (text == "test") return SplitPart::kTest;
  if (text == "all") return SplitPart::kAll;
  throw ConfigError("unknown split '" + std::string(text) +
                    "' (expected train, val, test or all)");
}

Split split_dataset(const Dataset& data, std::uint64_t seed,
                    double train_fraction, double val_fraction) {
  if (!(train_fraction >= 0 && val_fraction >= 0 &&
        train_fraction + val_fraction <= 1.0)) {
    throw ConfigError("invalid split fractions");
  }
  Split split;
  for (int c = 0; c < kNumClasses; ++c) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < data.samples.size(); ++i) {
      if (class_index(data.samples[i].label) == c) members.push_back(i);
    }
    std::sort(members.begin(), members.end(), [&](std::size_t a, std::size_t b) {
      return data.samples[a].id < data.samples[b].id;
    });
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(c)));
    for (std::size_t i = members.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(
          rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
      std::swap(members[i - 1], members[j]);
    }
    const auto n = static_cast<double>(members.size());
    const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * n));
    const auto n_val = std::min(members.size() - n_train,
                                static_cast<std::size_t>(std::llround(val_fraction * n)));
    split.train.insert(split.train.end(), members.begin(),
                       members.begin() + static_cast<std::ptrdiff_t>(n_train));
    split.val.insert(split.val.end(),
                     members.begin() + static_cast<std::ptrdiff_t>(n_train),
                     members.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
    split.test.insert(split.test.end(),
                      members.begin() + static_cast<std::ptrdiff_t>(n_train + n_val),
                      members.end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.val.begin(), split.val.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

std::vector<std::size_t> split_indices(const Split& split, SplitPart part,
                                       std::size_t dataset_size) {
  switch (part) {
    case SplitPart::kTrain:
      return split.train;
    case SplitPart::kVal:
      return split.val;
    case SplitPart::kTest:
      return split.test;
    case SplitPart::kAll:
      break;
  }
  std::vector<std::size_t> all(dataset_size);
  for (std::size_t i = 0; i < dataset_size; ++i) all[i] = i;
  return all;
}

}  // namespace fishforge

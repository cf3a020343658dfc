#include "fishforge/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "fishforge/error.hpp"
#include "json_util.hpp"

namespace fishforge {
namespace {

using detail::json;
using detail::ordered_json;

constexpr char kMagic[4] = {'F', 'F', 'M', '1'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

ordered_json arch_to_json(const Architecture& a) {
  ordered_json j;
  j["input_side"] = a.input_side;
  j["encoder"] = a.encoder;
  j["projector"] = a.projector;
  j["classifier_width"] = a.classifier_width;
  j["classifier_layers"] = a.classifier_layers;
  j["classes"] = a.classes;
  j["dropout"] = a.dropout;
  return j;
}

Architecture arch_from_json(const json& j) {
  Architecture a;
  a.input_side = j.at("input_side").get<int>();
  a.encoder = j.at("encoder").get<std::vector<int>>();
  a.projector = j.at("projector").get<std::vector<int>>();
  a.classifier_width = j.at("classifier_width").get<int>();
  a.classifier_layers = j.at("classifier_layers").get<int>();
  a.classes = j.at("classes").get<int>();
  a.dropout = j.at("dropout").get<double>();
  return a;
}

}  // namespace

CheckpointMeta make_meta(const TrainConfig& config, int epochs_run,
                         int patch_size, std::uint64_t split_seed) {
  CheckpointMeta m;
  m.mode = std::string(mode_name(config.mode));
  m.seed = config.seed;
  m.epoch = epochs_run;
  m.preset = config.preset.name;
  m.optimizer = std::string(optimizer_name(config.optimizer));
  m.loss = config.loss;
  m.patch_size = patch_size;
  m.split_seed = split_seed;
  return m;
}

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt) {
  ordered_json meta;
  meta["format"] = "fishforge-model";
  meta["architecture"] = arch_to_json(ckpt.net.architecture());
  meta["mode"] = ckpt.meta.mode;
  meta["seed"] = ckpt.meta.seed;
  meta["epoch"] = ckpt.meta.epoch;
  meta["preset"] = ckpt.meta.preset;
  meta["optimizer"] = ckpt.meta.optimizer;
  meta["loss"] = {{"tau", ckpt.meta.loss.tau},
                  {"lambda", ckpt.meta.loss.lambda},
                  {"alpha", ckpt.meta.loss.alpha},
                  {"classes", ckpt.meta.loss.classes}};
  meta["patch_size"] = ckpt.meta.patch_size;
  meta["split_seed"] = ckpt.meta.split_seed;
  const InputStandardization& input = ckpt.net.input_standardization();
  meta["input_standardization"] = {{"mean", input.mean}, {"std", input.std}};
  meta["tensors"] = ordered_json::array();
  const auto tensors = ckpt.net.tensors();
  for (const auto& [name, m] : tensors) {
    meta["tensors"].push_back({{"name", name}, {"shape", {m->rows(), m->cols()}}});
  }
  const std::string text = meta.dump();

  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  put_u32(out, static_cast<std::uint32_t>(text.size()));
  out.insert(out.end(), text.begin(), text.end());
  for (const auto& [name, m] : tensors) {
    for (Eigen::Index i = 0; i < m->size(); ++i) {
      put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(m->data()[i])));
    }
  }
  return out;
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw IoError("checkpoint: bad magic (not a fishforge model file)");
  }
  const std::uint32_t len = get_u32(bytes.data() + 4);
  if (bytes.size() - 8 < len) throw IoError("checkpoint: truncated metadata");
  const std::string_view text(reinterpret_cast<const char*>(bytes.data() + 8), len);

  Checkpoint ckpt;
  json meta;
  try {
    meta = json::parse(text);
    const Architecture arch = arch_from_json(meta.at("architecture"));
    arch.validate();
    ckpt.meta.mode = meta.at("mode").get<std::string>();
    ckpt.meta.seed = meta.at("seed").get<std::uint64_t>();
    ckpt.meta.epoch = meta.at("epoch").get<int>();
    ckpt.meta.preset = meta.at("preset").get<std::string>();
    ckpt.meta.optimizer = meta.at("optimizer").get<std::string>();
    const json& loss = meta.at("loss");
    ckpt.meta.loss.tau = loss.at("tau").get<double>();
    ckpt.meta.loss.lambda = loss.at("lambda").get<double>();
    ckpt.meta.loss.alpha = loss.at("alpha").get<double>();
    ckpt.meta.loss.classes = loss.at("classes").get<int>();
    ckpt.meta.patch_size = meta.at("patch_size").get<int>();
    ckpt.meta.split_seed = meta.at("split_seed").get<std::uint64_t>();
    Rng unused(0);
    ckpt.net = Network(arch, unused);
    const json& input = meta.at("input_standardization");
    InputStandardization s;
    s.mean = input.at("mean").get<std::array<double, 3>>();
    s.std = input.at("std").get<std::array<double, 3>>();
    ckpt.net.set_input_standardization(s);
  } catch (const json::exception& e) {
    throw IoError(std::string("checkpoint: corrupt metadata: ") + e.what());
  } catch (const ConfigError& e) {
    throw IoError(std::string("checkpoint: ") + e.what());
  }

  const auto tensors = ckpt.net.tensors();
  const json& declared = meta.at("tensors");
  if (!declared.is_array() || declared.size() != tensors.size()) {
    throw IoError("checkpoint: tensor list does not match the architecture");
  }
  std::size_t pos = 8 + len;
  for (std::size_t t = 0; t < tensors.size(); ++t) {
    Matrix* m = tensors[t].second;
    try {
      const auto shape = declared[t].at("shape").get<std::vector<Eigen::Index>>();
      if (declared[t].at("name").get<std::string>() != tensors[t].first ||
          shape.size() != 2 || shape[0] != m->rows() || shape[1] != m->cols()) {
        throw IoError("checkpoint: tensor " + std::to_string(t) +
                      " does not match the architecture");
      }
    } catch (const json::exception& e) {
      throw IoError(std::string("checkpoint: corrupt tensor entry: ") + e.what());
    }
    const std::size_t need = 4 * static_cast<std::size_t>(m->size());
    if (bytes.size() - pos < need) {
      throw IoError("checkpoint: truncated tensor '" + tensors[t].first + "'");
    }
    for (Eigen::Index i = 0; i < m->size(); ++i) {
      m->data()[i] = std::bit_cast<float>(get_u32(bytes.data() + pos));
      pos += 4;
    }
  }
  if (pos != bytes.size()) throw IoError("checkpoint: trailing bytes");
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = encode_checkpoint(ckpt);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot write " + path.string());
  os.write(reinterpret_cast<const char*>(bytes.data()),
           static_cast<std::streamsize>(bytes.size()));
  if (!os) throw IoError("write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot read " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(is)),
                                        std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace fishforge

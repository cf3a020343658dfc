#include "cli.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <ostream>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "fishforge/augment.hpp"
#include "fishforge/checkpoint.hpp"
#include "fishforge/dataset.hpp"
#include "fishforge/error.hpp"
#include "fishforge/png_io.hpp"
#include "fishforge/reports.hpp"
#include "fishforge/train.hpp"
#include "fishforge/uncert.hpp"

namespace fishforge::cli {
namespace {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

constexpr const char* kVersion = "0.1.0";

// Options shared by several subcommands. Unused fields stay at their
// defaults.
struct Options {
  std::string command;
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string out;
  bool force = false;
  std::string preset = "heavy";
  std::string preset_file;
  std::string mode = "joint";
  std::string optimizer{optimizer_name(TrainConfig{}.optimizer)};
  int bins = 10;
  int epochs = -1;  // -1: subcommand default
  std::string retain;

  std::string spec;
  int count = -1;
  std::string data;
  std::string model;
  std::string predictions;
  std::vector<std::string> annotations;
  std::string split = "test";
  std::int64_t split_seed = -1;
  std::string image;
  int grid = 4;
  int batch = 128;
  int pretrain_epochs = -1;
  double tau = LossConfig{}.tau;
  double lambda = LossConfig{}.lambda;
  double alpha = LossConfig{}.alpha;
};

unsigned env_threads() {
  const char* v = std::getenv("FISHFORGE_THREADS");
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (v == nullptr || *v == '\0') return hw;
  unsigned n = 0;
  const std::string_view s(v);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), n);
  if (ec != std::errc{} || ptr != s.data() + s.size() || n == 0) {
    throw ConfigError("FISHFORGE_THREADS must be a positive integer, got '" +
                      std::string(s) + "'");
  }
  return n;
}

std::vector<double> parse_retain(const std::string& text) {
  if (text.empty()) return default_retain_grid();
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find(',', pos);
    if (end == std::string::npos) end = text.size();
    const std::string item = text.substr(pos, end - pos);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (item.empty() || ec != std::errc{} || ptr != item.data() + item.size()) {
      throw ConfigError("--retain: cannot parse '" + item + "'");
    }
    out.push_back(v);
    pos = end + 1;
  }
  return out;
}

void prepare_out_dir(const Options& o) {
  if (o.out.empty()) throw ConfigError("--out is required");
  std::error_code ec;
  fs::create_directories(o.out, ec);
  if (ec || !fs::is_directory(o.out)) {
    throw IoError("cannot create output directory " + o.out);
  }
}

// Existing outputs are replaced only with --force.
void emit(const Options& o, const std::string& name, std::string_view text) {
  const fs::path path = fs::path(o.out) / name;
  if (fs::exists(path) && !o.force) {
    throw IoError(path.string() + " already exists (use --force to overwrite)");
  }
  write_text_file(path, text);
}

ordered_json loss_json(const LossConfig& l) {
  return {{"tau", l.tau}, {"lambda", l.lambda}, {"alpha", l.alpha}, {"classes", l.classes}};
}

void write_run_config(const Options& o, ordered_json resolved,
                      bool overwrite = false) {
  ordered_json j;
  j["subcommand"] = o.command;
  j["version"] = kVersion;
  j["out"] = fs::absolute(o.out).lexically_normal().string();
  j["force"] = o.force;
  for (auto& [k, v] : resolved.items()) j[k] = v;
  Options target = o;
  target.force = o.force || overwrite;
  emit(target, "run_config_" + o.command + ".json", j.dump(2) + "\n");
}

AugmentPreset resolve_preset(const Options& o) {
  AugmentPreset p = AugmentPreset::named(o.preset);
  if (!o.preset_file.empty()) p = preset_from_json(read_text_file(o.preset_file), p);
  p.validate();
  return p;
}

TrainConfig resolve_train_config(const Options& o) {
  TrainConfig cfg;
  cfg.mode = parse_mode(o.mode);
  cfg.optimizer = parse_optimizer(o.optimizer);
  cfg.preset = resolve_preset(o);
  cfg.loss.tau = o.tau;
  cfg.loss.lambda = o.lambda;
  cfg.loss.alpha = o.alpha;
  cfg.batch_size = o.batch;
  cfg.epochs = o.epochs;
  cfg.pretrain_epochs = o.pretrain_epochs;
  cfg.seed = o.seed;
  cfg.validate();
  return cfg;
}

std::uint64_t split_seed_for(const Options& o, std::uint64_t fallback) {
  return o.split_seed >= 0 ? static_cast<std::uint64_t>(o.split_seed) : fallback;
}

std::vector<std::size_t> indices_for(const Dataset& data, const std::string& part,
                                     std::uint64_t split_seed) {
  const SplitPart p = parse_split_part(part);
  if (p == SplitPart::kAll) return split_indices({}, p, data.size());
  return split_indices(split_dataset(data, split_seed), p, data.size());
}

std::string log_to_csv(const std::vector<EpochLog>& log) {
  std::string out =
      "epoch,phase,lr,train_loss,train_contrastive,train_ce,train_accuracy,val_loss,"
      "val_accuracy\n";
  for (const EpochLog& e : log) {
    out += std::to_string(e.epoch) + "," + e.phase + "," + format_number(e.lr) + "," +
           format_number(e.train_loss) + "," + format_number(e.train_contrastive) +
           "," + format_number(e.train_ce) + "," + format_number(e.train_accuracy) +
           "," + format_number(e.val_loss) + "," + format_number(e.val_accuracy) + "\n";
  }
  return out;
}

void print_epoch(std::ostream& out, const EpochLog& e) {
  out << "epoch " << e.epoch << " [" << e.phase << "] lr=" << format_number(e.lr)
      << " loss=" << format_number(e.train_loss)
      << " val_loss=" << format_number(e.val_loss)
      << " val_acc=" << format_number(e.val_accuracy) << "\n";
}

// --- subcommands -----------------------------------------------------------

int cmd_generate(const Options& o, std::ostream& out) {
  GenerationSpec spec;
  if (!o.spec.empty()) spec = generation_spec_from_json(read_text_file(o.spec));
  if (o.seed_given) spec.master_seed = o.seed;
  if (o.count >= 0) spec.counts.fill(o.count);
  spec.validate();
  if (o.out.empty()) throw ConfigError("--out is required");

  GenerateOptions gen;
  gen.force = o.force;
  gen.threads = env_threads();
  const DatasetManifest manifest = generate_dataset(spec, o.out, gen);

  ordered_json resolved;
  resolved["spec_file"] = o.spec;
  resolved["threads"] = gen.threads;
  resolved["spec"] = ordered_json::parse(generation_spec_to_json(spec));
  // generate_dataset already vetted the directory.
  write_run_config(o, resolved, true);

  std::array<int, kNumClasses> counts{};
  for (const ManifestEntry& e : manifest.entries) counts[class_index(e.label.class_id)]++;
  for (int c = 0; c < kNumClasses; ++c) {
    out << class_name(class_from_index(c)) << ": " << counts[c] << "\n";
  }
  out << "manifest: " << (fs::path(o.out) / std::string(kManifestFileName)).string()
      << "\n";
  return kOk;
}

int cmd_train(const Options& o, std::ostream& out) {
  const TrainConfig cfg = resolve_train_config(o);
  prepare_out_dir(o);
  const Dataset data = load_dataset(o.data);
  if (data.size() == 0) throw ConfigError("dataset " + o.data + " is empty");
  const std::uint64_t split_seed = split_seed_for(o, o.seed);
  const Split split = split_dataset(data, split_seed);

  const TrainResult result = train(data, split.train, split.val, cfg,
                                   [&](const EpochLog& e) { print_epoch(out, e); });
  Checkpoint ckpt{make_meta(cfg, cfg.epochs, data.samples[0].patch.width(), split_seed),
                  result.net};
  const std::vector<std::uint8_t> bytes = encode_checkpoint(ckpt);
  emit(o, "model.ffm", std::string_view(reinterpret_cast<const char*>(bytes.data()),
                                        bytes.size()));
  emit(o, "train_log.csv", log_to_csv(result.log));

  ordered_json resolved;
  resolved["data"] = o.data;
  resolved["seed"] = o.seed;
  resolved["split_seed"] = split_seed;
  resolved["mode"] = std::string(mode_name(cfg.mode));
  resolved["preset"] = ordered_json::parse(preset_to_json(cfg.preset));
  resolved["epochs"] = cfg.epochs;
  resolved["pretrain_epochs"] = cfg.resolved_pretrain_epochs();
  resolved["batch_size"] = cfg.batch_size;
  resolved["optimizer"] = std::string(optimizer_name(cfg.optimizer));
  resolved["momentum"] = cfg.momentum;
  resolved["loss"] = loss_json(cfg.loss);
  resolved["schedule"] = {{"lr_min", cfg.schedule.lr_min},
                          {"lr_max", cfg.schedule.lr_max},
                          {"warmup_epochs", cfg.schedule.warmup},
                          {"cycle_epochs", cfg.schedule.cycle}};
  resolved["split_sizes"] = {{"train", split.train.size()},
                             {"val", split.val.size()},
                             {"test", split.test.size()}};
  write_run_config(o, resolved);
  out << "model: " << (fs::path(o.out) / "model.ffm").string() << "\n";
  return kOk;
}

int cmd_eval(const Options& o, std::ostream& out) {
  prepare_out_dir(o);
  const Checkpoint ckpt = load_checkpoint(o.model);
  const Dataset data = load_dataset(o.data);
  const std::uint64_t split_seed = split_seed_for(o, ckpt.meta.split_seed);
  const auto idx = indices_for(data, o.split, split_seed);
  const auto records = predict(ckpt.net, data, idx, ckpt.meta.loss.alpha);
  emit(o, "predictions.csv", predictions_to_csv(records));

  const double acc = accuracy(records);
  ordered_json summary;
  summary["split"] = o.split;
  summary["records"] = records.size();
  summary["accuracy"] = acc;
  emit(o, "eval_summary.json", summary.dump(2) + "\n");

  ordered_json resolved;
  resolved["model"] = o.model;
  resolved["data"] = o.data;
  resolved["split"] = o.split;
  resolved["split_seed"] = split_seed;
  resolved["alpha"] = ckpt.meta.loss.alpha;
  write_run_config(o, resolved);
  out << "records: " << records.size() << "\naccuracy: " << format_number(acc) << "\n";
  return kOk;
}

std::vector<PredictionRecord> load_predictions(const Options& o) {
  if (o.predictions.empty()) throw ConfigError("--predictions is required");
  return predictions_from_csv(read_text_file(o.predictions));
}

int cmd_calibrate(const Options& o, std::ostream& out) {
  const auto records = load_predictions(o);
  const CalibrationReport report = expected_calibration_error(records, o.bins);
  prepare_out_dir(o);
  emit(o, "calibration.json", calibration_to_json(report));
  emit(o, "calibration.csv", calibration_to_csv(report));
  write_run_config(o, {{"predictions", o.predictions}, {"bins", o.bins}});
  out << "ECE: " << format_number(report.ece)
      << "\nposECE: " << format_number(report.pos_ece)
      << "\nnegECE: " << format_number(report.neg_ece) << "\n";
  return kOk;
}

int cmd_condition(const Options& o, std::ostream& out) {
  const auto records = load_predictions(o);
  const std::vector<double> grid = parse_retain(o.retain);
  const auto rows = condition_on_certainty(records, grid);
  prepare_out_dir(o);
  emit(o, "conditioning.json", conditioning_to_json(rows));
  emit(o, "conditioning.csv", conditioning_to_csv(rows));
  write_run_config(o, {{"predictions", o.predictions}, {"retain_percent", grid}});
  for (const ConditioningRow& r : rows) {
    out << format_number(r.retain_percent) << "%: " << format_number(r.accuracy)
        << " (" << r.kept << ")\n";
  }
  return kOk;
}

DatasetManifest load_manifest(const Options& o) {
  if (o.data.empty()) throw ConfigError("--data is required");
  return DatasetManifest::read(fs::path(o.data) / std::string(kManifestFileName));
}

std::vector<AnnotationSet> load_annotations(const Options& o) {
  std::vector<AnnotationSet> sets;
  for (const std::string& path : o.annotations) {
    try {
      sets.push_back(parse_annotation_set(read_text_file(path)));
    } catch (const ConfigError& e) {
      throw ConfigError(path + ": " + e.what());
    }
  }
  return sets;
}

int cmd_agreement(const Options& o, std::ostream& out) {
  const DatasetManifest manifest = load_manifest(o);
  const auto sets = load_annotations(o);
  const AgreementReport report = agreement_entropy(sets, manifest);
  prepare_out_dir(o);
  emit(o, "agreement.csv", agreement_images_to_csv(report));
  emit(o, "annotators.csv", annotator_accuracy_to_csv(report));
  if (!o.predictions.empty()) {
    const auto records = load_predictions(o);
    emit(o, "certainty_by_count.csv",
         count_certainty_to_csv(certainty_by_signal_count(records, manifest, &report)));
  }
  write_run_config(o, {{"data", o.data},
                       {"annotations", o.annotations},
                       {"predictions", o.predictions}});
  out << "images: " << report.images.size() << "\nannotators: " << sets.size()
      << "\naccuracy: " << format_number(report.mean_accuracy) << " +- "
      << format_number(report.std_accuracy) << "\n";
  return kOk;
}

int cmd_certainty_by_count(const Options& o, std::ostream& out) {
  const DatasetManifest manifest = load_manifest(o);
  const auto records = load_predictions(o);
  std::optional<AgreementReport> humans;
  if (!o.annotations.empty()) humans = agreement_entropy(load_annotations(o), manifest);
  const auto rows =
      certainty_by_signal_count(records, manifest, humans ? &*humans : nullptr);
  prepare_out_dir(o);
  emit(o, "certainty_by_count.csv", count_certainty_to_csv(rows));
  write_run_config(o, {{"data", o.data},
                       {"annotations", o.annotations},
                       {"predictions", o.predictions}});
  for (const CountCertaintyRow& r : rows) {
    out << r.n_green << ": " << format_number(r.model_mean) << "\n";
  }
  return kOk;
}

int cmd_embed(const Options& o, std::ostream& out) {
  prepare_out_dir(o);
  const Checkpoint ckpt = load_checkpoint(o.model);
  const Dataset data = load_dataset(o.data);
  const std::uint64_t split_seed = split_seed_for(o, ckpt.meta.split_seed);
  const auto idx = indices_for(data, o.split, split_seed);
  const Matrix r = embed(ckpt.net, data, idx);

  std::string csv = "id,true_label";
  for (Eigen::Index c = 0; c < r.cols(); ++c) csv += ",r" + std::to_string(c);
  csv += "\n";
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const Sample& s = data.samples[idx[i]];
    csv += std::to_string(s.id) + "," + std::to_string(class_index(s.label));
    for (Eigen::Index c = 0; c < r.cols(); ++c) {
      csv += "," + format_number(r(static_cast<Eigen::Index>(i), c));
    }
    csv += "\n";
  }
  emit(o, "embedding.csv", csv);
  write_run_config(o, {{"model", o.model},
                       {"data", o.data},
                       {"split", o.split},
                       {"split_seed", split_seed}});
  out << "rows: " << idx.size() << "\ndim: " << r.cols() << "\n";
  return kOk;
}

int cmd_preview_augment(const Options& o, std::ostream& out) {
  if (o.image.empty()) throw ConfigError("--image is required");
  if (o.grid < 1 || o.grid > 16) throw ConfigError("--grid must lie in [1, 16]");
  const AugmentPreset preset = resolve_preset(o);
  const Patch src = read_png(o.image);
  prepare_out_dir(o);

  // Top-left cell is the input; the rest are independent augmentations.
  const int w = src.width();
  const int h = src.height();
  Patch grid(w * o.grid, h * o.grid);
  Rng rng(derive_seed(o.seed, 3));
  for (int cell = 0; cell < o.grid * o.grid; ++cell) {
    Patch view = src;
    if (cell > 0) view = apply_transform(sample_transform(preset, rng), src, rng);
    const int ox = (cell % o.grid) * w;
    const int oy = (cell / o.grid) * h;
    for (int c = 0; c < 3; ++c) {
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) grid.channels[c](ox + x, oy + y) = view.channels[c](x, y);
      }
    }
  }
  const fs::path target = fs::path(o.out) / "augment_grid.png";
  if (fs::exists(target) && !o.force) {
    throw IoError(target.string() + " already exists (use --force to overwrite)");
  }
  write_png(target, grid);
  write_run_config(o, {{"image", o.image},
                       {"seed", o.seed},
                       {"grid", o.grid},
                       {"preset", ordered_json::parse(preset_to_json(preset))}});
  out << "grid: " << target.string() << "\n";
  return kOk;
}

int cmd_ablation(const Options& o, std::ostream& out) {
  const TrainConfig base = resolve_train_config(o);
  prepare_out_dir(o);
  const Dataset data = load_dataset(o.data);
  const std::uint64_t split_seed = split_seed_for(o, o.seed);
  const Split split = split_dataset(data, split_seed);

  std::string header = "set";
  std::string row = "synthetic_test";
  ordered_json columns = ordered_json::array();
  for (const auto& [name, preset] : ablation_presets(base.preset)) {
    TrainConfig cfg = base;
    cfg.preset = preset;
    const TrainResult result = train(data, split.train, split.val, cfg);
    const double acc =
        accuracy(predict(result.net, data, split.test, cfg.loss.alpha));
    header += "," + name;
    row += "," + format_number(100.0 * acc);
    columns.push_back({{"column", name}, {"test_accuracy", acc}});
    out << name << ": " << format_number(100.0 * acc) << "\n";
  }
  emit(o, "ablation.csv", header + "\n" + row + "\n");

  ordered_json resolved;
  resolved["data"] = o.data;
  resolved["seed"] = o.seed;
  resolved["split_seed"] = split_seed;
  resolved["mode"] = std::string(mode_name(base.mode));
  resolved["preset"] = ordered_json::parse(preset_to_json(base.preset));
  resolved["epochs"] = base.epochs;
  resolved["batch_size"] = base.batch_size;
  resolved["loss"] = loss_json(base.loss);
  resolved["columns"] = columns;
  write_run_config(o, resolved);
  return kOk;
}

// --- option wiring ---------------------------------------------------------

void add_common(CLI::App* sub, Options& o) {
  sub->add_option("--out", o.out, "Output directory")->required();
  sub->add_flag("--force", o.force, "Overwrite existing outputs");
}

void add_seed(CLI::App* sub, Options& o) {
  sub->add_option_function<std::uint64_t>(
      "--seed",
      [&o](const std::uint64_t& v) {
        o.seed = v;
        o.seed_given = true;
      },
      "Random seed");
}

void add_preset(CLI::App* sub, Options& o) {
  sub->add_option("--preset", o.preset, "Augmentation preset")
      ->check(CLI::IsMember({"heavy", "light", "none"}));
  sub->add_option("--preset-file", o.preset_file,
                  "JSON overrides applied on top of --preset");
}

void add_training(CLI::App* sub, Options& o) {
  add_seed(sub, o);
  add_preset(sub, o);
  sub->add_option("--data", o.data, "Dataset directory")->required();
  sub->add_option("--mode", o.mode, "Training scheme")
      ->check(CLI::IsMember({"joint", "ce", "cl-detached", "cl-attached"}));
  sub->add_option("--optimizer", o.optimizer, "Optimizer")
      ->check(CLI::IsMember({"adam", "sgd"}))
      ->capture_default_str();
  sub->add_option("--epochs", o.epochs, "Epochs (train: 50, ablation: 10)");
  sub->add_option("--batch", o.batch, "Patches per batch")->capture_default_str();
  sub->add_option("--pretrain-epochs", o.pretrain_epochs,
                  "Contrastive pretraining epochs (cl modes; default epochs/2)");
  sub->add_option("--tau", o.tau, "Contrastive temperature")->capture_default_str();
  sub->add_option("--lambda", o.lambda, "Cross-entropy weight")->capture_default_str();
  sub->add_option("--alpha", o.alpha, "Label smoothing")->capture_default_str();
  sub->add_option("--split-seed", o.split_seed, "Split seed (default: --seed)");
}

int dispatch(const Options& o, std::ostream& out) {
  if (o.command == "generate") return cmd_generate(o, out);
  if (o.command == "train") return cmd_train(o, out);
  if (o.command == "eval") return cmd_eval(o, out);
  if (o.command == "calibrate") return cmd_calibrate(o, out);
  if (o.command == "condition") return cmd_condition(o, out);
  if (o.command == "agreement") return cmd_agreement(o, out);
  if (o.command == "certainty-by-count") return cmd_certainty_by_count(o, out);
  if (o.command == "embed") return cmd_embed(o, out);
  if (o.command == "preview-augment") return cmd_preview_augment(o, out);
  if (o.command == "ablation") return cmd_ablation(o, out);
  throw ConfigError("unknown subcommand '" + o.command + "'");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Synthetic FISH patches, desk-scale training and uncertainty reports",
               "fishforge"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  auto* gen = app.add_subcommand("generate", "Synthesize a labeled patch dataset");
  add_common(gen, o);
  add_seed(gen, o);
  gen->add_option("--spec", o.spec, "Generation spec JSON (default: built-in demo)");
  gen->add_option("--count", o.count, "Patches per class (overrides the spec)");

  auto* tr = app.add_subcommand("train", "Train a model");
  add_common(tr, o);
  add_training(tr, o);

  auto* ev = app.add_subcommand("eval", "Predict with certainty on a split");
  add_common(ev, o);
  ev->add_option("--model", o.model, "Model file")->required();
  ev->add_option("--data", o.data, "Dataset directory")->required();
  ev->add_option("--split", o.split, "train, val, test or all")->capture_default_str();
  ev->add_option("--split-seed", o.split_seed, "Split seed (default: from the model)");

  auto* cal = app.add_subcommand("calibrate", "ECE with over/underconfidence split");
  add_common(cal, o);
  cal->add_option("--predictions", o.predictions, "predictions.csv")->required();
  cal->add_option("--bins", o.bins, "Equal-width certainty bins")->capture_default_str();

  auto* cond = app.add_subcommand("condition", "Accuracy on the most certain records");
  add_common(cond, o);
  cond->add_option("--predictions", o.predictions, "predictions.csv")->required();
  cond->add_option("--retain", o.retain,
                   "Retain percentages, e.g. 100,50,10 (default: full grid)");

  auto* agr = app.add_subcommand("agreement", "Annotator agreement entropy");
  add_common(agr, o);
  agr->add_option("--data", o.data, "Dataset directory with manifest.jsonl")->required();
  agr->add_option("--annotations", o.annotations, "Annotation JSON files")->required();
  agr->add_option("--predictions", o.predictions,
                  "Optional predictions.csv for the certainty-by-count table");

  auto* cbc = app.add_subcommand("certainty-by-count",
                                 "Mean certainty per green signal count");
  add_common(cbc, o);
  cbc->add_option("--data", o.data, "Dataset directory with manifest.jsonl")->required();
  cbc->add_option("--predictions", o.predictions, "predictions.csv")->required();
  cbc->add_option("--annotations", o.annotations, "Optional annotation JSON files");

  auto* emb = app.add_subcommand("embed", "Export representation vectors");
  add_common(emb, o);
  emb->add_option("--model", o.model, "Model file")->required();
  emb->add_option("--data", o.data, "Dataset directory")->required();
  emb->add_option("--split", o.split, "train, val, test or all")->capture_default_str();
  emb->add_option("--split-seed", o.split_seed, "Split seed (default: from the model)");

  auto* prev = app.add_subcommand("preview-augment", "Grid of augmented variants");
  add_common(prev, o);
  add_seed(prev, o);
  add_preset(prev, o);
  prev->add_option("--image", o.image, "Input PNG")->required();
  prev->add_option("--grid", o.grid, "Grid side")->capture_default_str();

  auto* abl = app.add_subcommand("ablation", "One model per omitted augmentation");
  add_common(abl, o);
  add_training(abl, o);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigError;
  }
  for (CLI::App* sub : app.get_subcommands()) o.command = sub->get_name();
  if (o.epochs < 0) o.epochs = o.command == "ablation" ? 10 : 50;

  try {
    return dispatch(o, out);
  } catch (const ConfigError& e) {
    err << "fishforge " << o.command << ": config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const IoError& e) {
    err << "fishforge " << o.command << ": I/O error: " << e.what() << "\n";
    return kIoError;
  } catch (const fs::filesystem_error& e) {
    err << "fishforge " << o.command << ": I/O error: " << e.what() << "\n";
    return kIoError;
  } catch (const nlohmann::json::exception& e) {
    err << "fishforge " << o.command << ": config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    err << "fishforge " << o.command << ": error: " << e.what() << "\n";
    return kNumericError;
  }
}

}  // namespace fishforge::cli

#include "fishforge/train.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "fishforge/error.hpp"

namespace fishforge {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::size_t kEvalChunk = 256;

// Independent streams derived from the run seed.
enum Stream : std::uint64_t { kInit = 1, kShuffle = 2, kAugment = 3, kDropout = 4 };

enum class Phase { kJoint, kCe, kPretrain, kFinetune };

const char* phase_name(Phase p) {
  switch (p) {
    case Phase::kJoint:
      return "joint";
    case Phase::kCe:
      return "ce";
    case Phase::kPretrain:
      return "pretrain";
    case Phase::kFinetune:
      break;
  }
  return "finetune";
}

int downsample_factor(const Patch& p, int side) {
  if (p.width() != p.height() || p.width() % side != 0) {
    throw ConfigError("patch size " + std::to_string(p.width()) + "x" +
                      std::to_string(p.height()) +
                      " is not a multiple of the network input side " +
                      std::to_string(side));
  }
  return p.width() / side;
}

void check_finite(double v, const char* what, int epoch, std::size_t batch) {
  if (!std::isfinite(v)) {
    throw NumericError(std::string("training diverged: ") + what + " = " +
                       std::to_string(v) + " at epoch " + std::to_string(epoch) +
                       ", batch " + std::to_string(batch));
  }
}

double argmax_accuracy(const Matrix& logits, std::span<const int> labels) {
  std::size_t hits = 0;
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < logits.cols(); ++c) {
      if (logits(r, c) > logits(r, best)) best = c;
    }
    hits += best == labels[r];
  }
  return static_cast<double>(hits) / static_cast<double>(logits.rows());
}

struct ValMetrics {
  double loss = kNaN;
  double accuracy = kNaN;
};

ValMetrics validate_on(const Network& net, const Dataset& data,
                       std::span<const std::size_t> idx, double alpha) {
  ValMetrics m;
  if (idx.empty()) return m;
  double loss = 0.0;
  std::size_t hits = 0;
  const int side = net.architecture().input_side;
  for (std::size_t start = 0; start < idx.size(); start += kEvalChunk) {
    const std::size_t end = std::min(idx.size(), start + kEvalChunk);
    std::vector<const Patch*> patches;
    std::vector<int> labels;
    for (std::size_t i = start; i < end; ++i) {
      patches.push_back(&data.samples[idx[i]].patch);
      labels.push_back(class_index(data.samples[idx[i]].label));
    }
    const ForwardPass pass = net.forward(prepare_inputs(patches, side),
                                         RunMode::kEval, nullptr, false, true);
    const BatchCrossEntropy ce = batch_cross_entropy(pass.logits, labels, alpha);
    loss += ce.loss * static_cast<double>(end - start);
    hits += static_cast<std::size_t>(
        std::lround(argmax_accuracy(pass.logits, labels) * (end - start)));
  }
  m.loss = loss / static_cast<double>(idx.size());
  m.accuracy = static_cast<double>(hits) / static_cast<double>(idx.size());
  return m;
}

struct PhaseContext {
  const Dataset& data;
  std::span<const std::size_t> train_idx;
  std::span<const std::size_t> val_idx;
  const TrainConfig& cfg;
  Rng& shuffle_rng;
  Rng& augment_rng;
  Rng& dropout_rng;
  const EpochCallback& on_epoch;
  std::vector<EpochLog>& log;
};

void run_phase(Network& net, Phase phase, int epochs, PhaseContext& ctx) {
  const TrainConfig& cfg = ctx.cfg;
  const bool use_contrastive = phase == Phase::kJoint || phase == Phase::kPretrain;
  const bool use_ce = phase != Phase::kPretrain;
  const bool update_encoder =
      !(phase == Phase::kFinetune && cfg.mode == TrainMode::kClDetached);

  std::vector<ParamGroup> groups;
  if (update_encoder) groups.push_back(ParamGroup::kEncoder);
  if (use_contrastive) groups.push_back(ParamGroup::kProjector);
  if (use_ce) groups.push_back(ParamGroup::kClassifier);

  // Fresh optimizer state per phase.
  SgdMomentum sgd(net, cfg.momentum);
  Adam adam(net);
  auto step = [&](const Network& grad, double lr) {
    if (cfg.optimizer == OptimizerKind::kAdam) {
      adam.step(net, grad, lr, groups);
    } else {
      sgd.step(net, grad, lr, groups);
    }
  };
  std::vector<std::size_t> order(ctx.train_idx.begin(), ctx.train_idx.end());
  const std::size_t n_batches =
      (order.size() + cfg.batch_size - 1) / static_cast<std::size_t>(cfg.batch_size);
  const int side = cfg.arch.input_side;

  for (int e = 0; e < epochs; ++e) {
    const int epoch_no = static_cast<int>(ctx.log.size()) + 1;
    for (std::size_t i = order.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(
          ctx.shuffle_rng.uniform_int(0, static_cast<std::int64_t>(i - 1)));
      std::swap(order[i - 1], order[j]);
    }

    double sum_loss = 0.0, sum_cl = 0.0, sum_ce = 0.0, sum_acc = 0.0;
    double lr = 0.0;
    std::size_t rows_seen = 0;
    for (std::size_t b = 0; b < n_batches; ++b) {
      const std::size_t start = b * cfg.batch_size;
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);

      std::vector<Patch> views;
      std::vector<int> labels;
      views.reserve(2 * (end - start));
      for (std::size_t i = start; i < end; ++i) {
        const Sample& s = ctx.data.samples[order[i]];
        auto [a, v] = augment_pair(s.patch, cfg.preset, ctx.augment_rng);
        views.push_back(std::move(a));
        views.push_back(std::move(v));
        labels.push_back(class_index(s.label));
        labels.push_back(class_index(s.label));
      }
      std::vector<const Patch*> ptrs;
      for (const Patch& p : views) ptrs.push_back(&p);
      const Matrix x = prepare_inputs(ptrs, side);

      const ForwardPass pass = net.forward(x, RunMode::kTrain, &ctx.dropout_rng,
                                           use_contrastive, use_ce);
      Matrix grad_z;
      Matrix grad_logits;
      double loss = 0.0;
      if (use_contrastive && use_ce) {
        JointLossResult j = joint_loss(pass.projection, pass.logits, labels, cfg.loss);
        loss = j.total;
        sum_cl += j.contrastive * x.rows();
        sum_ce += j.cross_entropy * x.rows();
        grad_z = std::move(j.grad_z);
        grad_logits = std::move(j.grad_logits);
      } else if (use_contrastive) {
        NtXentResult c = nt_xent(pass.projection, cfg.loss.tau);
        loss = c.loss;
        sum_cl += c.loss * x.rows();
        grad_z = std::move(c.grad);
      } else {
        BatchCrossEntropy ce = batch_cross_entropy(pass.logits, labels, cfg.loss.alpha);
        loss = ce.loss;
        sum_ce += ce.loss * x.rows();
        grad_logits = std::move(ce.grad_logits);
      }
      check_finite(loss, "loss", epoch_no, b);
      sum_loss += loss * x.rows();
      if (use_ce) sum_acc += argmax_accuracy(pass.logits, labels) * x.rows();
      rows_seen += static_cast<std::size_t>(x.rows());

      const Network grad = net.backward(pass, grad_z, grad_logits, update_encoder);
      lr = lr_at(e + static_cast<double>(b + 1) / n_batches, cfg.schedule);
      step(grad, lr);
    }

    EpochLog entry;
    entry.epoch = epoch_no;
    entry.phase = phase_name(phase);
    entry.lr = lr;
    const double n = static_cast<double>(rows_seen);
    entry.train_loss = sum_loss / n;
    entry.train_contrastive = use_contrastive ? sum_cl / n : kNaN;
    entry.train_ce = use_ce ? sum_ce / n : kNaN;
    entry.train_accuracy = use_ce ? sum_acc / n : kNaN;
    const ValMetrics val = validate_on(net, ctx.data, ctx.val_idx, cfg.loss.alpha);
    entry.val_loss = val.loss;
    entry.val_accuracy = val.accuracy;
    ctx.log.push_back(entry);
    if (ctx.on_epoch) ctx.on_epoch(entry);
  }
}

}  // namespace

std::string_view mode_name(TrainMode mode) {
  switch (mode) {
    case TrainMode::kJoint:
      return "joint";
    case TrainMode::kCeOnly:
      return "ce";
    case TrainMode::kClDetached:
      return "cl-detached";
    case TrainMode::kClAttached:
      break;
  }
  return "cl-attached";
}

TrainMode parse_mode(std::string_view text) {
  if (text == "joint") return TrainMode::kJoint;
  if (text == "ce" || text == "ce_only") return TrainMode::kCeOnly;
  if (text == "cl-detached" || text == "cl_detached") return TrainMode::kClDetached;
  if (text == "cl-attached" || text == "cl_attached") return TrainMode::kClAttached;
  throw ConfigError("unknown training mode '" + std::string(text) +
                    "' (expected joint, ce, cl-detached or cl-attached)");
}

std::string_view optimizer_name(OptimizerKind kind) {
  return kind == OptimizerKind::kAdam ? "adam" : "sgd";
}

OptimizerKind parse_optimizer(std::string_view text) {
  if (text == "sgd") return OptimizerKind::kSgdMomentum;
  if (text == "adam") return OptimizerKind::kAdam;
  throw ConfigError("unknown optimizer '" + std::string(text) + "' (expected sgd or adam)");
}

int TrainConfig::resolved_pretrain_epochs() const {
  if (mode != TrainMode::kClDetached && mode != TrainMode::kClAttached) return 0;
  return pretrain_epochs >= 0 ? pretrain_epochs : epochs / 2;
}

void TrainConfig::validate() const {
  arch.validate();
  loss.validate();
  schedule.validate();
  preset.validate();
  if (arch.classes != loss.classes) {
    throw ConfigError("architecture and loss disagree on the class count");
  }
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    throw ConfigError("momentum must lie in [0, 1)");
  }
  if (resolved_pretrain_epochs() > epochs) {
    throw ConfigError("pretraining epochs exceed the epoch budget");
  }
}

Matrix prepare_inputs(std::span<const Patch* const> patches, int input_side) {
  Matrix x(static_cast<Eigen::Index>(patches.size()), 3 * input_side * input_side);
  for (std::size_t i = 0; i < patches.size(); ++i) {
    const Patch& p = *patches[i];
    const int factor = downsample_factor(p, input_side);
    const std::vector<double> flat = flatten_chw(downsample_area(p, factor));
    std::copy(flat.begin(), flat.end(), x.row(static_cast<Eigen::Index>(i)).data());
  }
  return x;
}

InputStandardization channel_statistics(const Dataset& data,
                                        std::span<const std::size_t> indices,
                                        int input_side) {
  const int plane = input_side * input_side;
  std::array<double, 3> sum{}, sum_sq{};
  for (std::size_t i : indices) {
    const Patch* p = &data.samples[i].patch;
    const Matrix x = prepare_inputs(std::span<const Patch* const>(&p, 1), input_side);
    for (int c = 0; c < 3; ++c) {
      const auto block = x.middleCols(c * plane, plane).array();
      sum[c] += block.sum();
      sum_sq[c] += block.square().sum();
    }
  }
  InputStandardization s;
  const double n = static_cast<double>(indices.size()) * plane;
  for (int c = 0; c < 3; ++c) {
    s.mean[c] = sum[c] / n;
    const double var = std::max(sum_sq[c] / n - s.mean[c] * s.mean[c], 0.0);
    // A constant channel carries no information; leave it unscaled.
    s.std[c] = var > 1e-12 ? std::sqrt(var) : 1.0;
  }
  return s;
}

TrainResult train(const Dataset& data, std::span<const std::size_t> train_idx,
                  std::span<const std::size_t> val_idx, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
  config.validate();
  if (train_idx.empty()) throw ConfigError("training set is empty");
  for (std::size_t i : train_idx) {
    if (i >= data.size()) throw ConfigError("training index out of range");
  }
  for (std::size_t i : val_idx) {
    if (i >= data.size()) throw ConfigError("validation index out of range");
  }
  downsample_factor(data.samples[train_idx[0]].patch, config.arch.input_side);

  Rng init(derive_seed(config.seed, kInit));
  Rng shuffle(derive_seed(config.seed, kShuffle));
  Rng augment(derive_seed(config.seed, kAugment));
  Rng dropout(derive_seed(config.seed, kDropout));

  TrainResult result{Network(config.arch, init), {}};
  result.net.set_input_standardization(channel_statistics(data, train_idx, config.arch.input_side));
  PhaseContext ctx{data,    train_idx, val_idx,  config, shuffle,
                   augment, dropout,   on_epoch, result.log};
  switch (config.mode) {
    case TrainMode::kJoint:
      run_phase(result.net, Phase::kJoint, config.epochs, ctx);
      break;
    case TrainMode::kCeOnly:
      run_phase(result.net, Phase::kCe, config.epochs, ctx);
      break;
    case TrainMode::kClDetached:
    case TrainMode::kClAttached: {
      const int pre = config.resolved_pretrain_epochs();
      run_phase(result.net, Phase::kPretrain, pre, ctx);
      run_phase(result.net, Phase::kFinetune, config.epochs - pre, ctx);
      break;
    }
  }
  return result;
}

std::vector<PredictionRecord> predict(const Network& net, const Dataset& data,
                                      std::span<const std::size_t> indices,
                                      double alpha) {
  std::vector<PredictionRecord> out;
  out.reserve(indices.size());
  const int side = net.architecture().input_side;
  for (std::size_t start = 0; start < indices.size(); start += kEvalChunk) {
    const std::size_t end = std::min(indices.size(), start + kEvalChunk);
    std::vector<const Patch*> patches;
    for (std::size_t i = start; i < end; ++i) {
      if (indices[i] >= data.size()) throw ConfigError("predict: index out of range");
      patches.push_back(&data.samples[indices[i]].patch);
    }
    const ForwardPass pass = net.forward(prepare_inputs(patches, side),
                                         RunMode::kEval, nullptr, false, true);
    const Matrix probs = softmax_rows(pass.logits);
    for (std::size_t i = start; i < end; ++i) {
      const Sample& s = data.samples[indices[i]];
      const auto row = static_cast<Eigen::Index>(i - start);
      std::vector<double> p(probs.row(row).data(), probs.row(row).data() + probs.cols());
      out.push_back(make_record(s.id, class_index(s.label), std::move(p), alpha));
    }
  }
  return out;
}

Matrix embed(const Network& net, const Dataset& data,
             std::span<const std::size_t> indices) {
  const int side = net.architecture().input_side;
  Matrix out(static_cast<Eigen::Index>(indices.size()), net.architecture().repr_dim());
  for (std::size_t start = 0; start < indices.size(); start += kEvalChunk) {
    const std::size_t end = std::min(indices.size(), start + kEvalChunk);
    std::vector<const Patch*> patches;
    for (std::size_t i = start; i < end; ++i) {
      if (indices[i] >= data.size()) throw ConfigError("embed: index out of range");
      patches.push_back(&data.samples[indices[i]].patch);
    }
    const ForwardPass pass = net.forward(prepare_inputs(patches, side),
                                         RunMode::kEval, nullptr, false, false);
    out.middleRows(static_cast<Eigen::Index>(start),
                   static_cast<Eigen::Index>(end - start)) = pass.representation;
  }
  return out;
}

}  // namespace fishforge

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fishforge/augment.hpp"
#include "fishforge/dataset.hpp"
#include "fishforge/lossmath.hpp"
#include "fishforge/network.hpp"
#include "fishforge/schedule.hpp"
#include "fishforge/uncert.hpp"

namespace fishforge {

/// kJoint: contrastive + CE in one objective.
/// kCeOnly: CE on encoder + classifier, no projection head.
/// kClDetached: contrastive pretraining, then CE on the classifier only.
/// kClAttached: contrastive pretraining, then CE on encoder + classifier.
enum class TrainMode { kJoint, kCeOnly, kClDetached, kClAttached };
enum class OptimizerKind { kSgdMomentum, kAdam };

std::string_view optimizer_name(OptimizerKind kind);
/// Accepts sgd and adam.
OptimizerKind parse_optimizer(std::string_view text);

std::string_view mode_name(TrainMode mode);
/// Accepts joint, ce, ce_only, cl-detached, cl_detached, cl-attached,
/// cl_attached.
TrainMode parse_mode(std::string_view text);

struct TrainConfig {
  TrainMode mode = TrainMode::kJoint;
  AugmentPreset preset = AugmentPreset::heavy();
  Architecture arch;
  LossConfig loss;
  LrSchedule schedule;
  /// Patches per batch; every patch contributes two augmented views.
  int batch_size = 128;
  int epochs = 50;
  /// Pretraining epochs of the two-phase modes; -1 means epochs / 2.
  int pretrain_epochs = -1;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  /// SGD only.
  double momentum = 0.9;
  std::uint64_t seed = 0;

  int resolved_pretrain_epochs() const;
  void validate() const;
};

struct EpochLog {
  int epoch = 0;  // 1-based, across phases
  std::string phase;  // "joint", "ce", "pretrain" or "finetune"
  double lr = 0.0;    // at the end of the epoch
  double train_loss = 0.0;
  double train_contrastive = 0.0;  // NaN when not evaluated
  double train_ce = 0.0;           // NaN when not evaluated
  double train_accuracy = 0.0;     // NaN when not evaluated
  double val_loss = 0.0;           // NaN without a validation set
  double val_accuracy = 0.0;
};

struct TrainResult {
  Network net;
  std::vector<EpochLog> log;
};

using EpochCallback = std::function<void(const EpochLog&)>;

/// Downsamples by area averaging to the architecture's input side and
/// flattens channel-major, one row per patch.
Matrix prepare_inputs(std::span<const Patch* const> patches, int input_side);

/// Per-channel mean and population std of the prepared inputs of `indices`.
InputStandardization channel_statistics(const Dataset& data,
                                        std::span<const std::size_t> indices,
                                        int input_side);

/// Trains on `train_idx` and reports validation metrics on `val_idx`. The
/// network standardizes its inputs with the training-set channel statistics.
/// Throws ConfigError on an empty training set and NumericError when the
/// loss stops being finite.
TrainResult train(const Dataset& data, std::span<const std::size_t> train_idx,
                  std::span<const std::size_t> val_idx, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

/// Eval-mode predictions for `indices` with certainty at smoothing `alpha`.
std::vector<PredictionRecord> predict(const Network& net, const Dataset& data,
                                      std::span<const std::size_t> indices,
                                      double alpha);

/// Representation rows R for `indices`.
Matrix embed(const Network& net, const Dataset& data,
             std::span<const std::size_t> indices);

}  // namespace fishforge

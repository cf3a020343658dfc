#pragma once

// Desk-scale MLP: encoder -> representation R, projector R -> Z,
// classifier R -> logits. Reverse-mode gradients are hand-derived.

#include <array>
#include <span>
#include <string>
#include <vector>

#include "fishforge/lossmath.hpp"
#include "fishforge/rng.hpp"

namespace fishforge {

struct Architecture {
  /// Inputs are side x side RGB images flattened channel-major.
  int input_side = 32;
  /// Encoder widths; the last entry is the representation dimension.
  std::vector<int> encoder{256, 128};
  /// Projection head widths; the last entry is the projection dimension.
  std::vector<int> projector{64, 64};
  int classifier_width = 128;
  int classifier_layers = 2;
  int classes = 3;
  double dropout = 0.25;

  int input_dim() const { return 3 * input_side * input_side; }
  int repr_dim() const { return encoder.back(); }
  int proj_dim() const { return projector.back(); }
  void validate() const;

  friend bool operator==(const Architecture&, const Architecture&) = default;
};

/// Fully connected layer y = x W + b with W stored (in x out).
struct Dense {
  Matrix weight;
  Matrix bias;  // 1 x out

  Matrix apply(const Matrix& x) const;
};

/// Fixed per-channel input transform x -> (x - mean) / std, applied before
/// the first layer. Not a trainable parameter.
struct InputStandardization {
  std::array<double, 3> mean{0.0, 0.0, 0.0};
  std::array<double, 3> std{1.0, 1.0, 1.0};

  bool is_identity() const;
  void validate() const;
  friend bool operator==(const InputStandardization&,
                         const InputStandardization&) = default;
};

enum class ParamGroup { kEncoder, kProjector, kClassifier };
enum class RunMode { kEval, kTrain };

struct ForwardPass {
  // inputs[l] is the input of layer l; outputs are post-activation.
  std::vector<Matrix> encoder_inputs;
  std::vector<Matrix> projector_inputs;
  std::vector<Matrix> classifier_inputs;
  std::vector<Matrix> classifier_pre;   // hidden pre-activations
  std::vector<Matrix> dropout_masks;    // scaled keep masks, train mode only
  Matrix representation;
  Matrix projection;
  Matrix logits;
};

class Network {
 public:
  Network() = default;
  /// He-uniform weights, zero biases.
  Network(const Architecture& arch, Rng& init);

  const Architecture& architecture() const { return arch_; }

  const InputStandardization& input_standardization() const { return input_; }
  void set_input_standardization(const InputStandardization& s);

  /// Dropout is applied (inverted, keep = 1 - p) only in train mode and
  /// then requires `dropout_rng`.
  ForwardPass forward(const Matrix& x, RunMode mode, Rng* dropout_rng = nullptr,
                      bool with_projection = true,
                      bool with_classifier = true) const;

  /// Backpropagates the given output gradients. Empty matrices skip the
  /// corresponding head; `through_encoder` = false leaves encoder
  /// gradients at zero.
  Network backward(const ForwardPass& pass, const Matrix& grad_projection,
                   const Matrix& grad_logits, bool through_encoder) const;

  /// Zero-valued network of the same shape (gradient / velocity buffers).
  Network zeros_like() const;

  std::vector<Dense>& layers(ParamGroup group);
  const std::vector<Dense>& layers(ParamGroup group) const;

  /// Every tensor in checkpoint order with its name.
  std::vector<std::pair<std::string, Matrix*>> tensors();
  std::vector<std::pair<std::string, const Matrix*>> tensors() const;
  std::size_t parameter_count() const;

  /// Rounds every parameter to float32 precision.
  void round_to_float();

 private:
  Architecture arch_;
  InputStandardization input_;
  std::vector<Dense> encoder_;
  std::vector<Dense> projector_;
  std::vector<Dense> classifier_;
};

/// SGD with heavy-ball momentum: v = mu v + g; w -= lr v.
class SgdMomentum {
 public:
  SgdMomentum(const Network& net, double momentum);
  void step(Network& net, const Network& grad, double lr,
            std::span<const ParamGroup> groups);

 private:
  Network velocity_;
  double momentum_;
};

/// Adam with bias correction; the step count is shared by all groups.
class Adam {
 public:
  explicit Adam(const Network& net, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8);
  void step(Network& net, const Network& grad, double lr,
            std::span<const ParamGroup> groups);

 private:
  Network m_;
  Network v_;
  double beta1_;
  double beta2_;
  double eps_;
  long steps_ = 0;
};

}  // namespace fishforge

#include "fishforge/network.hpp"

#include <cmath>

#include "fishforge/error.hpp"

namespace fishforge {
namespace {

Dense make_dense(int in, int out, Rng& rng) {
  Dense d;
  d.weight.resize(in, out);
  const double bound = std::sqrt(6.0 / in);
  for (Eigen::Index i = 0; i < d.weight.size(); ++i) {
    d.weight.data()[i] = rng.uniform(-bound, bound);
  }
  d.bias = Matrix::Zero(1, out);
  return d;
}

void relu_inplace(Matrix& m) { m = m.cwiseMax(0.0); }

// Accumulates dW, db for y = x W + b and returns dL/dx (skipped when
// `need_input_grad` is false).
Matrix dense_backward(const Dense& layer, const Matrix& input,
                      const Matrix& grad_out, Dense& grad,
                      bool need_input_grad) {
  grad.weight.noalias() += input.transpose() * grad_out;
  grad.bias += grad_out.colwise().sum();
  if (!need_input_grad) return {};
  return grad_out * layer.weight.transpose();
}

}  // namespace

void Architecture::validate() const {
  if (input_side < 1) throw ConfigError("architecture: input_side must be >= 1");
  if (encoder.empty() || projector.empty()) {
    throw ConfigError("architecture: encoder and projector need >= 1 layer");
  }
  for (int w : encoder) {
    if (w < 1) throw ConfigError("architecture: encoder widths must be >= 1");
  }
  for (int w : projector) {
    if (w < 1) throw ConfigError("architecture: projector widths must be >= 1");
  }
  if (classifier_width < 1 || classifier_layers < 0) {
    throw ConfigError("architecture: bad classifier shape");
  }
  if (classes < 2) throw ConfigError("architecture: need >= 2 classes");
  if (!(dropout >= 0.0 && dropout < 1.0)) {
    throw ConfigError("architecture: dropout must lie in [0, 1)");
  }
}

Matrix Dense::apply(const Matrix& x) const {
  Matrix y = x * weight;
  y.rowwise() += bias.row(0);
  return y;
}

bool InputStandardization::is_identity() const {
  return *this == InputStandardization{};
}

void InputStandardization::validate() const {
  for (int c = 0; c < 3; ++c) {
    if (!std::isfinite(mean[c]) || !(std[c] > 0.0) || !std::isfinite(std[c])) {
      throw ConfigError("input standardization needs finite means and positive stds");
    }
  }
}

void Network::set_input_standardization(const InputStandardization& s) {
  s.validate();
  input_ = s;
}

Network::Network(const Architecture& arch, Rng& init) : arch_(arch) {
  arch.validate();
  int in = arch.input_dim();
  for (int w : arch.encoder) {
    encoder_.push_back(make_dense(in, w, init));
    in = w;
  }
  const int repr = arch.repr_dim();
  in = repr;
  for (int w : arch.projector) {
    projector_.push_back(make_dense(in, w, init));
    in = w;
  }
  in = repr;
  for (int l = 0; l < arch.classifier_layers; ++l) {
    classifier_.push_back(make_dense(in, arch.classifier_width, init));
    in = arch.classifier_width;
  }
  classifier_.push_back(make_dense(in, arch.classes, init));
}

std::vector<Dense>& Network::layers(ParamGroup group) {
  switch (group) {
    case ParamGroup::kEncoder:
      return encoder_;
    case ParamGroup::kProjector:
      return projector_;
    case ParamGroup::kClassifier:
      break;
  }
  return classifier_;
}

const std::vector<Dense>& Network::layers(ParamGroup group) const {
  return const_cast<Network*>(this)->layers(group);
}

ForwardPass Network::forward(const Matrix& x, RunMode mode, Rng* dropout_rng,
                             bool with_projection, bool with_classifier) const {
  if (x.cols() != arch_.input_dim()) {
    throw NumericError("forward: input width " + std::to_string(x.cols()) +
                       " does not match architecture input " +
                       std::to_string(arch_.input_dim()));
  }
  ForwardPass pass;
  Matrix h = x;
  if (!input_.is_identity()) {
    const Eigen::Index plane = arch_.input_side * arch_.input_side;
    for (int c = 0; c < 3; ++c) {
      auto block = h.middleCols(c * plane, plane).array();
      block = (block - input_.mean[c]) / input_.std[c];
    }
  }
  for (const Dense& layer : encoder_) {
    pass.encoder_inputs.push_back(h);
    h = layer.apply(h);
    relu_inplace(h);
  }
  pass.representation = h;

  if (with_projection) {
    Matrix p = pass.representation;
    for (std::size_t l = 0; l < projector_.size(); ++l) {
      pass.projector_inputs.push_back(p);
      p = projector_[l].apply(p);
      if (l + 1 < projector_.size()) relu_inplace(p);
    }
    pass.projection = std::move(p);
  }

  if (with_classifier) {
    const bool drop = mode == RunMode::kTrain && arch_.dropout > 0.0;
    if (drop && dropout_rng == nullptr) {
      throw NumericError("forward: train-mode dropout needs a generator");
    }
    const double keep = 1.0 - arch_.dropout;
    Matrix c = pass.representation;
    for (std::size_t l = 0; l + 1 < classifier_.size(); ++l) {
      pass.classifier_inputs.push_back(c);
      Matrix pre = classifier_[l].apply(c);
      c = pre.cwiseMax(0.0);
      pass.classifier_pre.push_back(std::move(pre));
      if (drop) {
        Matrix mask(c.rows(), c.cols());
        for (Eigen::Index i = 0; i < mask.size(); ++i) {
          mask.data()[i] = dropout_rng->bernoulli(keep) ? 1.0 / keep : 0.0;
        }
        c = c.cwiseProduct(mask);
        pass.dropout_masks.push_back(std::move(mask));
      }
    }
    pass.classifier_inputs.push_back(c);
    pass.logits = classifier_.back().apply(c);
  }
  return pass;
}

Network Network::zeros_like() const {
  Network z;
  z.arch_ = arch_;
  z.input_ = input_;
  auto zero = [](const std::vector<Dense>& src) {
    std::vector<Dense> out;
    for (const Dense& d : src) {
      out.push_back({Matrix::Zero(d.weight.rows(), d.weight.cols()),
                     Matrix::Zero(1, d.bias.cols())});
    }
    return out;
  };
  z.encoder_ = zero(encoder_);
  z.projector_ = zero(projector_);
  z.classifier_ = zero(classifier_);
  return z;
}

Network Network::backward(const ForwardPass& pass, const Matrix& grad_projection,
                          const Matrix& grad_logits, bool through_encoder) const {
  Network grad = zeros_like();
  Matrix grad_repr = Matrix::Zero(pass.representation.rows(),
                                  pass.representation.cols());

  if (grad_projection.size() > 0) {
    Matrix g = grad_projection;
    for (std::size_t l = projector_.size(); l-- > 0;) {
      if (l + 1 < projector_.size()) {
        // ReLU: the stored input of layer l+1 is this layer's output.
        g = g.cwiseProduct(
            (pass.projector_inputs[l + 1].array() > 0.0).cast<double>().matrix());
      }
      g = dense_backward(projector_[l], pass.projector_inputs[l], g,
                         grad.projector_[l], true);
    }
    grad_repr += g;
  }

  if (grad_logits.size() > 0) {
    std::size_t l = classifier_.size() - 1;
    Matrix g = dense_backward(classifier_[l], pass.classifier_inputs[l],
                              grad_logits, grad.classifier_[l], true);
    while (l-- > 0) {
      if (!pass.dropout_masks.empty()) g = g.cwiseProduct(pass.dropout_masks[l]);
      g = g.cwiseProduct(
          (pass.classifier_pre[l].array() > 0.0).cast<double>().matrix());
      g = dense_backward(classifier_[l], pass.classifier_inputs[l], g,
                         grad.classifier_[l], true);
    }
    grad_repr += g;
  }

  if (through_encoder) {
    Matrix g = std::move(grad_repr);
    for (std::size_t l = encoder_.size(); l-- > 0;) {
      const Matrix& out = l + 1 < encoder_.size() ? pass.encoder_inputs[l + 1]
                                                  : pass.representation;
      g = g.cwiseProduct((out.array() > 0.0).cast<double>().matrix());
      g = dense_backward(encoder_[l], pass.encoder_inputs[l], g,
                         grad.encoder_[l], l > 0);
    }
  }
  return grad;
}

std::vector<std::pair<std::string, Matrix*>> Network::tensors() {
  std::vector<std::pair<std::string, Matrix*>> out;
  auto add = [&](const char* prefix, std::vector<Dense>& group) {
    for (std::size_t l = 0; l < group.size(); ++l) {
      const std::string base = std::string(prefix) + "." + std::to_string(l);
      out.emplace_back(base + ".weight", &group[l].weight);
      out.emplace_back(base + ".bias", &group[l].bias);
    }
  };
  add("encoder", encoder_);
  add("projector", projector_);
  add("classifier", classifier_);
  return out;
}

std::vector<std::pair<std::string, const Matrix*>> Network::tensors() const {
  std::vector<std::pair<std::string, const Matrix*>> out;
  for (auto& [name, m] : const_cast<Network*>(this)->tensors()) {
    out.emplace_back(name, m);
  }
  return out;
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [name, m] : tensors()) n += static_cast<std::size_t>(m->size());
  return n;
}

void Network::round_to_float() {
  for (auto& [name, m] : tensors()) {
    for (Eigen::Index i = 0; i < m->size(); ++i) {
      m->data()[i] = static_cast<double>(static_cast<float>(m->data()[i]));
    }
  }
}

SgdMomentum::SgdMomentum(const Network& net, double momentum)
    : velocity_(net.zeros_like()), momentum_(momentum) {}

void SgdMomentum::step(Network& net, const Network& grad, double lr,
                       std::span<const ParamGroup> groups) {
  for (ParamGroup group : groups) {
    std::vector<Dense>& params = net.layers(group);
    std::vector<Dense>& vel = velocity_.layers(group);
    const std::vector<Dense>& g = grad.layers(group);
    for (std::size_t l = 0; l < params.size(); ++l) {
      vel[l].weight = momentum_ * vel[l].weight + g[l].weight;
      vel[l].bias = momentum_ * vel[l].bias + g[l].bias;
      params[l].weight -= lr * vel[l].weight;
      params[l].bias -= lr * vel[l].bias;
    }
  }
}

Adam::Adam(const Network& net, double beta1, double beta2, double eps)
    : m_(net.zeros_like()), v_(net.zeros_like()), beta1_(beta1), beta2_(beta2), eps_(eps) {}

void Adam::step(Network& net, const Network& grad, double lr,
                std::span<const ParamGroup> groups) {
  ++steps_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(steps_));
  auto update = [&](Matrix& w, Matrix& m, Matrix& v, const Matrix& g) {
    m = beta1_ * m + (1.0 - beta1_) * g;
    v = beta2_ * v + (1.0 - beta2_) * g.cwiseProduct(g);
    w.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps_);
  };
  for (ParamGroup group : groups) {
    std::vector<Dense>& params = net.layers(group);
    std::vector<Dense>& m = m_.layers(group);
    std::vector<Dense>& v = v_.layers(group);
    const std::vector<Dense>& g = grad.layers(group);
    for (std::size_t l = 0; l < params.size(); ++l) {
      update(params[l].weight, m[l].weight, v[l].weight, g[l].weight);
      update(params[l].bias, m[l].bias, v[l].bias, g[l].bias);
    }
  }
}

}  // namespace fishforge

#include "fishforge/lossmath.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "fishforge/error.hpp"

namespace fishforge {

double cosine_sim(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw NumericError("cosine_sim: size mismatch");
  double dot = 0.0;
  double uu = 0.0;
  double vv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    uu += u[i] * u[i];
    vv += v[i] * v[i];
  }
  if (uu == 0.0 || vv == 0.0) {
    throw NumericError("cosine_sim: zero-norm vector");
  }
  return std::clamp(dot / (std::sqrt(uu) * std::sqrt(vv)), -1.0, 1.0);
}

NtXentResult nt_xent(const Matrix& z, double tau) {
  if (!(tau > 0.0)) throw NumericError("nt_xent: tau must be positive");
  const Eigen::Index rows = z.rows();
  if (rows < 2 || rows % 2 != 0) {
    throw NumericError("nt_xent: expected 2N >= 2 rows, got " +
                       std::to_string(rows));
  }

  const Eigen::VectorXd norms = z.rowwise().norm();
  if ((norms.array() == 0.0).any()) {
    throw NumericError("nt_xent: zero-norm row in projection batch");
  }
  const Matrix u = norms.cwiseInverse().asDiagonal() * z;
  const Matrix logits = (u * u.transpose()) / tau;

  // weights(i, k) = d loss_i / d logits(i, k), averaged over anchors below.
  Matrix weights = Matrix::Zero(rows, rows);
  NtXentResult out;
  out.per_anchor.resize(static_cast<std::size_t>(rows));
  for (Eigen::Index i = 0; i < rows; ++i) {
    double peak = -std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < rows; ++k) {
      if (k != i) peak = std::max(peak, logits(i, k));
    }
    double denom = 0.0;
    for (Eigen::Index k = 0; k < rows; ++k) {
      if (k == i) continue;
      const double e = std::exp(logits(i, k) - peak);
      weights(i, k) = e;
      denom += e;
    }
    weights.row(i) /= denom;
    const Eigen::Index p = positive_of(i);
    out.per_anchor[static_cast<std::size_t>(i)] =
        -(logits(i, p) - peak) + std::log(denom);
    weights(i, p) -= 1.0;
  }
  out.loss = std::accumulate(out.per_anchor.begin(), out.per_anchor.end(), 0.0) /
             static_cast<double>(rows);

  // logits(i,k) = u_i.u_k / tau appears in rows i and k.
  const Matrix grad_u =
      ((weights + weights.transpose()) * u) / (tau * static_cast<double>(rows));
  // Through the normalization u = z / |z|.
  out.grad.resize(rows, z.cols());
  for (Eigen::Index i = 0; i < rows; ++i) {
    const double radial = u.row(i).dot(grad_u.row(i));
    out.grad.row(i) = (grad_u.row(i) - radial * u.row(i)) / norms(i);
  }
  return out;
}

std::vector<double> smoothed_targets(int label, double alpha, int classes) {
  if (classes < 2) throw NumericError("smoothed_targets: need C >= 2");
  if (label < 0 || label >= classes) {
    throw NumericError("smoothed_targets: label " + std::to_string(label) +
                       " outside [0, " + std::to_string(classes) + ")");
  }
  if (!(alpha >= 0.0 && alpha < 1.0)) {
    throw NumericError("smoothed_targets: alpha must lie in [0, 1)");
  }
  std::vector<double> t(static_cast<std::size_t>(classes),
                        alpha / static_cast<double>(classes - 1));
  t[static_cast<std::size_t>(label)] = 1.0 - alpha;
  return t;
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> p(logits.begin(), logits.end());
  if (p.empty()) return p;
  const double peak = *std::max_element(p.begin(), p.end());
  double total = 0.0;
  for (double& v : p) {
    v = std::exp(v - peak);
    total += v;
  }
  for (double& v : p) v /= total;
  return p;
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const std::vector<double> p = softmax(
        std::span<const double>(logits.row(i).data(),
                                static_cast<std::size_t>(logits.cols())));
    for (Eigen::Index c = 0; c < logits.cols(); ++c) {
      out(i, c) = p[static_cast<std::size_t>(c)];
    }
  }
  return out;
}

CrossEntropyResult cross_entropy(std::span<const double> probs,
                                 std::span<const double> target) {
  if (probs.size() != target.size() || probs.empty()) {
    throw NumericError("cross_entropy: size mismatch");
  }
  double mass = 0.0;
  for (double t : target) {
    if (!(t >= 0.0)) throw NumericError("cross_entropy: negative target");
    mass += t;
  }
  if (std::abs(mass - 1.0) > 1e-9) {
    throw NumericError("cross_entropy: target does not sum to 1");
  }
  CrossEntropyResult out;
  out.grad_logits.resize(probs.size());
  for (std::size_t c = 0; c < probs.size(); ++c) {
    if (target[c] > 0.0) {
      out.loss -= target[c] * std::log(std::max(probs[c], kLogEpsilon));
    }
    out.grad_logits[c] = probs[c] - target[c];
  }
  return out;
}

void LossConfig::validate() const {
  if (!(tau > 0.0)) throw ConfigError("tau must be positive");
  if (!(lambda >= 0.0)) throw ConfigError("lambda must be nonnegative");
  if (!(alpha >= 0.0 && alpha < 1.0)) {
    throw ConfigError("alpha must lie in [0, 1)");
  }
  if (classes < 2) throw ConfigError("class count must be >= 2");
}

BatchCrossEntropy batch_cross_entropy(const Matrix& logits,
                                      std::span<const int> labels,
                                      double alpha) {
  const Eigen::Index rows = logits.rows();
  if (static_cast<std::size_t>(rows) != labels.size() || rows == 0) {
    throw NumericError("batch_cross_entropy: logits/labels size mismatch");
  }
  const int classes = static_cast<int>(logits.cols());
  const Matrix probs = softmax_rows(logits);
  BatchCrossEntropy out;
  out.grad_logits.resize(rows, logits.cols());
  const double inv_rows = 1.0 / static_cast<double>(rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const std::vector<double> target =
        smoothed_targets(labels[static_cast<std::size_t>(i)], alpha, classes);
    const CrossEntropyResult ce = cross_entropy(
        std::span<const double>(probs.row(i).data(),
                                static_cast<std::size_t>(classes)),
        target);
    out.loss += ce.loss * inv_rows;
    for (int c = 0; c < classes; ++c) {
      out.grad_logits(i, c) = ce.grad_logits[static_cast<std::size_t>(c)] * inv_rows;
    }
  }
  return out;
}

JointLossResult joint_loss(const Matrix& z, const Matrix& logits,
                           std::span<const int> labels, const LossConfig& cfg) {
  cfg.validate();
  if (z.rows() != logits.rows()) {
    throw NumericError("joint_loss: projection and prediction batches differ");
  }
  if (logits.cols() != cfg.classes) {
    throw NumericError("joint_loss: logits width differs from class count");
  }
  NtXentResult contrastive = nt_xent(z, cfg.tau);
  BatchCrossEntropy ce = batch_cross_entropy(logits, labels, cfg.alpha);

  JointLossResult out;
  out.contrastive = contrastive.loss;
  out.cross_entropy = ce.loss;
  // Each anchor carries the CE of both views of its pair, so every view's CE
  // enters the mean over anchors twice.
  out.total = contrastive.loss + 2.0 * cfg.lambda * ce.loss;
  out.grad_z = std::move(contrastive.grad);
  out.grad_logits = (2.0 * cfg.lambda) * ce.grad_logits;
  return out;
}

}  // namespace fishforge

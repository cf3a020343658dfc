#pragma once

// Joint contrastive + classification objective:
//
//   L = mean_i [ NT-Xent(i) + lambda (CE(i) + CE(j(i))) ]
//     = mean_i NT-Xent(i) + 2 lambda mean_i CE(i)
//
// over a batch of 2N views where rows 2k and 2k+1 are the two augmented
// views i, j of patch k and CE is the smoothed cross entropy of a view's
// softmax. All gradients are analytic.

#include <span>
#include <vector>

#include <Eigen/Core>

namespace fishforge {

using Matrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::Matrix<double, 1, Eigen::Dynamic>;

inline constexpr double kLogEpsilon = 1e-12;

/// Index of the positive partner of view `i` (2k <-> 2k+1).
inline Eigen::Index positive_of(Eigen::Index i) { return i ^ 1; }

/// u.v / (|u| |v|). Throws NumericError for a zero vector or size mismatch.
double cosine_sim(std::span<const double> u, std::span<const double> v);

struct NtXentResult {
  double loss = 0.0;                // mean over the 2N anchors
  std::vector<double> per_anchor;   // one term per anchor view
  Matrix grad;                      // d loss / d Z, same shape as Z
};

/// NT-Xent over the rows of `z` (2N x D) at temperature `tau`.
NtXentResult nt_xent(const Matrix& z, double tau);

/// [1 - alpha at `label`, alpha / (C - 1) elsewhere].
std::vector<double> smoothed_targets(int label, double alpha, int classes);

/// Numerically stable softmax of one logit row.
std::vector<double> softmax(std::span<const double> logits);
Matrix softmax_rows(const Matrix& logits);

struct CrossEntropyResult {
  double loss = 0.0;
  std::vector<double> grad_logits;  // probs - target
};

/// -sum_c target_c log(max(probs_c, 1e-12)); the gradient is taken with
/// respect to the logits that produced `probs` through softmax. Throws
/// NumericError when `target` is not a probability vector.
CrossEntropyResult cross_entropy(std::span<const double> probs,
                                 std::span<const double> target);

struct LossConfig {
  double tau = 0.05;
  double lambda = 0.5;
  double alpha = 0.01;
  int classes = 3;

  void validate() const;
};

struct BatchCrossEntropy {
  double loss = 0.0;   // mean over rows
  Matrix grad_logits;  // d mean / d logits
};

/// Mean smoothed cross entropy over the rows of `logits`.
BatchCrossEntropy batch_cross_entropy(const Matrix& logits,
                                      std::span<const int> labels,
                                      double alpha);

struct JointLossResult {
  double total = 0.0;
  double contrastive = 0.0;
  double cross_entropy = 0.0;  // unweighted mean CE over views
  Matrix grad_z;
  Matrix grad_logits;  // already scaled by 2 lambda
};

JointLossResult joint_loss(const Matrix& z, const Matrix& logits,
                           std::span<const int> labels, const LossConfig& cfg);

}  // namespace fishforge

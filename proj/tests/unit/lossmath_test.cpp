#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "fishforge/error.hpp"
#include "fishforge/lossmath.hpp"
#include "fishforge/rng.hpp"
#include "oracles/oracles.hpp"

namespace fishforge {
namespace {

// Values frozen from a 30-digit evaluation.
constexpr double kMinEntropy001 = 0.0629330061604467935;
constexpr double kPairsE1E2 = 0.551444713932051089;

Matrix random_matrix(Rng& rng, int rows, int cols) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m;
}

oracle::Rows to_rows(const Matrix& m) {
  oracle::Rows rows(m.rows(), std::vector<double>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) rows[r][c] = m(r, c);
  }
  return rows;
}

std::vector<double> flat(const Matrix& m) {
  return std::vector<double>(m.data(), m.data() + m.size());
}

Matrix from_flat(const std::vector<double>& v, Eigen::Index rows, Eigen::Index cols) {
  Matrix m(rows, cols);
  std::copy(v.begin(), v.end(), m.data());
  return m;
}

TEST(CosineSim, UnitVectors) {
  const std::vector<double> e1{1, 0}, e2{0, 1}, m1{-1, 0};
  EXPECT_DOUBLE_EQ(cosine_sim(e1, e1), 1.0);
  EXPECT_DOUBLE_EQ(cosine_sim(e1, e2), 0.0);
  EXPECT_DOUBLE_EQ(cosine_sim(e1, m1), -1.0);
}

TEST(CosineSim, ZeroVectorThrows) {
  const std::vector<double> z{0, 0}, e1{1, 0};
  EXPECT_THROW(cosine_sim(z, e1), NumericError);
  EXPECT_THROW(cosine_sim(e1, std::vector<double>{1, 0, 0}), NumericError);
}

TEST(NtXent, SinglePairIsZero) {
  Matrix z(2, 3);
  z << 1, 2, 3, -1, 0.5, 2;
  EXPECT_NEAR(nt_xent(z, 0.05).loss, 0.0, 1e-12);
}

TEST(NtXent, IdenticalRowsGiveLog3) {
  Matrix z = Matrix::Constant(4, 5, 0.7);
  EXPECT_NEAR(nt_xent(z, 0.05).loss, std::log(3.0), 1e-12);
}

TEST(NtXent, OrthogonalPairs) {
  Matrix z(4, 2);
  z << 1, 0, 1, 0, 0, 1, 0, 1;
  const NtXentResult r = nt_xent(z, 1.0);
  for (double v : r.per_anchor) EXPECT_NEAR(v, kPairsE1E2, 1e-12);
  EXPECT_NEAR(r.loss, kPairsE1E2, 1e-12);
}

TEST(NtXent, RejectsZeroRowAndOddBatch) {
  Matrix z = Matrix::Ones(4, 3);
  z.row(2).setZero();
  EXPECT_THROW(nt_xent(z, 0.1), NumericError);
  EXPECT_THROW(nt_xent(Matrix::Ones(3, 3), 0.1), NumericError);
}

TEST(NtXent, MatchesNaiveOracle) {
  Rng rng(11);
  for (int t = 0; t < 50; ++t) {
    const int n = 1 + static_cast<int>(rng.uniform_int(0, 7));
    const int d = 1 + static_cast<int>(rng.uniform_int(0, 15));
    const double tau = rng.uniform(0.05, 1.0);
    const Matrix z = random_matrix(rng, 2 * n, d);
    EXPECT_NEAR(nt_xent(z, tau).loss,
                static_cast<double>(oracle::nt_xent(to_rows(z), tau)), 1e-10);
  }
}

TEST(NtXent, RowScaleInvariance) {
  Rng rng(5);
  Matrix z = random_matrix(rng, 6, 4);
  const double before = nt_xent(z, 0.2).loss;
  z.row(3) *= 7.5;
  EXPECT_NEAR(nt_xent(z, 0.2).loss, before, 1e-12);
}

TEST(NtXent, PairPermutationKeepsMean) {
  Rng rng(6);
  const Matrix z = random_matrix(rng, 6, 4);
  Matrix swapped = z;
  swapped.row(0) = z.row(4);
  swapped.row(1) = z.row(5);
  swapped.row(4) = z.row(0);
  swapped.row(5) = z.row(1);
  const NtXentResult a = nt_xent(z, 0.3);
  const NtXentResult b = nt_xent(swapped, 0.3);
  EXPECT_NEAR(a.loss, b.loss, 1e-12);
  EXPECT_NEAR(a.per_anchor[0], b.per_anchor[4], 1e-12);
  EXPECT_NEAR(a.per_anchor[5], b.per_anchor[1], 1e-12);
}

TEST(NtXent, GradientMatchesFiniteDifferences) {
  Rng rng(21);
  for (int t = 0; t < 20; ++t) {
    const int n = 1 + static_cast<int>(rng.uniform_int(0, 3));
    const int d = 2 + static_cast<int>(rng.uniform_int(0, 6));
    const double tau = rng.uniform(0.1, 1.0);
    const Matrix z = random_matrix(rng, 2 * n, d);
    const auto f = [&](const std::vector<double>& v) {
      return nt_xent(from_flat(v, z.rows(), z.cols()), tau).loss;
    };
    EXPECT_LT(oracle::relative_error(flat(nt_xent(z, tau).grad),
                                     oracle::numeric_gradient(f, flat(z))),
              1e-6);
  }
}

TEST(SmoothedTargets, Examples) {
  EXPECT_EQ(smoothed_targets(0, 0.0, 3), (std::vector<double>{1, 0, 0}));
  const auto t = smoothed_targets(0, 0.01, 3);
  EXPECT_DOUBLE_EQ(t[0], 0.99);
  EXPECT_DOUBLE_EQ(t[1], 0.005);
  EXPECT_DOUBLE_EQ(t[2], 0.005);
  const auto u = smoothed_targets(2, 0.3, 3);
  EXPECT_NEAR(u[0], 0.15, 1e-15);
  EXPECT_NEAR(u[1], 0.15, 1e-15);
  EXPECT_NEAR(u[2], 0.7, 1e-15);
  EXPECT_THROW(smoothed_targets(3, 0.1, 3), NumericError);
  EXPECT_THROW(smoothed_targets(-1, 0.1, 3), NumericError);
}

TEST(CrossEntropy, UniformProbsGiveLog3) {
  const std::vector<double> p(3, 1.0 / 3.0);
  EXPECT_NEAR(cross_entropy(p, smoothed_targets(1, 0.2, 3)).loss, std::log(3.0), 1e-12);
}

TEST(CrossEntropy, TargetEqualsProbsGivesMinEntropy) {
  const std::vector<double> p{0.99, 0.005, 0.005};
  EXPECT_NEAR(cross_entropy(p, p).loss, kMinEntropy001, 1e-12);
}

TEST(CrossEntropy, NearOneHotIsNearZero) {
  const double eps = 1e-13;
  const std::vector<double> p{1 - 2 * eps, eps, eps};
  EXPECT_NEAR(cross_entropy(p, smoothed_targets(0, 0.0, 3)).loss, 0.0, 1e-12);
}

TEST(CrossEntropy, GradientIsProbsMinusTarget) {
  const std::vector<double> p{0.2, 0.5, 0.3};
  const auto y = smoothed_targets(1, 0.1, 3);
  const auto r = cross_entropy(p, y);
  for (int c = 0; c < 3; ++c) EXPECT_DOUBLE_EQ(r.grad_logits[c], p[c] - y[c]);
  EXPECT_THROW(cross_entropy(p, std::vector<double>{0.5, 0.2, 0.2}), NumericError);
}

TEST(Softmax, RowsSumToOneAndStable) {
  Matrix logits(2, 3);
  logits << 1000, 1001, 999, -5, 0, 5;
  const Matrix p = softmax_rows(logits);
  for (int r = 0; r < 2; ++r) EXPECT_NEAR(p.row(r).sum(), 1.0, 1e-12);
  EXPECT_TRUE(p.allFinite());
}

TEST(JointLoss, LambdaZeroIsContrastiveOnly) {
  Rng rng(3);
  const Matrix z = random_matrix(rng, 4, 5);
  const Matrix logits = random_matrix(rng, 4, 3);
  const std::vector<int> labels{0, 0, 2, 2};
  LossConfig cfg;
  cfg.lambda = 0.0;
  const JointLossResult r = joint_loss(z, logits, labels, cfg);
  EXPECT_DOUBLE_EQ(r.total, nt_xent(z, cfg.tau).loss);
  EXPECT_TRUE(r.grad_logits.isZero());
}

TEST(JointLoss, DefaultsMatchMethod) {
  const LossConfig cfg;
  EXPECT_DOUBLE_EQ(cfg.tau, 0.05);
  EXPECT_DOUBLE_EQ(cfg.lambda, 0.5);
  EXPECT_DOUBLE_EQ(cfg.alpha, 0.01);
  EXPECT_EQ(cfg.classes, 3);
}

TEST(JointLoss, MatchesPerAnchorOracle) {
  Rng rng(8);
  for (int t = 0; t < 30; ++t) {
    const int n = 1 + static_cast<int>(rng.uniform_int(0, 4));
    const Matrix z = random_matrix(rng, 2 * n, 6);
    const Matrix logits = random_matrix(rng, 2 * n, 3) * 3.0;
    std::vector<int> labels;
    for (int k = 0; k < n; ++k) {
      const int y = static_cast<int>(rng.uniform_int(0, 2));
      labels.push_back(y);
      labels.push_back(y);
    }
    LossConfig cfg;
    cfg.tau = rng.uniform(0.05, 0.5);
    cfg.lambda = rng.uniform(0.0, 2.0);
    const double expected = static_cast<double>(oracle::joint_loss(
        to_rows(z), to_rows(logits), labels, cfg.tau, cfg.lambda, cfg.alpha));
    EXPECT_NEAR(joint_loss(z, logits, labels, cfg).total, expected, 1e-10);
  }
}

TEST(JointLoss, GradientsMatchFiniteDifferences) {
  Rng rng(99);
  for (int t = 0; t < 20; ++t) {
    const int n = 1 + static_cast<int>(rng.uniform_int(0, 3));
    const int d = 2 + static_cast<int>(rng.uniform_int(0, 6));
    const Matrix z = random_matrix(rng, 2 * n, d);
    const Matrix logits = random_matrix(rng, 2 * n, 3);
    std::vector<int> labels;
    for (int i = 0; i < 2 * n; ++i) labels.push_back(static_cast<int>(rng.uniform_int(0, 2)));
    LossConfig cfg;
    cfg.tau = rng.uniform(0.1, 1.0);
    const JointLossResult r = joint_loss(z, logits, labels, cfg);

    const auto fz = [&](const std::vector<double>& v) {
      return joint_loss(from_flat(v, z.rows(), z.cols()), logits, labels, cfg).total;
    };
    const auto fl = [&](const std::vector<double>& v) {
      return joint_loss(z, from_flat(v, logits.rows(), logits.cols()), labels, cfg).total;
    };
    EXPECT_LT(oracle::relative_error(flat(r.grad_z), oracle::numeric_gradient(fz, flat(z))),
              1e-6);
    EXPECT_LT(oracle::relative_error(flat(r.grad_logits),
                                     oracle::numeric_gradient(fl, flat(logits))),
              1e-6);
  }
}

TEST(LossConfig, Validation) {
  LossConfig cfg;
  cfg.tau = 0.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.alpha = 1.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.classes = 1;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.lambda = -1;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

}  // namespace
}  // namespace fishforge

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "fishforge/error.hpp"
#include "fishforge/rng.hpp"
#include "fishforge/uncert.hpp"
#include "oracles/oracles.hpp"

namespace fishforge {
namespace {

constexpr double kMinEntropy001 = 0.0629330061604467935;
constexpr double kUniformNorm001 = 0.942715909143212917;
constexpr double kOneHotRaw001 = -0.0572840908567870827;
constexpr double kSplitFiveFive = 0.630929753571457437;

PredictionRecord rec(std::int64_t id, int label, int predicted, double cert) {
  PredictionRecord r;
  r.id = id;
  r.true_label = label;
  r.probs.assign(3, 0.0);
  r.probs[predicted] = 1.0;
  r.certainty = cert;
  return r;
}

DatasetManifest manifest_with(const std::vector<std::pair<int, ClassId>>& rows) {
  DatasetManifest m;
  std::int64_t id = 0;
  for (auto [green, cls] : rows) {
    ManifestEntry e;
    e.id = id++;
    e.file = "x.png";
    e.label.class_id = cls;
    e.label.n_green = green;
    e.label.n_red = 2;
    m.entries.push_back(e);
  }
  return m;
}

AnnotationSet annotator(std::string id, const std::vector<int>& labels) {
  AnnotationSet s;
  s.annotator_id = std::move(id);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    s.annotations.push_back({static_cast<std::int64_t>(i), labels[i], "2024-01-01T00:00:00Z"});
  }
  return s;
}

TEST(Entropy, Examples) {
  EXPECT_EQ(entropy(std::vector<double>{1, 0, 0}), 0.0);
  EXPECT_NEAR(entropy(std::vector<double>(3, 1.0 / 3)), std::log(3.0), 1e-12);
  EXPECT_NEAR(entropy(std::vector<double>{0.5, 0.5, 0}), std::log(2.0), 1e-12);
}

TEST(Entropy, RejectsNonDistributions) {
  EXPECT_THROW(entropy(std::vector<double>{0.5, 0.4}), NumericError);
  EXPECT_THROW(entropy(std::vector<double>{1.2, -0.2}), NumericError);
  EXPECT_NO_THROW(entropy(std::vector<double>{0.5, 0.5 + 5e-10}));
}

TEST(MinEntropy, Examples) {
  EXPECT_EQ(min_entropy(0.0, 3), 0.0);
  EXPECT_NEAR(min_entropy(0.01, 3), kMinEntropy001, 1e-15);
  EXPECT_NEAR(min_entropy(2.0 / 3.0, 3), std::log(3.0), 1e-12);
  EXPECT_NEAR(min_entropy(0.75, 4), std::log(4.0), 1e-12);
}

TEST(NormalizedEntropy, Examples) {
  const std::vector<double> uniform(3, 1.0 / 3);
  EXPECT_NEAR(normalized_entropy(uniform, 0.01, 3).raw, kUniformNorm001, 1e-12);

  const std::vector<double> target{0.99, 0.005, 0.005};
  const auto t = normalized_entropy(target, 0.01, 3);
  EXPECT_NEAR(t.raw, 0.0, 1e-15);
  EXPECT_EQ(t.clamped, 0.0);

  const auto o = normalized_entropy(std::vector<double>{1, 0, 0}, 0.01, 3);
  EXPECT_NEAR(o.raw, kOneHotRaw001, 1e-12);
  EXPECT_EQ(o.clamped, 0.0);
  EXPECT_EQ(certainty(std::vector<double>{1, 0, 0}, 0.01, 3), 1.0);
}

TEST(NormalizedEntropy, MonotoneInEntropyAndBounded) {
  Rng rng(4);
  for (int t = 0; t < 500; ++t) {
    std::vector<double> p(3), q(3);
    double sp = 0, sq = 0;
    for (int c = 0; c < 3; ++c) {
      p[c] = rng.uniform();
      q[c] = rng.uniform();
      sp += p[c];
      sq += q[c];
    }
    for (int c = 0; c < 3; ++c) {
      p[c] /= sp;
      q[c] /= sq;
    }
    const bool p_le_q = entropy(p) <= entropy(q);
    const auto np = normalized_entropy(p, 0.01, 3);
    const auto nq = normalized_entropy(q, 0.01, 3);
    EXPECT_EQ(p_le_q, np.raw <= nq.raw);
    const double c = certainty(p, 0.01, 3);
    EXPECT_GE(c, 0.0);
    EXPECT_LE(c, 1.0);
    std::vector<oracle::Real> lp(p.begin(), p.end());
    EXPECT_NEAR(np.raw, static_cast<double>(oracle::normalized_entropy(lp, 0.01L)), 1e-12);
  }
}

TEST(Argmax, TiesGoToLowestIndex) {
  EXPECT_EQ(argmax(std::vector<double>(3, 1.0 / 3)), 0);
  EXPECT_EQ(argmax(std::vector<double>{0.2, 0.4, 0.4}), 1);
  EXPECT_EQ(argmax(std::vector<double>{0.1, 0.2, 0.7}), 2);
}

TEST(MakeRecord, UniformIsClassZeroWithFloorCertainty) {
  // The smoothing floor keeps a uniform prediction slightly above zero.
  const PredictionRecord r = make_record(5, 2, std::vector<double>(3, 1.0 / 3), 0.01);
  EXPECT_EQ(r.predicted(), 0);
  EXPECT_NEAR(r.certainty, 1.0 - 0.94272, 1e-4);
  EXPECT_FALSE(r.correct());
}

TEST(Ece, AllCorrectAndCertainIsZero) {
  std::vector<PredictionRecord> rs;
  for (int i = 0; i < 10; ++i) rs.push_back(rec(i, i % 3, i % 3, 1.0));
  const CalibrationReport r = expected_calibration_error(rs, 10);
  EXPECT_EQ(r.ece, 0.0);
  EXPECT_EQ(r.bins[9].count, 10u);
}

TEST(Ece, FourRecordSingleBin) {
  std::vector<PredictionRecord> rs{rec(0, 0, 0, 0.8), rec(1, 1, 1, 0.8),
                                   rec(2, 0, 1, 0.8), rec(3, 2, 0, 0.8)};
  const CalibrationReport r = expected_calibration_error(rs, 10);
  EXPECT_NEAR(r.ece, 0.3, 1e-15);
  EXPECT_NEAR(r.pos_ece, 0.3, 1e-15);
  EXPECT_EQ(r.neg_ece, 0.0);
  EXPECT_EQ(r.bins[8].count, 4u);
  EXPECT_NEAR(r.bins[8].mean_certainty, 0.8, 1e-15);
  EXPECT_EQ(r.bins[8].accuracy, 0.5);
}

TEST(Ece, IdentityAndOracleOnRandomSets) {
  Rng rng(17);
  for (int t = 0; t < 200; ++t) {
    const int n = 1 + static_cast<int>(rng.uniform_int(0, 60));
    const int bins = 1 + static_cast<int>(rng.uniform_int(0, 14));
    std::vector<PredictionRecord> rs;
    std::vector<double> cert;
    std::vector<bool> correct;
    for (int i = 0; i < n; ++i) {
      const double c = rng.bernoulli(0.1) ? 1.0 : rng.uniform();
      const int label = static_cast<int>(rng.uniform_int(0, 2));
      const int pred = rng.bernoulli(0.7) ? label : (label + 1) % 3;
      rs.push_back(rec(i, label, pred, c));
      cert.push_back(c);
      correct.push_back(pred == label);
    }
    const CalibrationReport r = expected_calibration_error(rs, bins);
    EXPECT_EQ(r.ece, r.pos_ece + r.neg_ece);
    std::size_t total = 0;
    for (const auto& b : r.bins) total += b.count;
    EXPECT_EQ(total, rs.size());
    const oracle::EceParts o = oracle::ece(cert, correct, bins);
    EXPECT_NEAR(r.ece, static_cast<double>(o.ece), 1e-12);
    EXPECT_NEAR(r.pos_ece, static_cast<double>(o.pos), 1e-12);
    EXPECT_NEAR(r.neg_ece, static_cast<double>(o.neg), 1e-12);
  }
}

TEST(Ece, RejectsEmptyAndBadBins) {
  EXPECT_THROW(expected_calibration_error({}, 10), ConfigError);
  std::vector<PredictionRecord> rs{rec(0, 0, 0, 0.5)};
  EXPECT_THROW(expected_calibration_error(rs, 0), ConfigError);
}

TEST(Condition, HandSortedExample) {
  std::vector<PredictionRecord> rs{rec(0, 0, 0, 0.9), rec(1, 0, 1, 0.8),
                                   rec(2, 1, 1, 0.7), rec(3, 2, 0, 0.1)};
  const std::vector<double> grid{100, 50};
  const auto rows = condition_on_certainty(rs, grid);
  EXPECT_EQ(rows[0].accuracy, 0.5);
  EXPECT_EQ(rows[1].kept, 2u);
  EXPECT_EQ(rows[1].accuracy, 0.5);
  EXPECT_EQ(rows[1].retained_ids, (std::vector<std::int64_t>{0, 1}));
  EXPECT_EQ(rows[1].class_share, (std::vector<double>{1.0, 0.0, 0.0}));
}

TEST(Condition, FullGridNestedAndFullEqualsAccuracy) {
  Rng rng(2);
  std::vector<PredictionRecord> rs;
  for (int i = 0; i < 97; ++i) {
    const int label = static_cast<int>(rng.uniform_int(0, 2));
    // Coarse certainties force ties, which must break by id.
    const double c = std::round(rng.uniform() * 5) / 5;
    rs.push_back(rec(i, label, rng.bernoulli(0.8) ? label : 0, c));
  }
  const auto grid = default_retain_grid();
  EXPECT_EQ(grid, (std::vector<double>{100, 95, 90, 75, 50, 40, 30, 20, 15, 10, 5}));
  const auto rows = condition_on_certainty(rs, grid);
  EXPECT_EQ(rows[0].accuracy, accuracy(rs));
  EXPECT_EQ(rows[0].kept, 97u);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const std::set<std::int64_t> bigger(rows[i - 1].retained_ids.begin(),
                                        rows[i - 1].retained_ids.end());
    for (std::int64_t id : rows[i].retained_ids) EXPECT_TRUE(bigger.count(id));
    EXPECT_EQ(rows[i].kept, static_cast<std::size_t>(std::ceil(grid[i] * 97 / 100 - 1e-9)));
  }
  // Shuffled input gives the same table.
  std::vector<PredictionRecord> shuffled(rs.rbegin(), rs.rend());
  const auto again = condition_on_certainty(shuffled, grid);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i].retained_ids, again[i].retained_ids);
  }
}

TEST(Condition, ExactProductsDoNotRoundUp) {
  std::vector<PredictionRecord> rs;
  for (int i = 0; i < 20; ++i) rs.push_back(rec(i, 0, 0, 0.5));
  const std::vector<double> grid{5, 15, 50};
  const auto rows = condition_on_certainty(rs, grid);
  EXPECT_EQ(rows[0].kept, 1u);
  EXPECT_EQ(rows[1].kept, 3u);
  EXPECT_EQ(rows[2].kept, 10u);
  const std::vector<double> bad{0};
  EXPECT_THROW(condition_on_certainty(rs, bad), ConfigError);
}

TEST(Agreement, UnanimousAndSplit) {
  const DatasetManifest m = manifest_with({{2, ClassId::kNormal}, {8, ClassId::kAmplified}});
  std::vector<AnnotationSet> sets;
  for (int a = 0; a < 10; ++a) {
    sets.push_back(annotator("a" + std::to_string(a), {0, a < 5 ? 1 : 2}));
  }
  const AgreementReport r = agreement_entropy(sets, m);
  ASSERT_EQ(r.images.size(), 2u);
  EXPECT_EQ(r.images[0].certainty, 1.0);
  EXPECT_NEAR(r.images[1].normalized_entropy, kSplitFiveFive, 1e-12);
  EXPECT_NEAR(r.images[1].certainty, 1.0 - kSplitFiveFive, 1e-12);
  EXPECT_EQ(r.images[1].votes, (std::vector<int>{0, 5, 5}));
  EXPECT_NEAR(r.mean_accuracy, 0.75, 1e-15);
  EXPECT_NEAR(r.std_accuracy, 0.25, 1e-15);
}

TEST(Agreement, PermutationInvariant) {
  const DatasetManifest m = manifest_with(
      {{2, ClassId::kNormal}, {5, ClassId::kGain}, {9, ClassId::kAmplified}});
  std::vector<AnnotationSet> sets{annotator("x", {0, 1, 2}), annotator("y", {0, 2, 2}),
                                  annotator("z", {1, 1, 1})};
  const AgreementReport a = agreement_entropy(sets, m);
  std::reverse(sets.begin(), sets.end());
  const AgreementReport b = agreement_entropy(sets, m);
  for (std::size_t i = 0; i < a.images.size(); ++i) {
    EXPECT_EQ(a.images[i].normalized_entropy, b.images[i].normalized_entropy);
  }
  EXPECT_NEAR(a.mean_accuracy, b.mean_accuracy, 1e-15);
}

TEST(Agreement, PublishedAnnotatorSpread) {
  // Published per-annotator accuracies: mean 88.5 +- 1.6 (population std).
  const std::vector<double> published{89.3, 90.3, 88.0, 84.7, 88.3,
                                      89.0, 89.0, 88.9, 86.9, 90.6};
  const int n_images = 1000;
  std::vector<std::pair<int, ClassId>> rows(n_images, {2, ClassId::kNormal});
  const DatasetManifest m = manifest_with(rows);
  std::vector<AnnotationSet> sets;
  for (std::size_t a = 0; a < published.size(); ++a) {
    const int right = static_cast<int>(std::lround(published[a] * 10));
    std::vector<int> labels(n_images, 0);
    for (int i = right; i < n_images; ++i) labels[i] = 1;
    sets.push_back(annotator("expert" + std::to_string(a), labels));
  }
  const AgreementReport r = agreement_entropy(sets, m);
  EXPECT_NEAR(100 * r.mean_accuracy, 88.5, 0.05);
  EXPECT_NEAR(100 * r.std_accuracy, 1.6, 0.05);
}

TEST(Agreement, RejectsBadInput) {
  const DatasetManifest m = manifest_with({{2, ClassId::kNormal}, {3, ClassId::kGain}});
  std::vector<AnnotationSet> one{annotator("a", {0, 1})};
  EXPECT_THROW(agreement_entropy(one, m), ConfigError);

  std::vector<AnnotationSet> gap{annotator("a", {0, 1}), annotator("b", {0})};
  EXPECT_THROW(agreement_entropy(gap, m), ConfigError);

  std::vector<AnnotationSet> unknown{annotator("a", {0, 1, 1}), annotator("b", {0, 1, 1})};
  EXPECT_THROW(agreement_entropy(unknown, m), ConfigError);

  std::vector<AnnotationSet> dup{annotator("a", {0, 1}), annotator("a", {0, 1})};
  EXPECT_THROW(agreement_entropy(dup, m), ConfigError);

  std::vector<AnnotationSet> twice{annotator("a", {0, 1}), annotator("b", {0, 1})};
  twice[1].annotations.push_back({0, 1, ""});
  EXPECT_THROW(agreement_entropy(twice, m), ConfigError);
}

TEST(CertaintyByCount, GroupsFollowManifest) {
  const DatasetManifest m = manifest_with({{2, ClassId::kNormal},
                                           {8, ClassId::kAmplified},
                                           {8, ClassId::kAmplified},
                                           {20, ClassId::kAmplified}});
  std::vector<PredictionRecord> rs{rec(0, 0, 0, 0.4), rec(1, 2, 2, 0.4),
                                   rec(2, 2, 2, 0.4), rec(3, 2, 2, 0.4)};
  const auto rows = certainty_by_signal_count(rs, m);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].n_green, 2);
  EXPECT_EQ(rows[1].n_green, 8);
  EXPECT_EQ(rows[1].model_count, 2u);
  EXPECT_EQ(rows[2].n_green, 20);
  for (const auto& r : rows) {
    EXPECT_DOUBLE_EQ(r.model_mean, 0.4);
    EXPECT_EQ(r.model_std, 0.0);
  }
  std::vector<PredictionRecord> stray{rec(9, 0, 0, 0.4)};
  EXPECT_THROW(certainty_by_signal_count(stray, m), ConfigError);
}

TEST(CertaintyByCount, IncludesHumans) {
  const DatasetManifest m = manifest_with({{7, ClassId::kGain}, {8, ClassId::kAmplified}});
  std::vector<AnnotationSet> sets{annotator("a", {1, 1}), annotator("b", {1, 2})};
  const AgreementReport humans = agreement_entropy(sets, m);
  std::vector<PredictionRecord> rs{rec(0, 1, 1, 0.9), rec(1, 2, 2, 0.2)};
  const auto rows = certainty_by_signal_count(rs, m, &humans);
  EXPECT_EQ(rows[0].human_mean, 1.0);
  EXPECT_NEAR(rows[1].human_mean, 1.0 - kSplitFiveFive, 1e-12);
  EXPECT_EQ(rows[1].human_count, 1u);
}

}  // namespace
}  // namespace fishforge

#pragma once

// Aleatoric uncertainty from softmax outputs, calibration error with its
// over/under-confidence split, certainty-conditioned accuracy and
// annotator agreement.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fishforge/dataset.hpp"

namespace fishforge {

/// Shannon entropy in nats with 0 log 0 = 0. Throws NumericError unless
/// p >= 0 and sum(p) = 1 within 1e-9.
double entropy(std::span<const double> p);

/// Entropy of the label-smoothed one-hot vector [1 - alpha, alpha/(C-1), ...].
double min_entropy(double alpha, int classes);

struct NormalizedEntropy {
  double raw = 0.0;      // (H(p) - H_min(alpha, C)) / log C, may be < 0
  double clamped = 0.0;  // raw clamped to [0, 1]
};

NormalizedEntropy normalized_entropy(std::span<const double> p, double alpha,
                                     int classes);

/// 1 - clamp(H_norm, 0, 1).
double certainty(std::span<const double> p, double alpha, int classes);

/// Index of the largest entry; ties go to the lowest index.
int argmax(std::span<const double> p);

struct PredictionRecord {
  std::int64_t id = 0;
  int true_label = 0;
  std::vector<double> probs;
  double certainty = 0.0;

  int predicted() const { return argmax(probs); }
  bool correct() const { return predicted() == true_label; }
};

/// Builds a record, computing certainty from `probs`.
PredictionRecord make_record(std::int64_t id, int true_label,
                             std::vector<double> probs, double alpha);

double accuracy(std::span<const PredictionRecord> records);

struct CalibrationBin {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t count = 0;
  double mean_certainty = 0.0;  // 0 for empty bins
  double accuracy = 0.0;        // 0 for empty bins
};

struct CalibrationReport {
  std::vector<CalibrationBin> bins;
  std::size_t total = 0;
  double ece = 0.0;
  double pos_ece = 0.0;  // overconfidence: certainty above accuracy
  double neg_ece = 0.0;  // underconfidence: accuracy above certainty
};

/// Equal-width bins over certainty in [0, 1]; bin confidence is the mean
/// certainty of its members. Throws ConfigError on empty input or K < 1.
CalibrationReport expected_calibration_error(
    std::span<const PredictionRecord> records, int bins = 10);

struct ConditioningRow {
  double retain_percent = 0.0;
  std::size_t kept = 0;
  double accuracy = 0.0;
  double min_certainty = 0.0;
  std::vector<double> class_share;  // by true class, over the kept records
  std::vector<std::int64_t> retained_ids;
};

/// The retain grid used for conditioning tables, in percent.
std::vector<double> default_retain_grid();

/// Sorts by certainty (descending, ties by ascending id) and keeps the top
/// ceil(p n) records for every retain percentage p.
std::vector<ConditioningRow> condition_on_certainty(
    std::span<const PredictionRecord> records,
    std::span<const double> retain_percent, int classes = kNumClasses);

struct Annotation {
  std::int64_t image_id = 0;
  int label = 0;
  std::string timestamp;
};

struct AnnotationSet {
  std::string annotator_id;
  std::vector<Annotation> annotations;
};

/// Parses {annotator_id, annotations: [{image_id, label, timestamp_iso8601}]}.
/// `label` may be a class index or a class name.
AnnotationSet parse_annotation_set(std::string_view json_text);
std::string annotation_set_to_json(const AnnotationSet& set);

struct ImageAgreement {
  std::int64_t image_id = 0;
  int n_green = 0;
  int true_label = 0;
  std::vector<int> votes;             // per class
  double normalized_entropy = 0.0;    // H(votes / n) / log C
  double certainty = 0.0;             // 1 - normalized_entropy
};

struct AnnotatorAccuracy {
  std::string annotator_id;
  std::size_t labeled = 0;
  double accuracy = 0.0;
};

struct AgreementReport {
  std::vector<ImageAgreement> images;  // ascending image id
  std::vector<AnnotatorAccuracy> annotators;
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;  // population standard deviation
};

/// Per-image human certainty from >= 2 annotators that all cover the same
/// image set; every image id must exist in `manifest`.
AgreementReport agreement_entropy(std::span<const AnnotationSet> annotations,
                                  const DatasetManifest& manifest,
                                  int classes = kNumClasses);

struct CountCertaintyRow {
  int n_green = 0;
  std::size_t model_count = 0;
  double model_mean = 0.0;
  double model_std = 0.0;
  std::size_t human_count = 0;
  double human_mean = 0.0;
  double human_std = 0.0;
};

/// Mean/std certainty grouped by the manifest's n_green, for the model and,
/// when given, for the annotators. Throws ConfigError on unknown ids.
std::vector<CountCertaintyRow> certainty_by_signal_count(
    std::span<const PredictionRecord> records, const DatasetManifest& manifest,
    const AgreementReport* humans = nullptr);

}  // namespace fishforge

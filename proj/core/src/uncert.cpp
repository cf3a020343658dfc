#include "fishforge/uncert.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "fishforge/error.hpp"

namespace fishforge {
namespace {

constexpr double kNormTolerance = 1e-9;

void check_classes(int classes) {
  if (classes < 2) throw ConfigError("need at least 2 classes");
}

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

MeanStd population_stats(const std::vector<double>& v) {
  MeanStd out;
  if (v.empty()) return out;
  const double n = static_cast<double>(v.size());
  out.mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : v) ss += (x - out.mean) * (x - out.mean);
  out.std = std::sqrt(ss / n);
  return out;
}

}  // namespace

double entropy(std::span<const double> p) {
  if (p.empty()) throw NumericError("entropy: empty distribution");
  double sum = 0.0;
  double h = 0.0;
  for (double v : p) {
    if (!(v >= 0.0)) throw NumericError("entropy: negative or NaN probability");
    sum += v;
    if (v > 0.0) h -= v * std::log(v);
  }
  if (std::abs(sum - 1.0) > kNormTolerance) {
    throw NumericError("entropy: probabilities sum to " + std::to_string(sum));
  }
  return h;
}

double min_entropy(double alpha, int classes) {
  check_classes(classes);
  if (!(alpha >= 0.0 && alpha < 1.0)) {
    throw ConfigError("label smoothing alpha must lie in [0, 1)");
  }
  double h = 0.0;
  if (alpha < 1.0) h -= (1.0 - alpha) * std::log(1.0 - alpha);
  if (alpha > 0.0) {
    const double q = alpha / (classes - 1);
    h -= alpha * std::log(q);
  }
  return h;
}

NormalizedEntropy normalized_entropy(std::span<const double> p, double alpha,
                                     int classes) {
  if (static_cast<int>(p.size()) != classes) {
    throw NumericError("normalized_entropy: expected " + std::to_string(classes) +
                       " probabilities, got " + std::to_string(p.size()));
  }
  NormalizedEntropy out;
  out.raw = (entropy(p) - min_entropy(alpha, classes)) / std::log(classes);
  out.clamped = std::clamp(out.raw, 0.0, 1.0);
  return out;
}

double certainty(std::span<const double> p, double alpha, int classes) {
  return 1.0 - normalized_entropy(p, alpha, classes).clamped;
}

int argmax(std::span<const double> p) {
  if (p.empty()) throw NumericError("argmax: empty vector");
  int best = 0;
  for (std::size_t i = 1; i < p.size(); ++i) {
    if (p[i] > p[best]) best = static_cast<int>(i);
  }
  return best;
}

PredictionRecord make_record(std::int64_t id, int true_label,
                             std::vector<double> probs, double alpha) {
  PredictionRecord r;
  r.id = id;
  r.true_label = true_label;
  r.certainty = certainty(probs, alpha, static_cast<int>(probs.size()));
  r.probs = std::move(probs);
  return r;
}

double accuracy(std::span<const PredictionRecord> records) {
  if (records.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& r : records) hits += r.correct() ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(records.size());
}

CalibrationReport expected_calibration_error(
    std::span<const PredictionRecord> records, int bins) {
  if (records.empty()) throw ConfigError("ece: no records");
  if (bins < 1) throw ConfigError("ece: bin count must be >= 1");

  CalibrationReport report;
  report.total = records.size();
  report.bins.resize(bins);
  std::vector<double> cert_sum(bins, 0.0);
  std::vector<std::size_t> hits(bins, 0);
  for (int k = 0; k < bins; ++k) {
    report.bins[k].lo = static_cast<double>(k) / bins;
    report.bins[k].hi = static_cast<double>(k + 1) / bins;
  }
  for (const auto& r : records) {
    if (!(r.certainty >= 0.0 && r.certainty <= 1.0)) {
      throw NumericError("ece: certainty outside [0, 1] for id " +
                         std::to_string(r.id));
    }
    const int k = std::min(static_cast<int>(std::floor(r.certainty * bins)),
                           bins - 1);
    report.bins[k].count += 1;
    cert_sum[k] += r.certainty;
    hits[k] += r.correct() ? 1 : 0;
  }

  const double n = static_cast<double>(records.size());
  for (int k = 0; k < bins; ++k) {
    CalibrationBin& b = report.bins[k];
    if (b.count == 0) continue;
    const double cnt = static_cast<double>(b.count);
    b.mean_certainty = cert_sum[k] / cnt;
    b.accuracy = static_cast<double>(hits[k]) / cnt;
    const double gap = b.mean_certainty - b.accuracy;
    const double w = cnt / n;
    const double pos = w * std::max(gap, 0.0);
    const double neg = w * std::max(-gap, 0.0);
    report.pos_ece += pos;
    report.neg_ece += neg;
  }
  report.ece = report.pos_ece + report.neg_ece;
  return report;
}

std::vector<double> default_retain_grid() {
  return {100, 95, 90, 75, 50, 40, 30, 20, 15, 10, 5};
}

std::vector<ConditioningRow> condition_on_certainty(
    std::span<const PredictionRecord> records,
    std::span<const double> retain_percent, int classes) {
  if (records.empty()) throw ConfigError("condition: no records");
  check_classes(classes);

  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (records[a].certainty != records[b].certainty) {
      return records[a].certainty > records[b].certainty;
    }
    return records[a].id < records[b].id;
  });

  const double n = static_cast<double>(records.size());
  std::vector<ConditioningRow> rows;
  rows.reserve(retain_percent.size());
  for (double pct : retain_percent) {
    if (!(pct > 0.0 && pct <= 100.0)) {
      throw ConfigError("retain percentages must lie in (0, 100]");
    }
    ConditioningRow row;
    row.retain_percent = pct;
    // The small offset keeps exact products such as 0.5 * 10 from rounding up.
    row.kept = static_cast<std::size_t>(std::ceil(pct * n / 100.0 - 1e-9));
    row.kept = std::clamp<std::size_t>(row.kept, 1, records.size());
    row.class_share.assign(classes, 0.0);
    std::size_t hits = 0;
    row.min_certainty = 1.0;
    for (std::size_t i = 0; i < row.kept; ++i) {
      const PredictionRecord& r = records[order[i]];
      hits += r.correct() ? 1 : 0;
      if (r.true_label < 0 || r.true_label >= classes) {
        throw ConfigError("condition: label out of range for id " +
                          std::to_string(r.id));
      }
      row.class_share[r.true_label] += 1.0;
      row.min_certainty = std::min(row.min_certainty, r.certainty);
      row.retained_ids.push_back(r.id);
    }
    const double kept = static_cast<double>(row.kept);
    row.accuracy = static_cast<double>(hits) / kept;
    for (double& s : row.class_share) s /= kept;
    rows.push_back(std::move(row));
  }
  return rows;
}

AgreementReport agreement_entropy(std::span<const AnnotationSet> annotations,
                                  const DatasetManifest& manifest, int classes) {
  check_classes(classes);
  if (annotations.size() < 2) {
    throw ConfigError("agreement needs at least 2 annotators, got " +
                      std::to_string(annotations.size()));
  }

  // image id -> label per annotator (by annotator position)
  std::map<std::int64_t, std::vector<int>> votes;
  std::set<std::string> seen_annotators;
  for (std::size_t a = 0; a < annotations.size(); ++a) {
    const AnnotationSet& set = annotations[a];
    if (!seen_annotators.insert(set.annotator_id).second) {
      throw ConfigError("duplicate annotator id '" + set.annotator_id + "'");
    }
    std::set<std::int64_t> mine;
    for (const Annotation& ann : set.annotations) {
      if (ann.label < 0 || ann.label >= classes) {
        throw ConfigError("annotator '" + set.annotator_id +
                          "': label out of range for image " +
                          std::to_string(ann.image_id));
      }
      if (!mine.insert(ann.image_id).second) {
        throw ConfigError("annotator '" + set.annotator_id +
                          "' labeled image " + std::to_string(ann.image_id) +
                          " twice");
      }
      manifest.find(ann.image_id);
      votes[ann.image_id].push_back(ann.label);
    }
  }
  for (const auto& [id, v] : votes) {
    if (v.size() != annotations.size()) {
      throw ConfigError("image " + std::to_string(id) + " labeled by " +
                        std::to_string(v.size()) + " of " +
                        std::to_string(annotations.size()) + " annotators");
    }
  }

  AgreementReport report;
  const double n_ann = static_cast<double>(annotations.size());
  for (const auto& [id, v] : votes) {
    const ManifestEntry& entry = manifest.find(id);
    ImageAgreement img;
    img.image_id = id;
    img.n_green = entry.label.n_green;
    img.true_label = class_index(entry.label.class_id);
    img.votes.assign(classes, 0);
    for (int label : v) img.votes[label] += 1;
    std::vector<double> dist(classes);
    for (int c = 0; c < classes; ++c) dist[c] = img.votes[c] / n_ann;
    img.normalized_entropy = entropy(dist) / std::log(classes);
    img.certainty = 1.0 - img.normalized_entropy;
    report.images.push_back(std::move(img));
  }

  std::vector<double> accs;
  for (const AnnotationSet& set : annotations) {
    AnnotatorAccuracy acc;
    acc.annotator_id = set.annotator_id;
    acc.labeled = set.annotations.size();
    std::size_t hits = 0;
    for (const Annotation& ann : set.annotations) {
      hits += class_index(manifest.find(ann.image_id).label.class_id) == ann.label;
    }
    acc.accuracy = acc.labeled ? static_cast<double>(hits) / acc.labeled : 0.0;
    accs.push_back(acc.accuracy);
    report.annotators.push_back(std::move(acc));
  }
  const MeanStd s = population_stats(accs);
  report.mean_accuracy = s.mean;
  report.std_accuracy = s.std;
  return report;
}

std::vector<CountCertaintyRow> certainty_by_signal_count(
    std::span<const PredictionRecord> records, const DatasetManifest& manifest,
    const AgreementReport* humans) {
  std::map<int, std::vector<double>> model;
  std::map<int, std::vector<double>> human;
  for (const PredictionRecord& r : records) {
    model[manifest.find(r.id).label.n_green].push_back(r.certainty);
  }
  if (humans != nullptr) {
    for (const ImageAgreement& img : humans->images) {
      human[manifest.find(img.image_id).label.n_green].push_back(img.certainty);
    }
  }
  std::set<int> counts;
  for (const auto& [k, v] : model) counts.insert(k);
  for (const auto& [k, v] : human) counts.insert(k);

  std::vector<CountCertaintyRow> rows;
  for (int k : counts) {
    CountCertaintyRow row;
    row.n_green = k;
    if (auto it = model.find(k); it != model.end()) {
      const MeanStd s = population_stats(it->second);
      row.model_count = it->second.size();
      row.model_mean = s.mean;
      row.model_std = s.std;
    }
    if (auto it = human.find(k); it != human.end()) {
      const MeanStd s = population_stats(it->second);
      row.human_count = it->second.size();
      row.human_mean = s.mean;
      row.human_std = s.std;
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace fishforge

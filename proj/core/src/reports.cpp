#include "fishforge/reports.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "fishforge/error.hpp"
#include "json_util.hpp"

namespace fishforge {
namespace {

using detail::json;
using detail::ordered_json;

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t c = line.find(',', pos);
    out.push_back(line.substr(pos, c == std::string_view::npos ? line.npos : c - pos));
    if (c == std::string_view::npos) break;
    pos = c + 1;
  }
  return out;
}

template <typename T>
T parse_field(std::string_view s, std::size_t line_no) {
  T v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw ConfigError("predictions line " + std::to_string(line_no) +
                      ": cannot parse '" + std::string(s) + "'");
  }
  return v;
}

// nlohmann serializes doubles at full precision; route through %.9g so the
// JSON reports agree with the CSV ones.
json number(double v) {
  if (!std::isfinite(v)) return nullptr;
  return json::parse(format_number(v));
}

std::string class_header(const char* prefix, int classes) {
  std::string out;
  for (int c = 0; c < classes; ++c) {
    out += ',';
    out += prefix;
    out += std::string(class_name(class_from_index(c)));
  }
  return out;
}

}  // namespace

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", value);
  return buf;
}

std::string predictions_to_csv(std::span<const PredictionRecord> records) {
  const std::size_t classes = records.empty() ? kNumClasses : records[0].probs.size();
  std::string out = "id,true_label";
  for (std::size_t c = 0; c < classes; ++c) out += ",p" + std::to_string(c);
  out += ",certainty\n";
  for (const PredictionRecord& r : records) {
    if (r.probs.size() != classes) {
      throw NumericError("predictions: inconsistent probability vector length");
    }
    out += std::to_string(r.id) + "," + std::to_string(r.true_label);
    for (double p : r.probs) out += "," + format_number(p);
    out += "," + format_number(r.certainty) + "\n";
  }
  return out;
}

std::vector<PredictionRecord> predictions_from_csv(std::string_view text) {
  std::vector<PredictionRecord> records;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  std::size_t classes = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    const auto fields = split_commas(line);
    if (line_no == 1) {
      if (fields.size() < 5 || fields[0] != "id" || fields[1] != "true_label" ||
          fields.back() != "certainty") {
        throw ConfigError("predictions: bad header '" + std::string(line) + "'");
      }
      classes = fields.size() - 3;
      for (std::size_t c = 0; c < classes; ++c) {
        if (fields[2 + c] != "p" + std::to_string(c)) {
          throw ConfigError("predictions: bad header column '" +
                            std::string(fields[2 + c]) + "'");
        }
      }
      continue;
    }
    if (fields.size() != classes + 3) {
      throw ConfigError("predictions line " + std::to_string(line_no) +
                        ": expected " + std::to_string(classes + 3) + " fields");
    }
    PredictionRecord r;
    r.id = parse_field<std::int64_t>(fields[0], line_no);
    r.true_label = parse_field<int>(fields[1], line_no);
    for (std::size_t c = 0; c < classes; ++c) {
      r.probs.push_back(parse_field<double>(fields[2 + c], line_no));
    }
    r.certainty = parse_field<double>(fields.back(), line_no);
    records.push_back(std::move(r));
  }
  if (classes == 0) throw ConfigError("predictions: missing header");
  return records;
}

std::string calibration_to_json(const CalibrationReport& report) {
  ordered_json j;
  j["bins"] = report.bins.size();
  j["total"] = report.total;
  j["ece"] = number(report.ece);
  j["pos_ece"] = number(report.pos_ece);
  j["neg_ece"] = number(report.neg_ece);
  j["per_bin"] = ordered_json::array();
  for (const CalibrationBin& b : report.bins) {
    ordered_json row;
    row["lo"] = number(b.lo);
    row["hi"] = number(b.hi);
    row["count"] = b.count;
    row["mean_certainty"] = number(b.mean_certainty);
    row["accuracy"] = number(b.accuracy);
    j["per_bin"].push_back(std::move(row));
  }
  return j.dump(2) + "\n";
}

std::string calibration_to_csv(const CalibrationReport& report) {
  std::string out = "bin,lo,hi,count,mean_certainty,accuracy\n";
  for (std::size_t k = 0; k < report.bins.size(); ++k) {
    const CalibrationBin& b = report.bins[k];
    out += std::to_string(k) + "," + format_number(b.lo) + "," +
           format_number(b.hi) + "," + std::to_string(b.count) + "," +
           format_number(b.mean_certainty) + "," + format_number(b.accuracy) +
           "\n";
  }
  return out;
}

std::string conditioning_to_json(std::span<const ConditioningRow> rows) {
  ordered_json j = ordered_json::array();
  for (const ConditioningRow& r : rows) {
    ordered_json row;
    row["retain_percent"] = number(r.retain_percent);
    row["kept"] = r.kept;
    row["accuracy"] = number(r.accuracy);
    row["min_certainty"] = number(r.min_certainty);
    ordered_json share;
    for (std::size_t c = 0; c < r.class_share.size(); ++c) {
      share[std::string(class_name(class_from_index(static_cast<int>(c))))] =
          number(r.class_share[c]);
    }
    row["class_share"] = std::move(share);
    row["retained_ids"] = r.retained_ids;
    j.push_back(std::move(row));
  }
  return j.dump(2) + "\n";
}

std::string conditioning_to_csv(std::span<const ConditioningRow> rows) {
  const int classes =
      rows.empty() ? kNumClasses : static_cast<int>(rows[0].class_share.size());
  std::string out =
      "retain_percent,kept,accuracy,min_certainty" + class_header("share_", classes) + "\n";
  for (const ConditioningRow& r : rows) {
    out += format_number(r.retain_percent) + "," + std::to_string(r.kept) + "," +
           format_number(r.accuracy) + "," + format_number(r.min_certainty);
    for (double s : r.class_share) out += "," + format_number(s);
    out += "\n";
  }
  return out;
}

std::string agreement_images_to_csv(const AgreementReport& report) {
  const int classes = report.images.empty()
                          ? kNumClasses
                          : static_cast<int>(report.images[0].votes.size());
  std::string out = "image_id,true_label,n_green" + class_header("votes_", classes) +
                    ",normalized_entropy,certainty\n";
  for (const ImageAgreement& img : report.images) {
    out += std::to_string(img.image_id) + "," + std::to_string(img.true_label) +
           "," + std::to_string(img.n_green);
    for (int v : img.votes) out += "," + std::to_string(v);
    out += "," + format_number(img.normalized_entropy) + "," +
           format_number(img.certainty) + "\n";
  }
  return out;
}

std::string annotator_accuracy_to_csv(const AgreementReport& report) {
  std::string out = "annotator_id,labeled,accuracy\n";
  for (const AnnotatorAccuracy& a : report.annotators) {
    out += a.annotator_id + "," + std::to_string(a.labeled) + "," +
           format_number(a.accuracy) + "\n";
  }
  out += "mean +- std,," + format_number(report.mean_accuracy) + " +- " +
         format_number(report.std_accuracy) + "\n";
  return out;
}

std::string count_certainty_to_csv(std::span<const CountCertaintyRow> rows) {
  std::string out =
      "n_green,model_count,model_mean,model_std,human_count,human_mean,human_std\n";
  for (const CountCertaintyRow& r : rows) {
    out += std::to_string(r.n_green) + "," + std::to_string(r.model_count) + "," +
           format_number(r.model_mean) + "," + format_number(r.model_std) + "," +
           std::to_string(r.human_count) + "," + format_number(r.human_mean) +
           "," + format_number(r.human_std) + "\n";
  }
  return out;
}

AnnotationSet parse_annotation_set(std::string_view json_text) {
  const json j = detail::parse_json(json_text, "annotations");
  detail::require_object(j, "annotations");
  AnnotationSet set;
  try {
    set.annotator_id = j.at("annotator_id").get<std::string>();
    if (set.annotator_id.empty()) throw ConfigError("annotations: empty annotator_id");
    const json& list = j.at("annotations");
    if (!list.is_array()) throw ConfigError("annotations: 'annotations' must be an array");
    for (std::size_t i = 0; i < list.size(); ++i) {
      const json& e = list[i];
      const std::string where = "annotations[" + std::to_string(i) + "]";
      detail::require_object(e, where);
      Annotation a;
      a.image_id = e.at("image_id").get<std::int64_t>();
      const json& label = e.at("label");
      if (label.is_string()) {
        a.label = class_index(parse_class(label.get<std::string>()));
      } else {
        a.label = label.get<int>();
        class_from_index(a.label);
      }
      if (e.contains("timestamp_iso8601")) {
        a.timestamp = e.at("timestamp_iso8601").get<std::string>();
      }
      set.annotations.push_back(std::move(a));
    }
  } catch (const json::exception& ex) {
    throw ConfigError(std::string("annotations: ") + ex.what());
  }
  return set;
}

std::string annotation_set_to_json(const AnnotationSet& set) {
  ordered_json j;
  j["annotator_id"] = set.annotator_id;
  j["annotations"] = ordered_json::array();
  for (const Annotation& a : set.annotations) {
    ordered_json e;
    e["image_id"] = a.image_id;
    e["label"] = a.label;
    e["timestamp_iso8601"] = a.timestamp;
    j["annotations"].push_back(std::move(e));
  }
  return j.dump(2) + "\n";
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot read " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  if (is.bad()) throw IoError("read failed: " + path.string());
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot write " + path.string());
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!os) throw IoError("write failed: " + path.string());
}

}  // namespace fishforge

#pragma once

// CSV / JSON emitters for prediction, calibration, conditioning and
// agreement tables. Numbers are written with 9 significant digits.

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "fishforge/uncert.hpp"

namespace fishforge {

/// printf("%.9g") without locale dependence.
std::string format_number(double value);

/// `id,true_label,p0,...,p{C-1},certainty`
std::string predictions_to_csv(std::span<const PredictionRecord> records);
/// Inverse of predictions_to_csv; throws ConfigError on malformed rows.
std::vector<PredictionRecord> predictions_from_csv(std::string_view text);

std::string calibration_to_json(const CalibrationReport& report);
/// `bin,lo,hi,count,mean_certainty,accuracy` followed by summary rows.
std::string calibration_to_csv(const CalibrationReport& report);

std::string conditioning_to_json(std::span<const ConditioningRow> rows);
/// `retain_percent,kept,accuracy,min_certainty,share_<class>...`
std::string conditioning_to_csv(std::span<const ConditioningRow> rows);

/// `image_id,true_label,n_green,votes_<class>...,normalized_entropy,certainty`
std::string agreement_images_to_csv(const AgreementReport& report);
/// `annotator_id,labeled,accuracy` plus a final `mean +- std` row.
std::string annotator_accuracy_to_csv(const AgreementReport& report);

/// `n_green,model_count,model_mean,model_std,human_count,human_mean,human_std`
std::string count_certainty_to_csv(std::span<const CountCertaintyRow> rows);

/// Reads a whole file; throws IoError.
std::string read_text_file(const std::filesystem::path& path);
/// Writes atomically enough for our purposes (truncate + write); throws IoError.
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace fishforge

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ntal {

enum class Errc {
  missing_column,
  non_numeric_value,
  empty_dataset,
  dimension_mismatch,
  schema_mismatch,
  unknown_label,
  insufficient_classes,
  invalid_schema,
  invalid_fraction,
  invalid_spec,
  empty_training_set,
  invalid_committee_size,
  empty_test_set,
  invalid_distribution,
  empty_committee,
  length_mismatch,
  empty_pool,
  batch_too_large,
  invalid_params,
  untrained_regressor,
  index_out_of_range,
  invalid_pool,
  no_stopping_criterion,
  empty_stream,
  invalid_threshold,
  zero_denominator,
  class_out_of_range,
  config_error,
  io_error,
  empty_report,
};

// Broad grouping used by the CLI to pick an exit code.
enum class ErrorCategory { config, data, runtime };

constexpr std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::missing_column: return "MissingColumn";
    case Errc::non_numeric_value: return "NonNumericValue";
    case Errc::empty_dataset: return "EmptyDataset";
    case Errc::dimension_mismatch: return "DimensionMismatch";
    case Errc::schema_mismatch: return "SchemaMismatch";
    case Errc::unknown_label: return "UnknownLabel";
    case Errc::insufficient_classes: return "InsufficientClasses";
    case Errc::invalid_schema: return "InvalidSchema";
    case Errc::invalid_fraction: return "InvalidFraction";
    case Errc::invalid_spec: return "InvalidSpec";
    case Errc::empty_training_set: return "EmptyTrainingSet";
    case Errc::invalid_committee_size: return "InvalidCommitteeSize";
    case Errc::empty_test_set: return "EmptyTestSet";
    case Errc::invalid_distribution: return "InvalidDistribution";
    case Errc::empty_committee: return "EmptyCommittee";
    case Errc::length_mismatch: return "LengthMismatch";
    case Errc::empty_pool: return "EmptyPool";
    case Errc::batch_too_large: return "BatchTooLarge";
    case Errc::invalid_params: return "InvalidParams";
    case Errc::untrained_regressor: return "UntrainedRegressor";
    case Errc::index_out_of_range: return "IndexOutOfRange";
    case Errc::invalid_pool: return "InvalidPool";
    case Errc::no_stopping_criterion: return "NoStoppingCriterion";
    case Errc::empty_stream: return "EmptyStream";
    case Errc::invalid_threshold: return "InvalidThreshold";
    case Errc::zero_denominator: return "ZeroDenominator";
    case Errc::class_out_of_range: return "ClassOutOfRange";
    case Errc::config_error: return "ConfigError";
    case Errc::io_error: return "IoError";
    case Errc::empty_report: return "EmptyReport";
  }
  return "Unknown";
}

constexpr ErrorCategory category(Errc code) noexcept {
  switch (code) {
    case Errc::config_error:
    case Errc::invalid_fraction:
    case Errc::invalid_spec:
    case Errc::invalid_params:
    case Errc::invalid_committee_size:
    case Errc::invalid_threshold:
    case Errc::no_stopping_criterion:
      return ErrorCategory::config;
    case Errc::missing_column:
    case Errc::non_numeric_value:
    case Errc::empty_dataset:
    case Errc::dimension_mismatch:
    case Errc::schema_mismatch:
    case Errc::unknown_label:
    case Errc::insufficient_classes:
    case Errc::invalid_schema:
    case Errc::io_error:
      return ErrorCategory::data;
    default:
      return ErrorCategory::runtime;
  }
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace ntal

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace eotk {

/// Closed set of failure categories surfaced by the toolkit.
enum class Errc {
  duplicate_registration,
  unknown_component,
  parse_error,
  schema_error,
  invalid_params,
  dataset_root_missing,
  label_file_malformed,
  image_file_missing,
  image_decode_error,
  unsupported_bit_depth,
  index_out_of_range,
  shape_mismatch,
  pretrained_unavailable,
  uncheckpointed_model,
  checksum_mismatch,
  version_unsupported,
  manifest_missing,
  config_mismatch,
  non_binary_input,
  non_finite_value,
  monotonicity_violation,
  length_mismatch,
  degenerate_split,
  run_locked,
  io_error,
};

std::string_view to_string(Errc code) noexcept;

/// Every toolkit failure carries a category and, where one applies, a dotted
/// config path such as `model.config.learning_rate`.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message, std::string path = {});

  Errc code() const noexcept { return code_; }
  const std::string& path() const noexcept { return path_; }
  const std::string& detail() const noexcept { return detail_; }

  /// Copy of this error with `prefix` prepended to its path.
  Error prefixed(std::string_view prefix) const;

 private:
  Errc code_;
  std::string path_;
  std::string detail_;
};

}  // namespace eotk

#include "eotk/core/error.hpp"

#include <fmt/format.h>

namespace eotk {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::duplicate_registration: return "DuplicateRegistration";
    case Errc::unknown_component: return "UnknownComponent";
    case Errc::parse_error: return "ParseError";
    case Errc::schema_error: return "SchemaError";
    case Errc::invalid_params: return "InvalidParams";
    case Errc::dataset_root_missing: return "DatasetRootMissing";
    case Errc::label_file_malformed: return "LabelFileMalformed";
    case Errc::image_file_missing: return "ImageFileMissing";
    case Errc::image_decode_error: return "ImageDecodeError";
    case Errc::unsupported_bit_depth: return "UnsupportedBitDepth";
    case Errc::index_out_of_range: return "IndexOutOfRange";
    case Errc::shape_mismatch: return "ShapeMismatch";
    case Errc::pretrained_unavailable: return "PretrainedUnavailable";
    case Errc::uncheckpointed_model: return "UncheckpointedModel";
    case Errc::checksum_mismatch: return "ChecksumMismatch";
    case Errc::version_unsupported: return "VersionUnsupported";
    case Errc::manifest_missing: return "ManifestMissing";
    case Errc::config_mismatch: return "ConfigMismatch";
    case Errc::non_binary_input: return "NonBinaryInput";
    case Errc::non_finite_value: return "NonFiniteValue";
    case Errc::monotonicity_violation: return "MonotonicityViolation";
    case Errc::length_mismatch: return "LengthMismatch";
    case Errc::degenerate_split: return "DegenerateSplit";
    case Errc::run_locked: return "RunLocked";
    case Errc::io_error: return "IoError";
  }
  return "Unknown";
}

namespace {

std::string render(Errc code, const std::string& message, const std::string& path) {
  if (path.empty()) return fmt::format("{}: {}", to_string(code), message);
  return fmt::format("{} at {}: {}", to_string(code), path, message);
}

}  // namespace

Error::Error(Errc code, const std::string& message, std::string path)
    : std::runtime_error(render(code, message, path)),
      code_(code),
      path_(std::move(path)),
      detail_(message) {}

Error Error::prefixed(std::string_view prefix) const {
  if (prefix.empty()) return *this;
  std::string joined(prefix);
  if (!path_.empty()) {
    if (path_.front() != '[') joined += '.';
    joined += path_;
  }
  return Error(code_, detail_, std::move(joined));
}

}  // namespace eotk

#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace eotk {

enum class ParamType {
  integer,
  real,
  boolean,
  string,
  real_list,
  integer_list,       ///< may be empty
  image_transforms,   ///< list of `{"name", "params"}` image transform specs
  target_transforms,  ///< list of `{"name", "params"}` target transform specs
};

std::string_view to_string(ParamType type) noexcept;

/// Declares one configuration parameter: its type, whether it must be
/// present, the default written back when absent, and its numeric range.
/// For list types the range applies to every element.
struct ParamSpec {
  std::string name;
  ParamType type = ParamType::real;
  bool required = false;
  nlohmann::json default_value = nullptr;  ///< null: no default
  std::optional<double> min;
  std::optional<double> max;
  bool min_exclusive = false;
  bool max_exclusive = false;
  std::vector<std::string> choices;  ///< allowed values for strings, if non-empty
  std::string description;
};

using ParamSchema = std::vector<ParamSpec>;

/// Human-readable range, e.g. "(0, 1)" or ">= 1"; empty when unconstrained.
std::string describe_range(const ParamSpec& spec);

}  // namespace eotk

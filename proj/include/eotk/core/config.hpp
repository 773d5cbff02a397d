#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace eotk {

class Registry;

inline constexpr std::uint64_t kDefaultSeed = 42;

/// `{"classname": ..., "config": {...}}`
struct ComponentSpec {
  std::string classname;
  nlohmann::json config = nlohmann::json::object();

  friend bool operator==(const ComponentSpec&, const ComponentSpec&) = default;
};

/// Slots a run configuration can bind besides its task.
enum class Slot { model, train_dataset, val_dataset };

std::string_view to_string(Slot slot) noexcept;

/// A validated run configuration: every classname resolves, every parameter
/// is in range, and defaults have been written back.
struct RunConfig {
  ComponentSpec task;
  std::optional<ComponentSpec> model;
  std::optional<ComponentSpec> train_dataset;
  std::optional<ComponentSpec> val_dataset;
  std::uint64_t seed = kDefaultSeed;

  const std::optional<ComponentSpec>& slot(Slot s) const;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

nlohmann::json to_json(const ComponentSpec& spec);
nlohmann::json to_json(const RunConfig& config);

/// Parses UTF-8 JSON text; throws ParseError with the byte offset.
nlohmann::json parse_config_text(std::string_view text);

/// Reads and parses a configuration file; throws IoError or ParseError.
nlohmann::json load_config_file(const std::filesystem::path& path);

/// Checks `raw` against the registered schemas and fills in defaults.
/// Throws SchemaError (with a dotted path) or UnknownComponent.
RunConfig validate_config(const nlohmann::json& raw, const Registry& registry);

}  // namespace eotk

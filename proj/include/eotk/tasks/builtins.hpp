#pragma once

#include <iosfwd>
#include <vector>

#include <nlohmann/json.hpp>

#include "eotk/core/registry.hpp"
#include "eotk/datasets/dataset.hpp"

namespace eotk {

struct BuiltinOptions {
  std::ostream* progress = nullptr;  ///< per-epoch / per-cycle lines from tasks
};

/// Registers the built-in transforms, datasets, models and the seven tasks.
void register_builtins(Registry& registry, const BuiltinOptions& options = {});

/// The seven tasks only.
void register_tasks(Registry& registry, const BuiltinOptions& options = {});

/// Lazily built registry holding only the built-ins, without progress output.
const Registry& default_registry();

/// Instantiates validated `{"name", "params"}` transform specs.
std::vector<ImageTransformPtr> build_image_transforms(const nlohmann::json& specs, const Registry& registry);
std::vector<TargetTransformPtr> build_target_transforms(const nlohmann::json& specs, const Registry& registry);

/// DatasetConfig from a validated dataset config object.
DatasetConfig dataset_config_from_json(const nlohmann::json& config, const Registry& registry);

}  // namespace eotk

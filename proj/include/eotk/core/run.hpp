#pragma once

#include <memory>

#include "eotk/core/config.hpp"
#include "eotk/core/random.hpp"
#include "eotk/core/registry.hpp"
#include "eotk/core/task.hpp"

namespace eotk {

/// Per-slot component indices fed to the seed splitter.
enum class SeedStream : std::uint64_t { train_dataset = 0, val_dataset = 1, model = 2, task = 3 };

std::uint64_t component_seed(const RunConfig& config, SeedStream stream);

/// Builds datasets, then the model, then the task, and injects them. Component
/// constructor failures are rethrown with the offending config path attached,
/// e.g. DatasetRootMissing at `train_dataset.config.root`.
std::shared_ptr<Task> instantiate_run(const RunConfig& config, const Registry& registry);

}  // namespace eotk

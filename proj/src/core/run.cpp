#include "eotk/core/run.hpp"

namespace eotk {

std::uint64_t component_seed(const RunConfig& config, SeedStream stream) {
  return derive_seed(config.seed, static_cast<std::uint64_t>(stream));
}

namespace {

template <typename Fn>
auto with_path(const std::string& path, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    throw e.prefixed(path);
  }
}

}  // namespace

std::shared_ptr<Task> instantiate_run(const RunConfig& config, const Registry& registry) {
  RunContext context;
  context.config = config;
  context.registry = &registry;

  auto build_dataset = [&](const ComponentSpec& spec, const std::string& slot) {
    const auto& factory = registry.resolve_as<DatasetFactory>(ComponentKind::dataset, spec.classname);
    return with_path(slot + ".config", [&] { return factory(spec.config, registry); });
  };
  if (config.train_dataset) context.train_dataset = build_dataset(*config.train_dataset, "train_dataset");
  if (config.val_dataset) context.val_dataset = build_dataset(*config.val_dataset, "val_dataset");

  if (config.model) {
    const auto& factory = registry.resolve_as<ModelFactory>(ComponentKind::model, config.model->classname);
    context.model = with_path("model.config", [&] {
      return factory(config.model->config, component_seed(config, SeedStream::model));
    });
  }

  const auto& factory = registry.resolve_as<TaskFactory>(ComponentKind::task, config.task.classname);
  return with_path("task.config", [&] { return factory(config.task.config, context); });
}

}  // namespace eotk

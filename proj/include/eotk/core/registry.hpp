#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "eotk/core/config.hpp"
#include "eotk/core/error.hpp"
#include "eotk/core/schema.hpp"

namespace eotk {

class Task;
class Model;
class Dataset;
class ImageTransform;
class TargetTransform;
class Registry;

enum class ComponentKind { task, model, dataset, transform };

std::string_view to_string(ComponentKind kind) noexcept;

/// Parses "task" / "model" / "dataset" / "transform"; anything else is
/// UnknownComponent.
ComponentKind parse_component_kind(std::string_view text);

/// Everything a task factory receives from `instantiate_run`.
struct RunContext {
  RunConfig config;
  std::shared_ptr<Dataset> train_dataset;
  std::shared_ptr<Dataset> val_dataset;
  std::shared_ptr<Model> model;
  const Registry* registry = nullptr;
};

using TransformHandle =
    std::variant<std::shared_ptr<const ImageTransform>, std::shared_ptr<const TargetTransform>>;

using TaskFactory = std::function<std::shared_ptr<Task>(const nlohmann::json& config, const RunContext&)>;
using ModelFactory = std::function<std::shared_ptr<Model>(const nlohmann::json& config, std::uint64_t seed)>;
using DatasetFactory =
    std::function<std::shared_ptr<Dataset>(const nlohmann::json& config, const Registry&)>;
using TransformFactory = std::function<TransformHandle(const nlohmann::json& params)>;

/// Variant index i must correspond to ComponentKind value i.
using ComponentFactory = std::variant<TaskFactory, ModelFactory, DatasetFactory, TransformFactory>;

enum class TransformRole { image, target };

/// Registration-time metadata consumed by `validate_config`.
struct ComponentInfo {
  ParamSchema schema;
  std::vector<Slot> required_slots;  // tasks only
  std::vector<Slot> optional_slots;  // tasks only
  TransformRole role = TransformRole::image;
  bool stochastic = false;  // transforms: draws from the augmentation stream
  /// Cross-parameter checks run after the schema; throws SchemaError with a
  /// path relative to the component's config.
  std::function<void(const nlohmann::json& config)> check;
  std::string summary;
};

/// Name -> factory table, one namespace per component kind. Populated once at
/// startup; append-only, so concurrent lookups afterwards are safe.
class Registry {
 public:
  struct Entry {
    ComponentFactory factory;
    ComponentInfo info;
  };

  /// Throws DuplicateRegistration, or InvalidParams when the factory type does
  /// not match `kind`.
  void register_component(ComponentKind kind, std::string classname, ComponentFactory factory,
                          ComponentInfo info = {});

  /// Throws UnknownComponent carrying kind and classname. Names are
  /// case-sensitive.
  const ComponentFactory& resolve_component(ComponentKind kind, std::string_view classname) const;

  const Entry& entry(ComponentKind kind, std::string_view classname) const;
  bool contains(ComponentKind kind, std::string_view classname) const;
  std::vector<std::string> names(ComponentKind kind) const;

  template <typename Factory>
  const Factory& resolve_as(ComponentKind kind, std::string_view classname) const {
    return std::get<Factory>(resolve_component(kind, classname));
  }

 private:
  std::map<std::pair<ComponentKind, std::string>, Entry, std::less<>> entries_;
};

}  // namespace eotk

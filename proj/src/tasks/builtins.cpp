#include "eotk/tasks/builtins.hpp"

#include <fmt/format.h>

#include "eotk/core/error.hpp"
#include "eotk/models/model.hpp"
#include "eotk/transforms/transforms.hpp"

namespace eotk {

using nlohmann::json;

namespace {

void register_transforms(Registry& registry) {
  registry.register_component(
      ComponentKind::transform, "ResizeTransform",
      TransformFactory([](const json& p) -> TransformHandle {
        return std::make_shared<const transforms::Resize>(p.at("height").get<int>(), p.at("width").get<int>());
      }),
      {.schema = {{.name = "height", .type = ParamType::integer, .required = true, .min = 1},
                  {.name = "width", .type = ParamType::integer, .required = true, .min = 1}},
       .summary = "bilinear resize to height x width"});

  registry.register_component(
      ComponentKind::transform, "NormalizeTransform",
      TransformFactory([](const json& p) -> TransformHandle {
        return std::make_shared<const transforms::Normalize>(p.at("mean").get<std::vector<double>>(),
                                                             p.at("std").get<std::vector<double>>());
      }),
      {.schema = {{.name = "mean", .type = ParamType::real_list, .required = true},
                  {.name = "std", .type = ParamType::real_list, .required = true, .min = 0, .min_exclusive = true}},
       .check =
           [](const json& p) {
             if (p.at("mean").size() != p.at("std").size()) {
               throw Error(Errc::schema_error, "mean and std must have the same length", "std");
             }
           },
       .summary = "per-channel (x - mean) / std"});

  registry.register_component(
      ComponentKind::transform, "RandomHorizontalFlipTransform",
      TransformFactory([](const json& p) -> TransformHandle {
        return std::make_shared<const transforms::RandomHorizontalFlip>(p.value("p", 0.5));
      }),
      {.schema = {{.name = "p", .type = ParamType::real, .default_value = 0.5, .min = 0, .max = 1}},
       .stochastic = true,
       .summary = "mirror left-right with probability p (training only)"});

  registry.register_component(
      ComponentKind::transform, "OneHotEncodeTransform",
      TransformFactory([](const json& p) -> TransformHandle {
        return std::make_shared<const transforms::OneHotEncode>(p.at("num_classes").get<int>());
      }),
      {.schema = {{.name = "num_classes", .type = ParamType::integer, .required = true, .min = 2}},
       .role = TransformRole::target,
       .summary = "class index -> one-hot vector"});
}

ParamSchema dataset_schema() {
  return {
      {.name = "root", .type = ParamType::string, .required = true, .description = "dataset directory"},
      {.name = "batch_size", .type = ParamType::integer, .required = true, .min = 1},
      {.name = "shuffle", .type = ParamType::boolean, .default_value = false},
      {.name = "num_workers", .type = ParamType::integer, .default_value = 0, .min = 0},
      {.name = "transforms", .type = ParamType::image_transforms, .default_value = json::array()},
      {.name = "target_transforms", .type = ParamType::target_transforms, .default_value = json::array()},
  };
}

void register_datasets(Registry& registry) {
  registry.register_component(
      ComponentKind::dataset, "MultiLabelImageDataset",
      DatasetFactory([](const json& config, const Registry& r) -> std::shared_ptr<Dataset> {
        return load_multilabel_dataset(dataset_config_from_json(config, r));
      }),
      {.schema = dataset_schema(), .summary = "<root>/images + <root>/labels.csv"});
  registry.register_component(
      ComponentKind::dataset, "MultiClassImageDataset",
      DatasetFactory([](const json& config, const Registry& r) -> std::shared_ptr<Dataset> {
        return load_multiclass_dataset(dataset_config_from_json(config, r));
      }),
      {.schema = dataset_schema(), .summary = "<root>/<class>/<images>"});
}

void register_models(Registry& registry) {
  for (Architecture arch : {Architecture::small_cnn, Architecture::reference_mlp}) {
    for (TaskKind kind : {TaskKind::multi_label, TaskKind::multi_class}) {
      const std::string name = model_classname(arch, kind);
      registry.register_component(
          ComponentKind::model, name,
          ModelFactory([name](const json& config, std::uint64_t seed) -> std::shared_ptr<Model> {
            return build_model(name, config, seed);
          }),
          {.schema = model_schema(arch),
           .summary = fmt::format("{} with a {} head", arch == Architecture::small_cnn ? "two-stage CNN" : "MLP",
                                  kind == TaskKind::multi_label ? "sigmoid" : "softmax")});
    }
  }
}

}  // namespace

void register_builtins(Registry& registry, const BuiltinOptions& options) {
  register_transforms(registry);
  register_datasets(registry);
  register_models(registry);
  register_tasks(registry, options);
}

const Registry& default_registry() {
  static const Registry registry = [] {
    Registry r;
    register_builtins(r);
    return r;
  }();
  return registry;
}

std::vector<ImageTransformPtr> build_image_transforms(const json& specs, const Registry& registry) {
  std::vector<ImageTransformPtr> out;
  for (const auto& spec : specs) {
    const auto& factory =
        registry.resolve_as<TransformFactory>(ComponentKind::transform, spec.at("name").get<std::string>());
    auto handle = factory(spec.value("params", json::object()));
    auto* image = std::get_if<std::shared_ptr<const ImageTransform>>(&handle);
    if (image == nullptr) {
      throw Error(Errc::schema_error, fmt::format("'{}' is not an image transform", spec.at("name").get<std::string>()));
    }
    out.push_back(*image);
  }
  return out;
}

std::vector<TargetTransformPtr> build_target_transforms(const json& specs, const Registry& registry) {
  std::vector<TargetTransformPtr> out;
  for (const auto& spec : specs) {
    const auto& factory =
        registry.resolve_as<TransformFactory>(ComponentKind::transform, spec.at("name").get<std::string>());
    auto handle = factory(spec.value("params", json::object()));
    auto* target = std::get_if<std::shared_ptr<const TargetTransform>>(&handle);
    if (target == nullptr) {
      throw Error(Errc::schema_error, fmt::format("'{}' is not a target transform", spec.at("name").get<std::string>()));
    }
    out.push_back(*target);
  }
  return out;
}

DatasetConfig dataset_config_from_json(const json& config, const Registry& registry) {
  DatasetConfig out;
  out.root = config.at("root").get<std::string>();
  out.batch_size = config.at("batch_size").get<std::size_t>();
  out.shuffle = config.value("shuffle", false);
  out.num_workers = config.value("num_workers", std::size_t{0});
  out.transforms = build_image_transforms(config.value("transforms", json::array()), registry);
  out.target_transforms = build_target_transforms(config.value("target_transforms", json::array()), registry);
  return out;
}

}  // namespace eotk

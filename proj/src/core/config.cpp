#include "eotk/core/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "eotk/core/error.hpp"
#include "eotk/core/registry.hpp"

namespace eotk {

using nlohmann::json;

std::string_view to_string(Slot slot) noexcept {
  switch (slot) {
    case Slot::model: return "model";
    case Slot::train_dataset: return "train_dataset";
    case Slot::val_dataset: return "val_dataset";
  }
  return "unknown";
}

std::string_view to_string(ParamType type) noexcept {
  switch (type) {
    case ParamType::integer: return "integer";
    case ParamType::real: return "real";
    case ParamType::boolean: return "boolean";
    case ParamType::string: return "string";
    case ParamType::real_list: return "list of real";
    case ParamType::integer_list: return "list of integer";
    case ParamType::image_transforms: return "list of image transform specs";
    case ParamType::target_transforms: return "list of target transform specs";
  }
  return "unknown";
}

std::string describe_range(const ParamSpec& spec) {
  auto num = [](double v) { return fmt::format("{}", v); };
  if (spec.min && spec.max) {
    return fmt::format("{}{}, {}{}", spec.min_exclusive ? '(' : '[', num(*spec.min), num(*spec.max),
                       spec.max_exclusive ? ')' : ']');
  }
  if (spec.min) return fmt::format("{} {}", spec.min_exclusive ? ">" : ">=", num(*spec.min));
  if (spec.max) return fmt::format("{} {}", spec.max_exclusive ? "<" : "<=", num(*spec.max));
  return {};
}

const std::optional<ComponentSpec>& RunConfig::slot(Slot s) const {
  switch (s) {
    case Slot::model: return model;
    case Slot::train_dataset: return train_dataset;
    case Slot::val_dataset: return val_dataset;
  }
  return model;
}

json to_json(const ComponentSpec& spec) {
  return json{{"classname", spec.classname}, {"config", spec.config}};
}

json to_json(const RunConfig& config) {
  json out = json::object();
  out["task"] = to_json(config.task);
  if (config.model) out["model"] = to_json(*config.model);
  if (config.train_dataset) out["train_dataset"] = to_json(*config.train_dataset);
  if (config.val_dataset) out["val_dataset"] = to_json(*config.val_dataset);
  out["seed"] = config.seed;
  return out;
}

json parse_config_text(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw Error(Errc::parse_error, fmt::format("malformed JSON at byte {}: {}", e.byte, e.what()));
  }
}

json load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io_error, fmt::format("cannot read config file '{}'", path.string()));
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str());
}

namespace {

std::string join_path(std::string_view base, std::string_view key) {
  if (base.empty()) return std::string(key);
  return fmt::format("{}.{}", base, key);
}

[[noreturn]] void schema_fail(const std::string& path, const std::string& message) {
  throw Error(Errc::schema_error, message, path);
}

void check_range(const ParamSpec& spec, double value, const std::string& path) {
  if (!std::isfinite(value)) schema_fail(path, "value must be finite");
  const bool below = spec.min && (spec.min_exclusive ? value <= *spec.min : value < *spec.min);
  const bool above = spec.max && (spec.max_exclusive ? value >= *spec.max : value > *spec.max);
  if (below || above) {
    schema_fail(path, fmt::format("value {} outside allowed range {}", value, describe_range(spec)));
  }
}

class Validator {
 public:
  explicit Validator(const Registry& registry) : registry_(registry) {}

  void params(json& config, const ParamSchema& schema, const std::string& path) const {
    if (!config.is_object()) schema_fail(path, "expected an object");
    for (const auto& [key, value] : config.items()) {
      const bool known = std::any_of(schema.begin(), schema.end(),
                                     [&](const ParamSpec& s) { return s.name == key; });
      if (!known) schema_fail(join_path(path, key), "unknown parameter");
    }
    for (const ParamSpec& spec : schema) {
      const std::string here = join_path(path, spec.name);
      auto it = config.find(spec.name);
      if (it == config.end()) {
        if (spec.required) schema_fail(here, "missing required parameter");
        if (!spec.default_value.is_null()) config[spec.name] = spec.default_value;
        continue;
      }
      value(*it, spec, here);
    }
  }

  ComponentSpec component(ComponentKind kind, const json& raw, const std::string& path) const {
    if (!raw.is_object()) schema_fail(path, "expected {\"classname\": ..., \"config\": {...}}");
    for (const auto& [key, value] : raw.items()) {
      if (key != "classname" && key != "config") schema_fail(join_path(path, key), "unknown key");
    }
    auto name = raw.find("classname");
    if (name == raw.end()) schema_fail(join_path(path, "classname"), "missing required field");
    if (!name->is_string() || name->get<std::string>().empty()) {
      schema_fail(join_path(path, "classname"), "classname must be a non-empty string");
    }
    ComponentSpec spec;
    spec.classname = name->get<std::string>();
    const Registry::Entry* entry = nullptr;
    try {
      entry = &registry_.entry(kind, spec.classname);
    } catch (const Error& e) {
      throw e.prefixed(join_path(path, "classname"));
    }
    if (auto cfg = raw.find("config"); cfg != raw.end()) spec.config = *cfg;
    const std::string config_path = join_path(path, "config");
    params(spec.config, entry->info.schema, config_path);
    run_check(entry->info, spec.config, config_path);
    return spec;
  }

 private:
  static void run_check(const ComponentInfo& info, const json& config, const std::string& path) {
    if (!info.check) return;
    try {
      info.check(config);
    } catch (const Error& e) {
      throw e.prefixed(path);
    }
  }

  void value(json& v, const ParamSpec& spec, const std::string& path) const {
    switch (spec.type) {
      case ParamType::integer:
        if (!v.is_number_integer()) schema_fail(path, "expected an integer");
        check_range(spec, v.is_number_unsigned() ? static_cast<double>(v.get<std::uint64_t>())
                                                 : static_cast<double>(v.get<std::int64_t>()),
                    path);
        return;
      case ParamType::real:
        if (!v.is_number()) schema_fail(path, "expected a number");
        check_range(spec, v.get<double>(), path);
        return;
      case ParamType::boolean:
        if (!v.is_boolean()) schema_fail(path, "expected a boolean");
        return;
      case ParamType::string: {
        if (!v.is_string()) schema_fail(path, "expected a string");
        const auto s = v.get<std::string>();
        if (s.empty()) schema_fail(path, "expected a non-empty string");
        if (!spec.choices.empty() &&
            std::find(spec.choices.begin(), spec.choices.end(), s) == spec.choices.end()) {
          schema_fail(path, fmt::format("'{}' is not one of [{}]", s, fmt::join(spec.choices, ", ")));
        }
        return;
      }
      case ParamType::real_list:
        if (!v.is_array() || v.empty()) schema_fail(path, "expected a non-empty list of numbers");
        for (std::size_t i = 0; i < v.size(); ++i) {
          const std::string item = fmt::format("{}[{}]", path, i);
          if (!v[i].is_number()) schema_fail(item, "expected a number");
          check_range(spec, v[i].get<double>(), item);
        }
        return;
      case ParamType::integer_list:
        if (!v.is_array()) schema_fail(path, "expected a list of integers");
        for (std::size_t i = 0; i < v.size(); ++i) {
          const std::string item = fmt::format("{}[{}]", path, i);
          if (!v[i].is_number_integer()) schema_fail(item, "expected an integer");
          check_range(spec, static_cast<double>(v[i].get<std::int64_t>()), item);
        }
        return;
      case ParamType::image_transforms:
      case ParamType::target_transforms:
        transforms(v,
                   spec.type == ParamType::image_transforms ? TransformRole::image
                                                            : TransformRole::target,
                   path);
        return;
    }
  }

  void transforms(json& list, TransformRole role, const std::string& path) const {
    if (!list.is_array()) schema_fail(path, "expected a list of transform specs");
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string here = fmt::format("{}[{}]", path, i);
      json& item = list[i];
      if (!item.is_object()) schema_fail(here, "expected {\"name\": ..., \"params\": {...}}");
      for (const auto& [key, value] : item.items()) {
        if (key != "name" && key != "params") schema_fail(join_path(here, key), "unknown key");
      }
      auto name = item.find("name");
      if (name == item.end()) schema_fail(join_path(here, "name"), "missing required field");
      if (!name->is_string()) schema_fail(join_path(here, "name"), "expected a string");
      const Registry::Entry* entry = nullptr;
      try {
        entry = &registry_.entry(ComponentKind::transform, name->get<std::string>());
      } catch (const Error& e) {
        throw e.prefixed(join_path(here, "name"));
      }
      if (entry->info.role != role) {
        schema_fail(join_path(here, "name"),
                    role == TransformRole::image ? "target transform used in an image pipeline"
                                                 : "image transform used in a target pipeline");
      }
      if (!item.contains("params")) item["params"] = json::object();
      const std::string params_path = join_path(here, "params");
      params(item["params"], entry->info.schema, params_path);
      run_check(entry->info, item["params"], params_path);
    }
  }

  const Registry& registry_;
};

bool contains_slot(const std::vector<Slot>& slots, Slot s) {
  return std::find(slots.begin(), slots.end(), s) != slots.end();
}

void reject_stochastic_transforms(const ComponentSpec& dataset, const Registry& registry,
                                  const std::string& path) {
  auto it = dataset.config.find("transforms");
  if (it == dataset.config.end()) return;
  for (std::size_t i = 0; i < it->size(); ++i) {
    const auto name = (*it)[i]["name"].get<std::string>();
    if (registry.entry(ComponentKind::transform, name).info.stochastic) {
      schema_fail(fmt::format("{}.config.transforms[{}].name", path, i),
                  fmt::format("random transform '{}' is not allowed in an evaluation pipeline", name));
    }
  }
}

}  // namespace

RunConfig validate_config(const json& raw, const Registry& registry) {
  if (!raw.is_object()) schema_fail("", "top-level configuration must be an object");
  static const std::vector<std::string> top_keys = {"task", "model", "train_dataset", "val_dataset",
                                                    "seed"};
  for (const auto& [key, value] : raw.items()) {
    if (std::find(top_keys.begin(), top_keys.end(), key) == top_keys.end()) {
      schema_fail(key, "unknown top-level key");
    }
  }

  RunConfig out;
  if (auto seed = raw.find("seed"); seed != raw.end()) {
    if (!seed->is_number_integer()) schema_fail("seed", "expected an integer");
    if (!seed->is_number_unsigned() && seed->get<std::int64_t>() < 0) {
      schema_fail("seed", "seed must be >= 0");
    }
    out.seed = seed->get<std::uint64_t>();
  }

  auto task = raw.find("task");
  if (task == raw.end()) schema_fail("task", "missing required slot");
  Validator validator(registry);
  out.task = validator.component(ComponentKind::task, *task, "task");
  const ComponentInfo& task_info = registry.entry(ComponentKind::task, out.task.classname).info;

  for (Slot slot : {Slot::model, Slot::train_dataset, Slot::val_dataset}) {
    const std::string key(to_string(slot));
    const bool required = contains_slot(task_info.required_slots, slot);
    const bool optional = contains_slot(task_info.optional_slots, slot);
    auto it = raw.find(key);
    if (it == raw.end()) {
      if (required) schema_fail(key, fmt::format("missing required slot for {}", out.task.classname));
      continue;
    }
    if (!required && !optional) {
      schema_fail(key, fmt::format("slot is not used by {}", out.task.classname));
    }
    const ComponentKind kind = slot == Slot::model ? ComponentKind::model : ComponentKind::dataset;
    ComponentSpec spec = validator.component(kind, *it, key);
    switch (slot) {
      case Slot::model: out.model = std::move(spec); break;
      case Slot::train_dataset: out.train_dataset = std::move(spec); break;
      case Slot::val_dataset: out.val_dataset = std::move(spec); break;
    }
  }
  if (out.val_dataset) reject_stochastic_transforms(*out.val_dataset, registry, "val_dataset");
  return out;
}

}  // namespace eotk

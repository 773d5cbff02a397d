#include "eotk/core/registry.hpp"

#include <fmt/format.h>

namespace eotk {

namespace {

bool is_known(ComponentKind kind) {
  switch (kind) {
    case ComponentKind::task:
    case ComponentKind::model:
    case ComponentKind::dataset:
    case ComponentKind::transform:
      return true;
  }
  return false;
}

void require_known(ComponentKind kind) {
  if (!is_known(kind)) {
    throw Error(Errc::unknown_component,
                fmt::format("component kind {} is not one of task/model/dataset/transform",
                            static_cast<int>(kind)));
  }
}

}  // namespace

std::string_view to_string(ComponentKind kind) noexcept {
  switch (kind) {
    case ComponentKind::task: return "task";
    case ComponentKind::model: return "model";
    case ComponentKind::dataset: return "dataset";
    case ComponentKind::transform: return "transform";
  }
  return "unknown";
}

ComponentKind parse_component_kind(std::string_view text) {
  for (auto kind : {ComponentKind::task, ComponentKind::model, ComponentKind::dataset,
                    ComponentKind::transform}) {
    if (to_string(kind) == text) return kind;
  }
  throw Error(Errc::unknown_component, fmt::format("unknown component kind '{}'", text));
}

void Registry::register_component(ComponentKind kind, std::string classname,
                                  ComponentFactory factory, ComponentInfo info) {
  require_known(kind);
  if (classname.empty()) throw Error(Errc::invalid_params, "classname must be non-empty");
  if (factory.index() != static_cast<std::size_t>(kind)) {
    throw Error(Errc::invalid_params,
                fmt::format("factory for '{}' does not construct a {}", classname, to_string(kind)));
  }
  auto key = std::make_pair(kind, classname);
  if (entries_.contains(key)) {
    throw Error(Errc::duplicate_registration,
                fmt::format("{} '{}' is already registered", to_string(kind), classname));
  }
  entries_.emplace(std::move(key), Entry{std::move(factory), std::move(info)});
}

const Registry::Entry& Registry::entry(ComponentKind kind, std::string_view classname) const {
  require_known(kind);
  auto it = entries_.find(std::make_pair(kind, std::string(classname)));
  if (it == entries_.end()) {
    throw Error(Errc::unknown_component,
                fmt::format("no {} registered under '{}'", to_string(kind), classname));
  }
  return it->second;
}

const ComponentFactory& Registry::resolve_component(ComponentKind kind,
                                                    std::string_view classname) const {
  return entry(kind, classname).factory;
}

bool Registry::contains(ComponentKind kind, std::string_view classname) const {
  return is_known(kind) && entries_.contains(std::make_pair(kind, std::string(classname)));
}

std::vector<std::string> Registry::names(ComponentKind kind) const {
  std::vector<std::string> out;
  for (const auto& [key, entry] : entries_) {
    if (key.first == kind) out.push_back(key.second);
  }
  return out;
}

}  // namespace eotk

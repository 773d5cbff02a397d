#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace eotk {

enum class TaskStatus { ok, failed };

struct Artifact {
  std::string kind;  ///< e.g. "checkpoint", "event_log", "report", "figure"
  std::filesystem::path path;
};

struct TaskResult {
  TaskStatus status = TaskStatus::ok;
  std::vector<Artifact> artifacts;
  nlohmann::json summary = nlohmann::json::object();

  bool ok() const noexcept { return status == TaskStatus::ok; }
};

/// An executable workflow produced by `instantiate_run`.
class Task {
 public:
  virtual ~Task() = default;

  /// Runs the workflow. Failures are reported through the result, with the
  /// causal error under `summary["error"]`, rather than thrown.
  TaskResult run();

  virtual std::string name() const = 0;

 protected:
  virtual TaskResult execute() = 0;
};

}  // namespace eotk

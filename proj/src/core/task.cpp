#include "eotk/core/task.hpp"

#include "eotk/core/error.hpp"

namespace eotk {

TaskResult Task::run() {
  try {
    return execute();
  } catch (const Error& e) {
    TaskResult failed;
    failed.status = TaskStatus::failed;
    failed.summary["error"] = {{"code", std::string(to_string(e.code()))},
                               {"path", e.path()},
                               {"message", e.what()}};
    return failed;
  } catch (const std::exception& e) {
    TaskResult failed;
    failed.status = TaskStatus::failed;
    failed.summary["error"] = {{"code", "Internal"}, {"path", ""}, {"message", e.what()}};
    return failed;
  }
}

}  // namespace eotk

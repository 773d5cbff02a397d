// eotk: run, validate, inspect and predict from JSON run configurations.

#include <iostream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "eotk/core/config.hpp"
#include "eotk/core/error.hpp"
#include "eotk/core/run.hpp"
#include "eotk/datasets/synthetic.hpp"
#include "eotk/tasks/builtins.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kTaskFailed = 1;
constexpr int kConfigError = 2;

void print_error(const eotk::Error& e) {
  if (e.path().empty()) {
    fmt::print(std::cerr, "error [{}]: {}\n", eotk::to_string(e.code()), e.detail());
  } else {
    fmt::print(std::cerr, "error [{}] at {}: {}\n", eotk::to_string(e.code()), e.path(), e.detail());
  }
}

int load_and_validate(const std::string& path, const eotk::Registry& registry, eotk::RunConfig& out) {
  try {
    out = eotk::validate_config(eotk::load_config_file(path), registry);
    return kOk;
  } catch (const eotk::Error& e) {
    print_error(e);
    return kConfigError;
  }
}

int run_config(const std::string& path, const std::string& required_task, bool quiet) {
  eotk::Registry registry;
  eotk::register_builtins(registry, {.progress = quiet ? nullptr : &std::cout});
  eotk::RunConfig config;
  if (int rc = load_and_validate(path, registry, config); rc != kOk) return rc;
  if (!required_task.empty() && config.task.classname != required_task) {
    fmt::print(std::cerr, "error [SchemaError] at task.classname: expected {}, found {}\n", required_task,
               config.task.classname);
    return kConfigError;
  }

  std::shared_ptr<eotk::Task> task;
  try {
    task = eotk::instantiate_run(config, registry);
  } catch (const eotk::Error& e) {
    print_error(e);
    return kTaskFailed;
  }
  const eotk::TaskResult result = task->run();
  if (!result.ok()) {
    const auto& err = result.summary["error"];
    const std::string where = err.value("path", "");
    fmt::print(std::cerr, "{} failed [{}]{}: {}\n", task->name(), err.value("code", ""),
               where.empty() ? "" : " at " + where, err.value("message", ""));
    return kTaskFailed;
  }

  fmt::print("{} ok\n", task->name());
  for (const auto& artifact : result.artifacts) fmt::print("  {:<14} {}\n", artifact.kind, artifact.path.string());
  fmt::print("{}\n", result.summary.dump(2));
  if (auto final = result.summary.find("final"); final != result.summary.end()) {
    for (const char* key : {"micro_f1", "accuracy"}) {
      if (final->contains(key)) fmt::print("final {} {:.4f}\n", key, (*final)[key].get<double>());
    }
  }
  return kOk;
}

int validate(const std::string& path) {
  eotk::RunConfig config;
  if (int rc = load_and_validate(path, eotk::default_registry(), config); rc != kOk) return rc;
  fmt::print("{}\n", eotk::to_json(config).dump(2));
  return kOk;
}

int synth(const std::string& out, std::size_t count, int size, std::uint64_t seed, const std::string& kind) {
  eotk::synthetic::ShapesOptions options;
  options.count = count;
  options.size = size;
  options.seed = seed;
  options.kind = kind == "multi_class" ? eotk::TaskKind::multi_class : eotk::TaskKind::multi_label;
  try {
    const auto samples = eotk::synthetic::generate_shapes(options);
    eotk::synthetic::write_shapes_dataset(samples, options.kind, out);
  } catch (const eotk::Error& e) {
    print_error(e);
    return kTaskFailed;
  }
  fmt::print("wrote {} {} samples to {}\n", count, kind, out);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Config-driven image classification workflows"};
  app.require_subcommand(1);

  std::string config;
  bool quiet = false;
  auto* run = app.add_subcommand("run", "validate, instantiate and run a configuration");
  run->add_option("config", config, "run configuration (JSON)")->required();
  run->add_flag("-q,--quiet", quiet, "no per-epoch progress");
  auto* val = app.add_subcommand("validate", "check a configuration and print it with defaults filled in");
  val->add_option("config", config, "run configuration (JSON)")->required();
  auto* inspect = app.add_subcommand("inspect", "run an InspectTask configuration");
  inspect->add_option("config", config, "run configuration (JSON)")->required();
  auto* predict = app.add_subcommand("predict", "run a PredictTask configuration");
  predict->add_option("config", config, "run configuration (JSON)")->required();

  std::string out;
  std::size_t count = 1000;
  int size = 64;
  std::uint64_t seed = 0;
  std::string kind = "multi_label";
  auto* syn = app.add_subcommand("synth", "write the generated shapes dataset to disk");
  syn->add_option("out", out, "output directory")->required();
  syn->add_option("--count", count, "number of images")->check(CLI::PositiveNumber);
  syn->add_option("--size", size, "image side in pixels")->check(CLI::Range(16, 4096));
  syn->add_option("--seed", seed, "generator seed");
  syn->add_option("--kind", kind, "multi_label or multi_class")->check(CLI::IsMember({"multi_label", "multi_class"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfigError;
  }

  if (*run) return run_config(config, "", quiet);
  if (*val) return validate(config);
  if (*inspect) return run_config(config, "InspectTask", true);
  if (*predict) return run_config(config, "PredictTask", true);
  if (*syn) return synth(out, count, size, seed, kind);
  return kConfigError;
}

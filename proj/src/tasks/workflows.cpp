#include <algorithm>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "eotk/cluster/cluster.hpp"
#include "eotk/core/error.hpp"
#include "eotk/core/run.hpp"
#include "eotk/datasets/figure.hpp"
#include "eotk/datasets/image_io.hpp"
#include "eotk/metrics/event_log.hpp"
#include "eotk/models/trainer.hpp"
#include "eotk/tasks/builtins.hpp"
#include "eotk/tasks/tasks.hpp"

namespace fs = std::filesystem;

namespace eotk {

using nlohmann::json;

namespace {

void note_lock(const RunLock& lock, TaskResult& result, std::ostream* progress) {
  if (lock.warning().empty()) return;
  result.summary["warnings"].push_back(lock.warning());
  if (progress != nullptr) *progress << "warning: " << lock.warning() << '\n';
}

fs::path checkpoint_path(const json& config) {
  fs::path path = config.at("checkpoint").get<std::string>();
  if (auto epoch = config.find("epoch"); epoch != config.end()) {
    path /= fmt::format("epoch_{}", epoch->get<std::uint64_t>());
  }
  return resolve_checkpoint(path);
}

void check_dataset_matches(const Model& model, const Dataset& dataset) {
  if (dataset.task_kind() != model.task_kind()) {
    throw Error(Errc::config_mismatch, fmt::format("dataset is {} but the checkpoint is {}",
                                                   to_string(dataset.task_kind()), to_string(model.task_kind())));
  }
  if (static_cast<int>(dataset.num_classes()) != model.num_classes()) {
    throw Error(Errc::config_mismatch, fmt::format("dataset has {} classes but the checkpoint has {}",
                                                   dataset.num_classes(), model.num_classes()));
  }
}

class TrainAndEvaluateTask final : public Task {
 public:
  TrainAndEvaluateTask(const json& config, const RunContext& ctx, std::ostream* progress)
      : ctx_(ctx), progress_(progress) {
    options_.epochs = config.at("epochs").get<std::uint64_t>();
    options_.model_directory = config.at("model_directory").get<std::string>();
    options_.run_id = config.value("run_id", "1");
    options_.seed = component_seed(ctx.config, SeedStream::task);
    options_.progress = progress;
  }
  std::string name() const override { return "TrainAndEvaluateTask"; }

 protected:
  TaskResult execute() override {
    TaskResult result;
    const fs::path run_dir = options_.model_directory / options_.run_id;
    RunLock lock(run_dir);
    note_lock(lock, result, progress_);

    const json eval_specs = ctx_.config.val_dataset->config.value("transforms", json::array());
    ctx_.model->set_eval_transforms(eval_specs, build_image_transforms(eval_specs, *ctx_.registry));
    const TrainingHistory history =
        train_and_evaluate_model(*ctx_.model, *ctx_.train_dataset, *ctx_.val_dataset, options_);

    const EpochRecord& last = history.epochs.back();
    const fs::path report = run_dir / "report.json";
    const fs::path figure = run_dir / "per_class_f1.png";
    write_report_json(last.validation, last.val_loss, report);
    write_per_class_f1_figure(last.validation, figure);

    for (const auto& record : history.epochs) {
      result.artifacts.push_back({"checkpoint", run_dir / fmt::format("epoch_{}", record.epoch)});
    }
    result.artifacts.push_back({"checkpoint", run_dir / "best"});
    result.artifacts.push_back({"event_log", run_dir / "events.jsonl"});
    result.artifacts.push_back({"report", report});
    result.artifacts.push_back({"figure", figure});

    result.summary["run_directory"] = run_dir.string();
    result.summary["epochs"] = history.epochs.size();
    result.summary["best_epoch"] = history.best_epoch;
    result.summary["best_" + last.validation.primary_name()] = history.best_metric;
    result.summary["final"] = last.validation.to_json();
    result.summary["final"]["loss"] = last.val_loss;
    result.summary["final_train_loss"] = last.train_loss;
    return result;
  }

 private:
  RunContext ctx_;
  std::ostream* progress_;
  TrainOptions options_;
};

class EvaluateTask final : public Task {
 public:
  EvaluateTask(const json& config, const RunContext& ctx) : config_(config), ctx_(ctx) {}
  std::string name() const override { return "EvaluateTask"; }

 protected:
  TaskResult execute() override {
    TaskResult result;
    const fs::path ckpt = checkpoint_path(config_);
    const fs::path out_dir = config_.at("output_dir").get<std::string>();
    RunLock lock(out_dir);
    note_lock(lock, result, nullptr);

    auto model = load_model(ckpt, *ctx_.registry);
    check_dataset_matches(*model, *ctx_.val_dataset);
    const Evaluation eval = evaluate_model(*model, *ctx_.val_dataset);

    const fs::path report = out_dir / "report.json";
    const fs::path figure = out_dir / "per_class_f1.png";
    write_report_json(eval.report, eval.loss, report);
    write_per_class_f1_figure(eval.report, figure);
    result.artifacts.push_back({"report", report});
    result.artifacts.push_back({"figure", figure});
    result.summary["checkpoint"] = ckpt.string();
    result.summary["report"] = eval.report.to_json();
    result.summary["report"]["loss"] = eval.loss;
    return result;
  }

 private:
  json config_;
  RunContext ctx_;
};

class PredictTask final : public Task {
 public:
  PredictTask(const json& config, const RunContext& ctx) : config_(config), ctx_(ctx) {}
  std::string name() const override { return "PredictTask"; }

 protected:
  TaskResult execute() override {
    TaskResult result;
    const fs::path ckpt = checkpoint_path(config_);
    const fs::path image_dir = config_.at("image_dir").get<std::string>();
    const fs::path out_dir = config_.at("output_dir").get<std::string>();
    const bool figures = config_.value("figures", false);
    std::error_code ec;
    if (!fs::is_directory(image_dir, ec)) {
      throw Error(Errc::io_error, fmt::format("'{}' is not a directory", image_dir.string()), "image_dir");
    }
    auto model = load_model(ckpt, *ctx_.registry);
    RunLock lock(out_dir);
    note_lock(lock, result, nullptr);

    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(image_dir)) {
      if (entry.is_regular_file() && has_image_extension(entry.path())) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());

    std::vector<PredictionRow> rows;
    json failures = json::array();
    for (const auto& file : files) {
      try {
        const Image image = image_loader(file);
        Prediction p = predict_image(*model, image);
        if (figures) {
          const fs::path fig = out_dir / "figures" / (file.stem().string() + ".png");
          const std::string title = p.labels.empty() ? "(no labels)" : fmt::format("{}", fmt::join(p.labels, ", "));
          write_image_figure(image, title, fig);
          result.artifacts.push_back({"figure", fig});
        }
        rows.push_back({file.filename().string(), std::move(p.probabilities), std::move(p.labels)});
      } catch (const Error& e) {
        if (e.code() != Errc::image_decode_error && e.code() != Errc::unsupported_bit_depth &&
            e.code() != Errc::image_file_missing && e.code() != Errc::shape_mismatch) {
          throw;
        }
        failures.push_back({{"image", file.filename().string()}, {"code", std::string(to_string(e.code()))},
                            {"message", e.what()}});
      }
    }
    const fs::path csv = out_dir / "predictions.csv";
    write_predictions_csv(model->class_names(), rows, csv);
    result.artifacts.push_back({"predictions", csv});
    result.summary["checkpoint"] = ckpt.string();
    result.summary["predicted"] = rows.size();
    result.summary["failures"] = failures;
    return result;
  }

 private:
  json config_;
  RunContext ctx_;
};

class PrepareSplitTask final : public Task {
 public:
  PrepareSplitTask(const json& config, const RunContext& ctx) : config_(config), seed_(ctx.config.seed) {
    if (auto s = config.find("seed"); s != config.end()) seed_ = s->get<std::uint64_t>();
  }
  std::string name() const override { return "PrepareSplitTask"; }

 protected:
  TaskResult execute() override {
    TaskResult result;
    DatasetConfig dc;
    dc.root = config_.at("root").get<std::string>();
    const bool multi_label = config_.at("kind").get<std::string>() == "multi_label";
    const auto dataset = multi_label ? load_multilabel_dataset(dc) : load_multiclass_dataset(dc);
    const fs::path out_root = config_.at("out_root").get<std::string>();
    RunLock lock(out_root);
    note_lock(lock, result, nullptr);
    const SplitSummary split = prepare_split(*dataset, config_.at("train_fraction").get<double>(), seed_, out_root);

    result.artifacts.push_back({"dataset", out_root / "train"});
    result.artifacts.push_back({"dataset", out_root / "test"});
    result.artifacts.push_back({"split_manifest", split.manifest});
    result.summary["train"] = split.train;
    result.summary["test"] = split.test;
    result.summary["seed"] = seed_;
    return result;
  }

 private:
  json config_;
  std::uint64_t seed_;
};

class ExtractFeaturesTask final : public Task {
 public:
  ExtractFeaturesTask(const json& config, const RunContext& ctx) : config_(config), ctx_(ctx) {}
  std::string name() const override { return "ExtractFeaturesTask"; }

 protected:
  TaskResult execute() override {
    TaskResult result;
    const fs::path ckpt = checkpoint_path(config_);
    const fs::path out_dir = config_.at("output_dir").get<std::string>();
    auto model = load_model(ckpt, *ctx_.registry);
    RunLock lock(out_dir);
    note_lock(lock, result, nullptr);

    const auto features = cluster::extract_features(*model, *ctx_.val_dataset);
    const fs::path csv = out_dir / "features.csv";
    cluster::write_features_csv(features, csv);
    result.artifacts.push_back({"features", csv});
    result.summary["checkpoint"] = ckpt.string();
    result.summary["rows"] = features.values.rows();
    result.summary["dimensions"] = features.values.cols();
    return result;
  }

 private:
  json config_;
  RunContext ctx_;
};

class DeepClusterTask final : public Task {
 public:
  DeepClusterTask(const json& config, const RunContext& ctx, std::ostream* progress)
      : ctx_(ctx), progress_(progress) {
    model_directory_ = config.at("model_directory").get<std::string>();
    options_.k = config.at("k").get<std::size_t>();
    options_.cycles = config.value("cycles", std::size_t{3});
    options_.epochs_per_cycle = config.value("epochs_per_cycle", std::size_t{1});
    options_.max_iter = config.value("max_iter", std::size_t{100});
    options_.balanced = config.value("balanced", false);
    options_.run_id = config.value("run_id", "deepcluster");
    options_.seed = component_seed(ctx.config, SeedStream::task);
    options_.progress = progress;
  }
  std::string name() const override { return "DeepClusterTask"; }

 protected:
  TaskResult execute() override {
    TaskResult result;
    const fs::path run_dir = model_directory_ / options_.run_id;
    RunLock lock(run_dir);
    note_lock(lock, result, progress_);

    const fs::path log_path = run_dir / "events.jsonl";
    std::error_code ec;
    fs::remove(log_path, ec);
    metrics::EventLog log(log_path);
    auto options = options_;
    options.log = &log;
    Model& model = *ctx_.model;
    if (!model.prepared()) model.prepare();
    const auto report = cluster::deepcluster_pretrain(model, *ctx_.train_dataset, options);
    log.flush();

    const fs::path csv = run_dir / "cycles.csv";
    cluster::write_cycle_report_csv(report, csv);
    json cycles = json::array();
    for (const auto& row : report) {
      cycles.push_back({{"cycle", row.cycle},
                        {"inertia", row.inertia},
                        {"nmi_vs_prev", row.nmi_vs_prev ? json(*row.nmi_vs_prev) : json(nullptr)},
                        {"mean_train_loss", row.mean_train_loss},
                        {"kmeans_iterations", row.kmeans_iterations}});
    }
    const Checkpoint ckpt =
        save_model(model, model_directory_, options_.run_id, options_.cycles, {{"cycles", options_.cycles}}, "pretrained");

    result.artifacts.push_back({"event_log", log_path});
    result.artifacts.push_back({"cycle_report", csv});
    result.artifacts.push_back({"checkpoint", ckpt.directory});
    result.summary["cycles"] = cycles;
    result.summary["checkpoint"] = ckpt.directory.string();
    return result;
  }

 private:
  RunContext ctx_;
  std::ostream* progress_;
  fs::path model_directory_;
  cluster::DeepClusterOptions options_;
};

class InspectTask final : public Task {
 public:
  InspectTask(const json& config, const RunContext& ctx) : config_(config), ctx_(ctx) {}
  std::string name() const override { return "InspectTask"; }

 protected:
  TaskResult execute() override {
    TaskResult result;
    const fs::path out_dir = config_.at("output_dir").get<std::string>();
    RunLock lock(out_dir);
    note_lock(lock, result, nullptr);
    const Dataset& dataset = *ctx_.train_dataset;

    const DistributionTable table = data_distribution_table(dataset);
    const fs::path csv = out_dir / "distribution.csv";
    const fs::path chart = out_dir / "distribution.png";
    write_distribution_csv(table, csv);
    std::vector<std::string> names;
    std::vector<double> counts;
    json distribution = json::object();
    for (const auto& row : table.rows) {
      names.push_back(row.name);
      counts.push_back(static_cast<double>(row.count));
      distribution[row.name] = row.count;
    }
    write_bar_chart(names, counts, fmt::format("class distribution ({} samples)", table.total_samples), chart);
    result.artifacts.push_back({"distribution", csv});
    result.artifacts.push_back({"figure", chart});

    json samples = json::array();
    for (const auto& index : config_.value("indices", json::array())) {
      const auto i = index.get<std::size_t>();
      const FigureInfo info = show_image(dataset, i, out_dir / fmt::format("sample_{}.png", i));
      result.artifacts.push_back({"figure", info.path});
      samples.push_back({{"index", i}, {"id", dataset.id(i)}, {"labels", info.labels}});
    }
    result.summary["total_samples"] = table.total_samples;
    result.summary["distribution"] = distribution;
    result.summary["samples"] = samples;
    if (!dataset.warnings().empty()) result.summary["dataset_warnings"] = dataset.warnings();
    return result;
  }

 private:
  json config_;
  RunContext ctx_;
};

ParamSpec string_param(std::string name, bool required, std::string description, json def = nullptr) {
  return {.name = std::move(name), .type = ParamType::string, .required = required, .default_value = std::move(def),
          .description = std::move(description)};
}

}  // namespace

void register_tasks(Registry& registry, const BuiltinOptions& options) {
  std::ostream* progress = options.progress;
  const ParamSpec checkpoint = string_param("checkpoint", true, "checkpoint directory, or a run directory holding best/");
  const ParamSpec epoch = {.name = "epoch", .type = ParamType::integer, .min = 1,
                           .description = "use <checkpoint>/epoch_<epoch> instead of best"};
  const ParamSpec output_dir = string_param("output_dir", true, "directory for reports and figures");

  registry.register_component(
      ComponentKind::task, "TrainAndEvaluateTask",
      TaskFactory([progress](const json& c, const RunContext& ctx) -> std::shared_ptr<Task> {
        return std::make_shared<TrainAndEvaluateTask>(c, ctx, progress);
      }),
      {.schema = {{.name = "epochs", .type = ParamType::integer, .required = true, .min = 1},
                  string_param("model_directory", true, "checkpoints go to <model_directory>/<run_id>/"),
                  string_param("run_id", false, "run subdirectory", "1")},
       .required_slots = {Slot::model, Slot::train_dataset, Slot::val_dataset},
       .summary = "train with Adam, evaluating and checkpointing every epoch"});

  registry.register_component(
      ComponentKind::task, "EvaluateTask",
      TaskFactory([](const json& c, const RunContext& ctx) -> std::shared_ptr<Task> {
        return std::make_shared<EvaluateTask>(c, ctx);
      }),
      {.schema = {checkpoint, epoch, output_dir},
       .required_slots = {Slot::val_dataset},
       .summary = "score a checkpoint on val_dataset"});

  registry.register_component(
      ComponentKind::task, "PredictTask",
      TaskFactory([](const json& c, const RunContext& ctx) -> std::shared_ptr<Task> {
        return std::make_shared<PredictTask>(c, ctx);
      }),
      {.schema = {checkpoint, epoch, string_param("image_dir", true, "folder of images to label"), output_dir,
                  {.name = "figures", .type = ParamType::boolean, .default_value = false,
                   .description = "also write one titled PNG per image"}},
       .summary = "label a folder of images into predictions.csv"});

  registry.register_component(
      ComponentKind::task, "PrepareSplitTask",
      TaskFactory([](const json& c, const RunContext& ctx) -> std::shared_ptr<Task> {
        return std::make_shared<PrepareSplitTask>(c, ctx);
      }),
      {.schema = {string_param("root", true, "source dataset directory"),
                  {.name = "kind", .type = ParamType::string, .required = true,
                   .choices = {"multi_label", "multi_class"}},
                  {.name = "train_fraction", .type = ParamType::real, .required = true, .min = 0, .max = 1,
                   .min_exclusive = true, .max_exclusive = true},
                  {.name = "seed", .type = ParamType::integer, .min = 0,
                   .description = "split seed; the run seed when absent"},
                  string_param("out_root", true, "receives train/, test/ and split_manifest.json")},
       .summary = "stratified train/test split materialized on disk"});

  registry.register_component(
      ComponentKind::task, "ExtractFeaturesTask",
      TaskFactory([](const json& c, const RunContext& ctx) -> std::shared_ptr<Task> {
        return std::make_shared<ExtractFeaturesTask>(c, ctx);
      }),
      {.schema = {checkpoint, epoch, output_dir},
       .required_slots = {Slot::val_dataset},
       .summary = "penultimate-layer features of val_dataset to features.csv"});

  registry.register_component(
      ComponentKind::task, "DeepClusterTask",
      TaskFactory([progress](const json& c, const RunContext& ctx) -> std::shared_ptr<Task> {
        return std::make_shared<DeepClusterTask>(c, ctx, progress);
      }),
      {.schema = {{.name = "k", .type = ParamType::integer, .required = true, .min = 2},
                  {.name = "cycles", .type = ParamType::integer, .default_value = 3, .min = 0},
                  {.name = "epochs_per_cycle", .type = ParamType::integer, .default_value = 1, .min = 1},
                  {.name = "max_iter", .type = ParamType::integer, .default_value = 100, .min = 1},
                  {.name = "balanced", .type = ParamType::boolean, .default_value = false,
                   .description = "resample pseudo-labels uniformly over clusters"},
                  string_param("model_directory", true, "output goes to <model_directory>/<run_id>/"),
                  string_param("run_id", false, "run subdirectory", "deepcluster")},
       .required_slots = {Slot::model, Slot::train_dataset},
       .summary = "pseudo-label pretraining; writes a pretrained/ checkpoint"});

  registry.register_component(
      ComponentKind::task, "InspectTask",
      TaskFactory([](const json& c, const RunContext& ctx) -> std::shared_ptr<Task> {
        return std::make_shared<InspectTask>(c, ctx);
      }),
      {.schema = {output_dir,
                  {.name = "indices", .type = ParamType::integer_list, .default_value = json::array(), .min = 0,
                   .description = "samples to render with their labels"}},
       .required_slots = {Slot::train_dataset},
       .summary = "class distribution table and chart, optional sample figures"});
}

}  // namespace eotk

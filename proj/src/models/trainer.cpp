#include "eotk/models/trainer.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "eotk/core/error.hpp"
#include "eotk/datasets/loader.hpp"
#include "eotk/metrics/event_log.hpp"
#include "eotk/models/loss.hpp"

namespace eotk {

namespace fs = std::filesystem;

namespace {

void check_compatible(const Model& model, const Dataset& dataset, const char* role) {
  if (dataset.task_kind() != model.task_kind()) {
    throw Error(Errc::config_mismatch, fmt::format("{} dataset is {} but the model is {}", role,
                                                   to_string(dataset.task_kind()), to_string(model.task_kind())));
  }
  if (dataset.num_classes() != static_cast<std::size_t>(model.num_classes())) {
    throw Error(Errc::config_mismatch, fmt::format("{} dataset has {} classes but the model has num_classes={}",
                                                   role, dataset.num_classes(), model.num_classes()));
  }
}

void log_report(metrics::EventLog& log, const std::string& run_id, std::uint64_t epoch, const EpochRecord& record) {
  log.log_scalar(run_id, epoch, epoch, "train/epoch_loss", record.train_loss);
  log.log_scalar(run_id, epoch, epoch, "val/loss", record.val_loss);
  const nlohmann::json report = record.validation.to_json();
  for (const auto& [key, value] : report.items()) {
    if (value.is_number()) log.log_scalar(run_id, epoch, epoch, "val/" + key, value.get<double>());
  }
}

}  // namespace

Evaluation evaluate_model(const Model& model, const Dataset& dataset) {
  const std::size_t k = static_cast<std::size_t>(model.num_classes());
  Evaluation out;
  out.probabilities.resize(static_cast<Eigen::Index>(dataset.size()), static_cast<Eigen::Index>(k));
  double weighted_loss = 0.0;
  Eigen::Index row = 0;
  BatchStream stream(dataset, BatchOptions::evaluation(dataset));
  while (auto batch = stream.next()) {
    const Matrix logits = model.forward(batch->images);
    weighted_loss += compute_loss(logits, batch->targets, model.task_kind()) * static_cast<double>(batch->targets.size());
    const Matrix probs = probabilities(logits, model.task_kind());
    out.probabilities.middleRows(row, probs.rows()) = probs;
    row += probs.rows();
    for (auto& decision : model.decide(probs)) out.y_pred.push_back(std::move(decision));
    for (const auto& target : batch->targets) out.y_true.push_back(to_label_vector(target, k));
    for (auto& id : batch->ids) out.ids.push_back(std::move(id));
  }
  out.loss = dataset.size() > 0 ? weighted_loss / static_cast<double>(dataset.size()) : 0.0;
  out.report = metrics::evaluate(out.y_true, out.y_pred, model.task_kind(), model.class_names());
  return out;
}

double train_step(Model& model, Adam& optimizer, const ImageBatch& images, const std::vector<Target>& targets,
                  TaskKind loss_kind) {
  ParameterSet grads;
  const double loss = model.network().loss_and_gradients(
      images, [&](const Matrix& logits) { return loss_with_gradient(logits, targets, loss_kind); }, grads);
  if (!std::isfinite(loss)) throw Error(Errc::non_finite_value, "training loss is not finite");
  optimizer.step(model.network().parameters(), grads);
  return loss;
}

double train_epoch(Model& model, Adam& optimizer, const Dataset& dataset, TaskKind loss_kind, std::uint64_t seed,
                   std::uint64_t epoch, std::uint64_t& global_step, const BatchCallback& on_batch) {
  BatchStream stream(dataset, BatchOptions::training(dataset, seed, epoch));
  double total = 0.0;
  std::size_t batches = 0;
  while (auto batch = stream.next()) {
    const double loss = train_step(model, optimizer, batch->images, batch->targets, loss_kind);
    ++global_step;
    ++batches;
    total += loss;
    if (on_batch) on_batch(global_step, loss);
  }
  return batches > 0 ? total / static_cast<double>(batches) : 0.0;
}

TrainingHistory train_and_evaluate_model(Model& model, const Dataset& train, const Dataset& val,
                                         const TrainOptions& options) {
  check_compatible(model, train, "train");
  check_compatible(model, val, "validation");
  if (options.epochs < 1) throw Error(Errc::invalid_params, "epochs must be >= 1", "epochs");
  if (train.size() == 0) throw Error(Errc::invalid_params, "training dataset is empty");
  if (!model.prepared()) model.prepare();
  model.set_class_names(train.vocabulary().names());

  TrainingHistory history;
  history.run_directory = options.model_directory / options.run_id;
  std::error_code ec;
  fs::create_directories(history.run_directory, ec);
  if (ec) {
    throw Error(Errc::io_error, fmt::format("cannot create '{}': {}", history.run_directory.string(), ec.message()));
  }
  const fs::path log_path = history.run_directory / "events.jsonl";
  fs::remove(log_path, ec);
  metrics::EventLog log(log_path);

  Adam optimizer(model.network().parameters(), model.config().learning_rate);
  std::uint64_t global_step = 0;
  double best = -std::numeric_limits<double>::infinity();

  for (std::uint64_t epoch = 1; epoch <= options.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    EpochRecord record;
    record.epoch = epoch;
    record.train_loss = train_epoch(model, optimizer, train, model.task_kind(), options.seed, epoch, global_step,
                                    [&](std::uint64_t step, double loss) {
                                      log.log_scalar(options.run_id, step, epoch, "train/loss", loss);
                                    });
    const Evaluation eval = evaluate_model(model, val);
    record.val_loss = eval.loss;
    record.validation = eval.report;
    record.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    log_report(log, options.run_id, epoch, record);

    nlohmann::json snapshot = eval.report.to_json();
    snapshot["train_loss"] = record.train_loss;
    snapshot["val_loss"] = record.val_loss;
    try {
      save_model(model, options.model_directory, options.run_id, epoch, snapshot);
      if (eval.report.primary() > best) {
        best = eval.report.primary();
        history.best_epoch = epoch;
        history.best_metric = best;
        save_model(model, options.model_directory, options.run_id, epoch, snapshot, "best");
      }
    } catch (const Error&) {
      log.flush();
      throw;
    }
    history.epochs.push_back(std::move(record));

    if (options.progress != nullptr) {
      const auto& r = history.epochs.back();
      fmt::print(*options.progress, "epoch {}/{}  {:.1f}s  train_loss {:.4f}  val_loss {:.4f}  {} {:.4f}\n", epoch,
                 options.epochs, r.seconds, r.train_loss, r.val_loss, r.validation.primary_name(),
                 r.validation.primary());
      options.progress->flush();
    }
  }
  log.flush();
  return history;
}

}  // namespace eotk

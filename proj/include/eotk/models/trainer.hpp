#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "eotk/core/config.hpp"
#include "eotk/datasets/dataset.hpp"
#include "eotk/metrics/metrics.hpp"
#include "eotk/models/model.hpp"
#include "eotk/models/optimizer.hpp"

namespace eotk {

struct EpochRecord {
  std::uint64_t epoch = 0;
  double train_loss = 0.0;  ///< mean over the epoch's batches
  double seconds = 0.0;
  double val_loss = 0.0;
  metrics::MetricReport validation;
};

struct TrainingHistory {
  std::vector<EpochRecord> epochs;
  std::uint64_t best_epoch = 0;
  double best_metric = 0.0;
  std::filesystem::path run_directory;  ///< <model_directory>/<run_id>
};

struct TrainOptions {
  std::uint64_t epochs = 1;
  std::filesystem::path model_directory;
  std::string run_id = "1";
  std::uint64_t seed = kDefaultSeed;  ///< shuffling and augmentation stream
  std::ostream* progress = nullptr;   ///< one line per epoch when set
};

struct Evaluation {
  metrics::MetricReport report;
  double loss = 0.0;
  std::vector<std::string> ids;
  metrics::LabelMatrix y_true;
  metrics::LabelMatrix y_pred;
  Matrix probabilities;
};

/// Augmentation-free pass over `dataset` in dataset order.
Evaluation evaluate_model(const Model& model, const Dataset& dataset);

using BatchCallback = std::function<void(std::uint64_t global_step, double loss)>;

/// One optimizer step on a batch; returns the batch loss.
double train_step(Model& model, Adam& optimizer, const ImageBatch& images, const std::vector<Target>& targets,
                  TaskKind loss_kind);

/// One seeded pass over `dataset`; `global_step` is advanced per batch.
/// Returns the mean batch loss.
double train_epoch(Model& model, Adam& optimizer, const Dataset& dataset, TaskKind loss_kind, std::uint64_t seed,
                   std::uint64_t epoch, std::uint64_t& global_step, const BatchCallback& on_batch = {});

/// Trains for `options.epochs` epochs with Adam, evaluating on `val` after
/// each. Writes `events.jsonl`, `epoch_<e>/` checkpoints and `best/` (highest
/// primary metric, earliest epoch on ties) under
/// `<model_directory>/<run_id>/`. Throws ConfigMismatch when a dataset
/// disagrees with the model on task kind or class count.
TrainingHistory train_and_evaluate_model(Model& model, const Dataset& train, const Dataset& val,
                                         const TrainOptions& options);

}  // namespace eotk

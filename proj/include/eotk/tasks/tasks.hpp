#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "eotk/core/task.hpp"
#include "eotk/datasets/dataset.hpp"
#include "eotk/metrics/metrics.hpp"

namespace eotk {

/// Exclusive ownership of an artifact directory through `<dir>/run.lock`.
/// A lock older than `stale_after` is reclaimed and a warning recorded.
/// Throws RunLocked when another live lock exists, IoError.
class RunLock {
 public:
  explicit RunLock(std::filesystem::path directory,
                   std::chrono::seconds stale_after = std::chrono::hours(24));
  ~RunLock();
  RunLock(const RunLock&) = delete;
  RunLock& operator=(const RunLock&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }
  const std::string& warning() const noexcept { return warning_; }

 private:
  std::filesystem::path path_;
  std::string warning_;
};

enum class SplitSide { train, test };

/// Assignment per sample index. Multi-class: per-class shuffles with
/// round(fraction * n_c) train samples. Multi-label: iterative
/// stratification taking the scarcest remaining label first; totals are
/// exactly round(fraction * N). Depends only on (seed, sample ids). Throws
/// InvalidParams, DegenerateSplit naming every class left empty on a side.
std::vector<SplitSide> stratified_split(const Dataset& dataset, double train_fraction, std::uint64_t seed);

struct SplitSummary {
  std::size_t train = 0;
  std::size_t test = 0;
  std::filesystem::path manifest;
};

/// Copies the files of an on-disk dataset into `<out_root>/train` and
/// `<out_root>/test` in its own layout and writes
/// `<out_root>/split_manifest.json` = {seed, train_fraction, assignments}.
SplitSummary prepare_split(const ImageFileDataset& dataset, double train_fraction, std::uint64_t seed,
                           const std::filesystem::path& out_root);

/// `image,<class...>,labels` with labels joined by ';'.
struct PredictionRow {
  std::string image;
  std::vector<double> probabilities;
  std::vector<std::string> labels;
};
void write_predictions_csv(const std::vector<std::string>& class_names, const std::vector<PredictionRow>& rows,
                           const std::filesystem::path& path);

/// MetricReport JSON plus `loss`, pretty-printed.
void write_report_json(const metrics::MetricReport& report, double loss, const std::filesystem::path& path);

/// Bar chart of per-class F1.
void write_per_class_f1_figure(const metrics::MetricReport& report, const std::filesystem::path& path);

}  // namespace eotk

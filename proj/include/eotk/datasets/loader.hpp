#pragma once

#include <condition_variable>
#include <cstdint>
#include <exception>
#include <map>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include "eotk/datasets/dataset.hpp"

namespace eotk {

struct Batch {
  std::vector<std::size_t> indices;
  std::vector<std::string> ids;
  ImageBatch images;
  std::vector<Target> targets;
};

struct BatchOptions {
  std::size_t batch_size = 16;
  bool shuffle = false;
  std::size_t num_workers = 0;
  std::uint64_t seed = 0;
  std::uint64_t epoch = 0;
  bool augment = false;  ///< apply stochastic transforms (training passes)

  /// Batch size, shuffle and worker count from the dataset's config.
  static BatchOptions training(const Dataset& dataset, std::uint64_t seed, std::uint64_t epoch);
  /// Dataset order, no augmentation.
  static BatchOptions evaluation(const Dataset& dataset);
};

/// Visiting order for one epoch: identity, or a permutation that is a pure
/// function of (seed, epoch).
std::vector<std::size_t> epoch_order(std::size_t n, bool shuffle, std::uint64_t seed,
                                     std::uint64_t epoch);

/// Consecutive slices of `epoch_order`; the short final batch is kept.
std::vector<std::vector<std::size_t>> batch_plan(std::size_t n, const BatchOptions& options);

/// Yields batches in plan order. With num_workers > 0, that many threads
/// decode samples ahead of the consumer into a reordering buffer, so the
/// delivered sequence is identical for every worker count.
class BatchStream {
 public:
  BatchStream(const Dataset& dataset, BatchOptions options);
  ~BatchStream();

  BatchStream(const BatchStream&) = delete;
  BatchStream& operator=(const BatchStream&) = delete;

  std::size_t num_batches() const noexcept { return plan_.size(); }

  /// Next batch, or nullopt when exhausted. Throws ShapeMismatch if images in
  /// the batch differ in shape, and rethrows sample loading errors.
  std::optional<Batch> next();

 private:
  struct Slot {
    std::optional<Sample> sample;
    std::exception_ptr error;
  };

  Sample load(std::size_t position) const;
  void worker_loop();
  Sample take(std::size_t position);

  const Dataset& dataset_;
  BatchOptions options_;
  std::vector<std::vector<std::size_t>> plan_;
  std::vector<std::size_t> order_;  // flattened plan
  std::size_t next_batch_ = 0;
  std::size_t consumed_ = 0;

  std::mutex mutex_;
  std::condition_variable ready_cv_;
  std::condition_variable space_cv_;
  std::map<std::size_t, Slot> ready_;
  std::size_t next_claim_ = 0;
  std::size_t window_ = 0;
  bool stopping_ = false;
  std::vector<std::thread> workers_;
};

/// All batches of one pass, materialized.
std::vector<Batch> iterate_batches(const Dataset& dataset, const BatchOptions& options);

}  // namespace eotk

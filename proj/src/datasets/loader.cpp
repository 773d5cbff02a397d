#include "eotk/datasets/loader.hpp"

#include <algorithm>
#include <numeric>

#include "eotk/core/error.hpp"

namespace eotk {

BatchOptions BatchOptions::training(const Dataset& dataset, std::uint64_t seed, std::uint64_t epoch) {
  const auto& cfg = dataset.config();
  return BatchOptions{cfg.batch_size, cfg.shuffle, cfg.num_workers, seed, epoch, true};
}

BatchOptions BatchOptions::evaluation(const Dataset& dataset) {
  const auto& cfg = dataset.config();
  return BatchOptions{cfg.batch_size, false, cfg.num_workers, 0, 0, false};
}

std::vector<std::size_t> epoch_order(std::size_t n, bool shuffle, std::uint64_t seed,
                                     std::uint64_t epoch) {
  if (!shuffle) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    return order;
  }
  Rng rng(derive_seed(seed, "shuffle", epoch));
  return random_permutation(n, rng);
}

std::vector<std::vector<std::size_t>> batch_plan(std::size_t n, const BatchOptions& options) {
  if (options.batch_size < 1) throw Error(Errc::invalid_params, "batch_size must be >= 1");
  const auto order = epoch_order(n, options.shuffle, options.seed, options.epoch);
  std::vector<std::vector<std::size_t>> plan;
  for (std::size_t start = 0; start < n; start += options.batch_size) {
    const std::size_t end = std::min(n, start + options.batch_size);
    plan.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                      order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return plan;
}

BatchStream::BatchStream(const Dataset& dataset, BatchOptions options)
    : dataset_(dataset), options_(options), plan_(batch_plan(dataset.size(), options)) {
  for (const auto& batch : plan_) order_.insert(order_.end(), batch.begin(), batch.end());
  if (options_.num_workers > 0 && !order_.empty()) {
    window_ = std::max(2 * options_.batch_size, options_.num_workers);
    workers_.reserve(options_.num_workers);
    for (std::size_t i = 0; i < options_.num_workers; ++i) workers_.emplace_back([this] { worker_loop(); });
  }
}

BatchStream::~BatchStream() {
  {
    std::lock_guard lock(mutex_);
    stopping_ = true;
  }
  space_cv_.notify_all();
  ready_cv_.notify_all();
  for (auto& t : workers_) t.join();
}

Sample BatchStream::load(std::size_t position) const {
  const std::size_t index = order_[position];
  if (options_.augment) return dataset_.get_item(index, AugmentationKey{options_.seed, options_.epoch});
  return dataset_.get_item(index);
}

void BatchStream::worker_loop() {
  for (;;) {
    std::size_t position = 0;
    {
      std::unique_lock lock(mutex_);
      space_cv_.wait(lock, [&] {
        return stopping_ || next_claim_ >= order_.size() || next_claim_ < consumed_ + window_;
      });
      if (stopping_ || next_claim_ >= order_.size()) return;
      position = next_claim_++;
    }
    Slot slot;
    try {
      slot.sample = load(position);
    } catch (...) {
      slot.error = std::current_exception();
    }
    {
      std::lock_guard lock(mutex_);
      ready_.emplace(position, std::move(slot));
    }
    ready_cv_.notify_all();
  }
}

Sample BatchStream::take(std::size_t position) {
  if (workers_.empty()) return load(position);
  Slot slot;
  {
    std::unique_lock lock(mutex_);
    ready_cv_.wait(lock, [&] { return ready_.contains(position); });
    auto node = ready_.extract(position);
    slot = std::move(node.mapped());
    ++consumed_;
  }
  space_cv_.notify_all();
  if (slot.error) std::rethrow_exception(slot.error);
  return std::move(*slot.sample);
}

std::optional<Batch> BatchStream::next() {
  if (next_batch_ >= plan_.size()) return std::nullopt;
  const auto& indices = plan_[next_batch_];
  std::size_t position = 0;
  for (std::size_t b = 0; b < next_batch_; ++b) position += plan_[b].size();
  ++next_batch_;

  Batch batch;
  batch.indices = indices;
  std::vector<Image> images;
  images.reserve(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    Sample sample = take(position + i);
    batch.ids.push_back(std::move(sample.id));
    batch.targets.push_back(std::move(sample.target));
    images.push_back(std::move(sample.image));
  }
  batch.images = ImageBatch::stack(images);
  return batch;
}

std::vector<Batch> iterate_batches(const Dataset& dataset, const BatchOptions& options) {
  BatchStream stream(dataset, options);
  std::vector<Batch> out;
  out.reserve(stream.num_batches());
  while (auto batch = stream.next()) out.push_back(std::move(*batch));
  return out;
}

}  // namespace eotk

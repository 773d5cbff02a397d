#include "eotk/datasets/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <fmt/format.h>

#include "eotk/core/error.hpp"
#include "eotk/datasets/image_io.hpp"

namespace eotk {

LabelVocabulary::LabelVocabulary(std::vector<std::string> names) : names_(std::move(names)) {
  if (names_.size() < 2) {
    throw Error(Errc::schema_error,
                fmt::format("a label vocabulary needs at least 2 classes, got {}", names_.size()));
  }
  std::set<std::string> seen;
  for (const auto& name : names_) {
    if (name.empty()) throw Error(Errc::schema_error, "class names must be non-empty");
    if (!seen.insert(name).second) {
      throw Error(Errc::schema_error, fmt::format("duplicate class name '{}'", name));
    }
  }
}

std::optional<std::size_t> LabelVocabulary::index_of(std::string_view name) const {
  auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - names_.begin());
}

std::vector<std::string> LabelVocabulary::names_of(const LabelVector& bits) const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < bits.size() && i < names_.size(); ++i) {
    if (bits[i]) out.push_back(names_[i]);
  }
  return out;
}

Dataset::Dataset(TaskKind kind, LabelVocabulary vocabulary, DatasetConfig config)
    : kind_(kind),
      vocabulary_(std::move(vocabulary)),
      config_(std::move(config)),
      pipeline_(transforms::compose(config_.transforms)) {
  if (config_.batch_size < 1) throw Error(Errc::schema_error, "batch_size must be >= 1", "batch_size");
}

void Dataset::check_index(std::size_t index) const {
  if (index >= size()) {
    throw Error(Errc::index_out_of_range,
                fmt::format("index {} outside dataset of length {}", index, size()));
  }
}

void Dataset::warn(std::string message) { warnings_.push_back(std::move(message)); }

Sample Dataset::make_sample(std::size_t index, Rng* rng) const {
  check_index(index);
  Sample sample;
  sample.id = id(index);
  sample.image = pipeline_->apply(load_image(index), rng);
  sample.target = raw_target(index);
  for (const auto& t : config_.target_transforms) sample.target = t->apply(sample.target);
  return sample;
}

Sample Dataset::get_item(std::size_t index) const { return make_sample(index, nullptr); }

Sample Dataset::get_item(std::size_t index, AugmentationKey key) const {
  Rng rng(derive_seed(key.seed, "augment", key.epoch, static_cast<std::uint64_t>(index)));
  return make_sample(index, &rng);
}

ImageFileDataset::ImageFileDataset(TaskKind kind, LabelVocabulary vocabulary, DatasetConfig config,
                                   std::vector<Record> records, std::vector<std::string> warnings)
    : Dataset(kind, std::move(vocabulary), std::move(config)), records_(std::move(records)) {
  for (auto& w : warnings) warn(std::move(w));
}

const ImageFileDataset::Record& ImageFileDataset::record(std::size_t index) const {
  check_index(index);
  return records_[index];
}

const std::string& ImageFileDataset::id(std::size_t index) const { return record(index).id; }
const Target& ImageFileDataset::raw_target(std::size_t index) const { return record(index).target; }
Image ImageFileDataset::load_image(std::size_t index) const { return image_loader(record(index).path); }

InMemoryDataset::InMemoryDataset(TaskKind kind, LabelVocabulary vocabulary, DatasetConfig config,
                                 std::vector<Sample> samples)
    : Dataset(kind, std::move(vocabulary), std::move(config)), samples_(std::move(samples)) {}

const std::string& InMemoryDataset::id(std::size_t index) const {
  check_index(index);
  return samples_[index].id;
}
const Target& InMemoryDataset::raw_target(std::size_t index) const {
  check_index(index);
  return samples_[index].target;
}
Image InMemoryDataset::load_image(std::size_t index) const {
  check_index(index);
  return samples_[index].image;
}

DistributionTable data_distribution_table(const Dataset& dataset) {
  DistributionTable table;
  table.total_samples = dataset.size();
  const auto& vocab = dataset.vocabulary();
  std::vector<std::size_t> counts(vocab.size(), 0);
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const LabelVector bits = dataset.label_vector(i);
    for (std::size_t c = 0; c < bits.size(); ++c) counts[c] += bits[c];
  }
  for (std::size_t c = 0; c < vocab.size(); ++c) table.rows.push_back({vocab.name(c), counts[c]});
  return table;
}

void write_distribution_csv(const DistributionTable& table, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::io_error, fmt::format("cannot write '{}'", path.string()));
  out << "class,count\n";
  for (const auto& row : table.rows) out << row.name << ',' << row.count << '\n';
  if (!out) throw Error(Errc::io_error, fmt::format("write to '{}' failed", path.string()));
}

}  // namespace eotk

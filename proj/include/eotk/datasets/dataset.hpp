#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "eotk/core/types.hpp"
#include "eotk/transforms/transforms.hpp"

namespace eotk {

/// Ordered, duplicate-free class names; index i <-> names()[i] everywhere.
class LabelVocabulary {
 public:
  LabelVocabulary() = default;
  /// Throws SchemaError unless there are at least two unique names.
  explicit LabelVocabulary(std::vector<std::string> names);

  std::size_t size() const noexcept { return names_.size(); }
  const std::string& name(std::size_t index) const { return names_.at(index); }
  const std::vector<std::string>& names() const noexcept { return names_; }
  std::optional<std::size_t> index_of(std::string_view name) const;

  /// Positive-class names in vocabulary order.
  std::vector<std::string> names_of(const LabelVector& bits) const;

  friend bool operator==(const LabelVocabulary&, const LabelVocabulary&) = default;

 private:
  std::vector<std::string> names_;
};

struct Sample {
  std::string id;
  Image image;
  Target target;
};

struct DatasetConfig {
  std::filesystem::path root;
  std::size_t batch_size = 16;
  bool shuffle = false;
  std::size_t num_workers = 0;
  std::vector<ImageTransformPtr> transforms;
  std::vector<TargetTransformPtr> target_transforms;
};

/// Selects the augmentation stream for a training pass.
struct AugmentationKey {
  std::uint64_t seed = 0;
  std::uint64_t epoch = 0;
};

/// Read-only indexed collection of samples. Decoding and transforms happen
/// on access, so one instance may be read from several loader threads.
class Dataset {
 public:
  Dataset(TaskKind kind, LabelVocabulary vocabulary, DatasetConfig config);
  virtual ~Dataset() = default;

  TaskKind task_kind() const noexcept { return kind_; }
  const LabelVocabulary& vocabulary() const noexcept { return vocabulary_; }
  const DatasetConfig& config() const noexcept { return config_; }
  std::size_t num_classes() const noexcept { return vocabulary_.size(); }

  virtual std::size_t size() const = 0;
  virtual const std::string& id(std::size_t index) const = 0;
  /// Target as stored on disk, before target transforms.
  virtual const Target& raw_target(std::size_t index) const = 0;
  /// Decoded image before transforms.
  virtual Image load_image(std::size_t index) const = 0;

  /// Evaluation-mode access: stochastic transforms are skipped.
  Sample get_item(std::size_t index) const;
  /// Training-mode access: stochastic transforms draw from a stream seeded by
  /// (key.seed, key.epoch, index).
  Sample get_item(std::size_t index, AugmentationKey key) const;

  LabelVector label_vector(std::size_t index) const {
    return to_label_vector(raw_target(index), num_classes());
  }

  const std::vector<std::string>& warnings() const noexcept { return warnings_; }

 protected:
  void check_index(std::size_t index) const;
  void warn(std::string message);

 private:
  Sample make_sample(std::size_t index, Rng* rng) const;

  TaskKind kind_;
  LabelVocabulary vocabulary_;
  DatasetConfig config_;
  std::shared_ptr<const transforms::Compose> pipeline_;
  std::vector<std::string> warnings_;
};

/// Images on disk, either a multi-label `images/` + `labels.csv` root or a
/// folder-per-class root.
class ImageFileDataset final : public Dataset {
 public:
  struct Record {
    std::string id;
    std::filesystem::path path;
    Target target;
    std::string label_key;  ///< `image` cell for multi-label, class folder otherwise
  };

  ImageFileDataset(TaskKind kind, LabelVocabulary vocabulary, DatasetConfig config,
                   std::vector<Record> records, std::vector<std::string> warnings = {});

  std::size_t size() const override { return records_.size(); }
  const std::string& id(std::size_t index) const override;
  const Target& raw_target(std::size_t index) const override;
  Image load_image(std::size_t index) const override;
  const Record& record(std::size_t index) const;

 private:
  std::vector<Record> records_;
};

/// Samples held in memory; used for generated data and tests.
class InMemoryDataset final : public Dataset {
 public:
  InMemoryDataset(TaskKind kind, LabelVocabulary vocabulary, DatasetConfig config,
                  std::vector<Sample> samples);

  std::size_t size() const override { return samples_.size(); }
  const std::string& id(std::size_t index) const override;
  const Target& raw_target(std::size_t index) const override;
  Image load_image(std::size_t index) const override;

 private:
  std::vector<Sample> samples_;
};

/// `<root>/images/*` plus `<root>/labels.csv` with header
/// `image,<class1>,...,<classK>` and one 0/1 row per image. Sample order is
/// CSV row order. Throws DatasetRootMissing, LabelFileMalformed,
/// ImageFileMissing, SchemaError (fewer than two classes).
std::shared_ptr<ImageFileDataset> load_multilabel_dataset(const DatasetConfig& config);

/// `<root>/<class>/<image files>`; classes are the sorted subdirectory names
/// and samples are ordered by class, then file name. Empty class folders are
/// kept with a warning. Throws DatasetRootMissing, SchemaError.
std::shared_ptr<ImageFileDataset> load_multiclass_dataset(const DatasetConfig& config);

struct DistributionTable {
  struct Row {
    std::string name;
    std::size_t count = 0;
  };
  std::vector<Row> rows;
  std::size_t total_samples = 0;
};

/// count[i] = number of samples whose raw target includes class i.
DistributionTable data_distribution_table(const Dataset& dataset);

/// CSV with header `class,count`.
void write_distribution_csv(const DistributionTable& table, const std::filesystem::path& path);

}  // namespace eotk

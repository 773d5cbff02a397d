#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "eotk/core/schema.hpp"
#include "eotk/core/types.hpp"
#include "eotk/models/network.hpp"
#include "eotk/transforms/transforms.hpp"

namespace eotk {

class Registry;

struct ModelConfig {
  int num_classes = 2;
  double learning_rate = 1e-3;
  bool pretrained = false;
  std::string pretrained_path;  ///< checkpoint directory used when pretrained
  double threshold = 0.5;       ///< multi-label decision threshold
  TaskKind task_kind = TaskKind::multi_label;
  ArchitectureSpec architecture;

  /// Reads the keys of `model_schema(architecture)`; absent keys keep their
  /// defaults. `architecture.outputs` is set to num_classes.
  static ModelConfig from_json(const nlohmann::json& config, Architecture architecture, TaskKind kind);
  /// Schema keys only.
  nlohmann::json to_json() const;
};

/// Parameters accepted by the built-in model classnames.
ParamSchema model_schema(Architecture architecture);

/// e.g. "SmallCNNMultiLabel"
std::string model_classname(Architecture architecture, TaskKind kind);

struct Prediction {
  std::vector<std::string> labels;
  std::vector<double> probabilities;
  LabelVector decisions;
};

/// A network plus the metadata needed to reproduce inference: class names
/// and the evaluation-time image transforms.
class Model {
 public:
  Model(std::string classname, ModelConfig config, std::uint64_t seed);

  const std::string& classname() const noexcept { return classname_; }
  const ModelConfig& config() const noexcept { return config_; }
  TaskKind task_kind() const noexcept { return config_.task_kind; }
  int num_classes() const noexcept { return config_.num_classes; }
  std::uint64_t seed() const noexcept { return seed_; }

  Network& network() noexcept { return network_; }
  const Network& network() const noexcept { return network_; }

  /// Loads pretrained weights when configured (PretrainedUnavailable if the
  /// path is unset) and marks the model ready for prediction.
  void prepare();
  bool prepared() const noexcept { return prepared_; }
  void mark_prepared() noexcept { prepared_ = true; }

  /// Raw logits. Throws ShapeMismatch.
  Matrix forward(const ImageBatch& batch) const;
  /// Softmax or sigmoid probabilities.
  Matrix predict_probabilities(const ImageBatch& batch) const;
  /// Thresholded (multi-label) or argmax (multi-class) decisions per row.
  std::vector<LabelVector> decide(const Matrix& probabilities) const;

  /// Applies the evaluation transforms, then predicts. Throws
  /// UncheckpointedModel before prepare/load, ShapeMismatch.
  Prediction predict_image(const Image& image) const;

  void set_class_names(std::vector<std::string> names);
  /// Defaults to class_0 ... class_{K-1}.
  const std::vector<std::string>& class_names() const noexcept { return class_names_; }

  /// `specs` is the `{"name", "params"}` list recorded in checkpoints.
  void set_eval_transforms(nlohmann::json specs, std::vector<ImageTransformPtr> pipeline);
  const nlohmann::json& eval_transform_specs() const noexcept { return eval_specs_; }
  Image apply_eval_transforms(const Image& image) const;

  /// SHA-256 of the serialized parameters.
  std::string checksum() const;

  /// Model config plus `class_names` and `eval_transforms`, as stored in
  /// checkpoint manifests.
  nlohmann::json manifest_config() const;

 private:
  std::string classname_;
  ModelConfig config_;
  std::uint64_t seed_;
  Network network_;
  bool prepared_ = false;
  std::vector<std::string> class_names_;
  nlohmann::json eval_specs_ = nlohmann::json::array();
  std::shared_ptr<const transforms::Compose> eval_pipeline_;
};

/// Builds a built-in model from its classname.
std::shared_ptr<Model> build_model(const std::string& classname, const nlohmann::json& config, std::uint64_t seed);

Prediction predict_image(const Model& model, const Image& image);

// Checkpoints ---------------------------------------------------------------

inline constexpr int kCheckpointFormatVersion = 1;

struct CheckpointManifest {
  std::string classname;
  nlohmann::json config;
  std::uint64_t epoch = 0;
  std::string run_id;
  nlohmann::json metrics = nlohmann::json::object();
  int format_version = kCheckpointFormatVersion;
  std::string weights_sha256;

  nlohmann::json to_json() const;
  /// Throws ManifestMissing for missing fields, VersionUnsupported.
  static CheckpointManifest from_json(const nlohmann::json& doc);
};

struct Checkpoint {
  std::filesystem::path directory;
  CheckpointManifest manifest;
};

/// Writes `<model_directory>/<run_id>/<name>/{manifest.json, weights.bin}`
/// where name defaults to `epoch_<epoch>`. Throws IoError.
Checkpoint save_model(const Model& model, const std::filesystem::path& model_directory, const std::string& run_id,
                      std::uint64_t epoch, const nlohmann::json& metrics, const std::string& name = {});

/// `path` itself if it holds a manifest, else `path/best`. Throws
/// ManifestMissing.
std::filesystem::path resolve_checkpoint(const std::filesystem::path& path);

/// Reads and verifies a checkpoint. Throws ManifestMissing,
/// VersionUnsupported, ChecksumMismatch.
Checkpoint read_checkpoint(const std::filesystem::path& path);

/// Replaces the model's parameters and metadata with the checkpoint's.
/// Eval transforms are rebuilt through `registry` when given. Throws
/// ConfigMismatch when num_classes or parameter shapes differ.
void load_weights(Model& model, const std::filesystem::path& path, const Registry* registry = nullptr);

/// Reconstructs the model named in the manifest through `registry`.
std::shared_ptr<Model> load_model(const std::filesystem::path& path, const Registry& registry);

}  // namespace eotk

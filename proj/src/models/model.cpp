#include "eotk/models/model.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>

#include <fmt/format.h>

#include "eotk/core/error.hpp"
#include "eotk/core/hash.hpp"
#include "eotk/core/random.hpp"
#include "eotk/core/registry.hpp"
#include "eotk/models/loss.hpp"

namespace eotk {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

template <typename T>
T get_or(const json& config, const char* key, T fallback) {
  auto it = config.find(key);
  return it == config.end() || it->is_null() ? fallback : it->get<T>();
}

void write_file_atomically(const fs::path& path, const char* data, std::size_t size) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::io_error, fmt::format("cannot write '{}'", tmp.string()));
    out.write(data, static_cast<std::streamsize>(size));
    out.flush();
    if (!out) throw Error(Errc::io_error, fmt::format("write to '{}' failed", tmp.string()));
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw Error(Errc::io_error, fmt::format("cannot move '{}' into place: {}", tmp.string(), ec.message()));
}

std::vector<char> read_bytes(const fs::path& path, Errc missing) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(missing, fmt::format("cannot read '{}'", path.string()));
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

ArchitectureSpec network_spec(const ModelConfig& config) {
  ArchitectureSpec spec = config.architecture;
  spec.outputs = config.num_classes;
  return spec;
}

}  // namespace

ModelConfig ModelConfig::from_json(const json& config, Architecture architecture, TaskKind kind) {
  ModelConfig out;
  out.task_kind = kind;
  out.architecture.architecture = architecture;
  if (architecture == Architecture::reference_mlp) out.architecture.hidden = 128;
  out.num_classes = get_or(config, "num_classes", out.num_classes);
  out.learning_rate = get_or(config, "learning_rate", out.learning_rate);
  out.pretrained = get_or(config, "pretrained", out.pretrained);
  out.pretrained_path = get_or(config, "pretrained_path", out.pretrained_path);
  out.threshold = get_or(config, "threshold", out.threshold);
  auto& a = out.architecture;
  a.input_channels = get_or(config, "input_channels", a.input_channels);
  a.input_height = get_or(config, "input_height", a.input_height);
  a.input_width = get_or(config, "input_width", a.input_width);
  a.hidden = get_or(config, "hidden", a.hidden);
  if (architecture == Architecture::small_cnn) {
    a.conv1_filters = get_or(config, "conv1_filters", a.conv1_filters);
    a.conv2_filters = get_or(config, "conv2_filters", a.conv2_filters);
  }
  a.outputs = out.num_classes;
  return out;
}

json ModelConfig::to_json() const {
  json out = {{"num_classes", num_classes},
              {"learning_rate", learning_rate},
              {"pretrained", pretrained},
              {"threshold", threshold},
              {"input_channels", architecture.input_channels},
              {"input_height", architecture.input_height},
              {"input_width", architecture.input_width},
              {"hidden", architecture.hidden}};
  if (!pretrained_path.empty()) out["pretrained_path"] = pretrained_path;
  if (architecture.architecture == Architecture::small_cnn) {
    out["conv1_filters"] = architecture.conv1_filters;
    out["conv2_filters"] = architecture.conv2_filters;
  }
  return out;
}

ParamSchema model_schema(Architecture architecture) {
  const bool cnn = architecture == Architecture::small_cnn;
  ParamSchema schema = {
      {.name = "num_classes", .type = ParamType::integer, .required = true, .min = 2,
       .description = "output width K"},
      {.name = "learning_rate", .type = ParamType::real, .required = true, .min = 0, .min_exclusive = true,
       .description = "Adam step size"},
      {.name = "pretrained", .type = ParamType::boolean, .default_value = false,
       .description = "initialize from the checkpoint at pretrained_path"},
      {.name = "pretrained_path", .type = ParamType::string,
       .description = "checkpoint directory (or its parent holding best/)"},
      {.name = "threshold", .type = ParamType::real, .default_value = 0.5, .min = 0, .max = 1,
       .min_exclusive = true, .max_exclusive = true, .description = "multi-label decision threshold (>=)"},
      {.name = "input_channels", .type = ParamType::integer, .default_value = 3, .min = 1},
      {.name = "input_height", .type = ParamType::integer, .default_value = 64, .min = cnn ? 4 : 1},
      {.name = "input_width", .type = ParamType::integer, .default_value = 64, .min = cnn ? 4 : 1},
      {.name = "hidden", .type = ParamType::integer, .default_value = cnn ? 32 : 128, .min = 1,
       .description = "hidden dense width (feature dimension)"},
  };
  if (cnn) {
    schema.push_back({.name = "conv1_filters", .type = ParamType::integer, .default_value = 8, .min = 1});
    schema.push_back({.name = "conv2_filters", .type = ParamType::integer, .default_value = 16, .min = 1});
  }
  return schema;
}

std::string model_classname(Architecture architecture, TaskKind kind) {
  return fmt::format("{}{}", architecture == Architecture::small_cnn ? "SmallCNN" : "ReferenceMLP",
                     kind == TaskKind::multi_label ? "MultiLabel" : "MultiClass");
}

Model::Model(std::string classname, ModelConfig config, std::uint64_t seed)
    : classname_(std::move(classname)), config_(std::move(config)), seed_(seed),
      network_(network_spec(config_), seed),
      eval_pipeline_(transforms::compose({})) {
  if (config_.num_classes < 2) throw Error(Errc::invalid_params, "num_classes must be >= 2", "num_classes");
  if (config_.pretrained && config_.pretrained_path.empty()) {
    throw Error(Errc::pretrained_unavailable,
                "pretrained=true needs a local checkpoint in pretrained_path; no weights are downloaded",
                "pretrained_path");
  }
  config_.architecture.outputs = config_.num_classes;
  for (int k = 0; k < config_.num_classes; ++k) class_names_.push_back(fmt::format("class_{}", k));
}

void Model::prepare() {
  if (config_.pretrained) {
    if (config_.pretrained_path.empty()) {
      throw Error(Errc::pretrained_unavailable, "pretrained=true needs pretrained_path", "pretrained_path");
    }
    Checkpoint ckpt;
    try {
      ckpt = read_checkpoint(config_.pretrained_path);
    } catch (const Error& e) {
      throw Error(Errc::pretrained_unavailable,
                  fmt::format("cannot use '{}' as pretrained weights: {}", config_.pretrained_path, e.what()),
                  "pretrained_path");
    }
    const ParameterSet source = deserialize_parameters(read_bytes(ckpt.directory / "weights.bin", Errc::manifest_missing));
    std::size_t copied = 0;
    for (auto& p : network_.parameters()) {
      auto it = std::find_if(source.begin(), source.end(), [&](const Parameter& s) { return s.name == p.name; });
      if (it != source.end() && it->tensor.shape == p.tensor.shape) {
        p.tensor = it->tensor;
        ++copied;
      }
    }
    if (copied == 0) {
      throw Error(Errc::pretrained_unavailable,
                  fmt::format("no parameter in '{}' matches this architecture", config_.pretrained_path),
                  "pretrained_path");
    }
  }
  prepared_ = true;
}

Matrix Model::forward(const ImageBatch& batch) const { return network_.forward(batch); }

Matrix Model::predict_probabilities(const ImageBatch& batch) const {
  return probabilities(forward(batch), config_.task_kind);
}

std::vector<LabelVector> Model::decide(const Matrix& probs) const {
  std::vector<LabelVector> out;
  out.reserve(static_cast<std::size_t>(probs.rows()));
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    LabelVector row(static_cast<std::size_t>(probs.cols()), 0);
    if (config_.task_kind == TaskKind::multi_label) {
      for (Eigen::Index j = 0; j < probs.cols(); ++j) row[j] = probs(i, j) >= config_.threshold ? 1 : 0;
    } else {
      Eigen::Index best = 0;
      probs.row(i).maxCoeff(&best);
      row[static_cast<std::size_t>(best)] = 1;
    }
    out.push_back(std::move(row));
  }
  return out;
}

Image Model::apply_eval_transforms(const Image& image) const { return eval_pipeline_->apply(image, nullptr); }

Prediction Model::predict_image(const Image& image) const {
  if (!prepared_) {
    throw Error(Errc::uncheckpointed_model, "model must be prepared or loaded from a checkpoint before prediction");
  }
  const Matrix probs = predict_probabilities(ImageBatch::single(apply_eval_transforms(image)));
  Prediction out;
  out.probabilities.assign(probs.data(), probs.data() + probs.cols());
  out.decisions = decide(probs).front();
  for (std::size_t k = 0; k < out.decisions.size(); ++k) {
    if (out.decisions[k]) out.labels.push_back(class_names_[k]);
  }
  return out;
}

void Model::set_class_names(std::vector<std::string> names) {
  if (names.size() != static_cast<std::size_t>(config_.num_classes)) {
    throw Error(Errc::config_mismatch, fmt::format("{} class names for a {}-class model", names.size(),
                                                   config_.num_classes));
  }
  class_names_ = std::move(names);
}

void Model::set_eval_transforms(json specs, std::vector<ImageTransformPtr> pipeline) {
  eval_specs_ = std::move(specs);
  eval_pipeline_ = transforms::compose(std::move(pipeline));
}

std::string Model::checksum() const { return parameter_checksum(network_.parameters()); }

json Model::manifest_config() const {
  json out = config_.to_json();
  out["class_names"] = class_names_;
  out["eval_transforms"] = eval_specs_;
  return out;
}

std::shared_ptr<Model> build_model(const std::string& classname, const json& config, std::uint64_t seed) {
  for (Architecture a : {Architecture::small_cnn, Architecture::reference_mlp}) {
    for (TaskKind k : {TaskKind::multi_label, TaskKind::multi_class}) {
      if (classname == model_classname(a, k)) {
        return std::make_shared<Model>(classname, ModelConfig::from_json(config, a, k), seed);
      }
    }
  }
  throw Error(Errc::unknown_component, fmt::format("unknown model classname '{}'", classname));
}

Prediction predict_image(const Model& model, const Image& image) { return model.predict_image(image); }

// Checkpoints ---------------------------------------------------------------

json CheckpointManifest::to_json() const {
  return {{"classname", classname}, {"config", config},           {"epoch", epoch},
          {"run_id", run_id},       {"metrics", metrics},         {"format_version", format_version},
          {"weights_sha256", weights_sha256}};
}

CheckpointManifest CheckpointManifest::from_json(const json& doc) {
  if (!doc.is_object()) throw Error(Errc::manifest_missing, "manifest is not a JSON object");
  for (const char* key : {"classname", "config", "epoch", "run_id", "metrics", "format_version", "weights_sha256"}) {
    if (!doc.contains(key)) throw Error(Errc::manifest_missing, fmt::format("manifest lacks '{}'", key));
  }
  CheckpointManifest m;
  try {
    m.format_version = doc.at("format_version").get<int>();
    if (m.format_version != kCheckpointFormatVersion) {
      throw Error(Errc::version_unsupported,
                  fmt::format("checkpoint format {} is not supported (expected {})", m.format_version,
                              kCheckpointFormatVersion));
    }
    m.classname = doc.at("classname").get<std::string>();
    m.config = doc.at("config");
    m.epoch = doc.at("epoch").get<std::uint64_t>();
    m.run_id = doc.at("run_id").get<std::string>();
    m.metrics = doc.at("metrics");
    m.weights_sha256 = doc.at("weights_sha256").get<std::string>();
  } catch (const json::exception& e) {
    throw Error(Errc::manifest_missing, fmt::format("malformed manifest: {}", e.what()));
  }
  return m;
}

Checkpoint save_model(const Model& model, const fs::path& model_directory, const std::string& run_id,
                      std::uint64_t epoch, const json& metrics, const std::string& name) {
  const fs::path dir = model_directory / run_id / (name.empty() ? fmt::format("epoch_{}", epoch) : name);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(Errc::io_error, fmt::format("cannot create '{}': {}", dir.string(), ec.message()));

  const std::vector<char> blob = serialize_parameters(model.network().parameters());
  CheckpointManifest manifest;
  manifest.classname = model.classname();
  manifest.config = model.manifest_config();
  manifest.epoch = epoch;
  manifest.run_id = run_id;
  manifest.metrics = metrics;
  manifest.weights_sha256 = sha256_hex(blob);

  write_file_atomically(dir / "weights.bin", blob.data(), blob.size());
  const std::string text = manifest.to_json().dump(2) + "\n";
  write_file_atomically(dir / "manifest.json", text.data(), text.size());
  return Checkpoint{dir, std::move(manifest)};
}

fs::path resolve_checkpoint(const fs::path& path) {
  if (fs::is_regular_file(path / "manifest.json")) return path;
  if (fs::is_regular_file(path / "best" / "manifest.json")) return path / "best";
  throw Error(Errc::manifest_missing, fmt::format("no manifest.json in '{}' or '{}'", path.string(),
                                                  (path / "best").string()));
}

Checkpoint read_checkpoint(const fs::path& path) {
  const fs::path dir = resolve_checkpoint(path);
  json doc;
  try {
    const auto bytes = read_bytes(dir / "manifest.json", Errc::manifest_missing);
    doc = json::parse(bytes.begin(), bytes.end());
  } catch (const json::parse_error& e) {
    throw Error(Errc::manifest_missing, fmt::format("unreadable manifest in '{}': {}", dir.string(), e.what()));
  }
  Checkpoint ckpt{dir, CheckpointManifest::from_json(doc)};
  const fs::path weights = dir / "weights.bin";
  if (!fs::is_regular_file(weights)) {
    throw Error(Errc::manifest_missing, fmt::format("'{}' has no weights.bin", dir.string()));
  }
  if (sha256_file(weights) != ckpt.manifest.weights_sha256) {
    throw Error(Errc::checksum_mismatch, fmt::format("weights in '{}' do not match the manifest checksum",
                                                     dir.string()));
  }
  return ckpt;
}

void load_weights(Model& model, const fs::path& path, const Registry* registry) {
  const Checkpoint ckpt = read_checkpoint(path);
  const json& cfg = ckpt.manifest.config;
  const int stored_classes = cfg.value("num_classes", 0);
  if (stored_classes != model.num_classes()) {
    throw Error(Errc::config_mismatch,
                fmt::format("checkpoint has num_classes={} but the model has {}", stored_classes,
                            model.num_classes()),
                "num_classes");
  }
  ParameterSet params = deserialize_parameters(read_bytes(ckpt.directory / "weights.bin", Errc::manifest_missing));
  auto& current = model.network().parameters();
  if (params.size() != current.size()) {
    throw Error(Errc::config_mismatch, "checkpoint parameter layout differs from the model architecture");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].name != current[i].name || params[i].tensor.shape != current[i].tensor.shape) {
      throw Error(Errc::config_mismatch,
                  fmt::format("checkpoint parameter '{}' does not match model parameter '{}'", params[i].name,
                              current[i].name));
    }
  }
  current = std::move(params);

  if (auto names = cfg.find("class_names"); names != cfg.end()) {
    model.set_class_names(names->get<std::vector<std::string>>());
  }
  json specs = cfg.value("eval_transforms", json::array());
  std::vector<ImageTransformPtr> pipeline;
  if (registry != nullptr) {
    for (const auto& spec : specs) {
      const auto& factory =
          registry->resolve_as<TransformFactory>(ComponentKind::transform, spec.at("name").get<std::string>());
      auto handle = factory(spec.value("params", json::object()));
      if (auto* image = std::get_if<std::shared_ptr<const ImageTransform>>(&handle)) pipeline.push_back(*image);
    }
  }
  model.set_eval_transforms(std::move(specs), std::move(pipeline));
  model.mark_prepared();
}

std::shared_ptr<Model> load_model(const fs::path& path, const Registry& registry) {
  const Checkpoint ckpt = read_checkpoint(path);
  json config = ckpt.manifest.config;
  config.erase("class_names");
  config.erase("eval_transforms");
  config["pretrained"] = false;
  config.erase("pretrained_path");
  const auto& factory = registry.resolve_as<ModelFactory>(ComponentKind::model, ckpt.manifest.classname);
  std::shared_ptr<Model> model = factory(config, 0);
  load_weights(*model, ckpt.directory, &registry);
  return model;
}

}  // namespace eotk

#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "eotk/core/config.hpp"
#include "eotk/core/run.hpp"
#include "eotk/datasets/synthetic.hpp"
#include "eotk/models/loss.hpp"
#include "eotk/models/model.hpp"
#include "eotk/models/optimizer.hpp"
#include "eotk/models/trainer.hpp"
#include "eotk/tasks/builtins.hpp"
#include "support.hpp"

namespace eotk::test {

/// Tiny SmallCNN: 2 conv filters per stage, 8 hidden units, 3x8x8 input.
inline ArchitectureSpec tiny_cnn_spec(int outputs) {
  ArchitectureSpec spec;
  spec.input_height = 8;
  spec.input_width = 8;
  spec.conv1_filters = 2;
  spec.conv2_filters = 2;
  spec.hidden = 8;
  spec.outputs = outputs;
  return spec;
}

inline std::vector<Target> random_targets(TaskKind kind, std::size_t n, int k, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Target> out;
  for (std::size_t i = 0; i < n; ++i) {
    if (kind == TaskKind::multi_class) {
      out.emplace_back(static_cast<int>(rng.below(static_cast<std::uint64_t>(k))));
    } else {
      LabelVector bits(static_cast<std::size_t>(k));
      for (auto& b : bits) b = rng.bernoulli(0.5) ? 1 : 0;
      out.emplace_back(bits);
    }
  }
  return out;
}

/// Max over all parameters of |analytic - numeric| / max(|analytic|, |numeric|, floor),
/// numeric being the central difference with step h.
inline double max_gradient_error(TaskKind kind, std::uint64_t seed, double h = 1e-4, double floor = 1e-6) {
  const int k = 3;
  Network net(tiny_cnn_spec(k), seed);
  std::vector<Image> images;
  for (int i = 0; i < 4; ++i) images.push_back(random_image(3, 8, 8, seed * 10 + static_cast<std::uint64_t>(i)));
  const ImageBatch batch = ImageBatch::stack(images);
  const auto targets = random_targets(kind, images.size(), k, seed + 1);
  const Network::LossFn loss = [&](const Matrix& logits) { return loss_with_gradient(logits, targets, kind); };

  ParameterSet grads;
  net.loss_and_gradients(batch, loss, grads);
  double worst = 0.0;
  for (std::size_t p = 0; p < net.parameters().size(); ++p) {
    auto& values = net.parameters()[p].tensor.values;
    for (std::size_t j = 0; j < values.size(); ++j) {
      const double saved = values[j];
      values[j] = saved + h;
      const double up = compute_loss(net.forward(batch), targets, kind);
      values[j] = saved - h;
      const double down = compute_loss(net.forward(batch), targets, kind);
      values[j] = saved;
      const double numeric = (up - down) / (2 * h);
      const double analytic = grads[p].tensor.values[j];
      const double scale = std::max({std::abs(analytic), std::abs(numeric), floor});
      worst = std::max(worst, std::abs(analytic - numeric) / scale);
    }
  }
  return worst;
}

struct OverfitResult {
  double initial_loss = 0.0;
  double final_loss = 0.0;
};

/// 8 generated multi-label scenes as one batch, `steps` Adam steps at lr 1e-3.
inline OverfitResult overfit_eight(int steps, std::uint64_t seed = 1) {
  const auto samples = synthetic::generate_shapes({.count = 8, .size = 64, .seed = seed});
  std::vector<Image> images;
  std::vector<Target> targets;
  for (const auto& s : samples) {
    images.push_back(s.image);
    targets.emplace_back(s.labels);
  }
  const ImageBatch batch = ImageBatch::stack(images);
  Model model("SmallCNNMultiLabel", ModelConfig::from_json({{"num_classes", 4}, {"learning_rate", 1e-3}},
                                                            Architecture::small_cnn, TaskKind::multi_label),
              seed);
  Adam adam(model.network().parameters(), 1e-3);
  OverfitResult out;
  out.initial_loss = compute_loss(model.forward(batch), targets, TaskKind::multi_label);
  for (int s = 0; s < steps; ++s) train_step(model, adam, batch, targets, TaskKind::multi_label);
  out.final_loss = compute_loss(model.forward(batch), targets, TaskKind::multi_label);
  return out;
}

struct Blobs {
  Matrix points;
  std::vector<int> labels;
};

/// `per_blob` points around each of `k` centres spaced `spacing` apart on a
/// square grid, isotropic noise `sigma`.
inline Blobs gaussian_blobs(std::size_t per_blob, int k, double sigma, double spacing, std::uint64_t seed) {
  Rng rng(seed);
  Blobs out;
  out.points.resize(static_cast<Eigen::Index>(per_blob) * k, 2);
  const int side = static_cast<int>(std::ceil(std::sqrt(k)));
  Eigen::Index row = 0;
  for (int c = 0; c < k; ++c) {
    const double cx = spacing * (c % side), cy = spacing * (c / side);
    for (std::size_t i = 0; i < per_blob; ++i, ++row) {
      out.points(row, 0) = cx + sigma * rng.normal();
      out.points(row, 1) = cy + sigma * rng.normal();
      out.labels.push_back(c);
    }
  }
  return out;
}

/// Validates, instantiates and runs a config against the built-in registry.
inline TaskResult run_config(const nlohmann::json& raw) {
  const auto& registry = default_registry();
  return instantiate_run(validate_config(raw, registry), registry)->run();
}

/// Code name recorded by a failed task, e.g. "RunLocked".
inline std::string failure_code(const TaskResult& result) {
  return result.ok() ? "" : result.summary["error"].value("code", "");
}

}  // namespace eotk::test

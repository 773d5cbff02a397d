#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "eotk/core/types.hpp"
#include "eotk/datasets/dataset.hpp"

namespace eotk::synthetic {

/// Generated RGB scenes containing circles, squares, triangles and stripes
/// on a noisy background. Multi-label scenes include each shape
/// independently; multi-class scenes contain exactly one.
struct ShapesOptions {
  std::size_t count = 100;
  int size = 64;
  std::uint64_t seed = 0;
  TaskKind kind = TaskKind::multi_label;
  double presence = 0.5;  ///< per-shape inclusion probability (multi-label)
};

struct ShapeSample {
  std::string id;
  Image image;
  LabelVector labels;
};

/// {"circle", "square", "triangle", "stripe"}
const std::vector<std::string>& shape_names();

std::vector<ShapeSample> generate_shapes(const ShapesOptions& options);

/// Multi-label: `<root>/images/<id>.png` + `<root>/labels.csv`.
/// Multi-class: `<root>/<class>/<id>.png`.
void write_shapes_dataset(const std::vector<ShapeSample>& samples, TaskKind kind,
                          const std::filesystem::path& root);

/// In-memory dataset over the samples (targets as class indices for
/// multi-class).
std::shared_ptr<InMemoryDataset> shapes_dataset(const std::vector<ShapeSample>& samples,
                                                TaskKind kind, DatasetConfig config = {});

}  // namespace eotk::synthetic

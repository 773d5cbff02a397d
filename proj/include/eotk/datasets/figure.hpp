#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "eotk/core/types.hpp"
#include "eotk/datasets/dataset.hpp"

namespace eotk {

struct FigureInfo {
  std::filesystem::path path;
  std::string title;
  std::vector<std::string> labels;
  int width = 0;
  int height = 0;
};

/// PNG with a title band above an upscaled copy of `image`. Throws IoError.
FigureInfo write_image_figure(const Image& image, const std::string& title,
                              const std::filesystem::path& out_path);

/// Horizontal bar chart, one bar per (label, value). Throws IoError.
FigureInfo write_bar_chart(const std::vector<std::string>& labels, const std::vector<double>& values,
                           const std::string& title, const std::filesystem::path& out_path);

/// Renders sample `index` (untransformed) titled with its positive label
/// names in vocabulary order, or "(no labels)". Throws IndexOutOfRange,
/// IoError.
FigureInfo show_image(const Dataset& dataset, std::size_t index, const std::filesystem::path& out_path);

}  // namespace eotk

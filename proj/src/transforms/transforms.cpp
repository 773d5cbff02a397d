#include "eotk/transforms/transforms.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "eotk/core/error.hpp"

namespace eotk::transforms {

namespace {

// Corner-aligned source coordinate for output index `i`.
double source_coord(int i, int in_size, int out_size) {
  if (out_size == 1) return 0.5 * (in_size - 1);
  return static_cast<double>(i) * (in_size - 1) / (out_size - 1);
}

void require_valid(const Image& image) {
  if (image.channels < 1 || image.height < 1 || image.width < 1 || image.size() != image.channels * image.plane()) {
    throw Error(Errc::invalid_params, "image has an invalid shape");
  }
}

}  // namespace

Image resize(const Image& image, int height, int width) {
  if (height < 1 || width < 1) {
    throw Error(Errc::invalid_params, fmt::format("resize target {}x{} must be >= 1", height, width));
  }
  require_valid(image);
  Image out(image.channels, height, width);
  for (int y = 0; y < height; ++y) {
    const double sy = source_coord(y, image.height, height);
    const int y0 = static_cast<int>(std::floor(sy));
    const int y1 = std::min(y0 + 1, image.height - 1);
    const double fy = sy - y0;
    for (int x = 0; x < width; ++x) {
      const double sx = source_coord(x, image.width, width);
      const int x0 = static_cast<int>(std::floor(sx));
      const int x1 = std::min(x0 + 1, image.width - 1);
      const double fx = sx - x0;
      for (int c = 0; c < image.channels; ++c) {
        const double top = (1.0 - fx) * image.at(c, y0, x0) + fx * image.at(c, y0, x1);
        const double bottom = (1.0 - fx) * image.at(c, y1, x0) + fx * image.at(c, y1, x1);
        const double v = (1.0 - fy) * top + fy * bottom;
        out.at(c, y, x) = static_cast<float>(std::clamp(v, 0.0, 1.0));
      }
    }
  }
  return out;
}

Image normalize(const Image& image, std::span<const double> mean, std::span<const double> stddev) {
  require_valid(image);
  const auto channels = static_cast<std::size_t>(image.channels);
  if (mean.size() != channels || stddev.size() != channels) {
    throw Error(Errc::invalid_params,
                fmt::format("normalize expects {} mean/std entries, got {}/{}", channels,
                            mean.size(), stddev.size()));
  }
  Image out = image;
  for (std::size_t c = 0; c < channels; ++c) {
    if (!(stddev[c] > 0.0)) {
      throw Error(Errc::invalid_params, fmt::format("std[{}] = {} must be > 0", c, stddev[c]));
    }
    float* plane = out.pixels.data() + c * out.plane();
    for (std::size_t i = 0; i < out.plane(); ++i) {
      plane[i] = static_cast<float>((plane[i] - mean[c]) / stddev[c]);
    }
  }
  return out;
}

Image horizontal_flip(const Image& image) {
  Image out = image;
  for (int c = 0; c < image.channels; ++c) {
    for (int y = 0; y < image.height; ++y) {
      for (int x = 0; x < image.width; ++x) out.at(c, y, x) = image.at(c, y, image.width - 1 - x);
    }
  }
  return out;
}

Image random_horizontal_flip(const Image& image, double p, Rng& rng) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw Error(Errc::invalid_params, fmt::format("flip probability {} outside [0, 1]", p));
  }
  return rng.bernoulli(p) ? horizontal_flip(image) : image;
}

LabelVector one_hot_encode(int target, int num_classes) {
  if (num_classes < 1 || target < 0 || target >= num_classes) {
    throw Error(Errc::index_out_of_range,
                fmt::format("class index {} outside [0, {})", target, num_classes));
  }
  LabelVector out(static_cast<std::size_t>(num_classes), 0);
  out[static_cast<std::size_t>(target)] = 1;
  return out;
}

Resize::Resize(int height, int width) : height_(height), width_(width) {
  if (height < 1 || width < 1) {
    throw Error(Errc::invalid_params, fmt::format("resize target {}x{} must be >= 1", height, width));
  }
}

Normalize::Normalize(std::vector<double> mean, std::vector<double> stddev)
    : mean_(std::move(mean)), std_(std::move(stddev)) {
  if (mean_.size() != std_.size() || mean_.empty()) {
    throw Error(Errc::invalid_params, "mean and std must be non-empty and of equal length");
  }
  for (double s : std_) {
    if (!(s > 0.0)) throw Error(Errc::invalid_params, "std entries must be > 0");
  }
}

RandomHorizontalFlip::RandomHorizontalFlip(double p) : p_(p) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw Error(Errc::invalid_params, fmt::format("flip probability {} outside [0, 1]", p));
  }
}

Image RandomHorizontalFlip::apply(const Image& image, Rng* rng) const {
  if (rng == nullptr) return image;
  return random_horizontal_flip(image, p_, *rng);
}

OneHotEncode::OneHotEncode(int num_classes) : num_classes_(num_classes) {
  if (num_classes < 2) throw Error(Errc::invalid_params, "num_classes must be >= 2");
}

Target OneHotEncode::apply(const Target& target) const {
  if (const int* index = std::get_if<int>(&target)) return one_hot_encode(*index, num_classes_);
  return target;
}

Image Compose::apply(const Image& image, Rng* rng) const {
  Image current = image;
  for (const auto& step : steps_) current = step->apply(current, rng);
  return current;
}

bool Compose::stochastic() const {
  return std::any_of(steps_.begin(), steps_.end(), [](const auto& s) { return s->stochastic(); });
}

Target ComposeTargets::apply(const Target& target) const {
  Target current = target;
  for (const auto& step : steps_) current = step->apply(current);
  return current;
}

}  // namespace eotk::transforms

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace eotk {

enum class TaskKind { multi_class, multi_label };

std::string_view to_string(TaskKind kind) noexcept;

/// Planar C x H x W image with float samples, nominally in [0, 1].
struct Image {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<float> pixels;

  Image() = default;
  Image(int c, int h, int w, float fill = 0.0f)
      : channels(c), height(h), width(w),
        pixels(static_cast<std::size_t>(c) * h * w, fill) {}

  std::size_t plane() const noexcept { return static_cast<std::size_t>(height) * width; }
  std::size_t size() const noexcept { return pixels.size(); }

  float& at(int c, int y, int x) { return pixels[c * plane() + static_cast<std::size_t>(y) * width + x]; }
  float at(int c, int y, int x) const { return pixels[c * plane() + static_cast<std::size_t>(y) * width + x]; }

  bool same_shape(const Image& other) const noexcept {
    return channels == other.channels && height == other.height && width == other.width;
  }

  friend bool operator==(const Image&, const Image&) = default;
};

/// N images of identical shape stacked along a leading dimension.
struct ImageBatch {
  std::size_t count = 0;
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<float> pixels;

  std::size_t sample_size() const noexcept {
    return static_cast<std::size_t>(channels) * height * width;
  }
  const float* sample(std::size_t i) const { return pixels.data() + i * sample_size(); }

  /// Stacks `images`; throws ShapeMismatch when shapes differ.
  static ImageBatch stack(const std::vector<Image>& images);
  static ImageBatch single(const Image& image);
};

/// Binary label vector of length K.
using LabelVector = std::vector<std::uint8_t>;

/// Class index (multi-class) or binary label vector (multi-label).
using Target = std::variant<int, LabelVector>;

/// Expands a target to a length-`num_classes` binary vector; class indices
/// become one-hot rows. Throws IndexOutOfRange / ShapeMismatch.
LabelVector to_label_vector(const Target& target, std::size_t num_classes);

/// Class index of a target: the index itself, or the position of the single
/// set bit of a one-hot vector. Throws NonBinaryInput otherwise.
int to_class_index(const Target& target);

}  // namespace eotk

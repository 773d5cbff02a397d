#include "eotk/core/types.hpp"

#include <fmt/format.h>

#include "eotk/core/error.hpp"

namespace eotk {

std::string_view to_string(TaskKind kind) noexcept {
  return kind == TaskKind::multi_class ? "multi_class" : "multi_label";
}

ImageBatch ImageBatch::stack(const std::vector<Image>& images) {
  ImageBatch batch;
  batch.count = images.size();
  if (images.empty()) return batch;
  const Image& first = images.front();
  batch.channels = first.channels;
  batch.height = first.height;
  batch.width = first.width;
  batch.pixels.reserve(first.size() * images.size());
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (!images[i].same_shape(first)) {
      throw Error(Errc::shape_mismatch,
                  fmt::format("image {} in batch is {}x{}x{}, expected {}x{}x{}", i,
                              images[i].channels, images[i].height, images[i].width,
                              first.channels, first.height, first.width));
    }
    batch.pixels.insert(batch.pixels.end(), images[i].pixels.begin(), images[i].pixels.end());
  }
  return batch;
}

ImageBatch ImageBatch::single(const Image& image) { return stack({image}); }

LabelVector to_label_vector(const Target& target, std::size_t num_classes) {
  if (const int* index = std::get_if<int>(&target)) {
    if (*index < 0 || static_cast<std::size_t>(*index) >= num_classes) {
      throw Error(Errc::index_out_of_range,
                  fmt::format("class index {} outside [0, {})", *index, num_classes));
    }
    LabelVector bits(num_classes, 0);
    bits[static_cast<std::size_t>(*index)] = 1;
    return bits;
  }
  const auto& bits = std::get<LabelVector>(target);
  if (bits.size() != num_classes) {
    throw Error(Errc::shape_mismatch,
                fmt::format("label vector has {} entries, expected {}", bits.size(), num_classes));
  }
  return bits;
}

int to_class_index(const Target& target) {
  if (const int* index = std::get_if<int>(&target)) return *index;
  const auto& bits = std::get<LabelVector>(target);
  int found = -1;
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i] == 0) continue;
    if (bits[i] != 1 || found >= 0) {
      throw Error(Errc::non_binary_input, "target is not a one-hot vector");
    }
    found = static_cast<int>(i);
  }
  if (found < 0) throw Error(Errc::non_binary_input, "target has no positive entry");
  return found;
}

}  // namespace eotk

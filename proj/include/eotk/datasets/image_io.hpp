#pragma once

#include <filesystem>

#include "eotk/core/types.hpp"

namespace eotk {

/// Decodes a PNG, JPEG or TIFF file to a C x H x W image in [0, 1]:
/// 8-bit samples are divided by 255, 16-bit samples by 65535. Grayscale gives
/// C = 1, colour gives C = 3 in RGB order (alpha is dropped).
/// Throws ImageFileMissing, ImageDecodeError or UnsupportedBitDepth.
Image image_loader(const std::filesystem::path& path);

/// Writes `image` as PNG with 8- or 16-bit samples (values clamped to
/// [0, 1] and rounded). Throws IoError.
void write_png(const Image& image, const std::filesystem::path& path, int bit_depth = 8);

/// True for the file extensions the readers accept (case-insensitive).
bool has_image_extension(const std::filesystem::path& path);

}  // namespace eotk

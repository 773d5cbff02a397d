#include "eotk/datasets/image_io.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <fstream>

#include <fmt/format.h>
#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "eotk/core/error.hpp"

namespace eotk {

namespace {

enum class Container { png, jpeg, tiff, unknown };

Container sniff(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::array<unsigned char, 8> head{};
  in.read(reinterpret_cast<char*>(head.data()), head.size());
  const auto got = in.gcount();
  if (got >= 8 && head[0] == 0x89 && head[1] == 'P' && head[2] == 'N' && head[3] == 'G') {
    return Container::png;
  }
  if (got >= 3 && head[0] == 0xFF && head[1] == 0xD8 && head[2] == 0xFF) return Container::jpeg;
  if (got >= 4 && ((head[0] == 'I' && head[1] == 'I' && head[2] == 42 && head[3] == 0) ||
                   (head[0] == 'M' && head[1] == 'M' && head[2] == 0 && head[3] == 42))) {
    return Container::tiff;
  }
  return Container::unknown;
}

template <typename T>
Image to_planar(const cv::Mat& mat, int channels, double scale) {
  // OpenCV stores colour as interleaved BGR(A).
  static constexpr std::array<int, 3> rgb_from_bgr = {2, 1, 0};
  Image out(channels, mat.rows, mat.cols);
  const int stride = mat.channels();
  for (int y = 0; y < mat.rows; ++y) {
    const T* row = mat.ptr<T>(y);
    for (int x = 0; x < mat.cols; ++x) {
      for (int c = 0; c < channels; ++c) {
        const int src = channels == 1 ? 0 : rgb_from_bgr[c];
        out.at(c, y, x) = static_cast<float>(row[x * stride + src] / scale);
      }
    }
  }
  return out;
}

}  // namespace

bool has_image_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg" || ext == ".tif" || ext == ".tiff";
}

Image image_loader(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) {
    throw Error(Errc::image_file_missing, fmt::format("no image file at '{}'", path.string()));
  }
  if (sniff(path) == Container::unknown) {
    throw Error(Errc::image_decode_error,
                fmt::format("'{}' is not a PNG, JPEG or TIFF file", path.string()));
  }
  cv::Mat mat;
  try {
    mat = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  } catch (const cv::Exception& e) {
    throw Error(Errc::image_decode_error, fmt::format("'{}': {}", path.string(), e.what()));
  }
  if (mat.empty()) {
    throw Error(Errc::image_decode_error, fmt::format("cannot decode '{}'", path.string()));
  }
  const int channels = mat.channels() >= 3 ? 3 : 1;
  switch (mat.depth()) {
    case CV_8U: return to_planar<std::uint8_t>(mat, channels, 255.0);
    case CV_16U: return to_planar<std::uint16_t>(mat, channels, 65535.0);
    default:
      throw Error(Errc::unsupported_bit_depth,
                  fmt::format("'{}' has unsupported sample depth (OpenCV depth {})", path.string(),
                              mat.depth()));
  }
}

void write_png(const Image& image, const std::filesystem::path& path, int bit_depth) {
  if (bit_depth != 8 && bit_depth != 16) {
    throw Error(Errc::unsupported_bit_depth, fmt::format("cannot write {}-bit PNG", bit_depth));
  }
  if (image.channels != 1 && image.channels != 3) {
    throw Error(Errc::invalid_params, fmt::format("cannot write {}-channel PNG", image.channels));
  }
  const double scale = bit_depth == 8 ? 255.0 : 65535.0;
  const int type = CV_MAKETYPE(bit_depth == 8 ? CV_8U : CV_16U, image.channels);
  cv::Mat mat(image.height, image.width, type);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      for (int c = 0; c < image.channels; ++c) {
        const int dst = image.channels == 1 ? 0 : 2 - c;
        const double v = std::round(std::clamp<double>(image.at(c, y, x), 0.0, 1.0) * scale);
        if (bit_depth == 8) {
          mat.ptr<std::uint8_t>(y)[x * image.channels + dst] = static_cast<std::uint8_t>(v);
        } else {
          mat.ptr<std::uint16_t>(y)[x * image.channels + dst] = static_cast<std::uint16_t>(v);
        }
      }
    }
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  bool written = false;
  try {
    written = cv::imwrite(path.string(), mat);
  } catch (const cv::Exception& e) {
    throw Error(Errc::io_error, fmt::format("cannot write '{}': {}", path.string(), e.what()));
  }
  if (!written) throw Error(Errc::io_error, fmt::format("cannot write '{}'", path.string()));
}

}  // namespace eotk

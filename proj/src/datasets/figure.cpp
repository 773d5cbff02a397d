#include "eotk/datasets/figure.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>
#include <fmt/ranges.h>
#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "eotk/core/error.hpp"

namespace eotk {

namespace {

constexpr int kFont = cv::FONT_HERSHEY_SIMPLEX;
constexpr double kFontScale = 0.5;
constexpr int kLineHeight = 20;
constexpr int kMargin = 8;

// Greedy word wrap on ", " and spaces so the title fits `width` pixels.
std::vector<std::string> wrap(const std::string& text, int width) {
  std::vector<std::string> lines;
  std::string current;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find(' ', start);
    if (end == std::string::npos) end = text.size();
    const std::string word = text.substr(start, end - start);
    const std::string candidate = current.empty() ? word : current + " " + word;
    int baseline = 0;
    const int w = cv::getTextSize(candidate, kFont, kFontScale, 1, &baseline).width;
    if (w > width && !current.empty()) {
      lines.push_back(current);
      current = word;
    } else {
      current = candidate;
    }
    start = end + 1;
  }
  if (!current.empty()) lines.push_back(current);
  return lines;
}

void save(const cv::Mat& canvas, const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  bool ok = false;
  try {
    ok = cv::imwrite(path.string(), canvas);
  } catch (const cv::Exception& e) {
    throw Error(Errc::io_error, fmt::format("cannot write '{}': {}", path.string(), e.what()));
  }
  if (!ok) throw Error(Errc::io_error, fmt::format("cannot write '{}'", path.string()));
}

}  // namespace

FigureInfo write_image_figure(const Image& image, const std::string& title,
                              const std::filesystem::path& out_path) {
  const int scale = std::max(1, static_cast<int>(std::ceil(256.0 / std::max(image.height, image.width))));
  const int img_w = image.width * scale;
  const int img_h = image.height * scale;
  const int width = std::max(img_w + 2 * kMargin, 320);
  const auto lines = wrap(title, width - 2 * kMargin);
  const int band = kMargin + kLineHeight * static_cast<int>(lines.size()) + kMargin;
  cv::Mat canvas(band + img_h + kMargin, width, CV_8UC3, cv::Scalar(255, 255, 255));

  for (std::size_t i = 0; i < lines.size(); ++i) {
    cv::putText(canvas, lines[i], {kMargin, kMargin + kLineHeight * static_cast<int>(i + 1) - 5}, kFont,
                kFontScale, cv::Scalar(0, 0, 0), 1, cv::LINE_AA);
  }
  const int x0 = (width - img_w) / 2;
  for (int y = 0; y < img_h; ++y) {
    auto* row = canvas.ptr<cv::Vec3b>(band + y);
    for (int x = 0; x < img_w; ++x) {
      cv::Vec3b px;
      for (int c = 0; c < 3; ++c) {
        const int src_c = image.channels == 1 ? 0 : c;
        const float v = std::clamp(image.at(src_c, y / scale, x / scale), 0.0f, 1.0f);
        px[2 - c] = static_cast<unsigned char>(std::lround(v * 255.0f));
      }
      row[x0 + x] = px;
    }
  }
  save(canvas, out_path);
  return FigureInfo{out_path, title, {}, canvas.cols, canvas.rows};
}

FigureInfo write_bar_chart(const std::vector<std::string>& labels, const std::vector<double>& values,
                           const std::string& title, const std::filesystem::path& out_path) {
  if (labels.size() != values.size()) throw Error(Errc::shape_mismatch, "labels and values differ in length");
  constexpr int kRow = 24;
  constexpr int kLabelWidth = 180;
  constexpr int kBarWidth = 420;
  constexpr int kValueWidth = 90;
  const int width = kMargin + kLabelWidth + kBarWidth + kValueWidth + kMargin;
  const int top = kMargin + kLineHeight + kMargin;
  const int height = top + kRow * static_cast<int>(labels.size()) + kMargin;
  cv::Mat canvas(height, width, CV_8UC3, cv::Scalar(255, 255, 255));
  cv::putText(canvas, title, {kMargin, kMargin + kLineHeight - 5}, kFont, kFontScale,
              cv::Scalar(0, 0, 0), 1, cv::LINE_AA);

  double max_value = 0.0;
  for (double v : values) max_value = std::max(max_value, v);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int y = top + kRow * static_cast<int>(i);
    cv::putText(canvas, labels[i], {kMargin, y + kRow - 8}, kFont, kFontScale, cv::Scalar(0, 0, 0), 1,
                cv::LINE_AA);
    const int bar = max_value > 0 ? static_cast<int>(std::lround(kBarWidth * values[i] / max_value)) : 0;
    if (bar > 0) {
      cv::rectangle(canvas, {kMargin + kLabelWidth, y + 4}, {kMargin + kLabelWidth + bar, y + kRow - 4},
                    cv::Scalar(180, 119, 31), cv::FILLED);
    }
    const double v = values[i];
    const std::string text = v == std::floor(v) && std::abs(v) < 1e15 ? fmt::format("{}", static_cast<long long>(v))
                                                                     : fmt::format("{:.3f}", v);
    cv::putText(canvas, text, {kMargin + kLabelWidth + kBarWidth + 6, y + kRow - 8}, kFont, kFontScale,
                cv::Scalar(0, 0, 0), 1, cv::LINE_AA);
  }
  save(canvas, out_path);
  return FigureInfo{out_path, title, labels, canvas.cols, canvas.rows};
}

FigureInfo show_image(const Dataset& dataset, std::size_t index, const std::filesystem::path& out_path) {
  if (index >= dataset.size()) {
    throw Error(Errc::index_out_of_range,
                fmt::format("index {} outside dataset of length {}", index, dataset.size()));
  }
  const auto labels = dataset.vocabulary().names_of(dataset.label_vector(index));
  const std::string title = labels.empty() ? "(no labels)" : fmt::format("{}", fmt::join(labels, ", "));
  FigureInfo info = write_image_figure(dataset.load_image(index), title, out_path);
  info.labels = labels;
  return info;
}

}  // namespace eotk

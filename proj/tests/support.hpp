#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "eotk/core/error.hpp"
#include "eotk/core/random.hpp"
#include "eotk/core/types.hpp"
#include "eotk/datasets/image_io.hpp"

namespace eotk::test {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("eotk_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream(path, std::ios::binary) << text;
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline Image random_image(int c, int h, int w, std::uint64_t seed) {
  Rng rng(seed);
  Image img(c, h, w);
  for (auto& p : img.pixels) p = static_cast<float>(rng.uniform());
  return img;
}

/// Multi-label root: `images/<name>.png` plus labels.csv from `rows`.
inline void write_multilabel_root(const std::filesystem::path& root, const std::vector<std::string>& classes,
                                  const std::vector<std::pair<std::string, LabelVector>>& rows, int size = 8) {
  std::filesystem::create_directories(root / "images");
  std::string csv = "image";
  for (const auto& c : classes) csv += "," + c;
  csv += "\n";
  std::uint64_t seed = 1;
  for (const auto& [name, bits] : rows) {
    write_png(random_image(3, size, size, seed++), root / "images" / (name + ".png"));
    csv += name + ".png";
    for (auto b : bits) csv += "," + std::to_string(static_cast<int>(b));
    csv += "\n";
  }
  write_text(root / "labels.csv", csv);
}

/// Folder-per-class root with `counts[i]` images in class `classes[i]`.
inline void write_multiclass_root(const std::filesystem::path& root, const std::vector<std::string>& classes,
                                  const std::vector<int>& counts, int size = 8) {
  std::uint64_t seed = 100;
  for (std::size_t c = 0; c < classes.size(); ++c) {
    std::filesystem::create_directories(root / classes[c]);
    for (int i = 0; i < counts[c]; ++i) {
      write_png(random_image(3, size, size, seed++), root / classes[c] / (classes[c] + "_" + std::to_string(i) + ".png"));
    }
  }
}

template <typename Fn>
Errc error_code_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  throw std::runtime_error("expected an eotk::Error");
}

}  // namespace eotk::test

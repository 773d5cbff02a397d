#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "eotk/core/error.hpp"
#include "eotk/datasets/dataset.hpp"
#include "eotk/datasets/image_io.hpp"

namespace fs = std::filesystem;

namespace eotk {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io_error, fmt::format("cannot read '{}'", path.string()));
  std::ostringstream buffer;
  buffer << in.rdbuf();
  std::string text = buffer.str();
  if (text.rfind("\xEF\xBB\xBF", 0) == 0) text.erase(0, 3);
  std::vector<std::string> lines;
  std::istringstream stream(text);
  std::string line;
  while (std::getline(stream, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

void require_root(const fs::path& root) {
  std::error_code ec;
  if (root.empty() || !fs::is_directory(root, ec)) {
    throw Error(Errc::dataset_root_missing,
                fmt::format("dataset root '{}' is not a directory", root.string()), "root");
  }
}

fs::path resolve_image(const fs::path& images_dir, const std::string& cell) {
  std::error_code ec;
  const fs::path direct = images_dir / cell;
  if (fs::is_regular_file(direct, ec)) return direct;
  for (const char* ext : {".png", ".jpg", ".jpeg", ".tif", ".tiff", ".PNG", ".JPG", ".TIF"}) {
    fs::path candidate = images_dir / (cell + ext);
    if (fs::is_regular_file(candidate, ec)) return candidate;
  }
  return {};
}

std::vector<fs::path> sorted_entries(const fs::path& dir, bool directories) {
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    if (name.empty() || name.front() == '.') continue;
    if (directories ? entry.is_directory() : entry.is_regular_file()) out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });
  return out;
}

}  // namespace

std::shared_ptr<ImageFileDataset> load_multilabel_dataset(const DatasetConfig& config) {
  require_root(config.root);
  const fs::path images_dir = config.root / "images";
  const fs::path labels_path = config.root / "labels.csv";
  std::error_code ec;
  if (!fs::is_directory(images_dir, ec) || !fs::is_regular_file(labels_path, ec)) {
    throw Error(Errc::dataset_root_missing,
                fmt::format("'{}' does not contain images/ and labels.csv", config.root.string()),
                "root");
  }

  auto malformed = [&](std::size_t line, const std::string& what) {
    return Error(Errc::label_file_malformed,
                 fmt::format("{} line {}: {}", labels_path.string(), line, what));
  };

  const auto lines = read_lines(labels_path);
  std::size_t first = 0;
  while (first < lines.size() && trim(lines[first]).empty()) ++first;
  if (first == lines.size()) throw malformed(1, "missing header");
  const auto header = split_csv_line(lines[first]);
  if (header.empty() || header.front() != "image") {
    throw malformed(first + 1, "header must start with column 'image'");
  }
  LabelVocabulary vocab(std::vector<std::string>(header.begin() + 1, header.end()));
  const std::size_t k = vocab.size();

  std::vector<ImageFileDataset::Record> records;
  std::set<std::string> seen_cells;
  std::set<std::string> seen_ids;
  for (std::size_t li = first + 1; li < lines.size(); ++li) {
    if (trim(lines[li]).empty()) continue;
    const std::size_t line_no = li + 1;
    const auto cells = split_csv_line(lines[li]);
    if (cells.size() != k + 1) {
      throw malformed(line_no, fmt::format("expected {} cells, found {}", k + 1, cells.size()));
    }
    const std::string& cell = cells.front();
    if (cell.empty()) throw malformed(line_no, "empty image name");
    LabelVector bits(k, 0);
    for (std::size_t c = 0; c < k; ++c) {
      const std::string& v = cells[c + 1];
      if (v != "0" && v != "1") {
        throw malformed(line_no,
                        fmt::format("column '{}' has value '{}', expected 0 or 1", vocab.name(c), v));
      }
      bits[c] = v == "1" ? 1 : 0;
    }
    const std::string id = fs::path(cell).stem().string();
    if (!seen_cells.insert(cell).second || !seen_ids.insert(id).second) {
      throw malformed(line_no, fmt::format("duplicate image '{}'", cell));
    }
    fs::path path = resolve_image(images_dir, cell);
    if (path.empty()) {
      throw Error(Errc::image_file_missing,
                  fmt::format("labels.csv line {} names '{}' but no such file exists in '{}'",
                              line_no, cell, images_dir.string()));
    }
    records.push_back({id, std::move(path), Target{std::move(bits)}, cell});
  }
  return std::make_shared<ImageFileDataset>(TaskKind::multi_label, std::move(vocab), config,
                                            std::move(records));
}

std::shared_ptr<ImageFileDataset> load_multiclass_dataset(const DatasetConfig& config) {
  require_root(config.root);
  const auto class_dirs = sorted_entries(config.root, true);
  if (class_dirs.empty()) {
    throw Error(Errc::dataset_root_missing,
                fmt::format("'{}' contains no class folders", config.root.string()), "root");
  }
  std::vector<std::string> names;
  for (const auto& dir : class_dirs) names.push_back(dir.filename().string());
  LabelVocabulary vocab = [&] {
    try {
      return LabelVocabulary(names);
    } catch (const Error& e) {
      throw Error(e.code(), e.detail(), "root");
    }
  }();

  struct Found {
    int class_index;
    fs::path path;
  };
  std::vector<Found> found;
  std::vector<std::string> warnings;
  std::map<std::string, int> stem_uses;
  for (std::size_t c = 0; c < class_dirs.size(); ++c) {
    std::size_t in_class = 0;
    for (const auto& file : sorted_entries(class_dirs[c], false)) {
      if (!has_image_extension(file)) continue;
      found.push_back({static_cast<int>(c), file});
      ++stem_uses[file.stem().string()];
      ++in_class;
    }
    if (in_class == 0) {
      warnings.push_back(fmt::format("EmptyClassDirectory: class '{}' has no images", names[c]));
    }
  }

  std::vector<ImageFileDataset::Record> records;
  records.reserve(found.size());
  for (auto& f : found) {
    const std::string stem = f.path.stem().string();
    const std::string& cls = names[static_cast<std::size_t>(f.class_index)];
    std::string id = stem_uses[stem] > 1 ? fmt::format("{}/{}", cls, f.path.filename().string()) : stem;
    records.push_back({std::move(id), std::move(f.path), Target{f.class_index}, cls});
  }
  return std::make_shared<ImageFileDataset>(TaskKind::multi_class, std::move(vocab), config,
                                            std::move(records), std::move(warnings));
}

}  // namespace eotk

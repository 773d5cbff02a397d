#include <cstdio>
#include <fstream>

#include <fmt/format.h>
#include <fmt/ranges.h>
#include <unistd.h>

#include "eotk/core/error.hpp"
#include "eotk/datasets/figure.hpp"
#include "eotk/tasks/tasks.hpp"

namespace fs = std::filesystem;

namespace eotk {

namespace {

bool try_create(const fs::path& path) {
  std::FILE* f = std::fopen(path.c_str(), "wx");
  if (f == nullptr) return false;
  std::fprintf(f, "%ld\n", static_cast<long>(::getpid()));
  std::fclose(f);
  return true;
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::io_error, fmt::format("cannot write '{}'", path.string()));
  return out;
}

}  // namespace

RunLock::RunLock(fs::path directory, std::chrono::seconds stale_after) : path_(directory / "run.lock") {
  std::error_code ec;
  fs::create_directories(directory, ec);
  if (ec) throw Error(Errc::io_error, fmt::format("cannot create '{}': {}", directory.string(), ec.message()));
  if (try_create(path_)) return;
  if (!fs::exists(path_, ec)) throw Error(Errc::io_error, fmt::format("cannot create '{}'", path_.string()));

  const auto written = fs::last_write_time(path_, ec);
  const auto age = fs::file_time_type::clock::now() - written;
  if (ec || age <= stale_after) {
    path_.clear();
    throw Error(Errc::run_locked,
                fmt::format("'{}' is in use by another run (remove run.lock if that run is gone)", directory.string()));
  }
  warning_ = fmt::format("reclaimed stale lock '{}' ({} h old)", path_.string(),
                         std::chrono::duration_cast<std::chrono::hours>(age).count());
  fs::remove(path_, ec);
  if (!try_create(path_)) {
    path_.clear();
    throw Error(Errc::run_locked, fmt::format("'{}' is in use by another run", directory.string()));
  }
}

RunLock::~RunLock() {
  if (path_.empty()) return;
  std::error_code ec;
  fs::remove(path_, ec);
}

void write_predictions_csv(const std::vector<std::string>& class_names, const std::vector<PredictionRow>& rows,
                           const fs::path& path) {
  auto out = open_out(path);
  out << "image";
  for (const auto& name : class_names) out << ',' << name;
  out << ",labels\n";
  for (const auto& row : rows) {
    out << row.image;
    for (double p : row.probabilities) out << ',' << fmt::format("{}", p);
    out << ',' << fmt::format("{}", fmt::join(row.labels, ";")) << '\n';
  }
  if (!out) throw Error(Errc::io_error, fmt::format("cannot write '{}'", path.string()));
}

void write_report_json(const metrics::MetricReport& report, double loss, const fs::path& path) {
  nlohmann::json doc = report.to_json();
  doc["loss"] = loss;
  auto out = open_out(path);
  out << doc.dump(2) << '\n';
  if (!out) throw Error(Errc::io_error, fmt::format("cannot write '{}'", path.string()));
}

void write_per_class_f1_figure(const metrics::MetricReport& report, const fs::path& path) {
  std::vector<double> f1;
  f1.reserve(report.per_class.size());
  for (const auto& s : report.per_class) f1.push_back(s.f1);
  write_bar_chart(report.class_names, f1, "per-class F1", path);
}

}  // namespace eotk

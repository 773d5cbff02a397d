#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace eotk::metrics {

/// One logged scalar. `time` is ISO-8601 UTC.
struct EventRecord {
  std::string run_id;
  std::uint64_t step = 0;
  std::uint64_t epoch = 0;
  std::string tag;
  double value = 0.0;
  std::string time;

  friend bool operator==(const EventRecord&, const EventRecord&) = default;
};

/// Current wall-clock time as `YYYY-MM-DDTHH:MM:SS.mmmZ`.
std::string utc_timestamp();

/// Append-only JSON-lines scalar log, one object per line with keys
/// `run_id, step, epoch, tag, value, time`. Steps must strictly increase per
/// (run_id, tag); reopening an existing file resumes its step state.
class EventLog {
 public:
  explicit EventLog(std::filesystem::path path);

  /// Throws NonFiniteValue or MonotonicityViolation; nothing is written then.
  void log_scalar(const std::string& run_id, std::uint64_t step, std::uint64_t epoch,
                  const std::string& tag, double value);

  /// Writes a fully formed record (its `time` is kept as given).
  void append(const EventRecord& record);

  void flush();
  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::map<std::pair<std::string, std::string>, std::uint64_t> last_step_;
};

std::string format_event(const EventRecord& record);

struct EventLogContents {
  std::vector<EventRecord> records;
  /// (1-based line number, reason) for lines that failed to parse.
  std::vector<std::pair<std::size_t, std::string>> errors;
};

/// Reads every well-formed line in file order; malformed lines are reported,
/// not fatal. Throws IoError if the file cannot be opened.
EventLogContents read_event_log(const std::filesystem::path& path);

}  // namespace eotk::metrics

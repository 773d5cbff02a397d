#include "eotk/metrics/event_log.hpp"

#include <chrono>
#include <cmath>
#include <ctime>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "eotk/core/error.hpp"

namespace eotk::metrics {

using nlohmann::json;

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const auto millis =
      std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  const std::time_t seconds = std::chrono::system_clock::to_time_t(now);
  std::tm utc{};
  gmtime_r(&seconds, &utc);
  return fmt::format("{:04}-{:02}-{:02}T{:02}:{:02}:{:02}.{:03}Z", utc.tm_year + 1900,
                     utc.tm_mon + 1, utc.tm_mday, utc.tm_hour, utc.tm_min, utc.tm_sec, millis);
}

std::string format_event(const EventRecord& r) {
  return fmt::format(R"({{"run_id":{},"step":{},"epoch":{},"tag":{},"value":{},"time":{}}})",
                     json(r.run_id).dump(), r.step, r.epoch, json(r.tag).dump(),
                     json(r.value).dump(), json(r.time).dump());
}

namespace {

EventRecord parse_event(const std::string& line) {
  const json j = json::parse(line);
  if (!j.is_object()) throw std::invalid_argument("line is not a JSON object");
  static const char* keys[] = {"run_id", "step", "epoch", "tag", "value", "time"};
  for (const char* key : keys) {
    if (!j.contains(key)) throw std::invalid_argument(fmt::format("missing key '{}'", key));
  }
  if (j.size() != std::size(keys)) throw std::invalid_argument("unexpected extra keys");
  if (!j["step"].is_number_unsigned() || !j["epoch"].is_number_unsigned()) {
    throw std::invalid_argument("step and epoch must be non-negative integers");
  }
  if (!j["value"].is_number()) throw std::invalid_argument("value must be a number");
  EventRecord r;
  r.run_id = j["run_id"].get<std::string>();
  r.step = j["step"].get<std::uint64_t>();
  r.epoch = j["epoch"].get<std::uint64_t>();
  r.tag = j["tag"].get<std::string>();
  r.value = j["value"].get<double>();
  r.time = j["time"].get<std::string>();
  return r;
}

}  // namespace

EventLog::EventLog(std::filesystem::path path) : path_(std::move(path)) {
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  if (std::filesystem::exists(path_)) {
    for (const auto& r : read_event_log(path_).records) {
      auto& last = last_step_[{r.run_id, r.tag}];
      last = std::max(last, r.step + 1);
    }
  }
  out_.open(path_, std::ios::app | std::ios::binary);
  if (!out_) throw Error(Errc::io_error, fmt::format("cannot open event log '{}'", path_.string()));
}

void EventLog::log_scalar(const std::string& run_id, std::uint64_t step, std::uint64_t epoch,
                          const std::string& tag, double value) {
  append(EventRecord{run_id, step, epoch, tag, value, utc_timestamp()});
}

void EventLog::append(const EventRecord& record) {
  if (!std::isfinite(record.value)) {
    throw Error(Errc::non_finite_value,
                fmt::format("tag '{}' step {}: value {} is not finite", record.tag, record.step,
                            record.value));
  }
  // Stored as last step + 1 so that 0 means "nothing logged yet".
  auto& next = last_step_[{record.run_id, record.tag}];
  if (next != 0 && record.step < next) {
    throw Error(Errc::monotonicity_violation,
                fmt::format("tag '{}' step {} does not exceed previous step {}", record.tag,
                            record.step, next - 1));
  }
  out_ << format_event(record) << '\n';
  out_.flush();
  if (!out_) throw Error(Errc::io_error, fmt::format("write to '{}' failed", path_.string()));
  next = record.step + 1;
}

void EventLog::flush() { out_.flush(); }

EventLogContents read_event_log(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io_error, fmt::format("cannot read event log '{}'", path.string()));
  EventLogContents contents;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    try {
      contents.records.push_back(parse_event(line));
    } catch (const std::exception& e) {
      contents.errors.emplace_back(number, e.what());
    }
  }
  return contents;
}

}  // namespace eotk::metrics

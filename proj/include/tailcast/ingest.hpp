#pragma once

#include <chrono>
#include <compare>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tailcast {

enum class Direction { LowerIsBetter, HigherIsBetter };
enum class Unit { Seconds, Centimeters };

struct EventSpec {
  std::string event_id;
  Direction direction = Direction::LowerIsBetter;
  Unit unit = Unit::Seconds;
  std::string display_name;

  static EventSpec running(std::string id, std::string name = {});
  static EventSpec field(std::string id, std::string name = {});

  bool lower_is_better() const noexcept { return direction == Direction::LowerIsBetter; }
};

/// Guess the spec of an event from its identifier ("mensHJ", "womens1500m", ...).
EventSpec infer_event_spec(std::string_view event_id);

using Date = std::chrono::year_month_day;

Date parse_date(std::string_view text);
std::string format_date(Date d);
/// Fractional years between two dates (365.25-day years).
double years_between(Date from, Date to);

/// A measured performance in the event's native unit (seconds or centimeters).
struct RawMark {
  double value = 0.0;
  Date date{};
  std::string athlete;

  bool operator==(const RawMark&) const = default;
};

/// A mark in log space where smaller is always better.
struct TransformedMark {
  double x = 0.0;

  auto operator<=>(const TransformedMark&) const = default;
};

/// Half-open calendar window [start, end).
struct DateWindow {
  Date start{std::chrono::year{1}, std::chrono::January, std::chrono::day{1}};
  Date end{std::chrono::year{9999}, std::chrono::December, std::chrono::day{31}};

  static DateWindow all() { return {}; }
  /// Whole calendar years first_year .. last_year_exclusive - 1.
  static DateWindow years(int first_year, int last_year_exclusive);

  bool contains(Date d) const noexcept { return start <= d && d < end; }
  double length_years() const { return years_between(start, end); }
};

/// Everything recorded for one event, in file order.
struct EventData {
  EventSpec event;
  std::vector<RawMark> marks;
};

/// The tail sample of one event: the best n_k marks inside a window, encoded and sorted best-first.
struct PerformanceList {
  EventSpec event;
  std::vector<TransformedMark> marks;
  std::vector<RawMark> records;  // parallel to marks
  std::size_t n_k = 0;
  double c_k = 0.0;
  DateWindow window;
  Date first_date{};
  Date last_date{};

  double best() const { return marks.front().x; }
  double worst() const { return marks.back().x; }
};

/// Parses `[[H:]M:]S[.fff]` into seconds.
double parse_time(std::string_view text);
/// Canonical h:mm:ss.ff / m:ss.ff / s.ff rendering.
std::string format_time(double seconds, int decimals = 2);

TransformedMark encode_mark(const EventSpec& event, double value);
double decode_mark(const EventSpec& event, TransformedMark mark);

/// "12.50", "3:27.49" for running events; meters with two decimals for field events.
std::string format_mark(const EventSpec& event, double value);

/// Reads a list file; the header (when present) overrides `fallback`.
EventData read_event_data(std::istream& in, const EventSpec& fallback);
EventData read_event_file(const std::filesystem::path& path);
EventData read_event_file(const std::filesystem::path& path, const EventSpec& fallback);
void write_event_data(std::ostream& out, const EventData& data);

PerformanceList make_performance_list(const EventData& data, const DateWindow& window,
                                      std::optional<double> truncation = std::nullopt);
PerformanceList load_performance_list(const std::filesystem::path& path, const EventSpec& event,
                                      const DateWindow& window);
void write_performance_list(std::ostream& out, const PerformanceList& list);

}  // namespace tailcast

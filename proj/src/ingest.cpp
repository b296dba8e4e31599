#include "tailcast/ingest.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "tailcast/error.hpp"

namespace tailcast {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

bool all_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

double parse_decimal(std::string_view s, const std::string& field) {
  // Plain non-negative decimal: digits with at most one '.'.
  if (s.empty()) throw ParseError(field, "empty");
  std::size_t dots = 0;
  for (char c : s) {
    if (c == '.') {
      ++dots;
    } else if (c < '0' || c > '9') {
      throw ParseError(field, "unexpected character in '" + std::string(s) + "'");
    }
  }
  if (dots > 1 || s == ".") throw ParseError(field, "malformed number '" + std::string(s) + "'");
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw ParseError(field, "malformed number '" + std::string(s) + "'");
  return value;
}

std::string shortest(double v) {
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

bool looks_like_date(std::string_view s) {
  if (s.size() == 10 && s[4] == '-' && s[7] == '-') return true;
  if (s.size() == 10 && s[2] == '.' && s[5] == '.') return true;
  return false;
}

std::string lowercase(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

double parse_mark_value(const EventSpec& event, std::string_view text, double scale) {
  if (event.unit == Unit::Seconds) return parse_time(text);
  const double v = parse_decimal(text, "mark");
  return v * scale;
}

// Tolerant marks may carry flags such as "A", "w" or "h" after the number.
std::string_view strip_mark_flags(std::string_view s) {
  while (!s.empty() && std::isalpha(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

EventSpec EventSpec::running(std::string id, std::string name) {
  EventSpec e;
  e.display_name = name.empty() ? id : std::move(name);
  e.event_id = std::move(id);
  e.direction = Direction::LowerIsBetter;
  e.unit = Unit::Seconds;
  return e;
}

EventSpec EventSpec::field(std::string id, std::string name) {
  EventSpec e;
  e.display_name = name.empty() ? id : std::move(name);
  e.event_id = std::move(id);
  e.direction = Direction::HigherIsBetter;
  e.unit = Unit::Centimeters;
  return e;
}

EventSpec infer_event_spec(std::string_view event_id) {
  static constexpr std::array<std::string_view, 8> field_suffixes = {"HJ",  "LJ",   "TJ",     "PV",
                                                                      "Shot", "Disc", "Hammer", "Jav"};
  for (auto suffix : field_suffixes) {
    if (event_id.size() >= suffix.size() && event_id.substr(event_id.size() - suffix.size()) == suffix)
      return EventSpec::field(std::string(event_id));
  }
  return EventSpec::running(std::string(event_id));
}

Date parse_date(std::string_view text) {
  text = trim(text);
  int y = 0, m = 0, d = 0;
  auto num = [&](std::string_view part, const char* field) {
    if (!all_digits(part)) throw ParseError(field, "expected digits in date '" + std::string(text) + "'");
    int v = 0;
    std::from_chars(part.data(), part.data() + part.size(), v);
    return v;
  };
  if (text.size() == 10 && text[4] == '-' && text[7] == '-') {
    y = num(text.substr(0, 4), "year");
    m = num(text.substr(5, 2), "month");
    d = num(text.substr(8, 2), "day");
  } else if (text.size() == 10 && text[2] == '.' && text[5] == '.') {
    d = num(text.substr(0, 2), "day");
    m = num(text.substr(3, 2), "month");
    y = num(text.substr(6, 4), "year");
  } else {
    throw ParseError("date", "unrecognized date '" + std::string(text) + "'");
  }
  const Date date{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
                  std::chrono::day{static_cast<unsigned>(d)}};
  if (!date.ok()) throw ParseError("date", "invalid calendar date '" + std::string(text) + "'");
  return date;
}

std::string format_date(Date d) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()),
                static_cast<unsigned>(d.month()), static_cast<unsigned>(d.day()));
  return buf;
}

double years_between(Date from, Date to) {
  const auto days = (std::chrono::sys_days{to} - std::chrono::sys_days{from}).count();
  return static_cast<double>(days) / 365.25;
}

DateWindow DateWindow::years(int first_year, int last_year_exclusive) {
  using namespace std::chrono;
  return {Date{year{first_year}, January, day{1}}, Date{year{last_year_exclusive}, January, day{1}}};
}

double parse_time(std::string_view text) {
  text = trim(text);
  if (text.empty()) throw ParseError("seconds", "empty time");

  std::vector<std::string_view> parts;
  std::size_t pos = 0;
  while (true) {
    const auto colon = text.find(':', pos);
    parts.push_back(text.substr(pos, colon == std::string_view::npos ? colon : colon - pos));
    if (colon == std::string_view::npos) break;
    pos = colon + 1;
  }
  if (parts.size() > 3) throw ParseError("time", "too many ':' fields in '" + std::string(text) + "'");

  static constexpr std::array<const char*, 3> names = {"hours", "minutes", "seconds"};
  const std::size_t offset = 3 - parts.size();
  double total = 0.0;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const std::string field = names[offset + i];
    const bool last = i + 1 == parts.size();
    if (!last && !all_digits(parts[i])) throw ParseError(field, "expected digits in '" + std::string(text) + "'");
    const double v = parse_decimal(parts[i], field);
    if (i > 0 && v >= 60.0) throw ParseError(field, "value >= 60 in '" + std::string(text) + "'");
    total = total * 60.0 + v;
  }
  if (!(total > 0.0)) throw ParseError("seconds", "time must be positive");
  return total;
}

std::string format_time(double seconds, int decimals) {
  decimals = std::clamp(decimals, 0, 9);
  const double scale = std::pow(10.0, decimals);
  const auto ticks = static_cast<long long>(std::llround(seconds * scale));
  const long long per_second = static_cast<long long>(scale);
  const long long whole = ticks / per_second;
  const long long frac = ticks % per_second;
  const long long h = whole / 3600;
  const long long m = (whole / 60) % 60;
  const long long s = whole % 60;

  char frac_buf[32] = "";
  if (decimals > 0) std::snprintf(frac_buf, sizeof frac_buf, ".%0*lld", decimals, frac);
  char buf[64];
  if (h > 0) {
    std::snprintf(buf, sizeof buf, "%lld:%02lld:%02lld%s", h, m, s, frac_buf);
  } else if (m > 0) {
    std::snprintf(buf, sizeof buf, "%lld:%02lld%s", m, s, frac_buf);
  } else {
    std::snprintf(buf, sizeof buf, "%lld%s", s, frac_buf);
  }
  return buf;
}

TransformedMark encode_mark(const EventSpec& event, double value) {
  if (!(value > 0.0) || !std::isfinite(value))
    throw DomainError("mark must be positive and finite for " + event.event_id);
  const double lv = std::log(value);
  return {event.lower_is_better() ? lv : -lv};
}

double decode_mark(const EventSpec& event, TransformedMark mark) {
  return std::exp(event.lower_is_better() ? mark.x : -mark.x);
}

std::string format_mark(const EventSpec& event, double value) {
  if (event.unit == Unit::Seconds) return format_time(value);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", value / 100.0);
  return buf;
}

EventData read_event_data(std::istream& in, const EventSpec& fallback) {
  EventData data{fallback, {}};
  bool explicit_unit = false;
  bool explicit_direction = false;
  double scale = 1.0;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view view = trim(line);
    if (view.empty()) continue;
    if (view.front() == '#') {
      std::istringstream header{std::string(view.substr(1))};
      std::string token;
      while (header >> token) {
        const auto eq = token.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = lowercase(token.substr(0, eq));
        const std::string value = token.substr(eq + 1);
        if (key == "event") {
          if (!explicit_unit && !explicit_direction) {
            const auto guess = infer_event_spec(value);
            data.event.unit = guess.unit;
            data.event.direction = guess.direction;
          }
          data.event.event_id = value;
          data.event.display_name = value;
        } else if (key == "name") {
          data.event.display_name = value;
        } else if (key == "unit") {
          const std::string u = lowercase(value);
          explicit_unit = true;
          if (u == "s" || u == "seconds") {
            data.event.unit = Unit::Seconds;
            scale = 1.0;
          } else if (u == "cm" || u == "centimeters") {
            data.event.unit = Unit::Centimeters;
            scale = 1.0;
          } else if (u == "m" || u == "meters") {
            data.event.unit = Unit::Centimeters;
            scale = 100.0;
          } else {
            throw ParseError("unit", "unknown unit '" + value + "'");
          }
        } else if (key == "direction") {
          const std::string d = lowercase(value);
          explicit_direction = true;
          if (d == "lower" || d == "lowerisbetter") {
            data.event.direction = Direction::LowerIsBetter;
          } else if (d == "higher" || d == "higherisbetter") {
            data.event.direction = Direction::HigherIsBetter;
          } else {
            throw ParseError("direction", "unknown direction '" + value + "'");
          }
        }
      }
      continue;
    }
    if (explicit_unit && !explicit_direction) {
      data.event.direction =
          data.event.unit == Unit::Seconds ? Direction::LowerIsBetter : Direction::HigherIsBetter;
    }

    RawMark mark;
    try {
      if (view.find('\t') != std::string_view::npos) {
        std::vector<std::string_view> cols;
        std::size_t pos = 0;
        while (true) {
          const auto tab = view.find('\t', pos);
          cols.push_back(trim(view.substr(pos, tab == std::string_view::npos ? tab : tab - pos)));
          if (tab == std::string_view::npos) break;
          pos = tab + 1;
        }
        if (cols.size() < 2) throw ParseError("record", "expected value and date");
        mark.value = parse_mark_value(data.event, cols[0], scale);
        mark.date = parse_date(cols[1]);
        if (cols.size() > 2) mark.athlete = std::string(cols[2]);
      } else {
        std::istringstream ls{std::string(view)};
        std::vector<std::string> tokens;
        for (std::string t; ls >> t;) tokens.push_back(t);
        auto date_it = std::find_if(tokens.rbegin(), tokens.rend(), [](const std::string& t) { return looks_like_date(t); });
        if (tokens.size() < 2 || date_it == tokens.rend()) throw ParseError("record", "no date-like token");
        mark.value = parse_mark_value(data.event, strip_mark_flags(tokens.front()), scale);
        mark.date = parse_date(*date_it);
        const auto date_idx = static_cast<std::size_t>(tokens.rend() - date_it) - 1;
        std::string athlete;
        for (std::size_t i = 1; i < date_idx; ++i) {
          if (!athlete.empty()) athlete += ' ';
          athlete += tokens[i];
        }
        mark.athlete = athlete;
      }
    } catch (const ParseError& e) {
      throw ParseError(e.field(), std::string(e.what()) + " (line " + std::to_string(line_no) + ")");
    }
    if (!(mark.value > 0.0)) throw DomainError("non-positive mark on line " + std::to_string(line_no));
    data.marks.push_back(std::move(mark));
  }
  return data;
}

EventData read_event_file(const std::filesystem::path& path, const EventSpec& fallback) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return read_event_data(in, fallback);
}

EventData read_event_file(const std::filesystem::path& path) {
  return read_event_file(path, infer_event_spec(path.stem().string()));
}

void write_event_data(std::ostream& out, const EventData& data) {
  const auto& e = data.event;
  out << "# event=" << e.event_id << " unit=" << (e.unit == Unit::Seconds ? "s" : "cm")
      << " direction=" << (e.lower_is_better() ? "lower" : "higher") << '\n';
  for (const auto& m : data.marks) {
    out << shortest(m.value) << '\t' << format_date(m.date);
    if (!m.athlete.empty()) out << '\t' << m.athlete;
    out << '\n';
  }
}

PerformanceList make_performance_list(const EventData& data, const DateWindow& window,
                                      std::optional<double> truncation) {
  PerformanceList list;
  list.event = data.event;
  list.window = window;

  std::vector<std::pair<TransformedMark, const RawMark*>> rows;
  for (const auto& m : data.marks) {
    if (window.contains(m.date)) rows.emplace_back(encode_mark(data.event, m.value), &m);
  }
  if (rows.empty()) throw EmptyListError("no marks for " + data.event.event_id + " inside the window");

  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  list.marks.reserve(rows.size());
  list.records.reserve(rows.size());
  list.first_date = rows.front().second->date;
  list.last_date = rows.front().second->date;
  for (const auto& [x, raw] : rows) {
    list.marks.push_back(x);
    list.records.push_back(*raw);
    list.first_date = std::min(list.first_date, raw->date);
    list.last_date = std::max(list.last_date, raw->date);
  }
  list.n_k = list.marks.size();
  list.c_k = list.worst();
  if (truncation) {
    if (*truncation < list.worst())
      throw DomainError("truncation point below the worst mark of " + data.event.event_id);
    list.c_k = *truncation;
  }
  return list;
}

PerformanceList load_performance_list(const std::filesystem::path& path, const EventSpec& event,
                                      const DateWindow& window) {
  return make_performance_list(read_event_file(path, event), window);
}

void write_performance_list(std::ostream& out, const PerformanceList& list) {
  write_event_data(out, EventData{list.event, list.records});
}

}  // namespace tailcast

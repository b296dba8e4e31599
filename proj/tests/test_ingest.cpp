#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "tailcast/error.hpp"
#include "tailcast/ingest.hpp"

using namespace tailcast;
namespace fs = std::filesystem;

namespace {

EventData parse(const std::string& text, const EventSpec& fallback = EventSpec::running("x")) {
  std::istringstream in(text);
  return read_event_data(in, fallback);
}

fs::path scratch_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("tailcast_ingest_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("parse_time handles clock formats") {
  CHECK(parse_time("2:03:38") == doctest::Approx(7418.0).epsilon(1e-12));
  CHECK(parse_time("9.58") == doctest::Approx(9.58).epsilon(1e-12));
  CHECK(parse_time("1:41.01") == doctest::Approx(101.01).epsilon(1e-12));
  CHECK(parse_time("0:59.5") == doctest::Approx(59.5));
}

TEST_CASE("parse_time names the offending field") {
  try {
    parse_time("1:75.00");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.field() == "seconds");
  }
  try {
    parse_time("1:61:00");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.field() == "minutes");
  }
  CHECK_THROWS_AS(parse_time("abc"), ParseError);
  CHECK_THROWS_AS(parse_time(""), ParseError);
  CHECK_THROWS_AS(parse_time("1::2"), ParseError);
}

TEST_CASE("format_time round trips 1000 random times") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(1.0, 4.0);
  for (int i = 0; i < 1000; ++i) {
    const double t = std::pow(10.0, u(rng));
    const std::string s = format_time(t, 6);
    CHECK(std::abs(parse_time(s) - t) < 1e-6);
  }
  CHECK(format_time(7418.0, 0) == "2:03:38");
  CHECK(format_time(101.01) == "1:41.01");
  CHECK(format_time(9.58) == "9.58");
}

TEST_CASE("encode_mark definitions") {
  const auto run = EventSpec::running("mens100m");
  const auto jump = EventSpec::field("menslj");
  CHECK(encode_mark(run, 100.0).x == doctest::Approx(4.60517).epsilon(1e-6));
  CHECK(encode_mark(jump, 1.0).x == 0.0);
  CHECK(encode_mark(jump, 895.0).x == doctest::Approx(-6.79682).epsilon(1e-6));
  CHECK_THROWS_AS(encode_mark(run, 0.0), DomainError);
  CHECK_THROWS_AS(encode_mark(jump, -3.0), DomainError);
}

TEST_CASE("encoding is an order isomorphism and round trips") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.5, 5000.0);
  for (const auto& ev : {EventSpec::running("r"), EventSpec::field("f")}) {
    for (int i = 0; i < 2000; ++i) {
      const double a = u(rng), b = u(rng);
      if (a == b) continue;
      const bool a_beats_b = ev.lower_is_better() ? a < b : a > b;
      CHECK(a_beats_b == (encode_mark(ev, a).x < encode_mark(ev, b).x));
      CHECK(std::abs(decode_mark(ev, encode_mark(ev, a)) - a) <= 1e-9 * a);
    }
  }
}

TEST_CASE("infer_event_spec recognizes field events") {
  CHECK(infer_event_spec("mens100m").lower_is_better());
  CHECK(infer_event_spec("mens100m").unit == Unit::Seconds);
  CHECK_FALSE(infer_event_spec("mensLJ").lower_is_better());
  CHECK(infer_event_spec("womensHammer").unit == Unit::Centimeters);
  CHECK_FALSE(infer_event_spec("mensPV").lower_is_better());
}

TEST_CASE("performance list construction") {
  const auto data = parse(
      "# event=mens100m\n"
      "9.72\t2008-05-31\tA\n"
      "9.58\t2009-08-16\tB\n"
      "9.69\t2008-08-16\tB\n");
  const auto list = make_performance_list(data, DateWindow::all());
  CHECK(list.n_k == 3);
  CHECK(list.c_k == doctest::Approx(std::log(9.72)).epsilon(1e-15));
  CHECK(list.marks.front().x == doctest::Approx(std::log(9.58)).epsilon(1e-15));
  for (std::size_t i = 1; i < list.marks.size(); ++i) CHECK(list.marks[i - 1] <= list.marks[i]);
  CHECK(list.records.front().athlete == "B");

  CHECK_THROWS_AS(make_performance_list(data, DateWindow::years(1990, 2000)), EmptyListError);
  const auto w2008 = make_performance_list(data, DateWindow::years(2008, 2009));
  CHECK(w2008.n_k == 2);
}

TEST_CASE("field marks sort with best first") {
  const auto data = parse("# event=mensLJ unit=m\n8.90\t1991-08-30\n8.95\t1991-08-30\tPowell\n");
  CHECK_FALSE(data.event.lower_is_better());
  const auto list = make_performance_list(data, DateWindow::all());
  REQUIRE(list.n_k == 2);
  CHECK(list.marks[0].x == doctest::Approx(-std::log(895.0)).epsilon(1e-14));
  CHECK(list.marks[1].x == doctest::Approx(-std::log(890.0)).epsilon(1e-14));
  CHECK(list.c_k == list.marks[1].x);
}

TEST_CASE("truncation override must cover the list") {
  const auto data = parse("9.8\t2000-01-01\n9.9\t2000-01-02\n");
  const double w = std::log(9.9);
  CHECK(make_performance_list(data, DateWindow::all(), w + 0.1).c_k == doctest::Approx(w + 0.1));
  CHECK_THROWS_AS(make_performance_list(data, DateWindow::all(), w - 0.1), DomainError);
}

TEST_CASE("ties are kept") {
  const auto data = parse("10.00\t2001-01-01\n10.00\t2001-01-01\n10.01\t2001-02-01\n");
  CHECK(make_performance_list(data, DateWindow::all()).n_k == 3);
}

TEST_CASE("tolerant importer reads aligned columns") {
  const auto data = parse(
      "# event=mens800m\n"
      "  1:40.91   David Rudisha      KEN  17.12.88   1   London  09.08.2012\n"
      "  1:41.01A  David Rudisha      KEN  17.12.88   1   Rieti   29.08.2010\n");
  REQUIRE(data.marks.size() == 2);
  CHECK(data.marks[0].value == doctest::Approx(100.91));
  CHECK(data.marks[1].value == doctest::Approx(101.01));
  CHECK(format_date(data.marks[0].date) == "2012-08-09");
  CHECK(format_date(data.marks[1].date) == "2010-08-29");
}

TEST_CASE("bad records report a parse error") {
  CHECK_THROWS_AS(parse("9.58\tnot-a-date\n"), ParseError);
  CHECK_THROWS_AS(parse("# unit=furlongs\n"), ParseError);
}

TEST_CASE("reserializing a loaded list is idempotent") {
  const auto dir = scratch_dir("idem");
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(9.5, 10.5);
  EventData data{EventSpec::running("mens100m"), {}};
  for (int i = 0; i < 200; ++i)
    data.marks.push_back({u(rng), Date{std::chrono::year{2000 + i % 10}, std::chrono::month{1u + i % 12},
                                       std::chrono::day{1u + i % 28}},
                          "athlete " + std::to_string(i % 17)});
  const auto first = dir / "mens100m.tsv";
  {
    std::ofstream out(first);
    write_event_data(out, data);
  }
  const auto a = load_performance_list(first, data.event, DateWindow::all());
  const auto second = dir / "again.tsv";
  {
    std::ofstream out(second);
    write_performance_list(out, a);
  }
  const auto b = load_performance_list(second, data.event, DateWindow::all());
  CHECK(a.marks == b.marks);
  CHECK(a.records == b.records);
  CHECK(a.c_k == b.c_k);

  const auto third = dir / "third.tsv";
  {
    std::ofstream out(third);
    write_performance_list(out, b);
  }
  std::ifstream s2(second), s3(third);
  std::stringstream t2, t3;
  t2 << s2.rdbuf();
  t3 << s3.rdbuf();
  CHECK(t2.str() == t3.str());
}

TEST_CASE("file stem supplies the event when the header does not") {
  const auto dir = scratch_dir("stem");
  {
    std::ofstream out(dir / "womensHJ.tsv");
    out << "209\t1987-08-30\n";
  }
  const auto data = read_event_file(dir / "womensHJ.tsv");
  CHECK(data.event.event_id == "womensHJ");
  CHECK_FALSE(data.event.lower_is_better());
}

TEST_CASE("date windows are half open") {
  const auto w = DateWindow::years(2003, 2008);
  CHECK(w.contains(parse_date("2003-01-01")));
  CHECK(w.contains(parse_date("2007-12-31")));
  CHECK_FALSE(w.contains(parse_date("2008-01-01")));
  CHECK(w.length_years() == doctest::Approx(5.0).epsilon(1e-3));
  CHECK(parse_date("09.08.2012") == parse_date("2012-08-09"));
  CHECK_THROWS_AS(parse_date("2012-13-01"), ParseError);
}

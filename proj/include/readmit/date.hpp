#pragma once

#include <charconv>
#include <chrono>
#include <compare>
#include <cstdio>
#include <string>
#include <string_view>

#include "readmit/error.hpp"

namespace readmit {

/// Calendar date stored as days since 1970-01-01.
class Date {
 public:
  constexpr Date() = default;

  static constexpr Date from_ymd(int y, unsigned m, unsigned d) {
    using namespace std::chrono;
    return Date(sys_days{year{y} / month{m} / day{d}}.time_since_epoch().count());
  }

  static constexpr Date from_days(long days) { return Date(days); }

  /// Strict ISO-8601 `YYYY-MM-DD`.
  static Date parse(std::string_view text) {
    auto fail = [&] { return Error(ErrorCode::InvalidDate, "not a YYYY-MM-DD date: '" + std::string(text) + "'"); };
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') throw fail();
    int y = 0;
    unsigned m = 0, d = 0;
    auto read = [&](std::size_t pos, std::size_t len, auto& out) {
      auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + pos + len, out);
      if (ec != std::errc{} || ptr != text.data() + pos + len) throw fail();
    };
    read(0, 4, y);
    read(5, 2, m);
    read(8, 2, d);
    using namespace std::chrono;
    year_month_day ymd{year{y}, month{m}, day{d}};
    if (!ymd.ok()) throw fail();
    return Date(sys_days{ymd}.time_since_epoch().count());
  }

  std::string iso() const {
    using namespace std::chrono;
    year_month_day ymd{sys_days{days{days_}}};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
  }

  constexpr long days_since_epoch() const { return days_; }
  constexpr Date plus_days(long n) const { return Date(days_ + n); }

  friend constexpr long operator-(Date a, Date b) { return a.days_ - b.days_; }
  friend constexpr auto operator<=>(Date, Date) = default;

 private:
  constexpr explicit Date(long days) : days_(days) {}
  long days_ = 0;
};

}  // namespace readmit

#pragma once

#include <chrono>
#include <compare>
#include <cstdio>
#include <string>

#include "bsts/errors.hpp"

namespace bsts {

/// A calendar day (ISO-8601, no time zone). Thin wrapper over a day count
/// since the civil epoch so day arithmetic is plain integer arithmetic.
class Date {
  public:
    Date() = default;
    explicit Date(std::chrono::sys_days d) : days_(d) {}
    Date(int year, unsigned month, unsigned day)
        : days_(std::chrono::year{year} / month / day) {}

    static Date parse(const std::string& iso) {
        int y = 0;
        unsigned m = 0, d = 0;
        char dash1 = 0, dash2 = 0;
        if (std::sscanf(iso.c_str(), "%d%c%u%c%u", &y, &dash1, &m, &dash2, &d) != 5 ||
            dash1 != '-' || dash2 != '-') {
            throw ParseError("not an ISO date (YYYY-MM-DD): '" + iso + "'");
        }
        std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m},
                                        std::chrono::day{d}};
        if (!ymd.ok()) throw ParseError("invalid calendar date: '" + iso + "'");
        return Date(std::chrono::sys_days{ymd});
    }

    std::string to_string() const {
        auto ymd = ymd_();
        char buf[16];
        std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", int(ymd.year()),
                      unsigned(ymd.month()), unsigned(ymd.day()));
        return buf;
    }

    /// 1 = January ... 12 = December.
    unsigned month() const { return unsigned(ymd_().month()); }
    int year() const { return int(ymd_().year()); }
    unsigned day_of_month() const { return unsigned(ymd_().day()); }
    /// 0 = Sunday ... 6 = Saturday.
    unsigned day_of_week() const { return std::chrono::weekday{days_}.c_encoding(); }

    Date operator+(long n) const { return Date(days_ + std::chrono::days{n}); }
    Date operator-(long n) const { return Date(days_ - std::chrono::days{n}); }
    long operator-(Date other) const { return (days_ - other.days_).count(); }
    Date& operator++() { days_ += std::chrono::days{1}; return *this; }
    auto operator<=>(const Date&) const = default;

  private:
    std::chrono::year_month_day ymd_() const {
        return std::chrono::year_month_day{days_};
    }
    std::chrono::sys_days days_{};
};

}  // namespace bsts

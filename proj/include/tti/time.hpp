#pragma once

#include <compare>
#include <cstdint>
#include <string>

namespace tti {

/// Calendar date (proleptic Gregorian).
struct CivilDate {
    int year = 1970;
    int month = 1;  // 1..12
    int day = 1;    // 1..31

    auto operator<=>(const CivilDate&) const = default;
};

/// Naive local timestamp at hour resolution, stored as hours since
/// 1970-01-01T00:00.
struct HourStamp {
    std::int64_t hours = 0;

    auto operator<=>(const HourStamp&) const = default;

    CivilDate date() const;
    int hour_of_day() const;       // 0..23
    int weekday() const;           // 0 = Sunday .. 6 = Saturday
    HourStamp plus_hours(std::int64_t h) const { return {hours + h}; }
};

// Days since 1970-01-01 for a civil date, and the inverse.
std::int64_t days_from_civil(int year, int month, int day);
CivilDate civil_from_days(std::int64_t days);

bool is_valid_date(int year, int month, int day);
int days_in_month(int year, int month);

HourStamp make_hour_stamp(const CivilDate& date, int hour);

/// Parses "YYYY-MM-DD". Throws tti::Error on malformed input.
CivilDate parse_date(const std::string& text);

/// Parses ISO-8601 "YYYY-MM-DDTHH:MM:SS" (or without seconds). Minutes and
/// seconds must be zero; hour_aligned is set false otherwise so the caller
/// can raise its own error.
HourStamp parse_timestamp(const std::string& text, bool& hour_aligned);

std::string format_date(const CivilDate& date);
std::string format_timestamp(const HourStamp& ts);

}  // namespace tti

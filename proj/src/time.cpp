#include "tti/time.hpp"

#include <array>
#include <cstdio>

#include "tti/errors.hpp"

namespace tti {

// Low-level civil calendar arithmetic (Euclidean affine transform on the
// Gregorian cycle; exact over the whole int range used here).
std::int64_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);             // [0, 399]
    const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;  // [0, 365]
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;            // [0, 146096]
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

CivilDate civil_from_days(std::int64_t z) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned d = doy - (153 * mp + 2) / 5 + 1;
    const unsigned m = mp + (mp < 10 ? 3 : -9);
    return CivilDate{static_cast<int>(y + (m <= 2)), static_cast<int>(m), static_cast<int>(d)};
}

int days_in_month(int year, int month) {
    static constexpr std::array<int, 12> lengths{31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (month == 2) {
        const bool leap = (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
        return leap ? 29 : 28;
    }
    return lengths[month - 1];
}

bool is_valid_date(int year, int month, int day) {
    return month >= 1 && month <= 12 && day >= 1 && day <= days_in_month(year, month);
}

CivilDate HourStamp::date() const {
    std::int64_t d = hours / 24;
    if (hours < 0 && hours % 24 != 0) --d;
    return civil_from_days(d);
}

int HourStamp::hour_of_day() const {
    std::int64_t h = hours % 24;
    if (h < 0) h += 24;
    return static_cast<int>(h);
}

int HourStamp::weekday() const {
    std::int64_t d = hours / 24;
    if (hours < 0 && hours % 24 != 0) --d;
    // 1970-01-01 was a Thursday.
    std::int64_t wd = (d + 4) % 7;
    if (wd < 0) wd += 7;
    return static_cast<int>(wd);
}

HourStamp make_hour_stamp(const CivilDate& date, int hour) {
    return HourStamp{days_from_civil(date.year, date.month, date.day) * 24 + hour};
}

namespace {

bool all_digits(const std::string& s, std::size_t begin, std::size_t end) {
    if (begin >= end || end > s.size()) return false;
    for (std::size_t i = begin; i < end; ++i)
        if (s[i] < '0' || s[i] > '9') return false;
    return true;
}

int to_int(const std::string& s, std::size_t begin, std::size_t end) {
    int v = 0;
    for (std::size_t i = begin; i < end; ++i) v = v * 10 + (s[i] - '0');
    return v;
}

}  // namespace

CivilDate parse_date(const std::string& text) {
    if (text.size() != 10 || text[4] != '-' || text[7] != '-' ||
        !all_digits(text, 0, 4) || !all_digits(text, 5, 7) || !all_digits(text, 8, 10)) {
        throw Error("malformed date: " + text);
    }
    CivilDate d{to_int(text, 0, 4), to_int(text, 5, 7), to_int(text, 8, 10)};
    if (!is_valid_date(d.year, d.month, d.day)) throw Error("invalid calendar date: " + text);
    return d;
}

HourStamp parse_timestamp(const std::string& text, bool& hour_aligned) {
    // Accepts YYYY-MM-DDTHH:MM and YYYY-MM-DDTHH:MM:SS.
    if (text.size() != 16 && text.size() != 19) throw Error("malformed timestamp: " + text);
    if (text[10] != 'T' && text[10] != ' ') throw Error("malformed timestamp: " + text);
    CivilDate date = parse_date(text.substr(0, 10));
    if (text[13] != ':' || !all_digits(text, 11, 13) || !all_digits(text, 14, 16))
        throw Error("malformed timestamp: " + text);
    int hour = to_int(text, 11, 13);
    int minute = to_int(text, 14, 16);
    int second = 0;
    if (text.size() == 19) {
        if (text[16] != ':' || !all_digits(text, 17, 19))
            throw Error("malformed timestamp: " + text);
        second = to_int(text, 17, 19);
    }
    if (hour > 23 || minute > 59 || second > 59) throw Error("malformed timestamp: " + text);
    hour_aligned = (minute == 0 && second == 0);
    return make_hour_stamp(date, hour);
}

std::string format_date(const CivilDate& date) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", date.year, date.month, date.day);
    return buf;
}

std::string format_timestamp(const HourStamp& ts) {
    char buf[24];
    const CivilDate d = ts.date();
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:00:00", d.year, d.month, d.day,
                  ts.hour_of_day());
    return buf;
}

}  // namespace tti

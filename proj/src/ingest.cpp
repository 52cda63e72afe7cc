#include "tti/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <unordered_map>

#include "tti/errors.hpp"

namespace tti::ingest {

const std::array<std::string, kWeatherIndexCount>& weather_index_names() {
    static const std::array<std::string, kWeatherIndexCount> names = {
        "temp_min",          "temp_mean",          "temp_max",
        "dew_point_min",     "dew_point_mean",     "dew_point_max",
        "humidity_min",      "humidity_mean",      "humidity_max",
        "pressure_min",      "pressure_mean",      "pressure_max",
        "visibility_min",    "visibility_mean",    "visibility_max",
        "wind_speed_min",    "wind_speed_mean",    "wind_speed_max",
        "wind_gust_max",     "precipitation_total", "snowfall",
        "snow_depth",        "cloud_cover_mean",   "heating_degree_days",
        "cooling_degree_days", "sunshine_hours",   "max_hourly_precip_intensity",
        "pressure_tendency", "event_rain",         "event_snow",
        "event_fog",         "event_thunder",      "event_hail",
        "event_high_wind"};
    return names;
}

std::size_t weather_index_of(const std::string& name) {
    const auto& names = weather_index_names();
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return i;
    throw Error("unknown weather index: " + name);
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::size_t begin = 0;
    while (true) {
        std::size_t comma = line.find(',', begin);
        if (comma == std::string::npos) {
            cells.push_back(line.substr(begin));
            break;
        }
        cells.push_back(line.substr(begin, comma - begin));
        begin = comma + 1;
    }
    return cells;
}

bool read_line(std::istream& in, std::string& line) {
    if (!std::getline(in, line)) return false;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
}

double parse_double(const std::string& cell, std::size_t line_no) {
    double v = 0;
    const char* first = cell.data();
    const char* last = first + cell.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last || !std::isfinite(v))
        throw MalformedRow(line_no, "bad numeric value '" + cell + "'");
    return v;
}

}  // namespace

std::vector<TtiObservation> parse_tti_csv(std::istream& in) {
    std::string line;
    if (!read_line(in, line)) throw MalformedRow(1, "missing header");
    if (split_csv_line(line) != std::vector<std::string>{"timestamp", "tti"})
        throw MalformedRow(1, "expected header 'timestamp,tti'");

    std::vector<TtiObservation> obs;
    std::size_t line_no = 1;
    while (read_line(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto cells = split_csv_line(line);
        if (cells.size() != 2) throw MalformedRow(line_no, "expected 2 cells");
        bool aligned = false;
        HourStamp ts;
        try {
            ts = parse_timestamp(cells[0], aligned);
        } catch (const Error& e) {
            throw MalformedRow(line_no, e.what());
        }
        if (!aligned) throw NonHourAligned(cells[0]);
        double tti = parse_double(cells[1], line_no);
        if (tti < 1.0) throw TtiBelowOne(tti);
        obs.push_back({ts, tti});
    }
    std::sort(obs.begin(), obs.end(),
              [](const TtiObservation& a, const TtiObservation& b) {
                  return a.timestamp < b.timestamp;
              });
    for (std::size_t i = 1; i < obs.size(); ++i)
        if (obs[i].timestamp == obs[i - 1].timestamp)
            throw DuplicateTimestamp(format_timestamp(obs[i].timestamp));
    return obs;
}

namespace {

void validate_weather_row(const WeatherDay& day, std::size_t line_no) {
    const auto& names = weather_index_names();
    for (std::size_t t = 0; t < 6; ++t) {  // six min/mean/max triples
        double lo = day.indexes[3 * t], mid = day.indexes[3 * t + 1], hi = day.indexes[3 * t + 2];
        if (!(lo <= mid && mid <= hi))
            throw MalformedRow(line_no, names[3 * t] + " triple violates min <= mean <= max");
    }
    if (day.index("precipitation_total") < 0)
        throw MalformedRow(line_no, "negative precipitation_total");
    if (day.index("snowfall") < 0) throw MalformedRow(line_no, "negative snowfall");
    for (std::size_t i = weather_index_of("event_rain"); i < kWeatherIndexCount; ++i) {
        double v = day.indexes[i];
        if (v != 0.0 && v != 1.0)
            throw MalformedRow(line_no, names[i] + " must be 0 or 1");
    }
}

}  // namespace

std::vector<WeatherDay> parse_weather_csv(std::istream& in) {
    std::string line;
    if (!read_line(in, line)) throw MalformedRow(1, "missing header");
    auto header = split_csv_line(line);

    const auto& names = weather_index_names();
    // column position in file -> schema index; date column tracked separately
    std::vector<int> schema_of_column(header.size(), -1);
    int date_column = -1;
    std::set<std::string> seen;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (header[c] == "date") {
            date_column = static_cast<int>(c);
            continue;
        }
        auto it = std::find(names.begin(), names.end(), header[c]);
        if (it == names.end()) throw MalformedRow(1, "unknown column '" + header[c] + "'");
        if (!seen.insert(header[c]).second)
            throw MalformedRow(1, "repeated column '" + header[c] + "'");
        schema_of_column[c] = static_cast<int>(it - names.begin());
    }
    if (date_column < 0) throw MissingColumn("date");
    for (const auto& n : names)
        if (!seen.count(n)) throw MissingColumn(n);

    struct RawRow {
        std::size_t line_no;
        CivilDate date;
        std::array<double, kWeatherIndexCount> values{};
        std::array<bool, kWeatherIndexCount> present{};
    };
    std::vector<RawRow> rows;
    std::size_t line_no = 1;
    while (read_line(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto cells = split_csv_line(line);
        if (cells.size() != header.size())
            throw MalformedRow(line_no, "expected " + std::to_string(header.size()) + " cells");
        RawRow row;
        row.line_no = line_no;
        try {
            row.date = parse_date(cells[date_column]);
        } catch (const Error& e) {
            throw MalformedRow(line_no, e.what());
        }
        for (std::size_t c = 0; c < cells.size(); ++c) {
            int s = schema_of_column[c];
            if (s < 0) continue;
            if (cells[c].empty()) continue;  // imputed below
            row.values[s] = parse_double(cells[c], line_no);
            row.present[s] = true;
        }
        rows.push_back(std::move(row));
    }

    // Column medians over present cells, for imputation.
    std::array<double, kWeatherIndexCount> median{};
    for (std::size_t s = 0; s < kWeatherIndexCount; ++s) {
        std::vector<double> vals;
        for (const auto& r : rows)
            if (r.present[s]) vals.push_back(r.values[s]);
        if (vals.empty() && !rows.empty())
            throw MalformedRow(rows.front().line_no, "column '" + names[s] + "' has no values");
        if (!vals.empty()) {
            std::sort(vals.begin(), vals.end());
            std::size_t n = vals.size();
            median[s] = n % 2 ? vals[n / 2] : 0.5 * (vals[n / 2 - 1] + vals[n / 2]);
        }
    }

    std::vector<WeatherDay> days;
    std::set<std::int64_t> dates;
    for (const auto& r : rows) {
        WeatherDay day;
        day.date = r.date;
        for (std::size_t s = 0; s < kWeatherIndexCount; ++s) {
            day.indexes[s] = r.present[s] ? r.values[s] : median[s];
            if (!r.present[s]) day.imputed = true;
        }
        validate_weather_row(day, r.line_no);
        if (!dates.insert(days_from_civil(r.date.year, r.date.month, r.date.day)).second)
            throw DuplicateDate(format_date(r.date));
        days.push_back(std::move(day));
    }
    std::sort(days.begin(), days.end(), [](const WeatherDay& a, const WeatherDay& b) {
        return a.date < b.date;
    });
    return days;
}

JoinResult join_tti_weather(const std::vector<TtiObservation>& tti,
                            const std::vector<WeatherDay>& weather) {
    std::unordered_map<std::int64_t, const WeatherDay*> by_day;
    by_day.reserve(weather.size());
    for (const auto& w : weather)
        by_day.emplace(days_from_civil(w.date.year, w.date.month, w.date.day), &w);

    JoinResult out;
    out.records.reserve(tti.size());
    for (const auto& o : tti) {
        std::int64_t day = o.timestamp.hours >= 0
                               ? o.timestamp.hours / 24
                               : (o.timestamp.hours - 23) / 24;
        auto it = by_day.find(day);
        if (it == by_day.end()) {
            ++out.dropped;
            continue;
        }
        out.records.push_back({o.timestamp, o.tti, it->second->indexes});
    }
    if (out.records.empty() && !tti.empty()) throw EmptyIntersection();
    return out;
}

namespace {

std::string format_value(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

void write_tti_csv(const std::vector<TtiObservation>& obs, std::ostream& out) {
    out << "timestamp,tti\n";
    for (const auto& o : obs)
        out << format_timestamp(o.timestamp) << ',' << format_value(o.tti) << '\n';
}

void write_weather_csv(const std::vector<WeatherDay>& days, std::ostream& out) {
    out << "date";
    for (const auto& n : weather_index_names()) out << ',' << n;
    out << '\n';
    for (const auto& d : days) {
        out << format_date(d.date);
        for (double v : d.indexes) out << ',' << format_value(v);
        out << '\n';
    }
}

}  // namespace tti::ingest

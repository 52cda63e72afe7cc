#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "tti/time.hpp"

namespace tti::ingest {

inline constexpr std::size_t kWeatherIndexCount = 34;

/// Fixed order of the 34 daily weather indexes. Column positions are part of
/// the file format; see weather-schema.md.
const std::array<std::string, kWeatherIndexCount>& weather_index_names();

/// Position of a named index in the schema; throws tti::Error if unknown.
std::size_t weather_index_of(const std::string& name);

/// One hourly travel-time-index reading.
struct TtiObservation {
    HourStamp timestamp;
    double tti = 1.0;  // >= 1.0 by invariant
};

/// One day's weather summary.
struct WeatherDay {
    CivilDate date;
    std::array<double, kWeatherIndexCount> indexes{};
    bool imputed = false;  // true when any cell was filled from a column median

    double index(const std::string& name) const { return indexes[weather_index_of(name)]; }
};

/// One hourly observation joined with its calendar day's weather.
struct JoinedRecord {
    HourStamp timestamp;
    double tti = 1.0;
    std::array<double, kWeatherIndexCount> weather{};
};

struct JoinResult {
    std::vector<JoinedRecord> records;
    std::size_t dropped = 0;  // observations whose date had no weather record
};

/// Parses `timestamp,tti` CSV. Output is sorted ascending by timestamp.
/// Throws MalformedRow, NonHourAligned, TtiBelowOne, DuplicateTimestamp.
std::vector<TtiObservation> parse_tti_csv(std::istream& in);

/// Parses the `date` + 34-index weather CSV. Missing cells are imputed with
/// the column median over the file and the record is flagged.
/// Throws MalformedRow, MissingColumn, DuplicateDate.
std::vector<WeatherDay> parse_weather_csv(std::istream& in);

/// Joins hourly observations with daily weather; observations without a
/// matching weather date are dropped and counted. Throws EmptyIntersection
/// when nothing matches.
JoinResult join_tti_weather(const std::vector<TtiObservation>& tti,
                            const std::vector<WeatherDay>& weather);

void write_tti_csv(const std::vector<TtiObservation>& obs, std::ostream& out);
void write_weather_csv(const std::vector<WeatherDay>& days, std::ostream& out);

/// Deterministic synthetic dataset generator, calibrated so the descriptive
/// aggregations show the expected rush-hour, weekday, monthly, and
/// precipitation patterns. Hourly values follow
///   1 + base + hourly profile + weekday factor + monthly factor
///     + precipitation uplift + snow spike + AR(1) Gaussian noise,
/// clamped to the tti >= 1 invariant.
struct SyntheticData {
    std::vector<TtiObservation> tti;
    std::vector<WeatherDay> weather;
};

SyntheticData synthesize_dataset(const CivilDate& start, const CivilDate& end,
                                 std::uint64_t seed);

}  // namespace tti::ingest

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tti/ingest.hpp"

namespace tti::describe {

enum class KeyKind { day, month, hour, weekday, year };

/// Partition of records by the daily precipitation of their calendar day.
/// Records with precipitation > threshold (or >= when inclusive) fall into
/// the first-labelled series.
struct SplitRule {
    double threshold = 0.0;
    bool inclusive = false;
    std::string above_label = "wet";
    std::string below_label = "dry";
};

SplitRule wet_dry_rule();

/// High/low split at the 75th percentile (nearest rank) of wet-day
/// precipitation totals observed in the records.
SplitRule high_low_rule(const std::vector<ingest::JoinedRecord>& records);

struct AggregatePoint {
    std::int64_t key = 0;  // hour 0..23, weekday 0..6, month 1..12, year, or day index
    double mean_tti = 0.0;
    std::size_t count = 0;
};

struct AggregateSeries {
    KeyKind key_kind = KeyKind::hour;
    std::optional<std::string> split;  // label when the series is one side of a split
    std::vector<AggregatePoint> points;
};

/// Mean TTI per key, optionally split by daily precipitation. Returns one
/// series, or two (above label first) when a split rule is given.
/// Throws EmptyInput on empty records.
std::vector<AggregateSeries> aggregate_mean(const std::vector<ingest::JoinedRecord>& records,
                                            KeyKind key_kind,
                                            const std::optional<SplitRule>& split_rule = {});

/// The five standard report series: daily, monthly, hourly (wet/dry split),
/// weekday (high/low split), yearly.
struct Report {
    AggregateSeries daily;
    std::vector<bool> daily_snow;  // aligned with daily.points: snowfall > 0 that day
    AggregateSeries monthly;
    std::vector<AggregateSeries> hourly;   // wet, dry
    std::vector<AggregateSeries> weekday;  // high, low
    AggregateSeries yearly;
};

Report build_report(const std::vector<ingest::JoinedRecord>& records);

/// Writes fig1_daily.csv .. fig5_yearly.csv under directory `dir`.
/// Throws EmptyInput if the report holds no series, IoFailure on write errors.
void emit_report(const Report& report, const std::string& dir);

}  // namespace tti::describe

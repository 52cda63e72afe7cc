#include "tti/describe.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>

#include "tti/errors.hpp"

namespace tti::describe {

namespace {

std::int64_t day_index(const HourStamp& ts) {
    return ts.hours >= 0 ? ts.hours / 24 : (ts.hours - 23) / 24;
}

std::int64_t key_of(const ingest::JoinedRecord& r, KeyKind kind) {
    switch (kind) {
        case KeyKind::day: return day_index(r.timestamp);
        case KeyKind::month: return r.timestamp.date().month;
        case KeyKind::hour: return r.timestamp.hour_of_day();
        case KeyKind::weekday: return r.timestamp.weekday();
        case KeyKind::year: return r.timestamp.date().year;
    }
    throw Error("unreachable key kind");
}

AggregateSeries reduce(const std::vector<ingest::JoinedRecord>& records, KeyKind kind,
                       const std::optional<std::string>& label,
                       const std::vector<bool>& mask) {
    std::map<std::int64_t, std::pair<double, std::size_t>> acc;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (!mask.empty() && !mask[i]) continue;
        auto& slot = acc[key_of(records[i], kind)];
        slot.first += records[i].tti;
        slot.second += 1;
    }
    AggregateSeries series;
    series.key_kind = kind;
    series.split = label;
    series.points.reserve(acc.size());
    for (const auto& [key, sums] : acc)
        series.points.push_back({key, sums.first / static_cast<double>(sums.second), sums.second});
    return series;
}

}  // namespace

SplitRule wet_dry_rule() { return SplitRule{0.0, false, "wet", "dry"}; }

SplitRule high_low_rule(const std::vector<ingest::JoinedRecord>& records) {
    const std::size_t precip_col = ingest::weather_index_of("precipitation_total");
    std::map<std::int64_t, double> daily_precip;
    for (const auto& r : records) daily_precip[day_index(r.timestamp)] = r.weather[precip_col];
    std::vector<double> wet;
    for (const auto& [day, p] : daily_precip)
        if (p > 0) wet.push_back(p);
    SplitRule rule{0.0, true, "high", "low"};
    if (!wet.empty()) {
        std::sort(wet.begin(), wet.end());
        std::size_t rank = static_cast<std::size_t>(std::ceil(0.75 * wet.size()));
        rule.threshold = wet[std::min(rank == 0 ? 0 : rank - 1, wet.size() - 1)];
    }
    return rule;
}

std::vector<AggregateSeries> aggregate_mean(const std::vector<ingest::JoinedRecord>& records,
                                            KeyKind key_kind,
                                            const std::optional<SplitRule>& split_rule) {
    if (records.empty()) throw EmptyInput("aggregate_mean over no records");
    if (!split_rule) return {reduce(records, key_kind, std::nullopt, {})};

    const std::size_t precip_col = ingest::weather_index_of("precipitation_total");
    std::vector<bool> above(records.size());
    std::vector<bool> below(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        double p = records[i].weather[precip_col];
        bool hi = split_rule->inclusive ? p >= split_rule->threshold : p > split_rule->threshold;
        above[i] = hi;
        below[i] = !hi;
    }
    return {reduce(records, key_kind, split_rule->above_label, above),
            reduce(records, key_kind, split_rule->below_label, below)};
}

Report build_report(const std::vector<ingest::JoinedRecord>& records) {
    if (records.empty()) throw EmptyInput("build_report over no records");
    Report rep;
    rep.daily = aggregate_mean(records, KeyKind::day)[0];
    rep.monthly = aggregate_mean(records, KeyKind::month)[0];
    rep.hourly = aggregate_mean(records, KeyKind::hour, wet_dry_rule());
    rep.weekday = aggregate_mean(records, KeyKind::weekday, high_low_rule(records));
    rep.yearly = aggregate_mean(records, KeyKind::year)[0];

    const std::size_t snow_col = ingest::weather_index_of("snowfall");
    std::map<std::int64_t, bool> snow_by_day;
    for (const auto& r : records)
        snow_by_day[day_index(r.timestamp)] = r.weather[snow_col] > 0;
    rep.daily_snow.reserve(rep.daily.points.size());
    for (const auto& p : rep.daily.points) rep.daily_snow.push_back(snow_by_day[p.key]);
    return rep;
}

namespace {

std::string key_text(const AggregateSeries& s, std::int64_t key) {
    if (s.key_kind == KeyKind::day) return format_date(civil_from_days(key));
    return std::to_string(key);
}

void write_series(std::ofstream& out, const AggregateSeries& s) {
    for (const auto& p : s.points) {
        out << key_text(s, p.key) << ',' << p.mean_tti << ',' << p.count;
        if (s.split) out << ',' << *s.split;
        out << '\n';
    }
}

std::ofstream open_csv(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoFailure(path.string());
    out.precision(12);
    return out;
}

}  // namespace

void emit_report(const Report& report, const std::string& dir) {
    if (report.daily.points.empty()) throw EmptyInput("emit_report with empty series");
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);

    {
        auto out = open_csv(fs::path(dir) / "fig1_daily.csv");
        out << "key,mean_tti,count,snow\n";
        for (std::size_t i = 0; i < report.daily.points.size(); ++i) {
            const auto& p = report.daily.points[i];
            out << key_text(report.daily, p.key) << ',' << p.mean_tti << ',' << p.count << ','
                << (report.daily_snow[i] ? 1 : 0) << '\n';
        }
        if (!out) throw IoFailure("fig1_daily.csv");
    }
    {
        auto out = open_csv(fs::path(dir) / "fig2_monthly.csv");
        out << "key,mean_tti,count\n";
        write_series(out, report.monthly);
        if (!out) throw IoFailure("fig2_monthly.csv");
    }
    {
        auto out = open_csv(fs::path(dir) / "fig3_hourly.csv");
        out << "key,mean_tti,count,split\n";
        for (const auto& s : report.hourly) write_series(out, s);
        if (!out) throw IoFailure("fig3_hourly.csv");
    }
    {
        auto out = open_csv(fs::path(dir) / "fig4_weekday.csv");
        out << "key,mean_tti,count,split\n";
        for (const auto& s : report.weekday) write_series(out, s);
        if (!out) throw IoFailure("fig4_weekday.csv");
    }
    {
        auto out = open_csv(fs::path(dir) / "fig5_yearly.csv");
        out << "key,mean_tti,count\n";
        write_series(out, report.yearly);
        if (!out) throw IoFailure("fig5_yearly.csv");
    }
}

}  // namespace tti::describe

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "tti/errors.hpp"
#include "tti/ingest.hpp"
#include "tti/rng.hpp"

namespace tti::ingest {

namespace {

// Hour-of-day profile: morning peak at 08:00, evening peak at 17:00.
constexpr std::array<double, 24> kHourlyProfile = {
    0.000, 0.000, 0.000, 0.000, 0.010, 0.040, 0.100, 0.180,
    0.240, 0.160, 0.100, 0.090, 0.100, 0.110, 0.130, 0.180,
    0.220, 0.280, 0.200, 0.120, 0.070, 0.040, 0.020, 0.010};

// Sunday..Saturday: Wednesday highest, Saturday lowest, weekdays above weekends.
constexpr std::array<double, 7> kWeekdayFactor = {
    -0.030, 0.020, 0.035, 0.050, 0.035, 0.030, -0.040};

// January..December: June maximum, May and October also elevated.
constexpr std::array<double, 12> kMonthlyFactor = {
    0.015, 0.015, 0.022, 0.030, 0.045, 0.065, 0.032, 0.028, 0.038, 0.048, 0.030, 0.022};

constexpr double kBase = 0.22;
constexpr double kArPhi = 0.88;
constexpr double kArSigma = 0.033;

double clamp(double v, double lo, double hi) { return std::min(hi, std::max(lo, v)); }

struct DayWeather {
    WeatherDay record;
    double precip = 0.0;
    double snowfall = 0.0;
};

DayWeather make_weather_day(const CivilDate& date, int doy, double prev_snow_depth, Rng& rng) {
    using std::numbers::pi;
    const double seasonal = std::cos(2.0 * pi * (doy - 21) / 365.25);

    DayWeather out;
    WeatherDay& d = out.record;
    d.date = date;
    auto set = [&](const char* name, double v) { d.indexes[weather_index_of(name)] = v; };

    const double temp_mean = 13.5 - 12.0 * seasonal + rng.normal(0.0, 4.0);
    const double temp_lo = 2.5 + 2.0 * std::abs(rng.normal());
    const double temp_hi = 2.5 + 2.0 * std::abs(rng.normal());
    set("temp_min", temp_mean - temp_lo);
    set("temp_mean", temp_mean);
    set("temp_max", temp_mean + temp_hi);

    const double dew_mean = temp_mean - (1.0 + 7.0 * rng.uniform());
    set("dew_point_min", dew_mean - (2.0 + 2.0 * rng.uniform()));
    set("dew_point_mean", dew_mean);
    set("dew_point_max", dew_mean + (2.0 + 2.0 * rng.uniform()));

    const bool wet = rng.bernoulli(0.30);
    const double precip = wet ? std::min(60.0, rng.exponential(6.0)) : 0.0;
    out.precip = precip;

    const bool cold_month = date.month <= 3 || date.month >= 11;
    double snowfall = 0.0;
    const bool snow_roll = rng.bernoulli(0.45);  // drawn unconditionally, fixed draw count
    const double snow_amount = rng.exponential(4.5);
    if (cold_month && wet && temp_mean - temp_lo < -1.0 && snow_roll)
        snowfall = std::min(30.0, snow_amount);
    out.snowfall = snowfall;
    set("snowfall", snowfall);
    set("precipitation_total", precip);
    set("snow_depth", std::max(0.0, 0.7 * prev_snow_depth + snowfall -
                                        0.5 * std::max(0.0, temp_mean)));

    const double humidity_mean = clamp(52.0 + 28.0 * (wet ? 1.0 : 0.0) + rng.normal(0.0, 8.0),
                                       15.0, 98.0);
    set("humidity_min", std::max(3.0, humidity_mean - (8.0 + 6.0 * rng.uniform())));
    set("humidity_mean", humidity_mean);
    set("humidity_max", std::min(100.0, humidity_mean + (8.0 + 6.0 * rng.uniform())));

    const double pressure_mean = 1016.5 + rng.normal(0.0, 5.5);
    set("pressure_min", pressure_mean - (1.5 + 2.0 * rng.uniform()));
    set("pressure_mean", pressure_mean);
    set("pressure_max", pressure_mean + (1.5 + 2.0 * rng.uniform()));
    set("pressure_tendency", rng.normal(0.0, 2.5));

    const bool fog = rng.bernoulli(0.03 + (humidity_mean > 82.0 ? 0.12 : 0.0) + (wet ? 0.05 : 0.0));
    double vis_mean = clamp(14.5 - (wet ? 3.0 + 0.25 * std::min(precip, 12.0) : 0.0) -
                                (snowfall > 0 ? 2.0 : 0.0) + rng.normal(0.0, 1.0),
                            1.0, 16.0);
    double vis_min = clamp(vis_mean - (2.0 + 3.0 * (wet ? 1.0 : 0.0) + rng.uniform()),
                           0.1, vis_mean);
    if (fog) vis_min *= 0.4;
    set("visibility_min", vis_min);
    set("visibility_mean", vis_mean);
    set("visibility_max", std::min(16.0, vis_mean + 1.5 + rng.uniform()));

    const double wind_mean = 7.5 + std::abs(rng.normal(0.0, 4.0));
    const double gust = (wind_mean + 3.0 + 2.0 * rng.uniform()) * (1.35 + 0.5 * rng.uniform());
    set("wind_speed_min", std::max(0.0, wind_mean - (3.0 + 2.0 * rng.uniform())));
    set("wind_speed_mean", wind_mean);
    set("wind_speed_max", wind_mean + (3.0 + 2.0 * rng.uniform()));
    set("wind_gust_max", gust);

    const double cloud = clamp(wet ? 62.0 + 30.0 * rng.uniform() : 18.0 + 45.0 * rng.uniform(),
                               0.0, 100.0);
    set("cloud_cover_mean", cloud);
    set("heating_degree_days", std::max(0.0, 18.0 - temp_mean));
    set("cooling_degree_days", std::max(0.0, temp_mean - 18.0));

    const double daylength = 12.0 + 2.8 * std::sin(2.0 * pi * (doy - 80) / 365.25);
    set("sunshine_hours", std::max(0.0, daylength * (1.0 - cloud / 100.0) *
                                            (0.85 + 0.3 * rng.uniform())));
    set("max_hourly_precip_intensity", precip * (0.12 + 0.3 * rng.uniform()));

    const bool thunder = wet && date.month >= 5 && date.month <= 9 && rng.bernoulli(0.30);
    set("event_rain", (precip > 0 && temp_mean + temp_hi > 1.0) ? 1.0 : 0.0);
    set("event_snow", snowfall > 0 ? 1.0 : 0.0);
    set("event_fog", fog ? 1.0 : 0.0);
    set("event_thunder", thunder ? 1.0 : 0.0);
    set("event_hail", thunder && rng.bernoulli(0.07) ? 1.0 : 0.0);
    set("event_high_wind", gust > 42.0 ? 1.0 : 0.0);
    return out;
}

double precipitation_uplift(double precip) {
    return precip > 0 ? 0.05 + 0.012 * std::min(precip, 12.0) : 0.0;
}

double snow_spike(double snowfall) {
    return snowfall > 0 ? 0.08 + 0.045 * std::min(snowfall, 10.0) : 0.0;
}

}  // namespace

SyntheticData synthesize_dataset(const CivilDate& start, const CivilDate& end,
                                 std::uint64_t seed) {
    const std::int64_t first = days_from_civil(start.year, start.month, start.day);
    const std::int64_t last = days_from_civil(end.year, end.month, end.day);
    if (first >= last)
        throw InvalidRange(format_date(start) + " .. " + format_date(end));

    Rng weather_rng(derive_seed(seed, {0x57u}));  // 'W'
    Rng noise_rng(derive_seed(seed, {0x54u}));    // 'T'

    SyntheticData out;
    const std::int64_t n_days = last - first + 1;
    out.weather.reserve(static_cast<std::size_t>(n_days));
    out.tti.reserve(static_cast<std::size_t>(n_days * 24));

    double snow_depth = 0.0;
    double ar = 0.0;
    for (std::int64_t day = first; day <= last; ++day) {
        const CivilDate date = civil_from_days(day);
        const int doy = static_cast<int>(day - days_from_civil(date.year, 1, 1)) + 1;
        DayWeather dw = make_weather_day(date, doy, snow_depth, weather_rng);
        snow_depth = dw.record.index("snow_depth");
        out.weather.push_back(dw.record);

        const int weekday = HourStamp{day * 24}.weekday();
        const double day_effect = precipitation_uplift(dw.precip) + snow_spike(dw.snowfall);
        for (int h = 0; h < 24; ++h) {
            ar = kArPhi * ar + noise_rng.normal(0.0, kArSigma);
            double value = 1.0 + kBase + kHourlyProfile[h] + kWeekdayFactor[weekday] +
                           kMonthlyFactor[date.month - 1] + day_effect + ar;
            out.tti.push_back({HourStamp{day * 24 + h}, std::max(1.0, value)});
        }
    }
    return out;
}

}  // namespace tti::ingest

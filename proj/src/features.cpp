#include "tti/features.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "tti/errors.hpp"

namespace tti::features {

const char* case_name(Case c) {
    return c == Case::short_term ? "short_term" : "long_term";
}

Case case_from_name(const std::string& name) {
    if (name == "short_term" || name == "short") return Case::short_term;
    if (name == "long_term" || name == "long") return Case::long_term;
    throw Error("unknown prediction case: " + name);
}

const std::array<int, kLagCount>& lag_hours(Case c) {
    // Short-term: recent hours plus daily and weekly seasonality anchors.
    static const std::array<int, kLagCount> short_lags = {1, 2, 3, 4, 5, 6,
                                                          24, 48, 72, 168, 336};
    // Long-term: nothing newer than one day.
    static const std::array<int, kLagCount> long_lags = {24, 25, 26, 48, 72, 96,
                                                         120, 144, 168, 336, 504};
    return c == Case::short_term ? short_lags : long_lags;
}

FeatureSchema feature_schema(Case c) {
    FeatureSchema schema;
    schema.prediction_case = c;
    schema.names.reserve(kFeatureCount);
    schema.groups.reserve(kFeatureCount);
    auto add = [&](std::string name, ColumnGroup g) {
        schema.names.push_back(std::move(name));
        schema.groups.push_back(g);
    };

    add("cal_hour", ColumnGroup::calendar);
    add("cal_day", ColumnGroup::calendar);
    add("cal_weekday", ColumnGroup::calendar);
    add("cal_month", ColumnGroup::calendar);
    add("cal_year", ColumnGroup::calendar);

    char buf[32];
    for (int h = 0; h < 24; ++h) {
        std::snprintf(buf, sizeof(buf), "ind_hour_%02d", h);
        add(buf, ColumnGroup::indicator);
    }
    for (int w = 0; w < 7; ++w) {
        std::snprintf(buf, sizeof(buf), "ind_weekday_%d", w);
        add(buf, ColumnGroup::indicator);
    }
    for (int m = 1; m <= 12; ++m) {
        std::snprintf(buf, sizeof(buf), "ind_month_%02d", m);
        add(buf, ColumnGroup::indicator);
    }

    for (const auto& w : ingest::weather_index_names()) add("w_" + w, ColumnGroup::weather);

    for (int lag : lag_hours(c)) {
        std::snprintf(buf, sizeof(buf), "lag_%dh", lag);
        add(buf, ColumnGroup::lag);
    }
    return schema;
}

std::array<double, 5> calendar_features(const HourStamp& ts) {
    const CivilDate d = ts.date();
    return {static_cast<double>(ts.hour_of_day()), static_cast<double>(d.day),
            static_cast<double>(ts.weekday()), static_cast<double>(d.month),
            static_cast<double>(d.year)};
}

std::array<double, 43> indicator_features(const HourStamp& ts) {
    std::array<double, 43> out{};
    out[ts.hour_of_day()] = 1.0;
    out[24 + ts.weekday()] = 1.0;
    out[31 + (ts.date().month - 1)] = 1.0;
    return out;
}

TtiSeries make_series(const std::vector<ingest::JoinedRecord>& records) {
    TtiSeries series;
    series.reserve(records.size());
    for (const auto& r : records) series.emplace(r.timestamp.hours, r.tti);
    return series;
}

std::array<double, kLagCount> lag_features(const TtiSeries& series, const HourStamp& t, Case c) {
    std::array<double, kLagCount> out{};
    const auto& lags = lag_hours(c);
    for (std::size_t i = 0; i < kLagCount; ++i) {
        auto it = series.find(t.hours - lags[i]);
        if (it == series.end()) throw MissingLag(format_timestamp({t.hours - lags[i]}));
        out[i] = it->second;
    }
    return out;
}

DesignMatrix DesignMatrix::select_columns(const std::vector<std::size_t>& columns) const {
    DesignMatrix out;
    out.X.resize(X.rows(), static_cast<Eigen::Index>(columns.size()));
    out.names.reserve(columns.size());
    for (std::size_t j = 0; j < columns.size(); ++j) {
        out.X.col(static_cast<Eigen::Index>(j)) = X.col(static_cast<Eigen::Index>(columns[j]));
        out.names.push_back(names[columns[j]]);
    }
    out.y = y;
    out.timestamps = timestamps;
    return out;
}

DesignMatrix assemble(const std::vector<ingest::JoinedRecord>& records, Case c) {
    for (std::size_t i = 1; i < records.size(); ++i)
        if (!(records[i - 1].timestamp < records[i].timestamp))
            throw Error("assemble requires records sorted by timestamp");

    const FeatureSchema schema = feature_schema(c);
    const TtiSeries series = make_series(records);
    const auto& lags = lag_hours(c);

    // Rows survive only when every lag timestamp exists in the series.
    std::vector<std::size_t> keep;
    keep.reserve(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        bool ok = true;
        for (int lag : lags) {
            if (!series.count(records[i].timestamp.hours - lag)) {
                ok = false;
                break;
            }
        }
        if (ok) keep.push_back(i);
    }
    if (keep.size() < 100) throw TooFewRows(keep.size());

    DesignMatrix m;
    m.names = schema.names;
    m.X.resize(static_cast<Eigen::Index>(keep.size()), static_cast<Eigen::Index>(kFeatureCount));
    m.y.resize(static_cast<Eigen::Index>(keep.size()));
    m.timestamps.reserve(keep.size());

    for (std::size_t r = 0; r < keep.size(); ++r) {
        const auto& rec = records[keep[r]];
        const auto row = static_cast<Eigen::Index>(r);
        auto cal = calendar_features(rec.timestamp);
        auto ind = indicator_features(rec.timestamp);
        auto lag = lag_features(series, rec.timestamp, c);
        Eigen::Index col = 0;
        for (double v : cal) m.X(row, col++) = v;
        for (double v : ind) m.X(row, col++) = v;
        for (double v : rec.weather) m.X(row, col++) = v;
        for (double v : lag) m.X(row, col++) = v;
        m.y(row) = rec.tti;
        m.timestamps.push_back(rec.timestamp);
    }
    if (!m.X.allFinite() || !m.y.allFinite()) throw Error("assemble produced non-finite values");
    return m;
}

std::size_t expanded_width(std::size_t p, int degree) {
    // C(p + degree, degree), computed exactly in stages.
    unsigned long long width = 1;
    for (int i = 1; i <= degree; ++i) width = width * (p + i) / i;
    return static_cast<std::size_t>(width);
}

ExpansionPlan ExpansionPlan::build(std::size_t p, int degree, std::size_t cap) {
    if (degree < 1 || degree > 5) throw DegreeOutOfRange(degree);
    const std::size_t width = expanded_width(p, degree);
    if (width > cap) throw ExpansionTooLarge(width, cap);

    ExpansionPlan plan;
    plan.input_width = p;
    plan.degree = degree;
    plan.parent.reserve(width);
    plan.var.reserve(width);
    plan.parent.push_back(0);
    plan.var.push_back(0);

    // Grade g entries extend each grade g-1 entry by every variable with
    // index >= its own last variable, preserving graded lexicographic order.
    std::size_t grade_begin = 0;
    std::size_t grade_end = 1;
    for (int g = 1; g <= degree; ++g) {
        for (std::size_t i = grade_begin; i < grade_end; ++i) {
            const std::uint32_t first = (i == 0) ? 0 : plan.var[i];
            for (std::uint32_t v = first; v < p; ++v) {
                plan.parent.push_back(static_cast<std::uint32_t>(i));
                plan.var.push_back(v);
            }
        }
        grade_begin = grade_end;
        grade_end = plan.parent.size();
    }
    return plan;
}

void ExpansionPlan::apply_row(const double* x, double* out) const {
    out[0] = 1.0;
    const std::size_t w = width();
    for (std::size_t i = 1; i < w; ++i) out[i] = out[parent[i]] * x[var[i]];
}

Eigen::MatrixXd ExpansionPlan::apply(const Eigen::MatrixXd& X) const {
    if (static_cast<std::size_t>(X.cols()) != input_width)
        throw WidthMismatch(static_cast<std::size_t>(X.cols()), input_width);
    // Column-wise evaluation of the monomial DAG: each output column is its
    // parent column times one input column, matching apply_row entry for
    // entry.
    Eigen::MatrixXd out(X.rows(), static_cast<Eigen::Index>(width()));
    out.col(0).setOnes();
    for (std::size_t i = 1; i < width(); ++i) {
        out.col(static_cast<Eigen::Index>(i)) =
            out.col(static_cast<Eigen::Index>(parent[i]))
                .cwiseProduct(X.col(static_cast<Eigen::Index>(var[i])));
    }
    return out;
}

std::vector<std::string> ExpansionPlan::names(const std::vector<std::string>& base) const {
    if (base.size() != input_width)
        throw WidthMismatch(base.size(), input_width);
    std::vector<std::string> out;
    out.reserve(width());
    std::vector<std::uint32_t> exponents(input_width);
    for (std::size_t i = 0; i < width(); ++i) {
        if (i == 0) {
            out.emplace_back("1");
            continue;
        }
        std::fill(exponents.begin(), exponents.end(), 0);
        for (std::size_t j = i; j != 0; j = parent[j]) ++exponents[var[j]];
        std::string name;
        for (std::size_t v = 0; v < input_width; ++v) {
            if (exponents[v] == 0) continue;
            if (!name.empty()) name += '*';
            name += base[v];
            if (exponents[v] > 1) name += '^' + std::to_string(exponents[v]);
        }
        out.push_back(std::move(name));
    }
    return out;
}

DesignMatrix polynomial_expand(const DesignMatrix& m, int degree, std::size_t cap) {
    const ExpansionPlan plan =
        ExpansionPlan::build(static_cast<std::size_t>(m.cols()), degree, cap);
    DesignMatrix out;
    out.X = plan.apply(m.X);
    out.y = m.y;
    out.names = plan.names(m.names);
    out.timestamps = m.timestamps;
    return out;
}

Scaler fit_scaler(const Eigen::MatrixXd& X) {
    std::vector<std::size_t> all(static_cast<std::size_t>(X.rows()));
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return fit_scaler(X, all);
}

Scaler fit_scaler(const Eigen::MatrixXd& X, const std::vector<std::size_t>& row_subset) {
    const Eigen::Index p = X.cols();
    const double n = static_cast<double>(row_subset.size());
    Scaler s;
    s.mean.resize(p);
    s.stddev.resize(p);
    s.scaled.assign(static_cast<std::size_t>(p), true);
    for (Eigen::Index j = 0; j < p; ++j) {
        double sum = 0;
        for (std::size_t r : row_subset) sum += X(static_cast<Eigen::Index>(r), j);
        const double mean = sum / n;
        double ss = 0;
        for (std::size_t r : row_subset) {
            double d = X(static_cast<Eigen::Index>(r), j) - mean;
            ss += d * d;
        }
        const double var = n > 1 ? ss / (n - 1.0) : 0.0;
        s.mean(j) = mean;
        s.stddev(j) = std::sqrt(var);
        if (s.stddev(j) == 0.0) {
            s.scaled[static_cast<std::size_t>(j)] = false;
            s.stddev(j) = 1.0;  // identity transform for constant columns
            s.mean(j) = 0.0;
        }
    }
    return s;
}

Eigen::MatrixXd Scaler::apply(const Eigen::MatrixXd& X) const {
    if (X.cols() != mean.size())
        throw WidthMismatch(static_cast<std::size_t>(X.cols()),
                            static_cast<std::size_t>(mean.size()));
    Eigen::MatrixXd out = X;
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
        if (!scaled[static_cast<std::size_t>(j)]) continue;
        out.col(j) = (X.col(j).array() - mean(j)) / stddev(j);
    }
    return out;
}

Eigen::MatrixXd Scaler::invert(const Eigen::MatrixXd& X) const {
    if (X.cols() != mean.size())
        throw WidthMismatch(static_cast<std::size_t>(X.cols()),
                            static_cast<std::size_t>(mean.size()));
    Eigen::MatrixXd out = X;
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
        if (!scaled[static_cast<std::size_t>(j)]) continue;
        out.col(j) = X.col(j).array() * stddev(j) + mean(j);
    }
    return out;
}

StandardizeResult standardize(const DesignMatrix& m) {
    if (m.rows() < 2) throw Error("standardize requires at least 2 rows");
    StandardizeResult out;
    out.scaler = fit_scaler(m.X);
    out.matrix.X = out.scaler.apply(m.X);
    out.matrix.y = m.y;
    out.matrix.names = m.names;
    out.matrix.timestamps = m.timestamps;
    return out;
}

void dump_matrix_csv(const DesignMatrix& m, std::ostream& out) {
    out << "timestamp";
    for (const auto& n : m.names) out << ',' << n;
    out << ",target\n";
    out.precision(17);
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        if (static_cast<std::size_t>(r) < m.timestamps.size())
            out << format_timestamp(m.timestamps[static_cast<std::size_t>(r)]);
        for (Eigen::Index j = 0; j < m.cols(); ++j) out << ',' << m.X(r, j);
        out << ',' << m.y(r) << '\n';
    }
}

}  // namespace tti::features

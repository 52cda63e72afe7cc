#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

#include "tti/ingest.hpp"
#include "tti/time.hpp"

namespace tti::features {

enum class Case { short_term, long_term };

const char* case_name(Case c);
Case case_from_name(const std::string& name);

enum class ColumnGroup { calendar, indicator, weather, lag };

/// The fixed 93-column layout: 5 calendar numerics, 43 calendar indicators
/// (24 hour + 7 weekday + 12 month), 34 weather indexes, 11 TTI lags.
struct FeatureSchema {
    Case prediction_case = Case::short_term;
    std::vector<std::string> names;
    std::vector<ColumnGroup> groups;

    std::size_t size() const { return names.size(); }
};

inline constexpr std::size_t kFeatureCount = 93;
inline constexpr std::size_t kLagCount = 11;

/// Lag hours used for each prediction case. The short-term set reaches back
/// one hour; the long-term set never looks closer than one day.
const std::array<int, kLagCount>& lag_hours(Case c);

FeatureSchema feature_schema(Case c);

/// (hour 0-23, day-of-month 1-31, weekday 0-6 Sunday-first, month 1-12, year)
std::array<double, 5> calendar_features(const HourStamp& ts);

/// One-hot encoding over 24 hours, 7 weekdays, 12 months; exactly 3 ones.
std::array<double, 43> indicator_features(const HourStamp& ts);

/// Hourly TTI lookup for lag features.
using TtiSeries = std::unordered_map<std::int64_t, double>;

TtiSeries make_series(const std::vector<ingest::JoinedRecord>& records);

/// The 11 lagged TTI values for timestamp t. Throws MissingLag when a
/// required lag timestamp is absent.
std::array<double, kLagCount> lag_features(const TtiSeries& series, const HourStamp& t, Case c);

/// Row-aligned feature matrix, target vector, and column names.
struct DesignMatrix {
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    std::vector<std::string> names;
    std::vector<HourStamp> timestamps;

    Eigen::Index rows() const { return X.rows(); }
    Eigen::Index cols() const { return X.cols(); }

    DesignMatrix select_columns(const std::vector<std::size_t>& columns) const;
};

/// Builds the 93-column matrix from joined, sorted records. Rows are emitted
/// only where every lag timestamp resolves; the target is the row's own TTI.
/// Throws TooFewRows when fewer than 100 rows survive.
DesignMatrix assemble(const std::vector<ingest::JoinedRecord>& records, Case c);

inline constexpr std::size_t kDefaultExpansionCap = 20000;

/// Number of monomials of total degree <= degree over p variables,
/// including the constant: C(p + degree, degree).
std::size_t expanded_width(std::size_t p, int degree);

/// Monomial enumeration for polynomial expansion, in graded order with the
/// constant first (degree 2 over [a, b] gives 1, a, b, a^2, a*b, b^2).
/// Entry i is entry parent[i] multiplied by input variable var[i], so one
/// multiply fills each output cell.
struct ExpansionPlan {
    std::size_t input_width = 0;
    int degree = 1;
    std::vector<std::uint32_t> parent;  // parent[0] unused
    std::vector<std::uint32_t> var;     // var[0] unused

    std::size_t width() const { return parent.size(); }

    static ExpansionPlan build(std::size_t p, int degree,
                               std::size_t cap = kDefaultExpansionCap);

    /// x has input_width entries; out has width() entries.
    void apply_row(const double* x, double* out) const;

    Eigen::MatrixXd apply(const Eigen::MatrixXd& X) const;
    std::vector<std::string> names(const std::vector<std::string>& base) const;
};

/// All monomials of total degree <= degree (graded order, constant first).
/// Column names encode the monomial. Throws DegreeOutOfRange and
/// ExpansionTooLarge.
DesignMatrix polynomial_expand(const DesignMatrix& m, int degree,
                               std::size_t cap = kDefaultExpansionCap);

/// Per-column affine transform fitted by standardize().
struct Scaler {
    Eigen::VectorXd mean;
    Eigen::VectorXd stddev;        // sample (n-1) convention
    std::vector<bool> scaled;      // false for constant columns, passed through

    Eigen::MatrixXd apply(const Eigen::MatrixXd& X) const;
    Eigen::MatrixXd invert(const Eigen::MatrixXd& X) const;
};

/// Fits a scaler on the rows of X (all rows, or the given subset) and
/// returns it. Constant columns are recorded and passed through unscaled.
Scaler fit_scaler(const Eigen::MatrixXd& X);
Scaler fit_scaler(const Eigen::MatrixXd& X, const std::vector<std::size_t>& row_subset);

struct StandardizeResult {
    DesignMatrix matrix;
    Scaler scaler;
};

StandardizeResult standardize(const DesignMatrix& m);

/// Writes the matrix (schema header, one row per line, target last) as CSV.
void dump_matrix_csv(const DesignMatrix& m, std::ostream& out);

}  // namespace tti::features

#pragma once

#include <stdexcept>
#include <string>

namespace tti {

/// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---- ingest ----
struct MalformedRow final : Error {
    explicit MalformedRow(std::size_t line, const std::string& what)
        : Error("malformed row at line " + std::to_string(line) + ": " + what), line(line) {}
    std::size_t line;
};
struct NonHourAligned final : Error {
    explicit NonHourAligned(const std::string& ts)
        : Error("timestamp not hour-aligned: " + ts) {}
};
struct TtiBelowOne final : Error {
    explicit TtiBelowOne(double value)
        : Error("tti value below 1.0: " + std::to_string(value)) {}
};
struct DuplicateTimestamp final : Error {
    explicit DuplicateTimestamp(const std::string& ts)
        : Error("duplicate timestamp: " + ts) {}
};
struct MissingColumn final : Error {
    explicit MissingColumn(const std::string& name)
        : Error("missing required column: " + name), column(name) {}
    std::string column;
};
struct DuplicateDate final : Error {
    explicit DuplicateDate(const std::string& date)
        : Error("duplicate date: " + date) {}
};
struct EmptyIntersection final : Error {
    EmptyIntersection() : Error("no observation date matches any weather date") {}
};
struct InvalidRange final : Error {
    explicit InvalidRange(const std::string& what) : Error("invalid range: " + what) {}
};

// ---- describe ----
struct EmptyInput final : Error {
    explicit EmptyInput(const std::string& what) : Error("empty input: " + what) {}
};
struct IoFailure final : Error {
    explicit IoFailure(const std::string& path) : Error("i/o failure: " + path) {}
};

// ---- features ----
struct MissingLag final : Error {
    explicit MissingLag(const std::string& ts)
        : Error("required lag timestamp absent from series: " + ts) {}
};
struct TooFewRows final : Error {
    explicit TooFewRows(std::size_t n)
        : Error("too few assembled rows: " + std::to_string(n)) {}
};
struct DegreeOutOfRange final : Error {
    explicit DegreeOutOfRange(int degree)
        : Error("polynomial degree out of range 1..5: " + std::to_string(degree)) {}
};
struct ExpansionTooLarge final : Error {
    ExpansionTooLarge(std::size_t width, std::size_t cap)
        : Error("polynomial expansion width " + std::to_string(width) +
                " exceeds cap " + std::to_string(cap)) {}
};

// ---- regress ----
struct RankDeficient final : Error {
    RankDeficient() : Error("design matrix is rank deficient and fallback is disabled") {}
};
struct NotConverged final : Error {
    NotConverged(const std::string& solver, int iterations, double violation)
        : Error(solver + " failed to converge after " + std::to_string(iterations) +
                " iterations (max violation " + std::to_string(violation) + ")"),
          iterations(iterations), violation(violation) {}
    int iterations;
    double violation;
};
struct WidthMismatch final : Error {
    WidthMismatch(std::size_t got, std::size_t expected)
        : Error("prediction input width " + std::to_string(got) +
                " does not match training width " + std::to_string(expected)) {}
};

// ---- select ----
struct TargetTooLarge final : Error {
    TargetTooLarge(std::size_t target, std::size_t p)
        : Error("target size " + std::to_string(target) + " exceeds column count " +
                std::to_string(p)) {}
};
struct TargetZero final : Error {
    TargetZero() : Error("target size must be at least 1") {}
};

// ---- evaluate ----
struct ConstantTarget final : Error {
    ConstantTarget() : Error("target is constant; total sum of squares is zero") {}
};
struct LengthMismatch final : Error {
    LengthMismatch(std::size_t a, std::size_t b)
        : Error("length mismatch: " + std::to_string(a) + " vs " + std::to_string(b)) {}
};
struct InvalidK final : Error {
    InvalidK(int k, std::size_t n)
        : Error("invalid fold count k=" + std::to_string(k) + " for n=" + std::to_string(n)) {}
};
struct SampleTooLarge final : Error {
    SampleTooLarge(std::size_t sample, std::size_t n)
        : Error("sample size " + std::to_string(sample) + " exceeds row count " +
                std::to_string(n)) {}
};

// ---- experiment ----
struct MissingFamily final : Error {
    explicit MissingFamily(const std::string& family)
        : Error("results contain no usable cell for family: " + family) {}
};

}  // namespace tti

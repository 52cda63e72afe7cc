#include <algorithm>
#include <set>

#include "doctest.h"
#include "tti/errors.hpp"
#include "tti/rng.hpp"
#include "tti/select.hpp"

using namespace tti;
using features::DesignMatrix;

namespace {

DesignMatrix standardized_problem(Eigen::Index n, Eigen::Index p, std::uint64_t seed,
                                  const std::vector<std::pair<int, double>>& signal,
                                  double noise_sd) {
    Rng rng(seed);
    DesignMatrix m;
    m.X.resize(n, p);
    for (Eigen::Index r = 0; r < n; ++r)
        for (Eigen::Index c = 0; c < p; ++c) m.X(r, c) = rng.normal();
    for (Eigen::Index j = 0; j < p; ++j) {
        const double mean = m.X.col(j).mean();
        const double sd = std::sqrt((m.X.col(j).array() - mean).square().sum() /
                                    static_cast<double>(n - 1));
        m.X.col(j) = (m.X.col(j).array() - mean) / sd;
    }
    m.y.resize(n);
    for (Eigen::Index r = 0; r < n; ++r) {
        double v = 0;
        for (auto [col, coef] : signal) v += coef * m.X(r, col);
        m.y(r) = v + noise_sd * rng.normal();
    }
    m.names.reserve(static_cast<std::size_t>(p));
    for (Eigen::Index j = 0; j < p; ++j) m.names.push_back("x" + std::to_string(j));
    return m;
}

}  // namespace

TEST_CASE("rfe with target_size = p keeps everything") {
    auto m = standardized_problem(80, 6, 1, {{0, 2.0}}, 0.1);
    auto r = select::rfe(m, 6);
    CHECK(r.elimination_order.empty());
    CHECK(r.selected.size() == 6);
}

TEST_CASE("rfe target validation") {
    auto m = standardized_problem(80, 6, 2, {{0, 2.0}}, 0.1);
    CHECK_THROWS_AS(select::rfe(m, 0), TargetZero);
    CHECK_THROWS_AS(select::rfe(m, 7), TargetTooLarge);
}

TEST_CASE("rfe requires a standardized matrix") {
    auto m = standardized_problem(80, 4, 3, {{0, 2.0}}, 0.1);
    m.X.col(1) *= 50.0;
    CHECK_THROWS_AS(select::rfe(m, 2), Error);
}

TEST_CASE("rfe recovers a single informative column in >= 95% of seeded runs") {
    int hits = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto m = standardized_problem(150, 10, 100 + seed, {{1, 3.0}}, 0.01);
        auto r = select::rfe(m, 1);
        if (r.selected == std::vector<std::size_t>{1}) ++hits;
    }
    CHECK(hits >= 19);
}

TEST_CASE("duplicated informative column: exactly one survives to size 1") {
    auto m = standardized_problem(100, 5, 7, {{0, 2.0}}, 0.05);
    m.X.col(3) = m.X.col(0);  // exact duplicate of the informative column
    auto r = select::rfe(m, 1);
    REQUIRE(r.selected.size() == 1);
    const bool kept_one = r.selected[0] == 0 || r.selected[0] == 3;
    CHECK(kept_one);
}

TEST_CASE("rfe subsets are nested and deterministic") {
    auto m = standardized_problem(120, 12, 11, {{2, 1.5}, {7, -2.0}}, 0.2);
    auto r = select::rfe(m, 3);
    // Nested: size-k subset equals the size-(k+1) subset minus one column.
    for (std::size_t i = 1; i < r.per_size_subsets.size(); ++i) {
        const auto& larger = r.per_size_subsets[i - 1];
        const auto& smaller = r.per_size_subsets[i];
        REQUIRE(smaller.size() + 1 == larger.size());
        CHECK(std::includes(larger.begin(), larger.end(), smaller.begin(), smaller.end()));
    }
    auto again = select::rfe(m, 3);
    CHECK(again.elimination_order == r.elimination_order);
}

TEST_CASE("rfe ranking is invariant to pre-standardization feature scale") {
    Rng rng(13);
    Eigen::MatrixXd raw(150, 6);
    for (Eigen::Index r = 0; r < 150; ++r)
        for (Eigen::Index c = 0; c < 6; ++c) raw(r, c) = rng.normal();
    Eigen::VectorXd y(150);
    for (Eigen::Index r = 0; r < 150; ++r)
        y(r) = 2.0 * raw(r, 1) - raw(r, 4) + 0.3 * rng.normal();

    auto standardize = [](Eigen::MatrixXd X) {
        for (Eigen::Index j = 0; j < X.cols(); ++j) {
            const double mean = X.col(j).mean();
            const double sd = std::sqrt((X.col(j).array() - mean).square().sum() /
                                        static_cast<double>(X.rows() - 1));
            X.col(j) = (X.col(j).array() - mean) / sd;
        }
        return X;
    };

    DesignMatrix a;
    a.X = standardize(raw);
    a.y = y;
    for (int j = 0; j < 6; ++j) a.names.push_back("x" + std::to_string(j));

    Eigen::MatrixXd scaled = raw;
    scaled.col(2) *= 1000.0;  // positive rescale before standardization
    scaled.col(5) *= 0.001;
    DesignMatrix b;
    b.X = standardize(scaled);
    b.y = y;
    b.names = a.names;

    CHECK(select::rfe(a, 2).elimination_order == select::rfe(b, 2).elimination_order);
}

TEST_CASE("rfe_sweep shares one elimination pass") {
    auto m = standardized_problem(150, 15, 17, {{0, 1.0}, {5, 2.0}, {9, -1.0}}, 0.3);
    std::vector<std::size_t> sizes;
    for (std::size_t s = 1; s <= 10; ++s) sizes.push_back(s);
    auto sweep = select::rfe_sweep(m, sizes);
    REQUIRE(sweep.size() == sizes.size());
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        auto direct = select::rfe(m, sizes[i]);
        CHECK(sweep[i].selected == direct.selected);
        CHECK(sweep[i].elimination_order == direct.elimination_order);
    }
    // Nested across the sweep as well.
    for (std::size_t i = 1; i < sweep.size(); ++i) {
        CHECK(std::includes(sweep[i].selected.begin(), sweep[i].selected.end(),
                            sweep[i - 1].selected.begin(), sweep[i - 1].selected.end()));
    }
    auto single = select::rfe_sweep(m, {1});
    REQUIRE(single.size() == 1);
    CHECK(single[0].selected.size() == 1);
}

TEST_CASE("rfe recovers 3 informative among 17 noise columns in >= 90% of seeds") {
    int hits = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto m = standardized_problem(200, 20, 300 + seed,
                                      {{0, 1.5}, {1, -1.2}, {2, 0.9}}, 0.1);
        auto r = select::rfe(m, 3);
        std::set<std::size_t> got(r.selected.begin(), r.selected.end());
        if (got == std::set<std::size_t>{0, 1, 2}) ++hits;
    }
    CHECK(hits >= 18);
}

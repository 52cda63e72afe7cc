#include "tti/select.hpp"

#include <algorithm>
#include <cmath>

#include "tti/errors.hpp"
#include "tti/regress.hpp"

namespace tti::select {

namespace {

void assert_standardized(const features::DesignMatrix& m) {
    const double n = static_cast<double>(m.rows());
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        const double mean = m.X.col(j).mean();
        const double var = (m.X.col(j).array() - mean).square().sum() / (n - 1.0);
        if (var < 1e-12) continue;  // constant columns pass through unscaled
        if (std::abs(mean) > 1e-6 || std::abs(var - 1.0) > 1e-3)
            throw Error("rfe requires a standardized matrix; column " + m.names[
                            static_cast<std::size_t>(j)] + " is not standardized");
    }
}

/// Runs elimination until `stop_size` columns remain; returns columns in
/// removal order. The order does not depend on stop_size, so one pass serves
/// every larger target.
std::vector<std::size_t> elimination_pass(const features::DesignMatrix& m,
                                          std::size_t stop_size) {
    std::vector<std::size_t> survivors(static_cast<std::size_t>(m.cols()));
    for (std::size_t j = 0; j < survivors.size(); ++j) survivors[j] = j;

    std::vector<std::size_t> removed;
    Eigen::MatrixXd X = m.X;
    while (survivors.size() > stop_size) {
        auto fit = regress::solve_linear_family(X, m.y, 0.0, true);
        // Smallest |coefficient| loses; ties remove the highest column index.
        Eigen::Index worst = 0;
        for (Eigen::Index j = 1; j < fit.weights.size(); ++j)
            if (std::abs(fit.weights(j)) <= std::abs(fit.weights(worst))) worst = j;

        removed.push_back(survivors[static_cast<std::size_t>(worst)]);
        survivors.erase(survivors.begin() + worst);
        for (Eigen::Index j = worst; j + 1 < X.cols(); ++j) X.col(j) = X.col(j + 1);
        X.conservativeResize(Eigen::NoChange, X.cols() - 1);
    }
    return removed;
}

RfeResult build_result(const features::DesignMatrix& m,
                       const std::vector<std::size_t>& removal_order,
                       std::size_t target_size) {
    const std::size_t p = static_cast<std::size_t>(m.cols());
    RfeResult out;
    out.target_size = target_size;
    out.elimination_order.assign(removal_order.begin(),
                                 removal_order.begin() +
                                     static_cast<std::ptrdiff_t>(p - target_size));

    std::vector<bool> alive(p, true);
    out.per_size_subsets.reserve(p - target_size + 1);
    auto snapshot = [&] {
        std::vector<std::size_t> subset;
        for (std::size_t j = 0; j < p; ++j)
            if (alive[j]) subset.push_back(j);
        out.per_size_subsets.push_back(std::move(subset));
    };
    snapshot();  // size p
    for (std::size_t i = 0; i < p - target_size; ++i) {
        alive[removal_order[i]] = false;
        snapshot();
    }
    out.selected = out.per_size_subsets.back();
    return out;
}

}  // namespace

const std::vector<std::size_t>& RfeResult::subset_of_size(std::size_t size) const {
    const std::size_t p = per_size_subsets.front().size();
    if (size < target_size || size > p)
        throw Error("no subset of size " + std::to_string(size) + " in this result");
    return per_size_subsets[p - size];
}

RfeResult rfe(const features::DesignMatrix& m, std::size_t target_size) {
    if (target_size == 0) throw TargetZero();
    if (target_size > static_cast<std::size_t>(m.cols()))
        throw TargetTooLarge(target_size, static_cast<std::size_t>(m.cols()));
    assert_standardized(m);
    return build_result(m, elimination_pass(m, target_size), target_size);
}

std::vector<RfeResult> rfe_sweep(const features::DesignMatrix& m,
                                 const std::vector<std::size_t>& sizes) {
    if (sizes.empty()) return {};
    std::size_t smallest = sizes.front();
    for (std::size_t s : sizes) {
        if (s == 0) throw TargetZero();
        if (s > static_cast<std::size_t>(m.cols()))
            throw TargetTooLarge(s, static_cast<std::size_t>(m.cols()));
        smallest = std::min(smallest, s);
    }
    assert_standardized(m);
    const auto removal_order = elimination_pass(m, smallest);
    std::vector<RfeResult> out;
    out.reserve(sizes.size());
    for (std::size_t s : sizes) out.push_back(build_result(m, removal_order, s));
    return out;
}

}  // namespace tti::select

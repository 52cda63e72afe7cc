#pragma once

#include <cstddef>
#include <vector>

#include "tti/features.hpp"

namespace tti::select {

/// Result of recursive feature elimination down to target_size columns.
/// Subsets are nested: the size-k subset is the size-(k+1) subset minus the
/// column eliminated at that step.
struct RfeResult {
    std::size_t target_size = 0;
    std::vector<std::size_t> selected;           // surviving columns, ascending
    std::vector<std::size_t> elimination_order;  // columns in removal order

    /// Subsets for sizes p down to target_size (all ascending).
    std::vector<std::vector<std::size_t>> per_size_subsets;

    /// The subset with `size` columns (target_size <= size <= p).
    const std::vector<std::size_t>& subset_of_size(std::size_t size) const;
};

/// Backward elimination with a linear-regression external estimator (ridge
/// alpha=1e-10 fallback on rank deficiency): repeatedly refits on surviving
/// columns and removes the smallest |coefficient| (ties remove the highest
/// column index). X must be standardized. Throws TargetZero, TargetTooLarge.
RfeResult rfe(const features::DesignMatrix& m, std::size_t target_size);

/// All requested subset sizes from one elimination pass; element i corresponds
/// to sizes[i] and equals rfe(m, sizes[i]) exactly.
std::vector<RfeResult> rfe_sweep(const features::DesignMatrix& m,
                                 const std::vector<std::size_t>& sizes);

}  // namespace tti::select

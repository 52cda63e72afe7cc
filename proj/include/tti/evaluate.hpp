#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tti/features.hpp"
#include "tti/regress.hpp"

namespace tti::evaluate {

/// Coefficient of determination, 1 - SS_res/SS_tot. Throws LengthMismatch
/// and ConstantTarget (SS_tot = 0).
double r2_score(const Eigen::VectorXd& y, const Eigen::VectorXd& f);

/// k disjoint index sets covering 0..n-1, sizes differing by at most one,
/// shuffled by seed. Throws InvalidK.
std::vector<std::vector<std::size_t>> kfold_split(std::size_t n, int k, std::uint64_t seed);

struct CvScore {
    std::vector<double> per_fold;
    double mean = 0.0;
    std::uint64_t sample_seed = 0;
    std::size_t n_sampled = 0;
    std::vector<std::string> warnings;
};

/// k-fold cross-validation of one spec. Standardization statistics are
/// computed on the training folds only and applied to the held-out fold.
/// Fit errors propagate tagged with the fold index.
CvScore cross_validate(const regress::ModelSpec& spec, const Eigen::MatrixXd& X,
                       const Eigen::VectorXd& y, int k, std::uint64_t seed);

struct RepeatedCvOptions {
    std::size_t sample_size = 1000;
    int repeats = 10;
    int k = 5;
    std::uint64_t seed = 0;
};

struct RepeatedCvResult {
    double mean_score = 0.0;
    std::vector<double> per_repeat;
    std::vector<CvScore> repeats;
    double fit_seconds = 0.0;  // time spent in this spec's own solves
};

/// The repeated 1000-point sampling protocol: each repeat draws sample_size
/// rows by seeded permutation without replacement, cross-validates, and the
/// final score averages the repeats. Throws SampleTooLarge.
RepeatedCvResult repeated_sampled_cv(const features::DesignMatrix& m,
                                     const regress::ModelSpec& spec,
                                     const RepeatedCvOptions& opts);

/// Evaluates many specs over shared samples, folds, and solver work
/// (Gram/kernel matrices, tree presorting). Element i equals
/// repeated_sampled_cv of specs[i] exactly. When expand_degree >= 1 each
/// sampled block is polynomially expanded before cross-validation, which
/// equals expanding the whole matrix first.
struct SpecOutcome {
    std::optional<RepeatedCvResult> result;  // empty on solver failure
    std::string error;
};

std::vector<SpecOutcome> repeated_sampled_cv_multi(
    const features::DesignMatrix& m, std::span<const regress::ModelSpec> specs,
    const RepeatedCvOptions& opts, int expand_degree = 0,
    std::size_t expansion_cap = features::kDefaultExpansionCap);

/// One repeat of the protocol for a list of specs; building block for the
/// grid runner's work units. Scores land in per-spec slots for repeat
/// `repeat_index`.
struct RepeatOutcome {
    std::vector<std::optional<CvScore>> scores;  // one per spec
    std::vector<std::string> errors;             // parallel to scores
    std::vector<double> fit_seconds;
};

RepeatOutcome evaluate_repeat(const features::DesignMatrix& m,
                              std::span<const regress::ModelSpec> specs,
                              const RepeatedCvOptions& opts, int repeat_index,
                              int expand_degree = 0,
                              std::size_t expansion_cap = features::kDefaultExpansionCap);

}  // namespace tti::evaluate

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

namespace tti::regress {

enum class Family { linear, ridge, lasso, svr, tree };
enum class Kernel { linear, rbf };

const char* family_name(Family f);
Family family_from_name(const std::string& name);

/// A regressor family with its hyperparameters.
struct ModelSpec {
    Family family = Family::linear;
    double alpha = 0.0;       // ridge / lasso penalty
    double C = 1.0;           // svr box constraint
    double epsilon = 0.1;     // svr tube half-width
    Kernel kernel = Kernel::rbf;
    double gamma = 0.0;       // rbf width; 0 = 1 / (p * mean column variance)
    int max_depth = 1;        // tree
    int min_leaf = 1;         // tree
    double tol = 1e-7;        // lasso coordinate-descent stop, svr uses 1e-3
    int max_iter = 0;         // 0 = solver default

    static ModelSpec linear();
    static ModelSpec ridge(double alpha);
    static ModelSpec lasso(double alpha, double tol = 1e-7, int max_iter = 0);
    static ModelSpec svr(double C, double epsilon, Kernel kernel = Kernel::rbf,
                         double gamma = 0.0);
    static ModelSpec tree(int max_depth, int min_leaf = 1);

    /// Throws tti::Error on out-of-range parameters or unknown family.
    void validate() const;

    /// Short human-readable parameter list, e.g. "alpha=1.0".
    std::string param_label() const;

    nlohmann::json params_json() const;
};

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;  // mean target of the node's training rows
    int count = 0;
};

/// A trained model. Only the state for its family is populated.
struct FittedModel {
    ModelSpec spec;
    Eigen::Index n_columns = 0;

    // linear / ridge / lasso
    Eigen::VectorXd weights;
    double intercept = 0.0;
    bool ridge_fallback = false;  // rank-deficient OLS fell back to alpha=1e-10

    // svr
    Eigen::MatrixXd support_vectors;  // rows with nonzero dual coefficient
    Eigen::VectorXd dual_coef;
    double bias = 0.0;
    double gamma_used = 0.0;

    // tree
    std::vector<TreeNode> nodes;  // nodes[0] is the root

    Eigen::VectorXd predict(const Eigen::MatrixXd& X) const;

    nlohmann::json to_json() const;
    static FittedModel from_json(const nlohmann::json& j);

private:
    nlohmann::json params_json_full() const;
};

// ---------------------------------------------------------------------------
// Model fitting
// ---------------------------------------------------------------------------

/// Ordinary least squares with intercept. Rank-deficient designs fall back to
/// a ridge solve with alpha=1e-10 (flagged on the model) unless
/// allow_fallback is false, in which case RankDeficient is thrown.
FittedModel fit_linear(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                       bool allow_fallback = true);

/// Ridge with unpenalized intercept; alpha = 0 reduces to the OLS path.
FittedModel fit_ridge(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double alpha);

/// Lasso on (1/2n)||y - Xw - b||^2 + alpha*||w||_1 by coordinate descent in
/// fixed column order. Columns must be standardized (sample variance within
/// 10% of 1) or constant. Throws NotConverged past max_iter sweeps.
FittedModel fit_lasso(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double alpha,
                      double tol = 1e-7, int max_iter = 0);

/// Epsilon-insensitive SVR solved in the dual by SMO with second-order
/// working-set selection, to KKT tolerance 1e-3.
FittedModel fit_svr(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double C,
                    double epsilon, Kernel kernel = Kernel::rbf, double gamma = 0.0,
                    int max_iter = 0);

/// CART regression tree: greedy variance-reduction splits, midpoint
/// thresholds, ties broken by lowest feature index then lowest threshold.
FittedModel fit_tree(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, int max_depth,
                     int min_leaf = 1);

FittedModel fit(const ModelSpec& spec, const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

/// Truncates a fitted tree to a smaller depth. Greedy splits do not depend on
/// max_depth, so this equals refitting with the smaller depth.
FittedModel truncate_tree(const FittedModel& tree, int max_depth);

// ---------------------------------------------------------------------------
// Solver internals, shared with the cross-validation fold evaluator
// ---------------------------------------------------------------------------

/// Resolves gamma = 1/(p * mean column variance) when gamma == 0.
double resolve_gamma(const Eigen::MatrixXd& X, double gamma);

struct LinearSolveResult {
    Eigen::VectorXd weights;
    double intercept = 0.0;
    bool ridge_fallback = false;
};

/// Linear-family solve (centering handled internally). Used by the fitting
/// API and by recursive feature elimination.
LinearSolveResult solve_linear_family(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                      double alpha, bool allow_fallback);

struct SvrOptions {
    double C = 1.0;
    double epsilon = 0.1;
    double tol = 1e-3;
    int max_iter = 1000000;
};

struct SvrDualSolution {
    Eigen::VectorXd beta;  // one dual coefficient per training row, in [-C, C]
    double bias = 0.0;
    int iterations = 0;
};

/// SMO on a precomputed kernel matrix.
SvrDualSolution solve_svr_dual(const Eigen::MatrixXd& K, const Eigen::VectorXd& y,
                               const SvrOptions& opts);

/// Kernel matrix between row blocks given the corresponding Gram blocks
/// (rbf distances derive from Gram entries; linear kernel is the Gram).
Eigen::MatrixXd kernel_from_gram(const Eigen::MatrixXd& gram_block,
                                 const Eigen::VectorXd& sq_norm_rows,
                                 const Eigen::VectorXd& sq_norm_cols, Kernel kernel,
                                 double gamma);

struct LassoOptions {
    double alpha = 0.1;
    double tol = 1e-7;
    int max_iter = 2000;  // full sweeps
};

struct LassoSolution {
    Eigen::VectorXd weights;
    double intercept = 0.0;
    int sweeps = 0;
};

/// Accepts column blocks of larger matrices without copying.
using ConstMatrixRef = Eigen::Ref<const Eigen::MatrixXd, 0, Eigen::OuterStride<>>;

LassoSolution solve_lasso(const ConstMatrixRef& X, const Eigen::VectorXd& y,
                          const LassoOptions& opts);

struct TreeOptions {
    int max_depth = 1;
    int min_leaf = 1;
};

/// Builds a CART tree over the rows listed in `order`. `order` holds, for
/// each feature, the included row indices sorted ascending by that feature's
/// value (stable, so ties keep row order); layout is order[f * n_included + i].
std::vector<TreeNode> build_tree(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                 const std::vector<std::int32_t>& order,
                                 std::size_t n_included, const TreeOptions& opts);

/// Stable argsort of every column: the `order` input expected by build_tree
/// when all rows participate.
std::vector<std::int32_t> sort_columns(const Eigen::MatrixXd& X);

double predict_tree_row(const std::vector<TreeNode>& nodes, const double* x,
                        int max_depth = -1);

}  // namespace tti::regress

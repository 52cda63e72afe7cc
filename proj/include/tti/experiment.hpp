#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "tti/evaluate.hpp"
#include "tti/features.hpp"
#include "tti/regress.hpp"
#include "tti/select.hpp"

namespace tti::experiment {

/// Grid-search configuration: model families with parameter ranges, subset
/// sizes, polynomial degrees, and the sampling protocol.
struct GridConfig {
    features::Case prediction_case = features::Case::short_term;

    std::vector<double> ridge_alphas{0.01, 0.1, 0.19, 0.5, 1.0, 1.9, 5.0, 10.0};
    std::vector<double> lasso_alphas{0.01, 0.1, 0.19, 0.5, 1.0, 1.9, 5.0, 10.0};
    bool include_linear = true;
    std::vector<double> svr_C{0.5, 1.0, 1.6, 2.8, 5.0};
    std::vector<double> svr_epsilon{0.05, 0.1, 0.2};
    regress::Kernel svr_kernel = regress::Kernel::rbf;
    std::vector<int> tree_depths{1, 2, 3, 5, 8};
    int tree_min_leaf = 5;

    std::vector<int> sizes;    // subset sizes, default 1..24
    std::vector<int> degrees;  // polynomial degrees, default 1..5

    std::size_t sample_size = 1000;
    int repeats = 10;
    int k = 5;
    std::uint64_t seed = 1;
    std::size_t expansion_cap = features::kDefaultExpansionCap;

    double lasso_tol = 1e-6;  // grid cells trade a little tolerance for speed
    int lasso_max_iter = 1000;
    int svr_max_iter = 400000;
    int threads = 0;  // 0 = hardware concurrency

    static GridConfig defaults(features::Case c);

    nlohmann::json to_json() const;
    static GridConfig from_json(const nlohmann::json& j);

    /// The family/parameter combinations in enumeration order.
    std::vector<regress::ModelSpec> spec_grid() const;
};

enum class CellStatus { ok, skipped, failed };

struct ExperimentResult {
    features::Case prediction_case = features::Case::short_term;
    regress::ModelSpec spec;
    int n_features = 0;
    int degree = 1;
    CellStatus status = CellStatus::ok;
    double mean_score = 0.0;
    std::vector<double> per_repeat;
    double seconds = 0.0;
    std::string note;  // skip or failure reason
};

/// Runs the full grid over the 93-column matrix: one RFE sweep feeds every
/// cell; each (size, degree) group shares samples, folds, and solver caches
/// across the family/parameter grid. Cells whose polynomial expansion would
/// exceed the cap are recorded as skipped; a failed cell never aborts the
/// grid. Deterministic for a fixed seed regardless of thread count.
std::vector<ExperimentResult> run_grid(const features::DesignMatrix& matrix93,
                                       const GridConfig& config);

/// Derived seed for one (case, size, degree) group; exposed so single-cell
/// evaluations can reproduce grid scores exactly.
std::uint64_t group_seed(std::uint64_t master, features::Case c, int n_features, int degree);

struct SummaryRow {
    regress::Family family = regress::Family::linear;
    std::string params;
    int n_features = 0;
    int degree = 1;
    double score = 0.0;
};

/// Best cell per family, rows sorted descending by score; ties prefer fewer
/// variables, then lower degree. Throws MissingFamily when a family has no
/// usable cell.
std::vector<SummaryRow> best_per_model(const std::vector<ExperimentResult>& results);

void write_results_csv(const std::vector<ExperimentResult>& results, std::ostream& out);
std::vector<ExperimentResult> read_results_csv(std::istream& in);

void write_summary_csv(const std::vector<SummaryRow>& rows, std::ostream& out);
void write_summary_markdown(const std::vector<SummaryRow>& rows, std::ostream& out);

}  // namespace tti::experiment

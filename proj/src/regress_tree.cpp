#include <algorithm>
#include <limits>
#include <numeric>

#include "tti/errors.hpp"
#include "tti/regress.hpp"

namespace tti::regress {

namespace {

struct PendingNode {
    int index;         // position in the output node vector
    std::size_t begin;  // segment [begin, end) within every feature's order array
    std::size_t end;
    int depth;
};

struct BestSplit {
    bool found = false;
    Eigen::Index feature = 0;
    double threshold = 0;
    std::size_t n_left = 0;
    double score = -std::numeric_limits<double>::infinity();
};

}  // namespace

std::vector<std::int32_t> sort_columns(const Eigen::MatrixXd& X) {
    const std::size_t n = static_cast<std::size_t>(X.rows());
    const std::size_t p = static_cast<std::size_t>(X.cols());
    std::vector<std::int32_t> order(n * p);
    for (std::size_t f = 0; f < p; ++f) {
        std::int32_t* col = order.data() + f * n;
        std::iota(col, col + n, 0);
        const double* values = X.col(static_cast<Eigen::Index>(f)).data();
        std::stable_sort(col, col + n, [values](std::int32_t a, std::int32_t b) {
            return values[a] < values[b];
        });
    }
    return order;
}

std::vector<TreeNode> build_tree(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                 const std::vector<std::int32_t>& order,
                                 std::size_t n_included, const TreeOptions& opts) {
    const std::size_t p = static_cast<std::size_t>(X.cols());
    if (opts.max_depth < 1) throw Error("tree requires max_depth >= 1");
    if (opts.min_leaf < 1) throw Error("tree requires min_leaf >= 1");
    if (order.size() != p * n_included) throw Error("tree order array has wrong size");
    if (n_included == 0) throw Error("tree requires at least one row");

    std::vector<std::int32_t> work(order);
    std::vector<std::int32_t> scratch(n_included);
    std::vector<TreeNode> nodes;
    std::vector<PendingNode> stack;

    nodes.push_back({});
    stack.push_back({0, 0, n_included, 0});

    while (!stack.empty()) {
        const PendingNode cur = stack.back();
        stack.pop_back();
        const std::size_t n_node = cur.end - cur.begin;
        const std::int32_t* seg0 = work.data() + cur.begin;  // feature-0 view of the rows

        double sum = 0;
        bool constant = true;
        const double first_y = y(seg0[0]);
        for (std::size_t i = 0; i < n_node; ++i) {
            const double v = y(seg0[i]);
            sum += v;
            constant = constant && v == first_y;
        }
        TreeNode& node = nodes[static_cast<std::size_t>(cur.index)];
        node.value = sum / static_cast<double>(n_node);
        node.count = static_cast<int>(n_node);

        if (cur.depth >= opts.max_depth || constant ||
            n_node < 2 * static_cast<std::size_t>(opts.min_leaf)) {
            continue;  // leaf
        }

        // Greedy split: maximize sum_L^2/n_L + sum_R^2/n_R, which orders
        // candidates identically to minimizing SSE_L + SSE_R. Ascending
        // feature/threshold scan with a strict comparison realizes the
        // lowest-feature, lowest-threshold tie-break.
        BestSplit best;
        const double parent_score = sum * sum / static_cast<double>(n_node);
        const std::size_t min_leaf = static_cast<std::size_t>(opts.min_leaf);
        for (std::size_t f = 0; f < p; ++f) {
            const std::int32_t* seg = work.data() + f * n_included + cur.begin;
            const double* values = X.col(static_cast<Eigen::Index>(f)).data();
            double sum_left = 0;
            for (std::size_t i = 0; i + 1 < n_node; ++i) {
                sum_left += y(seg[i]);
                const double v = values[seg[i]];
                const double v_next = values[seg[i + 1]];
                if (v == v_next) continue;
                const std::size_t n_left = i + 1;
                const std::size_t n_right = n_node - n_left;
                if (n_left < min_leaf || n_right < min_leaf) continue;
                const double sum_right = sum - sum_left;
                const double score = sum_left * sum_left / static_cast<double>(n_left) +
                                     sum_right * sum_right / static_cast<double>(n_right);
                if (score > best.score) {
                    best.found = true;
                    best.score = score;
                    best.feature = static_cast<Eigen::Index>(f);
                    best.threshold = 0.5 * (v + v_next);
                    best.n_left = n_left;
                }
            }
        }
        if (!best.found || !(best.score > parent_score)) continue;

        // Stable partition of every feature's segment by the winning split.
        const double* split_values = X.col(best.feature).data();
        for (std::size_t f = 0; f < p; ++f) {
            std::int32_t* seg = work.data() + f * n_included + cur.begin;
            std::size_t left_pos = 0;
            std::size_t right_pos = 0;
            for (std::size_t i = 0; i < n_node; ++i) {
                const std::int32_t row = seg[i];
                if (split_values[row] <= best.threshold)
                    seg[left_pos++] = row;
                else
                    scratch[right_pos++] = row;
            }
            std::copy(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(right_pos),
                      seg + left_pos);
        }

        node.feature = static_cast<int>(best.feature);
        node.threshold = best.threshold;
        node.left = static_cast<int>(nodes.size());
        node.right = node.left + 1;
        nodes.push_back({});
        nodes.push_back({});
        // Right pushed first so the left child is processed (and numbered) next.
        stack.push_back({nodes[static_cast<std::size_t>(cur.index)].right,
                         cur.begin + best.n_left, cur.end, cur.depth + 1});
        stack.push_back({nodes[static_cast<std::size_t>(cur.index)].left, cur.begin,
                         cur.begin + best.n_left, cur.depth + 1});
    }
    return nodes;
}

double predict_tree_row(const std::vector<TreeNode>& nodes, const double* x, int max_depth) {
    int idx = 0;
    int depth = 0;
    while (nodes[static_cast<std::size_t>(idx)].feature >= 0 &&
           (max_depth < 0 || depth < max_depth)) {
        const TreeNode& n = nodes[static_cast<std::size_t>(idx)];
        idx = x[n.feature] <= n.threshold ? n.left : n.right;
        ++depth;
    }
    return nodes[static_cast<std::size_t>(idx)].value;
}

FittedModel fit_tree(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, int max_depth,
                     int min_leaf) {
    if (X.rows() != y.size())
        throw LengthMismatch(static_cast<std::size_t>(X.rows()),
                             static_cast<std::size_t>(y.size()));
    TreeOptions opts{max_depth, min_leaf};
    const auto order = sort_columns(X);
    FittedModel m;
    m.spec = ModelSpec::tree(max_depth, min_leaf);
    m.n_columns = X.cols();
    m.nodes = build_tree(X, y, order, static_cast<std::size_t>(X.rows()), opts);
    return m;
}

namespace {

int copy_truncated(const std::vector<TreeNode>& src, int src_idx, int depth, int max_depth,
                   std::vector<TreeNode>& dst) {
    const TreeNode& n = src[static_cast<std::size_t>(src_idx)];
    const int out_idx = static_cast<int>(dst.size());
    dst.push_back(n);
    if (n.feature < 0 || depth >= max_depth) {
        TreeNode& leaf = dst[static_cast<std::size_t>(out_idx)];
        leaf.feature = -1;
        leaf.left = leaf.right = -1;
        return out_idx;
    }
    dst[static_cast<std::size_t>(out_idx)].left =
        copy_truncated(src, n.left, depth + 1, max_depth, dst);
    dst[static_cast<std::size_t>(out_idx)].right =
        copy_truncated(src, n.right, depth + 1, max_depth, dst);
    return out_idx;
}

}  // namespace

FittedModel truncate_tree(const FittedModel& tree, int max_depth) {
    if (tree.spec.family != Family::tree) throw Error("truncate_tree requires a tree model");
    if (max_depth < 1) throw Error("tree requires max_depth >= 1");
    FittedModel out;
    out.spec = ModelSpec::tree(max_depth, tree.spec.min_leaf);
    out.n_columns = tree.n_columns;
    copy_truncated(tree.nodes, 0, 0, max_depth, out.nodes);
    return out;
}

}  // namespace tti::regress

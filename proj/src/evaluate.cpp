#include "tti/evaluate.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <chrono>
#include <cmath>

#include "tti/errors.hpp"
#include "tti/rng.hpp"

namespace tti::evaluate {

namespace {

constexpr std::uint64_t kSampleTag = 0x53414d50;  // "SAMP"
constexpr std::uint64_t kFoldTag = 0x464f4c44;    // "FOLD"
constexpr double kFallbackAlpha = 1e-10;

double now_seconds() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

}  // namespace

double r2_score(const Eigen::VectorXd& y, const Eigen::VectorXd& f) {
    if (y.size() != f.size() || y.size() == 0)
        throw LengthMismatch(static_cast<std::size_t>(y.size()),
                             static_cast<std::size_t>(f.size()));
    const double mean = y.mean();
    const double ss_tot = (y.array() - mean).square().sum();
    if (ss_tot == 0.0) throw ConstantTarget();
    const double ss_res = (y - f).squaredNorm();
    return 1.0 - ss_res / ss_tot;
}

std::vector<std::vector<std::size_t>> kfold_split(std::size_t n, int k, std::uint64_t seed) {
    if (k < 2 || n < static_cast<std::size_t>(k)) throw InvalidK(k, n);
    const auto perm = random_permutation(n, seed);
    std::vector<std::vector<std::size_t>> folds(static_cast<std::size_t>(k));
    const std::size_t base = n / static_cast<std::size_t>(k);
    const std::size_t extra = n % static_cast<std::size_t>(k);
    std::size_t pos = 0;
    for (std::size_t i = 0; i < static_cast<std::size_t>(k); ++i) {
        const std::size_t size = base + (i < extra ? 1 : 0);
        folds[i].assign(perm.begin() + static_cast<std::ptrdiff_t>(pos),
                        perm.begin() + static_cast<std::ptrdiff_t>(pos + size));
        std::sort(folds[i].begin(), folds[i].end());
        pos += size;
    }
    return folds;
}

namespace {

// ---------------------------------------------------------------------------
// Shared fold evaluation
// ---------------------------------------------------------------------------

struct SpecState {
    const regress::ModelSpec* spec = nullptr;
    std::vector<double> per_fold;
    std::vector<std::string> warnings;
    std::string error;  // non-empty once the spec has failed
    double seconds = 0.0;
};

// Everything shared between specs within one fold.
struct FoldWorkspace {
    FoldWorkspace(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) : X(X), y(y) {}

    const Eigen::MatrixXd& X;
    const Eigen::VectorXd& y;
    std::vector<std::size_t> train_idx;
    std::vector<std::size_t> val_idx;

    Eigen::VectorXd y_train, y_val;
    double y_train_mean = 0.0;

    // standardized stacked matrix: rows 0..n_train-1 train, then validation
    bool z_built = false;
    Eigen::MatrixXd Z;

    // Z Z' of the stacked matrix (train-train block top-left)
    bool gram_built = false;
    Eigen::MatrixXd G;

    // double-centered blocks for the dual ridge solve
    bool centered_built = false;
    Eigen::MatrixXd Gc_tt;
    Eigen::MatrixXd Gc_vt;
    Eigen::VectorXd yc_train;

    // primal normal equations (w <= n_train)
    bool primal_built = false;
    Eigen::MatrixXd A0;
    Eigen::VectorXd b0;
    Eigen::VectorXd col_mean;

    // svr kernel blocks, keyed by resolved gamma (linear kernel: gamma = -1)
    double kernel_gamma = std::numeric_limits<double>::quiet_NaN();
    Eigen::MatrixXd K_tt, K_vt;
    double auto_gamma = std::numeric_limits<double>::quiet_NaN();

    // tree presorting
    const std::vector<std::int32_t>* global_order = nullptr;  // all-rows presort
    bool tree_order_built = false;
    std::vector<std::int32_t> tree_order;  // train rows only, global indices

    std::size_t n_train() const { return train_idx.size(); }
    std::size_t n_val() const { return val_idx.size(); }

    void build_targets() {
        y_train.resize(static_cast<Eigen::Index>(n_train()));
        y_val.resize(static_cast<Eigen::Index>(n_val()));
        for (std::size_t i = 0; i < n_train(); ++i)
            y_train(static_cast<Eigen::Index>(i)) = y(static_cast<Eigen::Index>(train_idx[i]));
        for (std::size_t i = 0; i < n_val(); ++i)
            y_val(static_cast<Eigen::Index>(i)) = y(static_cast<Eigen::Index>(val_idx[i]));
        y_train_mean = y_train.mean();
    }

    void build_z() {
        if (z_built) return;
        const features::Scaler scaler = features::fit_scaler(X, train_idx);
        const Eigen::Index w = X.cols();
        const Eigen::Index nt = static_cast<Eigen::Index>(n_train());
        const Eigen::Index nv = static_cast<Eigen::Index>(n_val());
        Z.resize(nt + nv, w);
        for (Eigen::Index j = 0; j < w; ++j) {
            const double* src = X.col(j).data();
            double* dst = Z.col(j).data();
            const bool scale = scaler.scaled[static_cast<std::size_t>(j)];
            const double m = scaler.mean(j);
            const double inv = scale ? 1.0 / scaler.stddev(j) : 1.0;
            for (std::size_t i = 0; i < train_idx.size(); ++i)
                dst[i] = scale ? (src[train_idx[i]] - m) * inv : src[train_idx[i]];
            for (std::size_t i = 0; i < val_idx.size(); ++i)
                dst[static_cast<std::size_t>(nt) + i] =
                    scale ? (src[val_idx[i]] - m) * inv : src[val_idx[i]];
        }
        z_built = true;
    }

    void build_gram() {
        if (gram_built) return;
        build_z();
        const Eigen::Index n = Z.rows();
        G.resize(n, n);
        G.setZero();
        G.selfadjointView<Eigen::Lower>().rankUpdate(Z);
        G.triangularView<Eigen::Upper>() = G.transpose();
        gram_built = true;
    }

    void build_centered() {
        if (centered_built) return;
        build_gram();
        const Eigen::Index nt = static_cast<Eigen::Index>(n_train());
        const Eigen::Index nv = static_cast<Eigen::Index>(n_val());
        const Eigen::VectorXd a = G.leftCols(nt).rowwise().mean();
        const double s = a.head(nt).mean();
        Gc_tt = G.topLeftCorner(nt, nt);
        Gc_tt.colwise() -= a.head(nt);
        Gc_tt.rowwise() -= a.head(nt).transpose();
        Gc_tt.array() += s;
        Gc_vt = G.bottomLeftCorner(nv, nt);
        Gc_vt.colwise() -= a.tail(nv);
        Gc_vt.rowwise() -= a.head(nt).transpose();
        Gc_vt.array() += s;
        yc_train = y_train.array() - y_train_mean;
        centered_built = true;
    }

    void build_primal() {
        if (primal_built) return;
        build_z();
        const Eigen::Index nt = static_cast<Eigen::Index>(n_train());
        const auto Zt = Z.topRows(nt);
        const double n = static_cast<double>(nt);
        col_mean = Zt.colwise().mean();
        A0.resize(Z.cols(), Z.cols());
        A0.setZero();
        A0.selfadjointView<Eigen::Lower>().rankUpdate(Zt.transpose());
        A0.triangularView<Eigen::Upper>() = A0.transpose();
        A0.noalias() -= (n * col_mean) * col_mean.transpose();
        b0 = Zt.transpose() * y_train - (n * y_train_mean) * col_mean;
        primal_built = true;
    }

    double resolve_auto_gamma() {
        if (!std::isnan(auto_gamma)) return auto_gamma;
        build_z();
        auto_gamma = regress::resolve_gamma(Z.topRows(static_cast<Eigen::Index>(n_train())), 0.0);
        return auto_gamma;
    }

    void build_kernel(regress::Kernel kernel, double gamma) {
        const double key = kernel == regress::Kernel::linear ? -1.0 : gamma;
        if (!std::isnan(kernel_gamma) && kernel_gamma == key) return;
        build_gram();
        const Eigen::Index nt = static_cast<Eigen::Index>(n_train());
        const Eigen::Index nv = static_cast<Eigen::Index>(n_val());
        const Eigen::VectorXd sq = G.diagonal();
        K_tt = regress::kernel_from_gram(G.topLeftCorner(nt, nt), sq.head(nt), sq.head(nt),
                                         kernel, gamma);
        K_vt = regress::kernel_from_gram(G.bottomLeftCorner(nv, nt), sq.tail(nv), sq.head(nt),
                                         kernel, gamma);
        kernel_gamma = key;
    }

    void build_tree_order() {
        if (tree_order_built) return;
        const std::size_t n_all = static_cast<std::size_t>(X.rows());
        const std::size_t p = static_cast<std::size_t>(X.cols());
        std::vector<std::uint8_t> in_train(n_all, 0);
        for (std::size_t r : train_idx) in_train[r] = 1;
        tree_order.resize(p * n_train());
        const std::int32_t* src = global_order->data();
        std::int32_t* dst = tree_order.data();
        for (std::size_t f = 0; f < p; ++f) {
            const std::int32_t* col = src + f * n_all;
            std::int32_t* out = dst + f * n_train();
            std::size_t pos = 0;
            for (std::size_t i = 0; i < n_all; ++i) {
                const std::int32_t row = col[i];
                if (in_train[static_cast<std::size_t>(row)]) out[pos++] = row;
            }
        }
        tree_order_built = true;
    }
};

double tree_predict_matrix_row(const std::vector<regress::TreeNode>& nodes,
                               const Eigen::MatrixXd& X, Eigen::Index row, int max_depth) {
    int idx = 0;
    int depth = 0;
    while (nodes[static_cast<std::size_t>(idx)].feature >= 0 &&
           (max_depth < 0 || depth < max_depth)) {
        const auto& n = nodes[static_cast<std::size_t>(idx)];
        idx = X(row, n.feature) <= n.threshold ? n.left : n.right;
        ++depth;
    }
    return nodes[static_cast<std::size_t>(idx)].value;
}

void score_fold(SpecState& state, std::size_t fold_index, const Eigen::VectorXd& y_val,
                const Eigen::VectorXd& pred) {
    try {
        state.per_fold.push_back(r2_score(y_val, pred));
    } catch (const ConstantTarget&) {
        state.per_fold.push_back(0.0);
        state.warnings.push_back("fold " + std::to_string(fold_index) +
                                 ": constant validation target scored as 0");
    }
}

void fail_spec(SpecState& state, std::size_t fold_index, const std::exception& e) {
    state.error = "fold " + std::to_string(fold_index) + ": " + e.what();
}

// Ridge and OLS share the fold solve; OLS is alpha = 0 with the rank
// deficiency fallback.
void run_linear_family(FoldWorkspace& ws, std::vector<SpecState*>& specs,
                       std::size_t fold_index) {
    const Eigen::Index nt = static_cast<Eigen::Index>(ws.n_train());
    const Eigen::Index w = ws.X.cols();
    const bool primal = w <= nt;

    Eigen::LLT<Eigen::MatrixXd> llt;
    Eigen::MatrixXd work;
    for (SpecState* s : specs) {
        if (!s->error.empty()) continue;
        const double t0 = now_seconds();
        try {
            const double requested =
                s->spec->family == regress::Family::linear ? 0.0 : s->spec->alpha;
            Eigen::VectorXd pred;
            bool solved = false;
            for (double alpha : {requested, kFallbackAlpha}) {
                if (alpha == kFallbackAlpha && requested > 0.0) break;
                if (!primal && alpha == 0.0) continue;  // wide designs need the penalty
                if (primal) {
                    ws.build_primal();
                    work = ws.A0;
                    if (alpha > 0) work.diagonal().array() += alpha;
                    llt.compute(work);
                    if (llt.info() != Eigen::Success) continue;
                    const Eigen::VectorXd wvec = llt.solve(ws.b0);
                    if (!wvec.allFinite()) continue;
                    const double intercept = ws.y_train_mean - ws.col_mean.dot(wvec);
                    pred = ws.Z.bottomRows(static_cast<Eigen::Index>(ws.n_val())) * wvec;
                    pred.array() += intercept;
                } else {
                    ws.build_centered();
                    work = ws.Gc_tt;
                    work.diagonal().array() += alpha;
                    llt.compute(work);
                    if (llt.info() != Eigen::Success) continue;
                    const Eigen::VectorXd u = llt.solve(ws.yc_train);
                    if (!u.allFinite()) continue;
                    pred = ws.Gc_vt * u;
                    pred.array() += ws.y_train_mean;
                }
                solved = true;
                break;
            }
            if (!solved) throw Error("linear-family normal equations failed to factor");
            score_fold(*s, fold_index, ws.y_val, pred);
        } catch (const std::exception& e) {
            fail_spec(*s, fold_index, e);
        }
        s->seconds += now_seconds() - t0;
    }
}

void run_lasso(FoldWorkspace& ws, std::vector<SpecState*>& specs, std::size_t fold_index) {
    const Eigen::Index nt = static_cast<Eigen::Index>(ws.n_train());
    for (SpecState* s : specs) {
        if (!s->error.empty()) continue;
        const double t0 = now_seconds();
        try {
            ws.build_z();
            regress::LassoOptions opts;
            opts.alpha = s->spec->alpha;
            opts.tol = s->spec->tol;
            if (s->spec->max_iter > 0) opts.max_iter = s->spec->max_iter;
            const auto sol = regress::solve_lasso(ws.Z.topRows(nt), ws.y_train, opts);
            Eigen::VectorXd pred =
                ws.Z.bottomRows(static_cast<Eigen::Index>(ws.n_val())) * sol.weights;
            pred.array() += sol.intercept;
            score_fold(*s, fold_index, ws.y_val, pred);
        } catch (const std::exception& e) {
            fail_spec(*s, fold_index, e);
        }
        s->seconds += now_seconds() - t0;
    }
}

void run_svr(FoldWorkspace& ws, std::vector<SpecState*>& specs, std::size_t fold_index) {
    for (SpecState* s : specs) {
        if (!s->error.empty()) continue;
        const double t0 = now_seconds();
        try {
            const double gamma = s->spec->kernel == regress::Kernel::rbf
                                     ? (s->spec->gamma > 0 ? s->spec->gamma
                                                           : ws.resolve_auto_gamma())
                                     : 0.0;
            ws.build_kernel(s->spec->kernel, gamma);
            regress::SvrOptions opts;
            opts.C = s->spec->C;
            opts.epsilon = s->spec->epsilon;
            if (s->spec->max_iter > 0) opts.max_iter = s->spec->max_iter;
            const auto sol = regress::solve_svr_dual(ws.K_tt, ws.y_train, opts);
            Eigen::VectorXd pred = ws.K_vt * sol.beta;
            pred.array() += sol.bias;
            score_fold(*s, fold_index, ws.y_val, pred);
        } catch (const std::exception& e) {
            fail_spec(*s, fold_index, e);
        }
        s->seconds += now_seconds() - t0;
    }
}

// Trees are invariant to the per-column affine standardization, so they fit
// on the raw columns; one deep tree per min_leaf serves every requested
// depth by truncation.
void run_trees(FoldWorkspace& ws, std::vector<SpecState*>& specs, std::size_t fold_index) {
    std::vector<int> min_leaves;
    for (SpecState* s : specs)
        if (s->error.empty() &&
            std::find(min_leaves.begin(), min_leaves.end(), s->spec->min_leaf) ==
                min_leaves.end())
            min_leaves.push_back(s->spec->min_leaf);

    for (int min_leaf : min_leaves) {
        int deepest = 0;
        SpecState* deepest_spec = nullptr;
        for (SpecState* s : specs) {
            if (!s->error.empty() || s->spec->min_leaf != min_leaf) continue;
            if (s->spec->max_depth > deepest) {
                deepest = s->spec->max_depth;
                deepest_spec = s;
            }
        }
        if (deepest_spec == nullptr) continue;

        std::vector<regress::TreeNode> nodes;
        {
            const double t0 = now_seconds();
            try {
                ws.build_tree_order();
                nodes = regress::build_tree(ws.X, ws.y, ws.tree_order, ws.n_train(),
                                            {deepest, min_leaf});
            } catch (const std::exception& e) {
                for (SpecState* s : specs)
                    if (s->error.empty() && s->spec->min_leaf == min_leaf)
                        fail_spec(*s, fold_index, e);
                continue;
            }
            deepest_spec->seconds += now_seconds() - t0;
        }
        for (SpecState* s : specs) {
            if (!s->error.empty() || s->spec->min_leaf != min_leaf) continue;
            const double t0 = now_seconds();
            Eigen::VectorXd pred(static_cast<Eigen::Index>(ws.n_val()));
            for (std::size_t i = 0; i < ws.n_val(); ++i)
                pred(static_cast<Eigen::Index>(i)) = tree_predict_matrix_row(
                    nodes, ws.X, static_cast<Eigen::Index>(ws.val_idx[i]),
                    s->spec->max_depth);
            score_fold(*s, fold_index, ws.y_val, pred);
            s->seconds += now_seconds() - t0;
        }
    }
}

struct FoldCoreResult {
    std::vector<std::optional<CvScore>> scores;
    std::vector<std::string> errors;
    std::vector<double> seconds;
};

FoldCoreResult evaluate_folds_multi(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                    const std::vector<std::vector<std::size_t>>& folds,
                                    std::span<const regress::ModelSpec> specs,
                                    std::uint64_t sample_seed) {
    const std::size_t n = static_cast<std::size_t>(X.rows());
    std::vector<SpecState> states(specs.size());
    std::vector<std::size_t> linear_like, lassos, svrs, trees;
    for (std::size_t s = 0; s < specs.size(); ++s) {
        specs[s].validate();
        states[s].spec = &specs[s];
        switch (specs[s].family) {
            case regress::Family::linear:
            case regress::Family::ridge: linear_like.push_back(s); break;
            case regress::Family::lasso: lassos.push_back(s); break;
            case regress::Family::svr: svrs.push_back(s); break;
            case regress::Family::tree: trees.push_back(s); break;
        }
    }

    std::vector<std::int32_t> global_order;
    if (!trees.empty()) global_order = regress::sort_columns(X);

    std::vector<std::uint8_t> in_fold(n);
    for (std::size_t f = 0; f < folds.size(); ++f) {
        FoldWorkspace ws(X, y);
        std::fill(in_fold.begin(), in_fold.end(), 0);
        for (std::size_t r : folds[f]) in_fold[r] = 1;
        ws.val_idx = folds[f];
        ws.train_idx.reserve(n - folds[f].size());
        for (std::size_t r = 0; r < n; ++r)
            if (!in_fold[r]) ws.train_idx.push_back(r);
        ws.build_targets();
        ws.global_order = &global_order;

        auto pick = [&](const std::vector<std::size_t>& idx) {
            std::vector<SpecState*> v;
            for (std::size_t s : idx) v.push_back(&states[s]);
            return v;
        };
        auto group = pick(linear_like);
        run_linear_family(ws, group, f);
        group = pick(lassos);
        run_lasso(ws, group, f);
        group = pick(svrs);
        run_svr(ws, group, f);
        group = pick(trees);
        run_trees(ws, group, f);
    }

    FoldCoreResult out;
    out.scores.resize(specs.size());
    out.errors.resize(specs.size());
    out.seconds.resize(specs.size());
    for (std::size_t s = 0; s < specs.size(); ++s) {
        out.seconds[s] = states[s].seconds;
        if (!states[s].error.empty()) {
            out.errors[s] = states[s].error;
            continue;
        }
        CvScore score;
        score.per_fold = std::move(states[s].per_fold);
        double sum = 0;
        for (double v : score.per_fold) sum += v;
        score.mean = sum / static_cast<double>(score.per_fold.size());
        score.sample_seed = sample_seed;
        score.n_sampled = n;
        score.warnings = std::move(states[s].warnings);
        out.scores[s] = std::move(score);
    }
    return out;
}

}  // namespace

CvScore cross_validate(const regress::ModelSpec& spec, const Eigen::MatrixXd& X,
                       const Eigen::VectorXd& y, int k, std::uint64_t seed) {
    if (X.rows() != y.size())
        throw LengthMismatch(static_cast<std::size_t>(X.rows()),
                             static_cast<std::size_t>(y.size()));
    const auto folds = kfold_split(static_cast<std::size_t>(X.rows()), k, seed);
    const regress::ModelSpec specs[1] = {spec};
    auto core = evaluate_folds_multi(X, y, folds, specs, seed);
    if (!core.errors[0].empty()) throw Error(core.errors[0]);
    return *core.scores[0];
}

RepeatOutcome evaluate_repeat(const features::DesignMatrix& m,
                              std::span<const regress::ModelSpec> specs,
                              const RepeatedCvOptions& opts, int repeat_index,
                              int expand_degree, std::size_t expansion_cap) {
    const std::size_t n = static_cast<std::size_t>(m.rows());
    if (opts.sample_size > n) throw SampleTooLarge(opts.sample_size, n);

    const std::uint64_t sample_seed =
        derive_seed(opts.seed, {kSampleTag, static_cast<std::uint64_t>(repeat_index)});
    const std::uint64_t fold_seed =
        derive_seed(opts.seed, {kFoldTag, static_cast<std::uint64_t>(repeat_index)});

    const auto perm = random_permutation(n, sample_seed);
    const std::size_t s = opts.sample_size;

    Eigen::MatrixXd Xs(static_cast<Eigen::Index>(s), m.cols());
    Eigen::VectorXd ys(static_cast<Eigen::Index>(s));
    for (std::size_t i = 0; i < s; ++i) {
        Xs.row(static_cast<Eigen::Index>(i)) = m.X.row(static_cast<Eigen::Index>(perm[i]));
        ys(static_cast<Eigen::Index>(i)) = m.y(static_cast<Eigen::Index>(perm[i]));
    }
    if (expand_degree >= 1) {
        const auto plan = features::ExpansionPlan::build(static_cast<std::size_t>(m.cols()),
                                                         expand_degree, expansion_cap);
        Xs = plan.apply(Xs);
    }

    const auto folds = kfold_split(s, opts.k, fold_seed);
    auto core = evaluate_folds_multi(Xs, ys, folds, specs, sample_seed);

    RepeatOutcome out;
    out.scores = std::move(core.scores);
    out.errors = std::move(core.errors);
    out.fit_seconds = std::move(core.seconds);
    return out;
}

std::vector<SpecOutcome> repeated_sampled_cv_multi(const features::DesignMatrix& m,
                                                   std::span<const regress::ModelSpec> specs,
                                                   const RepeatedCvOptions& opts,
                                                   int expand_degree,
                                                   std::size_t expansion_cap) {
    if (opts.sample_size > static_cast<std::size_t>(m.rows()))
        throw SampleTooLarge(opts.sample_size, static_cast<std::size_t>(m.rows()));
    if (opts.repeats < 1) throw Error("repeats must be at least 1");

    std::vector<SpecOutcome> out(specs.size());
    std::vector<std::vector<CvScore>> collected(specs.size());
    std::vector<double> seconds(specs.size(), 0.0);

    for (int r = 0; r < opts.repeats; ++r) {
        auto rep = evaluate_repeat(m, specs, opts, r, expand_degree, expansion_cap);
        for (std::size_t s = 0; s < specs.size(); ++s) {
            seconds[s] += rep.fit_seconds[s];
            if (!rep.errors[s].empty()) {
                if (out[s].error.empty())
                    out[s].error = "repeat " + std::to_string(r) + ": " + rep.errors[s];
                continue;
            }
            collected[s].push_back(std::move(*rep.scores[s]));
        }
    }

    for (std::size_t s = 0; s < specs.size(); ++s) {
        if (!out[s].error.empty()) continue;
        RepeatedCvResult res;
        res.repeats = std::move(collected[s]);
        double sum = 0;
        for (const auto& score : res.repeats) {
            res.per_repeat.push_back(score.mean);
            sum += score.mean;
        }
        res.mean_score = sum / static_cast<double>(res.repeats.size());
        res.fit_seconds = seconds[s];
        out[s].result = std::move(res);
    }
    return out;
}

RepeatedCvResult repeated_sampled_cv(const features::DesignMatrix& m,
                                     const regress::ModelSpec& spec,
                                     const RepeatedCvOptions& opts) {
    const regress::ModelSpec specs[1] = {spec};
    auto all = repeated_sampled_cv_multi(m, specs, opts);
    if (!all[0].error.empty()) throw Error(all[0].error);
    return std::move(*all[0].result);
}

}  // namespace tti::evaluate

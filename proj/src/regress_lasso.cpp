#include <cmath>

#include "tti/errors.hpp"
#include "tti/regress.hpp"

namespace tti::regress {

namespace {

double soft_threshold(double v, double t) {
    if (v > t) return v - t;
    if (v < -t) return v + t;
    return 0.0;
}

}  // namespace

LassoSolution solve_lasso(const ConstMatrixRef& X, const Eigen::VectorXd& y,
                          const LassoOptions& opts) {
    const Eigen::Index n = X.rows();
    const Eigen::Index p = X.cols();
    if (n != y.size())
        throw LengthMismatch(static_cast<std::size_t>(n), static_cast<std::size_t>(y.size()));
    if (!(opts.alpha > 0)) throw Error("lasso requires alpha > 0");

    const double nd = static_cast<double>(n);
    const Eigen::VectorXd mu = X.colwise().mean();
    const double y_mean = y.mean();

    // Squared norms of the centered columns; flags constant columns and
    // enforces the standardized-input contract.
    Eigen::VectorXd cnorm(p);
    for (Eigen::Index j = 0; j < p; ++j) {
        cnorm(j) = (X.col(j).array() - mu(j)).square().sum();
        const double var = n > 1 ? cnorm(j) / (nd - 1.0) : 0.0;
        if (var > 1e-12 && (var < 0.9 || var > 1.1))
            throw Error("lasso requires standardized columns (sample variance within 10% "
                        "of 1); column " + std::to_string(j) + " has variance " +
                        std::to_string(var));
    }

    // Residual of the centered problem. Column updates preserve sum(r), so it
    // is refreshed once per pass rather than per column.
    Eigen::VectorXd r = y.array() - y_mean;
    Eigen::VectorXd w = Eigen::VectorXd::Zero(p);
    double r_sum = 0.0;

    const double threshold = opts.alpha * nd;
    std::vector<Eigen::Index> active;
    active.reserve(static_cast<std::size_t>(p));

    auto update_column = [&](Eigen::Index j) -> double {
        if (cnorm(j) <= 1e-12) return 0.0;
        const double dot = X.col(j).dot(r) - mu(j) * r_sum;
        const double rho = dot + cnorm(j) * w(j);
        const double w_new = soft_threshold(rho, threshold) / cnorm(j);
        const double delta = w_new - w(j);
        if (delta != 0.0) {
            r.noalias() -= delta * X.col(j);
            if (mu(j) != 0.0) r.array() += delta * mu(j);
            w(j) = w_new;
        }
        return std::abs(delta);
    };

    const int max_sweeps = opts.max_iter > 0 ? opts.max_iter : 2000;
    int sweeps = 0;
    double max_change = 0.0;
    while (sweeps < max_sweeps) {
        // Full pass over all columns in fixed order.
        r_sum = r.sum();
        max_change = 0.0;
        for (Eigen::Index j = 0; j < p; ++j)
            max_change = std::max(max_change, update_column(j));
        ++sweeps;
        if (max_change < opts.tol) break;

        // Iterate the active set until stable, then re-check everything.
        active.clear();
        for (Eigen::Index j = 0; j < p; ++j)
            if (w(j) != 0.0) active.push_back(j);
        while (sweeps < max_sweeps) {
            r_sum = r.sum();
            double change = 0.0;
            for (Eigen::Index j : active) change = std::max(change, update_column(j));
            ++sweeps;
            if (change < opts.tol) break;
        }
    }
    if (max_change >= opts.tol) throw NotConverged("lasso", sweeps, max_change);

    LassoSolution out;
    out.intercept = y_mean - mu.dot(w);
    out.weights = std::move(w);
    out.sweeps = sweeps;
    return out;
}

FittedModel fit_lasso(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double alpha,
                      double tol, int max_iter) {
    LassoOptions opts;
    opts.alpha = alpha;
    opts.tol = tol;
    if (max_iter > 0) opts.max_iter = max_iter;
    LassoSolution s = solve_lasso(X, y, opts);

    FittedModel m;
    m.spec = ModelSpec::lasso(alpha, tol, max_iter);
    m.n_columns = X.cols();
    m.weights = std::move(s.weights);
    m.intercept = s.intercept;
    return m;
}

}  // namespace tti::regress

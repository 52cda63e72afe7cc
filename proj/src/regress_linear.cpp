#include <Eigen/Cholesky>

#include "tti/errors.hpp"
#include "tti/regress.hpp"

namespace tti::regress {

namespace {

constexpr double kFallbackAlpha = 1e-10;

// Primal normal equations on implicitly centered data:
//   (X'X - n*mu*mu' + alpha*I) w = X'y - n*mu*ybar
bool solve_primal(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double alpha,
                  Eigen::VectorXd& w) {
    const double n = static_cast<double>(X.rows());
    const Eigen::VectorXd mu = X.colwise().mean();
    const double y_mean = y.mean();

    Eigen::MatrixXd A(X.cols(), X.cols());
    A.setZero();
    A.selfadjointView<Eigen::Lower>().rankUpdate(X.transpose());
    A.triangularView<Eigen::Upper>() = A.transpose();
    A.noalias() -= (n * mu) * mu.transpose();
    if (alpha > 0) A.diagonal().array() += alpha;

    Eigen::VectorXd b = X.transpose() * y - (n * y_mean) * mu;
    Eigen::LLT<Eigen::MatrixXd> llt(A);
    if (llt.info() != Eigen::Success) return false;
    w = llt.solve(b);
    return w.allFinite();
}

// Dual solve for wide designs: u = (Gc + alpha I)^-1 yc, w = Xc' u.
bool solve_dual(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double alpha,
                Eigen::VectorXd& w) {
    const Eigen::Index n = X.rows();
    const Eigen::VectorXd mu = X.colwise().mean();
    Eigen::MatrixXd Xc = X.rowwise() - mu.transpose();

    Eigen::MatrixXd G(n, n);
    G.setZero();
    G.selfadjointView<Eigen::Lower>().rankUpdate(Xc);
    G.triangularView<Eigen::Upper>() = G.transpose();
    G.diagonal().array() += alpha;

    const Eigen::VectorXd yc = y.array() - y.mean();
    Eigen::LLT<Eigen::MatrixXd> llt(G);
    if (llt.info() != Eigen::Success) return false;
    const Eigen::VectorXd u = llt.solve(yc);
    w.noalias() = Xc.transpose() * u;
    return w.allFinite();
}

}  // namespace

LinearSolveResult solve_linear_family(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                      double alpha, bool allow_fallback) {
    if (X.rows() != y.size())
        throw LengthMismatch(static_cast<std::size_t>(X.rows()),
                             static_cast<std::size_t>(y.size()));
    if (X.rows() < 2) throw Error("linear-family fit requires at least 2 rows");

    LinearSolveResult out;
    const bool primal = X.cols() <= X.rows();
    auto attempt = [&](double a) {
        return primal ? solve_primal(X, y, a, out.weights) : solve_dual(X, y, a, out.weights);
    };

    // A wide design never has full column rank; go straight to the fallback.
    double effective = alpha;
    if (alpha == 0.0 && !primal) {
        if (!allow_fallback) throw RankDeficient();
        effective = kFallbackAlpha;
        out.ridge_fallback = true;
    }
    if (!attempt(effective)) {
        if (alpha > 0.0 || !allow_fallback) {
            if (alpha > 0.0) throw Error("ridge normal equations failed to factor");
            throw RankDeficient();
        }
        out.ridge_fallback = true;
        if (!attempt(kFallbackAlpha))
            throw Error("rank-deficient fallback solve failed to factor");
    }
    out.intercept = y.mean() - X.colwise().mean().dot(out.weights);
    return out;
}

FittedModel fit_linear(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, bool allow_fallback) {
    LinearSolveResult r = solve_linear_family(X, y, 0.0, allow_fallback);
    FittedModel m;
    m.spec = ModelSpec::linear();
    m.n_columns = X.cols();
    m.weights = std::move(r.weights);
    m.intercept = r.intercept;
    m.ridge_fallback = r.ridge_fallback;
    return m;
}

FittedModel fit_ridge(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double alpha) {
    if (!(alpha >= 0)) throw Error("ridge requires alpha >= 0");
    if (alpha == 0.0) {
        FittedModel m = fit_linear(X, y);
        m.spec = ModelSpec::ridge(0.0);
        return m;
    }
    LinearSolveResult r = solve_linear_family(X, y, alpha, true);
    FittedModel m;
    m.spec = ModelSpec::ridge(alpha);
    m.n_columns = X.cols();
    m.weights = std::move(r.weights);
    m.intercept = r.intercept;
    return m;
}

}  // namespace tti::regress

#include <cmath>
#include <limits>

#include "tti/errors.hpp"
#include "tti/regress.hpp"

namespace tti::regress {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kMinEta = 1e-12;

}  // namespace

// SMO on the epsilon-insensitive dual
//   min 1/2 b'Kb - y'b + eps*sum(|b|)  s.t.  sum(b) = 0, |b_i| <= C
// in the 2n nonnegative-variable form b = a+ - a-, with maximal-violating-pair
// selection (second-order gain for the second index).
SvrDualSolution solve_svr_dual(const Eigen::MatrixXd& K, const Eigen::VectorXd& y,
                               const SvrOptions& opts) {
    const Eigen::Index n = K.rows();
    if (K.cols() != n || y.size() != n)
        throw LengthMismatch(static_cast<std::size_t>(K.cols()),
                             static_cast<std::size_t>(y.size()));
    const double C = opts.C;
    const double eps = opts.epsilon;

    Eigen::VectorXd a_plus = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd a_minus = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd e = -y;  // e_t = (K b)_t - y_t

    double m_val = 0, M_val = 0;
    int iter = 0;
    const int max_iter = opts.max_iter > 0 ? opts.max_iter : 1000000;

    while (true) {
        // Pass 1: maximal up-candidate i and minimal low-candidate value.
        m_val = -kInf;
        M_val = kInf;
        Eigen::Index i = -1;
        bool i_plus = true;
        for (Eigen::Index t = 0; t < n; ++t) {
            const double up_plus = a_plus(t) < C ? -e(t) - eps : -kInf;
            const double up_minus = a_minus(t) > 0 ? -e(t) + eps : -kInf;
            const double low_plus = a_plus(t) > 0 ? -e(t) - eps : kInf;
            const double low_minus = a_minus(t) < C ? -e(t) + eps : kInf;
            if (up_plus > m_val) {
                m_val = up_plus;
                i = t;
                i_plus = true;
            }
            if (up_minus > m_val) {
                m_val = up_minus;
                i = t;
                i_plus = false;
            }
            M_val = std::min(M_val, std::min(low_plus, low_minus));
        }
        if (i < 0 || m_val - M_val <= opts.tol) break;
        if (iter >= max_iter) throw NotConverged("svr", iter, m_val - M_val);

        // Pass 2: second-order selection of j among violating low candidates.
        const double* Ki = K.col(i).data();
        const double Kii = Ki[i];
        double best_gain = 0;
        Eigen::Index j = -1;
        bool j_plus = true;
        for (Eigen::Index t = 0; t < n; ++t) {
            const double low_plus = a_plus(t) > 0 ? -e(t) - eps : kInf;
            const double low_minus = a_minus(t) < C ? -e(t) + eps : kInf;
            const double eta = std::max(Kii + K(t, t) - 2.0 * Ki[t], kMinEta);
            const double b_plus = m_val - low_plus;
            if (b_plus > 0) {
                const double gain = b_plus * b_plus / eta;
                if (gain > best_gain) {
                    best_gain = gain;
                    j = t;
                    j_plus = true;
                }
            }
            const double b_minus = m_val - low_minus;
            if (b_minus > 0) {
                const double gain = b_minus * b_minus / eta;
                if (gain > best_gain) {
                    best_gain = gain;
                    j = t;
                    j_plus = false;
                }
            }
        }
        if (j < 0) break;  // numerically converged

        // Unconstrained optimum along the pair direction, clipped to the box.
        const double lj = j_plus ? -e(j) - eps : -e(j) + eps;
        const double eta = std::max(Kii + K(j, j) - 2.0 * Ki[j], kMinEta);
        double lambda = (m_val - lj) / eta;
        lambda = std::min(lambda, i_plus ? C - a_plus(i) : a_minus(i));
        lambda = std::min(lambda, j_plus ? a_plus(j) : C - a_minus(j));
        if (lambda <= 0) break;

        if (i_plus)
            a_plus(i) += lambda;
        else
            a_minus(i) -= lambda;
        if (j_plus)
            a_plus(j) -= lambda;
        else
            a_minus(j) += lambda;

        e.noalias() += lambda * (K.col(i) - K.col(j));
        ++iter;
    }

    SvrDualSolution out;
    out.beta = a_plus - a_minus;
    out.iterations = iter;
    if (std::isfinite(m_val) && std::isfinite(M_val))
        out.bias = 0.5 * (m_val + M_val);
    else if (std::isfinite(m_val))
        out.bias = m_val;
    else if (std::isfinite(M_val))
        out.bias = M_val;
    return out;
}

Eigen::MatrixXd kernel_from_gram(const Eigen::MatrixXd& gram_block,
                                 const Eigen::VectorXd& sq_norm_rows,
                                 const Eigen::VectorXd& sq_norm_cols, Kernel kernel,
                                 double gamma) {
    if (kernel == Kernel::linear) return gram_block;
    Eigen::MatrixXd K(gram_block.rows(), gram_block.cols());
    for (Eigen::Index c = 0; c < gram_block.cols(); ++c) {
        K.col(c) = (-gamma *
                    (sq_norm_rows.array() + sq_norm_cols(c) - 2.0 * gram_block.col(c).array()))
                       .exp();
    }
    return K;
}

FittedModel fit_svr(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double C,
                    double epsilon, Kernel kernel, double gamma, int max_iter) {
    if (!(C > 0)) throw Error("svr requires C > 0");
    if (!(epsilon >= 0)) throw Error("svr requires epsilon >= 0");
    const Eigen::Index n = X.rows();
    if (n != y.size())
        throw LengthMismatch(static_cast<std::size_t>(n), static_cast<std::size_t>(y.size()));

    const double gamma_res = kernel == Kernel::rbf ? resolve_gamma(X, gamma) : 0.0;

    Eigen::MatrixXd G(n, n);
    G.setZero();
    G.selfadjointView<Eigen::Lower>().rankUpdate(X);
    G.triangularView<Eigen::Upper>() = G.transpose();
    const Eigen::VectorXd sq = G.diagonal();
    const Eigen::MatrixXd K = kernel_from_gram(G, sq, sq, kernel, gamma_res);

    SvrOptions opts;
    opts.C = C;
    opts.epsilon = epsilon;
    if (max_iter > 0) opts.max_iter = max_iter;
    SvrDualSolution sol = solve_svr_dual(K, y, opts);

    FittedModel m;
    m.spec = ModelSpec::svr(C, epsilon, kernel, gamma);
    m.n_columns = X.cols();
    m.bias = sol.bias;
    m.gamma_used = gamma_res;

    std::vector<Eigen::Index> sv;
    for (Eigen::Index t = 0; t < n; ++t)
        if (sol.beta(t) != 0.0) sv.push_back(t);
    m.support_vectors.resize(static_cast<Eigen::Index>(sv.size()), X.cols());
    m.dual_coef.resize(static_cast<Eigen::Index>(sv.size()));
    for (std::size_t s = 0; s < sv.size(); ++s) {
        m.support_vectors.row(static_cast<Eigen::Index>(s)) = X.row(sv[s]);
        m.dual_coef(static_cast<Eigen::Index>(s)) = sol.beta(sv[s]);
    }
    return m;
}

}  // namespace tti::regress

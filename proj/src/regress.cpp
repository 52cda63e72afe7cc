#include "tti/regress.hpp"

#include <cmath>

#include "tti/errors.hpp"

namespace tti::regress {

const char* family_name(Family f) {
    switch (f) {
        case Family::linear: return "linear";
        case Family::ridge: return "ridge";
        case Family::lasso: return "lasso";
        case Family::svr: return "svr";
        case Family::tree: return "tree";
    }
    throw Error("unreachable family");
}

Family family_from_name(const std::string& name) {
    if (name == "linear") return Family::linear;
    if (name == "ridge") return Family::ridge;
    if (name == "lasso") return Family::lasso;
    if (name == "svr") return Family::svr;
    if (name == "tree") return Family::tree;
    throw Error("unknown model family: " + name);
}

ModelSpec ModelSpec::linear() {
    ModelSpec s;
    s.family = Family::linear;
    return s;
}

ModelSpec ModelSpec::ridge(double alpha) {
    ModelSpec s;
    s.family = Family::ridge;
    s.alpha = alpha;
    return s;
}

ModelSpec ModelSpec::lasso(double alpha, double tol, int max_iter) {
    ModelSpec s;
    s.family = Family::lasso;
    s.alpha = alpha;
    s.tol = tol;
    s.max_iter = max_iter;
    return s;
}

ModelSpec ModelSpec::svr(double C, double epsilon, Kernel kernel, double gamma) {
    ModelSpec s;
    s.family = Family::svr;
    s.C = C;
    s.epsilon = epsilon;
    s.kernel = kernel;
    s.gamma = gamma;
    return s;
}

ModelSpec ModelSpec::tree(int max_depth, int min_leaf) {
    ModelSpec s;
    s.family = Family::tree;
    s.max_depth = max_depth;
    s.min_leaf = min_leaf;
    return s;
}

void ModelSpec::validate() const {
    switch (family) {
        case Family::linear:
            return;
        case Family::ridge:
            if (!(alpha >= 0)) throw Error("ridge requires alpha >= 0");
            return;
        case Family::lasso:
            if (!(alpha > 0)) throw Error("lasso requires alpha > 0");
            if (!(tol > 0)) throw Error("lasso requires tol > 0");
            return;
        case Family::svr:
            if (!(C > 0)) throw Error("svr requires C > 0");
            if (!(epsilon >= 0)) throw Error("svr requires epsilon >= 0");
            if (!(gamma >= 0)) throw Error("svr requires gamma >= 0");
            return;
        case Family::tree:
            if (max_depth < 1) throw Error("tree requires max_depth >= 1");
            if (min_leaf < 1) throw Error("tree requires min_leaf >= 1");
            return;
    }
    throw Error("unknown model family");
}

namespace {

std::string trim_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

}  // namespace

std::string ModelSpec::param_label() const {
    switch (family) {
        case Family::linear: return "-";
        case Family::ridge:
        case Family::lasso: return "alpha=" + trim_number(alpha);
        case Family::svr:
            return "C=" + trim_number(C) + ", epsilon=" + trim_number(epsilon);
        case Family::tree: return "max_depth=" + std::to_string(max_depth);
    }
    return "?";
}

nlohmann::json ModelSpec::params_json() const {
    nlohmann::json j;
    switch (family) {
        case Family::linear: break;
        case Family::ridge:
        case Family::lasso: j["alpha"] = alpha; break;
        case Family::svr:
            j["C"] = C;
            j["epsilon"] = epsilon;
            j["kernel"] = kernel == Kernel::rbf ? "rbf" : "linear";
            break;
        case Family::tree:
            j["max_depth"] = max_depth;
            j["min_leaf"] = min_leaf;
            break;
    }
    return j;
}

double resolve_gamma(const Eigen::MatrixXd& X, double gamma) {
    if (gamma > 0) return gamma;
    const double n = static_cast<double>(X.rows());
    const Eigen::VectorXd mean = X.colwise().mean();
    double var_sum = 0;
    for (Eigen::Index j = 0; j < X.cols(); ++j)
        var_sum += (X.col(j).array() - mean(j)).square().sum() / n;
    const double mean_var = var_sum / static_cast<double>(X.cols());
    return mean_var > 0 ? 1.0 / (static_cast<double>(X.cols()) * mean_var) : 1.0;
}

Eigen::VectorXd FittedModel::predict(const Eigen::MatrixXd& X) const {
    switch (spec.family) {
        case Family::linear:
        case Family::ridge:
        case Family::lasso: {
            if (X.cols() != weights.size())
                throw WidthMismatch(static_cast<std::size_t>(X.cols()),
                                    static_cast<std::size_t>(weights.size()));
            return (X * weights).array() + intercept;
        }
        case Family::svr: {
            if (X.cols() != n_columns)
                throw WidthMismatch(static_cast<std::size_t>(X.cols()),
                                    static_cast<std::size_t>(n_columns));
            Eigen::VectorXd out(X.rows());
            if (support_vectors.rows() == 0) {
                out.setConstant(bias);
                return out;
            }
            if (spec.kernel == Kernel::linear) {
                out = X * (support_vectors.transpose() * dual_coef);
                out.array() += bias;
                return out;
            }
            const Eigen::VectorXd sv_norm = support_vectors.rowwise().squaredNorm();
            for (Eigen::Index r = 0; r < X.rows(); ++r) {
                const double x_norm = X.row(r).squaredNorm();
                double acc = 0;
                for (Eigen::Index s = 0; s < support_vectors.rows(); ++s) {
                    const double d2 =
                        x_norm + sv_norm(s) - 2.0 * X.row(r).dot(support_vectors.row(s));
                    acc += dual_coef(s) * std::exp(-gamma_used * d2);
                }
                out(r) = acc + bias;
            }
            return out;
        }
        case Family::tree: {
            if (X.cols() != n_columns)
                throw WidthMismatch(static_cast<std::size_t>(X.cols()),
                                    static_cast<std::size_t>(n_columns));
            Eigen::VectorXd out(X.rows());
            std::vector<double> row(static_cast<std::size_t>(X.cols()));
            for (Eigen::Index r = 0; r < X.rows(); ++r) {
                for (Eigen::Index j = 0; j < X.cols(); ++j)
                    row[static_cast<std::size_t>(j)] = X(r, j);
                out(r) = predict_tree_row(nodes, row.data());
            }
            return out;
        }
    }
    throw Error("unknown model family");
}

FittedModel fit(const ModelSpec& spec, const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    spec.validate();
    switch (spec.family) {
        case Family::linear: return fit_linear(X, y);
        case Family::ridge: return fit_ridge(X, y, spec.alpha);
        case Family::lasso: return fit_lasso(X, y, spec.alpha, spec.tol, spec.max_iter);
        case Family::svr:
            return fit_svr(X, y, spec.C, spec.epsilon, spec.kernel, spec.gamma, spec.max_iter);
        case Family::tree: return fit_tree(X, y, spec.max_depth, spec.min_leaf);
    }
    throw Error("unknown model family");
}

// ---------------------------------------------------------------------------
// Serialization (versioned JSON document)
// ---------------------------------------------------------------------------

nlohmann::json FittedModel::to_json() const {
    nlohmann::json j;
    j["version"] = 1;
    j["family"] = family_name(spec.family);
    j["params"] = params_json_full();
    j["n_columns"] = n_columns;
    switch (spec.family) {
        case Family::linear:
        case Family::ridge:
        case Family::lasso: {
            j["weights"] = std::vector<double>(weights.data(), weights.data() + weights.size());
            j["intercept"] = intercept;
            j["ridge_fallback"] = ridge_fallback;
            break;
        }
        case Family::svr: {
            nlohmann::json sv = nlohmann::json::array();
            for (Eigen::Index r = 0; r < support_vectors.rows(); ++r) {
                std::vector<double> row(support_vectors.cols());
                for (Eigen::Index c = 0; c < support_vectors.cols(); ++c)
                    row[static_cast<std::size_t>(c)] = support_vectors(r, c);
                sv.push_back(row);
            }
            j["support_vectors"] = std::move(sv);
            j["dual_coef"] =
                std::vector<double>(dual_coef.data(), dual_coef.data() + dual_coef.size());
            j["bias"] = bias;
            j["gamma_used"] = gamma_used;
            break;
        }
        case Family::tree: {
            nlohmann::json arr = nlohmann::json::array();
            for (const auto& n : nodes) {
                arr.push_back({{"feature", n.feature},
                               {"threshold", n.threshold},
                               {"left", n.left},
                               {"right", n.right},
                               {"value", n.value},
                               {"count", n.count}});
            }
            j["nodes"] = std::move(arr);
            break;
        }
    }
    return j;
}

nlohmann::json FittedModel::params_json_full() const {
    nlohmann::json j = spec.params_json();
    if (spec.family == Family::svr) j["gamma"] = spec.gamma;
    if (spec.family == Family::lasso) {
        j["tol"] = spec.tol;
        j["max_iter"] = spec.max_iter;
    }
    return j;
}

FittedModel FittedModel::from_json(const nlohmann::json& j) {
    if (j.at("version").get<int>() != 1) throw Error("unsupported model document version");
    FittedModel m;
    const Family family = family_from_name(j.at("family").get<std::string>());
    const auto& params = j.at("params");
    switch (family) {
        case Family::linear: m.spec = ModelSpec::linear(); break;
        case Family::ridge: m.spec = ModelSpec::ridge(params.at("alpha").get<double>()); break;
        case Family::lasso:
            m.spec = ModelSpec::lasso(params.at("alpha").get<double>(),
                                      params.value("tol", 1e-7), params.value("max_iter", 0));
            break;
        case Family::svr:
            m.spec = ModelSpec::svr(params.at("C").get<double>(),
                                    params.at("epsilon").get<double>(),
                                    params.value("kernel", "rbf") == std::string("rbf")
                                        ? Kernel::rbf
                                        : Kernel::linear,
                                    params.value("gamma", 0.0));
            break;
        case Family::tree:
            m.spec = ModelSpec::tree(params.at("max_depth").get<int>(),
                                     params.value("min_leaf", 1));
            break;
    }
    m.n_columns = j.at("n_columns").get<Eigen::Index>();
    switch (family) {
        case Family::linear:
        case Family::ridge:
        case Family::lasso: {
            auto w = j.at("weights").get<std::vector<double>>();
            m.weights = Eigen::Map<Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
            m.intercept = j.at("intercept").get<double>();
            m.ridge_fallback = j.value("ridge_fallback", false);
            break;
        }
        case Family::svr: {
            const auto& sv = j.at("support_vectors");
            m.support_vectors.resize(static_cast<Eigen::Index>(sv.size()), m.n_columns);
            for (std::size_t r = 0; r < sv.size(); ++r) {
                auto row = sv[r].get<std::vector<double>>();
                for (std::size_t c = 0; c < row.size(); ++c)
                    m.support_vectors(static_cast<Eigen::Index>(r),
                                      static_cast<Eigen::Index>(c)) = row[c];
            }
            auto coef = j.at("dual_coef").get<std::vector<double>>();
            m.dual_coef =
                Eigen::Map<Eigen::VectorXd>(coef.data(), static_cast<Eigen::Index>(coef.size()));
            m.bias = j.at("bias").get<double>();
            m.gamma_used = j.at("gamma_used").get<double>();
            break;
        }
        case Family::tree: {
            for (const auto& nj : j.at("nodes")) {
                TreeNode n;
                n.feature = nj.at("feature").get<int>();
                n.threshold = nj.at("threshold").get<double>();
                n.left = nj.at("left").get<int>();
                n.right = nj.at("right").get<int>();
                n.value = nj.at("value").get<double>();
                n.count = nj.at("count").get<int>();
                m.nodes.push_back(n);
            }
            break;
        }
    }
    return m;
}

}  // namespace tti::regress

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "tti/describe.hpp"
#include "tti/errors.hpp"
#include "tti/evaluate.hpp"
#include "tti/experiment.hpp"
#include "tti/features.hpp"
#include "tti/ingest.hpp"
#include "tti/regress.hpp"
#include "tti/select.hpp"

namespace {

using namespace tti;
using nlohmann::json;

std::vector<ingest::JoinedRecord> load_joined(const std::string& tti_path,
                                              const std::string& weather_path) {
    std::ifstream tti_in(tti_path);
    if (!tti_in) throw IoFailure(tti_path);
    auto obs = ingest::parse_tti_csv(tti_in);

    std::ifstream weather_in(weather_path);
    if (!weather_in) throw IoFailure(weather_path);
    auto weather = ingest::parse_weather_csv(weather_in);

    auto joined = ingest::join_tti_weather(obs, weather);
    if (joined.dropped > 0)
        std::cerr << "note: dropped " << joined.dropped
                  << " observations without a weather record\n";
    return std::move(joined.records);
}

struct ModelFlags {
    std::string model = "ridge";
    double alpha = 1.0;
    double C = 2.8;
    double epsilon = 0.1;
    std::string kernel = "rbf";
    double gamma = 0.0;
    int max_depth = 2;
    int min_leaf = 5;

    void attach(CLI::App* cmd) {
        cmd->add_option("--model", model, "linear|ridge|lasso|svr|tree")->required();
        cmd->add_option("--alpha", alpha, "ridge/lasso penalty");
        cmd->add_option("--C", C, "svr box constraint");
        cmd->add_option("--epsilon", epsilon, "svr tube half-width");
        cmd->add_option("--kernel", kernel, "svr kernel: rbf|linear");
        cmd->add_option("--gamma", gamma, "svr rbf gamma (0 = auto)");
        cmd->add_option("--max-depth", max_depth, "tree depth");
        cmd->add_option("--min-leaf", min_leaf, "tree minimum leaf size");
    }

    regress::ModelSpec spec() const {
        switch (regress::family_from_name(model)) {
            case regress::Family::linear: return regress::ModelSpec::linear();
            case regress::Family::ridge: return regress::ModelSpec::ridge(alpha);
            case regress::Family::lasso: return regress::ModelSpec::lasso(alpha);
            case regress::Family::svr:
                return regress::ModelSpec::svr(
                    C, epsilon,
                    kernel == "linear" ? regress::Kernel::linear : regress::Kernel::rbf, gamma);
            case regress::Family::tree:
                return regress::ModelSpec::tree(max_depth, min_leaf);
        }
        throw Error("unknown model: " + model);
    }
};

std::vector<std::string> subset_from_file(const std::string& path, int n_features) {
    std::ifstream in(path);
    if (!in) throw IoFailure(path);
    json doc = json::parse(in);
    if (doc.contains("columns")) return doc.at("columns").get<std::vector<std::string>>();
    if (doc.contains("subsets")) {
        const auto& subsets = doc.at("subsets");
        std::string key = std::to_string(n_features);
        if (n_features <= 0) {
            // default to the largest available subset
            std::size_t best = 0;
            for (auto it = subsets.begin(); it != subsets.end(); ++it) {
                const std::size_t size = std::stoul(it.key());
                if (size > best) {
                    best = size;
                    key = it.key();
                }
            }
        }
        if (!subsets.contains(key))
            throw Error("subset file has no subset of size " + key);
        return subsets.at(key).get<std::vector<std::string>>();
    }
    throw Error("unrecognized subset file: " + path);
}

std::vector<std::size_t> column_indices(const features::DesignMatrix& m,
                                        const std::vector<std::string>& names) {
    std::vector<std::size_t> idx;
    for (const auto& n : names) {
        auto it = std::find(m.names.begin(), m.names.end(), n);
        if (it == m.names.end()) throw Error("unknown column: " + n);
        idx.push_back(static_cast<std::size_t>(it - m.names.begin()));
    }
    return idx;
}

std::vector<std::size_t> parse_sizes(const std::string& text) {
    std::vector<std::size_t> sizes;
    const auto dots = text.find("..");
    if (dots == std::string::npos) {
        sizes.push_back(std::stoul(text));
        return sizes;
    }
    const std::size_t lo = std::stoul(text.substr(0, dots));
    const std::size_t hi = std::stoul(text.substr(dots + 2));
    if (lo == 0 || hi < lo) throw Error("bad sizes range: " + text);
    for (std::size_t s = lo; s <= hi; ++s) sizes.push_back(s);
    return sizes;
}

json scaler_to_json(const features::Scaler& s) {
    return json{{"mean", std::vector<double>(s.mean.data(), s.mean.data() + s.mean.size())},
                {"stddev",
                 std::vector<double>(s.stddev.data(), s.stddev.data() + s.stddev.size())},
                {"scaled", s.scaled}};
}

features::Scaler scaler_from_json(const json& j) {
    features::Scaler s;
    auto mean = j.at("mean").get<std::vector<double>>();
    auto sd = j.at("stddev").get<std::vector<double>>();
    s.mean = Eigen::Map<Eigen::VectorXd>(mean.data(), static_cast<Eigen::Index>(mean.size()));
    s.stddev = Eigen::Map<Eigen::VectorXd>(sd.data(), static_cast<Eigen::Index>(sd.size()));
    s.scaled = j.at("scaled").get<std::vector<bool>>();
    return s;
}

void maybe_dump_matrix(const features::DesignMatrix& m, const std::string& path) {
    if (path.empty()) return;
    std::ofstream out(path);
    if (!out) throw IoFailure(path);
    features::dump_matrix_csv(m, out);
    std::cerr << "wrote " << path << " (" << m.rows() << " x " << m.cols() << ")\n";
}

int run(int argc, char** argv) {
    CLI::App app{"Network travel-time-index forecasting toolkit"};
    app.require_subcommand(1);

    // ---- synth ----
    std::string synth_start = "2010-01-01", synth_end = "2016-06-26";
    std::uint64_t synth_seed = 1;
    std::string synth_tti = "tti.csv", synth_weather = "weather.csv";
    auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
    synth->add_option("--start", synth_start, "first date (YYYY-MM-DD)");
    synth->add_option("--end", synth_end, "last date, inclusive");
    synth->add_option("--seed", synth_seed, "generator seed");
    synth->add_option("--tti", synth_tti, "output TTI csv");
    synth->add_option("--weather", synth_weather, "output weather csv");

    // ---- describe ----
    std::string in_tti, in_weather, out_dir = "figures";
    auto* describe_cmd = app.add_subcommand("describe", "Emit plot-data aggregations");
    describe_cmd->add_option("--in", in_tti, "TTI csv")->required();
    describe_cmd->add_option("--weather", in_weather, "weather csv")->required();
    describe_cmd->add_option("--out", out_dir, "output directory");

    // ---- select ----
    std::string sel_tti, sel_weather, sel_case = "short", sel_sizes = "1..24",
                sel_out = "subsets.json";
    auto* select_cmd = app.add_subcommand("select", "Recursive feature elimination");
    select_cmd->add_option("--in", sel_tti)->required();
    select_cmd->add_option("--weather", sel_weather)->required();
    select_cmd->add_option("--case", sel_case, "short|long");
    select_cmd->add_option("--sizes", sel_sizes, "subset sizes, e.g. 1..24");
    select_cmd->add_option("--out", sel_out, "output json");

    // ---- evaluate ----
    std::string ev_tti, ev_weather, ev_case = "short", ev_features, ev_dump;
    int ev_nfeat = 0, ev_degree = 1, ev_repeats = 10, ev_k = 5;
    std::size_t ev_sample = 1000;
    std::uint64_t ev_seed = 1;
    ModelFlags ev_model;
    auto* eval_cmd = app.add_subcommand("evaluate", "Score one model configuration");
    eval_cmd->add_option("--in", ev_tti)->required();
    eval_cmd->add_option("--weather", ev_weather)->required();
    eval_cmd->add_option("--case", ev_case, "short|long");
    ev_model.attach(eval_cmd);
    eval_cmd->add_option("--degree", ev_degree, "polynomial degree");
    eval_cmd->add_option("--features", ev_features, "subset json from `select`");
    eval_cmd->add_option("--n-features", ev_nfeat, "subset size to use");
    eval_cmd->add_option("--sample-size", ev_sample);
    eval_cmd->add_option("--repeats", ev_repeats);
    eval_cmd->add_option("--k", ev_k);
    eval_cmd->add_option("--seed", ev_seed);
    eval_cmd->add_option("--dump-matrix", ev_dump, "write the design matrix to csv");

    // ---- grid ----
    std::string grid_tti, grid_weather, grid_case = "short", grid_config,
                grid_out = "results.csv";
    int grid_threads = 0;
    std::uint64_t grid_seed = 0;
    auto* grid_cmd = app.add_subcommand("grid", "Full model comparison grid");
    grid_cmd->add_option("--in", grid_tti)->required();
    grid_cmd->add_option("--weather", grid_weather)->required();
    grid_cmd->add_option("--case", grid_case, "short|long");
    grid_cmd->add_option("--config", grid_config, "grid.json configuration");
    grid_cmd->add_option("--out", grid_out, "results csv");
    grid_cmd->add_option("--threads", grid_threads, "worker threads (0 = all)");
    auto* grid_seed_opt = grid_cmd->add_option("--seed", grid_seed, "master seed");

    // ---- report ----
    std::string rep_in = "results.csv", rep_csv = "summary.csv", rep_md = "summary.md";
    auto* report_cmd = app.add_subcommand("report", "Best-per-model summary table");
    report_cmd->add_option("--in", rep_in, "results csv");
    report_cmd->add_option("--out-csv", rep_csv);
    report_cmd->add_option("--out-md", rep_md);

    // ---- train ----
    std::string tr_tti, tr_weather, tr_case = "short", tr_features, tr_out = "model.json",
                tr_dump;
    int tr_nfeat = 0, tr_degree = 1;
    ModelFlags tr_model;
    auto* train_cmd = app.add_subcommand("train", "Fit one model and serialize it");
    train_cmd->add_option("--in", tr_tti)->required();
    train_cmd->add_option("--weather", tr_weather)->required();
    train_cmd->add_option("--case", tr_case, "short|long");
    tr_model.attach(train_cmd);
    train_cmd->add_option("--degree", tr_degree, "polynomial degree");
    train_cmd->add_option("--features", tr_features, "subset json from `select`");
    train_cmd->add_option("--n-features", tr_nfeat, "subset size to use");
    train_cmd->add_option("--out", tr_out, "model document");
    train_cmd->add_option("--dump-matrix", tr_dump, "write the design matrix to csv");

    // ---- predict ----
    std::string pr_tti, pr_weather, pr_model = "model.json", pr_out;
    auto* predict_cmd = app.add_subcommand("predict", "Score new data with a saved model");
    predict_cmd->add_option("--in", pr_tti)->required();
    predict_cmd->add_option("--weather", pr_weather)->required();
    predict_cmd->add_option("--model", pr_model, "model document from `train`");
    predict_cmd->add_option("--out", pr_out, "predictions csv");

    CLI11_PARSE(app, argc, argv);

    if (synth->parsed()) {
        auto data = ingest::synthesize_dataset(parse_date(synth_start), parse_date(synth_end),
                                               synth_seed);
        std::ofstream tout(synth_tti);
        if (!tout) throw IoFailure(synth_tti);
        ingest::write_tti_csv(data.tti, tout);
        std::ofstream wout(synth_weather);
        if (!wout) throw IoFailure(synth_weather);
        ingest::write_weather_csv(data.weather, wout);
        std::cout << "wrote " << data.tti.size() << " observations to " << synth_tti
                  << " and " << data.weather.size() << " days to " << synth_weather << "\n";
        return 0;
    }

    if (describe_cmd->parsed()) {
        auto records = load_joined(in_tti, in_weather);
        auto report = describe::build_report(records);
        describe::emit_report(report, out_dir);
        std::cout << "wrote fig1_daily.csv .. fig5_yearly.csv under " << out_dir << "\n";
        return 0;
    }

    if (select_cmd->parsed()) {
        auto records = load_joined(sel_tti, sel_weather);
        const auto c = features::case_from_name(sel_case);
        auto matrix = features::assemble(records, c);
        auto standardized = features::standardize(matrix);
        auto sizes = parse_sizes(sel_sizes);
        auto sweep = select::rfe_sweep(standardized.matrix, sizes);

        json doc;
        doc["case"] = features::case_name(c);
        doc["sizes"] = sizes;
        json subsets = json::object();
        for (std::size_t i = 0; i < sizes.size(); ++i) {
            std::vector<std::string> names;
            for (std::size_t col : sweep[i].selected) names.push_back(matrix.names[col]);
            subsets[std::to_string(sizes[i])] = names;
        }
        doc["subsets"] = subsets;
        std::vector<std::string> order;
        std::size_t longest = 0;
        for (std::size_t i = 0; i < sweep.size(); ++i)
            if (sweep[i].elimination_order.size() > sweep[longest].elimination_order.size())
                longest = i;
        for (std::size_t col : sweep[longest].elimination_order)
            order.push_back(matrix.names[col]);
        doc["elimination_order"] = order;

        std::ofstream out(sel_out);
        if (!out) throw IoFailure(sel_out);
        out << doc.dump(2) << "\n";
        std::cout << "wrote " << sel_out << "\n";
        return 0;
    }

    if (eval_cmd->parsed()) {
        auto records = load_joined(ev_tti, ev_weather);
        const auto c = features::case_from_name(ev_case);
        auto matrix = features::assemble(records, c);
        auto standardized = features::standardize(matrix);

        features::DesignMatrix base = standardized.matrix;
        if (!ev_features.empty()) {
            auto names = subset_from_file(ev_features, ev_nfeat);
            base = standardized.matrix.select_columns(
                column_indices(standardized.matrix, names));
        }
        maybe_dump_matrix(base, ev_dump);

        evaluate::RepeatedCvOptions opts;
        opts.sample_size = ev_sample;
        opts.repeats = ev_repeats;
        opts.k = ev_k;
        opts.seed = ev_seed;
        const auto spec = ev_model.spec();
        const regress::ModelSpec specs[1] = {spec};
        auto outcome = evaluate::repeated_sampled_cv_multi(base, specs, opts, ev_degree);
        if (!outcome[0].error.empty()) throw Error(outcome[0].error);
        const auto& res = *outcome[0].result;

        json doc;
        doc["case"] = features::case_name(c);
        doc["model"] = regress::family_name(spec.family);
        doc["params"] = spec.params_json();
        doc["n_features"] = base.cols();
        doc["degree"] = ev_degree;
        doc["mean_score"] = res.mean_score;
        doc["per_repeat"] = res.per_repeat;
        doc["sample_size"] = opts.sample_size;
        doc["repeats"] = opts.repeats;
        doc["k"] = opts.k;
        doc["seed"] = opts.seed;
        std::cout << doc.dump(2) << "\n";
        return 0;
    }

    if (grid_cmd->parsed()) {
        auto records = load_joined(grid_tti, grid_weather);
        const auto c = features::case_from_name(grid_case);
        auto matrix = features::assemble(records, c);

        experiment::GridConfig cfg;
        if (grid_config.empty()) {
            cfg = experiment::GridConfig::defaults(c);
        } else {
            std::ifstream in(grid_config);
            if (!in) throw IoFailure(grid_config);
            cfg = experiment::GridConfig::from_json(json::parse(in));
            cfg.prediction_case = c;
        }
        if (grid_threads > 0) cfg.threads = grid_threads;
        if (grid_seed_opt->count() > 0) cfg.seed = grid_seed;

        const auto t0 = std::chrono::steady_clock::now();
        auto results = experiment::run_grid(matrix, cfg);
        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

        std::size_t ok = 0, skipped = 0, failed = 0;
        for (const auto& r : results) {
            if (r.status == experiment::CellStatus::ok) ++ok;
            if (r.status == experiment::CellStatus::skipped) ++skipped;
            if (r.status == experiment::CellStatus::failed) {
                ++failed;
                std::cerr << "failed cell: " << regress::family_name(r.spec.family) << " "
                          << r.spec.param_label() << " n=" << r.n_features << " d=" << r.degree
                          << ": " << r.note << "\n";
            }
        }
        std::ofstream out(grid_out);
        if (!out) throw IoFailure(grid_out);
        experiment::write_results_csv(results, out);
        std::cout << "grid finished in " << elapsed << " s: " << ok << " cells, " << skipped
                  << " skipped, " << failed << " failed -> " << grid_out << "\n";
        experiment::write_summary_markdown(experiment::best_per_model(results), std::cout);
        return 0;
    }

    if (report_cmd->parsed()) {
        std::ifstream in(rep_in);
        if (!in) throw IoFailure(rep_in);
        auto results = experiment::read_results_csv(in);
        auto rows = experiment::best_per_model(results);
        std::ofstream csv(rep_csv);
        if (!csv) throw IoFailure(rep_csv);
        experiment::write_summary_csv(rows, csv);
        std::ofstream md(rep_md);
        if (!md) throw IoFailure(rep_md);
        experiment::write_summary_markdown(rows, md);
        experiment::write_summary_markdown(rows, std::cout);
        return 0;
    }

    if (train_cmd->parsed()) {
        auto records = load_joined(tr_tti, tr_weather);
        const auto c = features::case_from_name(tr_case);
        auto matrix = features::assemble(records, c);
        auto standardized = features::standardize(matrix);

        features::DesignMatrix base = standardized.matrix;
        if (!tr_features.empty()) {
            auto names = subset_from_file(tr_features, tr_nfeat);
            base = standardized.matrix.select_columns(
                column_indices(standardized.matrix, names));
        }
        auto expanded = features::polynomial_expand(base, tr_degree);
        auto final_std = features::standardize(expanded);
        maybe_dump_matrix(final_std.matrix, tr_dump);

        auto model = regress::fit(tr_model.spec(), final_std.matrix.X, final_std.matrix.y);
        const double train_r2 =
            evaluate::r2_score(final_std.matrix.y, model.predict(final_std.matrix.X));

        json doc;
        doc["version"] = 1;
        doc["case"] = features::case_name(c);
        doc["columns"] = base.names;
        doc["degree"] = tr_degree;
        doc["scaler93"] = scaler_to_json(standardized.scaler);
        doc["scaler_expanded"] = scaler_to_json(final_std.scaler);
        doc["model"] = model.to_json();
        std::ofstream out(tr_out);
        if (!out) throw IoFailure(tr_out);
        out << doc.dump() << "\n";
        std::cout << "trained " << tr_model.model << " on " << final_std.matrix.rows()
                  << " rows (training R2 " << train_r2 << ") -> " << tr_out << "\n";
        return 0;
    }

    if (predict_cmd->parsed()) {
        std::ifstream min(pr_model);
        if (!min) throw IoFailure(pr_model);
        json doc = json::parse(min);
        if (doc.at("version").get<int>() != 1) throw Error("unsupported model document");

        auto records = load_joined(pr_tti, pr_weather);
        const auto c = features::case_from_name(doc.at("case").get<std::string>());
        auto matrix = features::assemble(records, c);

        auto scaler93 = scaler_from_json(doc.at("scaler93"));
        features::DesignMatrix scaled = matrix;
        scaled.X = scaler93.apply(matrix.X);
        auto base = scaled.select_columns(
            column_indices(scaled, doc.at("columns").get<std::vector<std::string>>()));
        auto expanded = features::polynomial_expand(base, doc.at("degree").get<int>());
        auto scaler_expanded = scaler_from_json(doc.at("scaler_expanded"));
        const Eigen::MatrixXd Z = scaler_expanded.apply(expanded.X);

        auto model = regress::FittedModel::from_json(doc.at("model"));
        const Eigen::VectorXd pred = model.predict(Z);
        const double r2 = evaluate::r2_score(expanded.y, pred);
        std::cout << "R2 on " << pred.size() << " rows: " << r2 << "\n";

        if (!pr_out.empty()) {
            std::ofstream out(pr_out);
            if (!out) throw IoFailure(pr_out);
            out << "timestamp,actual,predicted\n";
            out.precision(12);
            for (Eigen::Index i = 0; i < pred.size(); ++i)
                out << format_timestamp(expanded.timestamps[static_cast<std::size_t>(i)])
                    << ',' << expanded.y(i) << ',' << pred(i) << '\n';
            std::cout << "wrote " << pr_out << "\n";
        }
        return 0;
    }

    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

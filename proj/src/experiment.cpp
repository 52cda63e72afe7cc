#include "tti/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <istream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "tti/errors.hpp"
#include "tti/rng.hpp"

namespace tti::experiment {

GridConfig GridConfig::defaults(features::Case c) {
    GridConfig cfg;
    cfg.prediction_case = c;
    for (int s = 1; s <= 24; ++s) cfg.sizes.push_back(s);
    for (int d = 1; d <= 5; ++d) cfg.degrees.push_back(d);
    return cfg;
}

nlohmann::json GridConfig::to_json() const {
    nlohmann::json j;
    j["case"] = features::case_name(prediction_case);
    j["families"] = {
        {"linear", nlohmann::json::object()},
        {"ridge", {{"alphas", ridge_alphas}}},
        {"lasso", {{"alphas", lasso_alphas}, {"tol", lasso_tol}, {"max_iter", lasso_max_iter}}},
        {"svr",
         {{"C", svr_C},
          {"epsilon", svr_epsilon},
          {"kernel", svr_kernel == regress::Kernel::rbf ? "rbf" : "linear"},
          {"max_iter", svr_max_iter}}},
        {"tree", {{"max_depth", tree_depths}, {"min_leaf", tree_min_leaf}}}};
    if (!include_linear) j["families"].erase("linear");
    j["sizes"] = sizes;
    j["degrees"] = degrees;
    j["sample_size"] = sample_size;
    j["repeats"] = repeats;
    j["k"] = k;
    j["seed"] = seed;
    j["expansion_cap"] = expansion_cap;
    j["threads"] = threads;
    return j;
}

GridConfig GridConfig::from_json(const nlohmann::json& j) {
    GridConfig cfg = defaults(
        features::case_from_name(j.value("case", std::string("short_term"))));
    if (j.contains("families")) {
        const auto& fams = j.at("families");
        cfg.include_linear = fams.contains("linear");
        if (fams.contains("ridge"))
            cfg.ridge_alphas = fams.at("ridge").value("alphas", cfg.ridge_alphas);
        else
            cfg.ridge_alphas.clear();
        if (fams.contains("lasso")) {
            cfg.lasso_alphas = fams.at("lasso").value("alphas", cfg.lasso_alphas);
            cfg.lasso_tol = fams.at("lasso").value("tol", cfg.lasso_tol);
            cfg.lasso_max_iter = fams.at("lasso").value("max_iter", cfg.lasso_max_iter);
        } else {
            cfg.lasso_alphas.clear();
        }
        if (fams.contains("svr")) {
            cfg.svr_C = fams.at("svr").value("C", cfg.svr_C);
            cfg.svr_epsilon = fams.at("svr").value("epsilon", cfg.svr_epsilon);
            cfg.svr_kernel = fams.at("svr").value("kernel", std::string("rbf")) == "rbf"
                                 ? regress::Kernel::rbf
                                 : regress::Kernel::linear;
            cfg.svr_max_iter = fams.at("svr").value("max_iter", cfg.svr_max_iter);
        } else {
            cfg.svr_C.clear();
            cfg.svr_epsilon.clear();
        }
        if (fams.contains("tree")) {
            cfg.tree_depths = fams.at("tree").value("max_depth", cfg.tree_depths);
            cfg.tree_min_leaf = fams.at("tree").value("min_leaf", cfg.tree_min_leaf);
        } else {
            cfg.tree_depths.clear();
        }
    }
    cfg.sizes = j.value("sizes", cfg.sizes);
    cfg.degrees = j.value("degrees", cfg.degrees);
    cfg.sample_size = j.value("sample_size", cfg.sample_size);
    cfg.repeats = j.value("repeats", cfg.repeats);
    cfg.k = j.value("k", cfg.k);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.expansion_cap = j.value("expansion_cap", cfg.expansion_cap);
    cfg.threads = j.value("threads", cfg.threads);
    for (int d : cfg.degrees)
        if (d < 1 || d > 5) throw DegreeOutOfRange(d);
    for (int s : cfg.sizes)
        if (s < 1) throw Error("subset sizes must be positive");
    return cfg;
}

std::vector<regress::ModelSpec> GridConfig::spec_grid() const {
    std::vector<regress::ModelSpec> specs;
    if (include_linear) specs.push_back(regress::ModelSpec::linear());
    for (double a : ridge_alphas) specs.push_back(regress::ModelSpec::ridge(a));
    for (double a : lasso_alphas) {
        auto s = regress::ModelSpec::lasso(a, lasso_tol, lasso_max_iter);
        specs.push_back(s);
    }
    for (double c : svr_C)
        for (double e : svr_epsilon) {
            auto s = regress::ModelSpec::svr(c, e, svr_kernel);
            s.max_iter = svr_max_iter;
            specs.push_back(s);
        }
    for (int d : tree_depths) specs.push_back(regress::ModelSpec::tree(d, tree_min_leaf));
    for (const auto& s : specs) s.validate();
    return specs;
}

std::uint64_t group_seed(std::uint64_t master, features::Case c, int n_features, int degree) {
    return derive_seed(master, {c == features::Case::short_term ? 0x53u : 0x4cu,
                                static_cast<std::uint64_t>(n_features),
                                static_cast<std::uint64_t>(degree)});
}

namespace {

struct GroupTask {
    int size = 0;
    int degree = 1;
    std::size_t width = 0;
    std::size_t first_cell = 0;   // index of the group's first cell in `cells`
    std::size_t sweep_index = 0;  // which RFE result holds this group's subset
};

}  // namespace

std::vector<ExperimentResult> run_grid(const features::DesignMatrix& matrix93,
                                       const GridConfig& config) {
    const auto specs = config.spec_grid();
    if (specs.empty()) throw Error("grid has no model specs");

    // One standardization and one RFE sweep feed every cell.
    const auto standardized = features::standardize(matrix93);
    std::vector<std::size_t> sweep_sizes(config.sizes.begin(), config.sizes.end());
    const auto sweep = select::rfe_sweep(standardized.matrix, sweep_sizes);

    // Enumerate cells: (size, degree) groups in order, specs within a group.
    std::vector<ExperimentResult> cells;
    std::vector<GroupTask> groups;
    for (std::size_t gi = 0; gi < sweep_sizes.size(); ++gi) {
        for (int degree : config.degrees) {
            GroupTask g;
            g.size = config.sizes[gi];
            g.degree = degree;
            g.width = features::expanded_width(static_cast<std::size_t>(g.size), degree);
            g.first_cell = cells.size();
            g.sweep_index = gi;
            const bool skip = g.width > config.expansion_cap;
            for (const auto& spec : specs) {
                ExperimentResult cell;
                cell.prediction_case = config.prediction_case;
                cell.spec = spec;
                cell.n_features = g.size;
                cell.degree = degree;
                cell.per_repeat.assign(static_cast<std::size_t>(config.repeats), 0.0);
                if (skip) {
                    cell.status = CellStatus::skipped;
                    cell.note = "expanded width " + std::to_string(g.width) +
                                " exceeds cap " + std::to_string(config.expansion_cap);
                }
                cells.push_back(std::move(cell));
            }
            if (!skip) groups.push_back(g);
        }
    }

    // Work units: one (group, repeat) pair. Scheduled widest first so peak
    // memory stays bounded and the tail is short.
    struct Unit {
        std::size_t group;
        int repeat;
    };
    std::vector<Unit> units;
    units.reserve(groups.size() * static_cast<std::size_t>(config.repeats));
    {
        std::vector<std::size_t> order(groups.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return groups[a].width > groups[b].width;
        });
        for (std::size_t g : order)
            for (int r = 0; r < config.repeats; ++r) units.push_back({g, r});
    }

    // Group submatrices built on demand, shared by the group's repeats.
    std::vector<features::DesignMatrix> group_matrix(groups.size());
    std::vector<std::once_flag> group_once(groups.size());

    // Disjoint (cell, repeat) slots so worker writes never race.
    std::vector<std::vector<double>> seconds_slots(
        cells.size(), std::vector<double>(static_cast<std::size_t>(config.repeats), 0.0));

    std::mutex failure_mutex;
    auto run_unit = [&](const Unit& u) {
        const GroupTask& g = groups[u.group];
        std::call_once(group_once[u.group], [&] {
            const auto& subset = sweep[g.sweep_index].selected;
            group_matrix[u.group] = standardized.matrix.select_columns(subset);
        });

        evaluate::RepeatedCvOptions opts;
        opts.sample_size = config.sample_size;
        opts.repeats = config.repeats;
        opts.k = config.k;
        opts.seed = group_seed(config.seed, config.prediction_case, g.size, g.degree);

        try {
            auto rep = evaluate::evaluate_repeat(group_matrix[u.group], specs, opts, u.repeat,
                                                 g.degree, config.expansion_cap);
            for (std::size_t s = 0; s < specs.size(); ++s) {
                ExperimentResult& cell = cells[g.first_cell + s];
                seconds_slots[g.first_cell + s][static_cast<std::size_t>(u.repeat)] =
                    rep.fit_seconds[s];
                if (!rep.errors[s].empty()) {
                    std::lock_guard<std::mutex> lock(failure_mutex);
                    cell.status = CellStatus::failed;
                    if (cell.note.empty())
                        cell.note = "repeat " + std::to_string(u.repeat) + ": " + rep.errors[s];
                    continue;
                }
                cell.per_repeat[static_cast<std::size_t>(u.repeat)] = rep.scores[s]->mean;
            }
        } catch (const std::exception& e) {
            std::lock_guard<std::mutex> lock(failure_mutex);
            for (std::size_t s = 0; s < specs.size(); ++s) {
                ExperimentResult& cell = cells[g.first_cell + s];
                cell.status = CellStatus::failed;
                if (cell.note.empty())
                    cell.note = "repeat " + std::to_string(u.repeat) + ": " + e.what();
            }
        }
    };

    int n_threads = config.threads > 0 ? config.threads
                                       : static_cast<int>(std::thread::hardware_concurrency());
    if (n_threads < 1) n_threads = 1;
    if (n_threads == 1) {
        for (const Unit& u : units) run_unit(u);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> workers;
        for (int t = 0; t < n_threads; ++t) {
            workers.emplace_back([&] {
                while (true) {
                    const std::size_t i = next.fetch_add(1);
                    if (i >= units.size()) return;
                    run_unit(units[i]);
                }
            });
        }
        for (auto& w : workers) w.join();
    }

    for (std::size_t c = 0; c < cells.size(); ++c) {
        for (double v : seconds_slots[c]) cells[c].seconds += v;
        if (cells[c].status != CellStatus::ok) continue;
        double sum = 0;
        for (double v : cells[c].per_repeat) sum += v;
        cells[c].mean_score = sum / static_cast<double>(cells[c].per_repeat.size());
    }
    return cells;
}

std::vector<SummaryRow> best_per_model(const std::vector<ExperimentResult>& results) {
    const regress::Family families[] = {regress::Family::linear, regress::Family::ridge,
                                        regress::Family::lasso, regress::Family::svr,
                                        regress::Family::tree};
    std::vector<SummaryRow> rows;
    for (regress::Family fam : families) {
        const ExperimentResult* best = nullptr;
        for (const auto& r : results) {
            if (r.spec.family != fam || r.status != CellStatus::ok) continue;
            if (best == nullptr) {
                best = &r;
                continue;
            }
            const bool better =
                r.mean_score > best->mean_score ||
                (r.mean_score == best->mean_score &&
                 (r.n_features < best->n_features ||
                  (r.n_features == best->n_features && r.degree < best->degree)));
            if (better) best = &r;
        }
        if (best == nullptr) throw MissingFamily(regress::family_name(fam));
        SummaryRow row;
        row.family = fam;
        row.params = best->spec.param_label();
        row.n_features = best->n_features;
        row.degree = best->degree;
        row.score = best->mean_score;
        rows.push_back(row);
    }
    std::stable_sort(rows.begin(), rows.end(),
                     [](const SummaryRow& a, const SummaryRow& b) { return a.score > b.score; });
    return rows;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

namespace {

std::string csv_quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::vector<std::string> parse_csv_row(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            cells.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    cells.push_back(std::move(cur));
    return cells;
}

}  // namespace

void write_results_csv(const std::vector<ExperimentResult>& results, std::ostream& out) {
    out << "case,family,params,n_features,degree,mean_score,seconds\n";
    out.precision(12);
    for (const auto& r : results) {
        out << features::case_name(r.prediction_case) << ','
            << regress::family_name(r.spec.family) << ','
            << csv_quote(r.spec.params_json().dump()) << ',' << r.n_features << ','
            << r.degree << ',';
        if (r.status == CellStatus::ok) out << r.mean_score;
        out << ',' << r.seconds << '\n';
    }
}

std::vector<ExperimentResult> read_results_csv(std::istream& in) {
    std::vector<ExperimentResult> results;
    std::string line;
    if (!std::getline(in, line)) throw Error("results csv: missing header");
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cells = parse_csv_row(line);
        if (cells.size() != 7) throw MalformedRow(line_no, "expected 7 cells");
        ExperimentResult r;
        r.prediction_case = features::case_from_name(cells[0]);
        const auto family = regress::family_from_name(cells[1]);
        const auto params = nlohmann::json::parse(cells[2]);
        switch (family) {
            case regress::Family::linear: r.spec = regress::ModelSpec::linear(); break;
            case regress::Family::ridge:
                r.spec = regress::ModelSpec::ridge(params.at("alpha").get<double>());
                break;
            case regress::Family::lasso:
                r.spec = regress::ModelSpec::lasso(params.at("alpha").get<double>());
                break;
            case regress::Family::svr:
                r.spec = regress::ModelSpec::svr(
                    params.at("C").get<double>(), params.at("epsilon").get<double>(),
                    params.value("kernel", "rbf") == std::string("rbf")
                        ? regress::Kernel::rbf
                        : regress::Kernel::linear);
                break;
            case regress::Family::tree:
                r.spec = regress::ModelSpec::tree(params.at("max_depth").get<int>(),
                                                  params.value("min_leaf", 1));
                break;
        }
        r.n_features = std::stoi(cells[3]);
        r.degree = std::stoi(cells[4]);
        if (cells[5].empty()) {
            r.status = CellStatus::skipped;
        } else {
            r.status = CellStatus::ok;
            r.mean_score = std::stod(cells[5]);
        }
        r.seconds = cells[6].empty() ? 0.0 : std::stod(cells[6]);
        results.push_back(std::move(r));
    }
    return results;
}

void write_summary_csv(const std::vector<SummaryRow>& rows, std::ostream& out) {
    out << "model,best_parameters,n_variables,best_score\n";
    out.precision(6);
    for (const auto& r : rows) {
        out << regress::family_name(r.family) << ',' << csv_quote(r.params) << ','
            << r.n_features << ',' << r.score << '\n';
    }
}

void write_summary_markdown(const std::vector<SummaryRow>& rows, std::ostream& out) {
    out << "| Model | Best parameters | # Variables | Best score (R2) |\n";
    out << "|---|---|---|---|\n";
    out.precision(4);
    for (const auto& r : rows) {
        out << "| " << regress::family_name(r.family) << " | " << r.params << " | "
            << r.n_features << " | " << r.score << " |\n";
    }
}

}  // namespace tti::experiment

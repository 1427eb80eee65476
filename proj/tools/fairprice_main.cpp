#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "fairprice/config.hpp"
#include "fairprice/dataset.hpp"
#include "fairprice/glm.hpp"
#include "fairprice/metrics.hpp"
#include "fairprice/mitigation_post.hpp"
#include "fairprice/scenario.hpp"
#include "fairprice/synthgen.hpp"

namespace fs = std::filesystem;
using namespace fairprice;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

struct GlobalArgs {
    std::string config_path;
    std::optional<uint64_t> seed;
    std::optional<std::string> out;
    std::optional<std::size_t> workers;
};

RunConfig load_config(const GlobalArgs& g, bool required) {
    RunConfig cfg;
    if (!g.config_path.empty()) {
        cfg = RunConfig::from_file(g.config_path);
    } else if (required) {
        throw std::invalid_argument("--config is required for this command");
    } else {
        cfg.seed = 1;
    }
    if (g.seed) {
        cfg.seed = *g.seed;
        cfg.synth.seed = *g.seed;
        cfg.smote.seed = *g.seed;
    }
    if (g.out) cfg.out_dir = *g.out;
    if (g.workers) {
        cfg.workers = *g.workers;
        cfg.redist.workers = *g.workers;
        cfg.metrics.workers = *g.workers;
    }
    cfg.validate();
    fs::create_directories(cfg.out_dir);
    return cfg;
}

Portfolio load_data(const RunConfig& cfg, const std::string& path) {
    if (cfg.schema.empty())
        throw std::invalid_argument("config has no schema block; cannot load " + path);
    const LoadResult r = load_csv(path, cfg.schema);
    if (r.rows_rejected_missing > 0)
        std::cout << "note: rejected " << r.rows_rejected_missing << " rows with missing cells\n";
    return r.portfolio;
}

std::vector<double> read_predictions(const std::string& path, std::size_t expected_rows) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open predictions file: " + path);
    std::string header;
    if (!std::getline(in, header)) throw std::invalid_argument("empty predictions file: " + path);
    // locate the premium column (fall back to the last column)
    std::vector<std::string> names;
    {
        std::stringstream ss(header);
        std::string cell;
        while (std::getline(ss, cell, ',')) names.push_back(cell);
    }
    std::size_t col = names.size() - 1;
    for (std::size_t c = 0; c < names.size(); ++c)
        if (names[c] == "premium") col = c;

    std::vector<double> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::size_t c = 0;
        double value = 0.0;
        while (std::getline(ss, cell, ',')) {
            if (c == col) value = std::stod(cell);
            ++c;
        }
        out.push_back(value);
    }
    if (out.size() != expected_rows)
        throw std::invalid_argument("predictions file has " + std::to_string(out.size()) +
                                    " rows, expected " + std::to_string(expected_rows));
    return out;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::invalid_argument("cannot write file: " + path);
    out << text;
    if (text.empty() || text.back() != '\n') out << '\n';
}

int cmd_synth(const GlobalArgs& g, std::optional<std::size_t> n_override) {
    RunConfig cfg = load_config(g, false);
    if (n_override) cfg.synth.n = *n_override;
    cfg.synth.validate();
    const SynthResult r = generate(cfg.synth);
    const std::string data_path = cfg.out_dir + "/portfolio.csv";
    const std::string truth_path = cfg.out_dir + "/truth.csv";
    save_csv(r.portfolio, data_path);
    save_truth_csv(r, truth_path);
    std::cout << "wrote " << data_path << " (" << r.portfolio.n() << " rows) and " << truth_path
              << "\n";
    return kExitOk;
}

int cmd_fit(const GlobalArgs& g, const std::string& data_path) {
    const RunConfig cfg = load_config(g, true);
    const Portfolio p = load_data(cfg, data_path);
    const FittedGLM model = fit_glm(p, cfg.model);
    if (!model.report().converged)
        std::cout << "warning: IRLS did not converge in " << model.report().iterations
                  << " iterations\n";
    write_text(cfg.out_dir + "/model.json", model.to_json());

    const auto response = model.predict(p);
    const auto premium = model.predict_total(p);
    std::ofstream pred(cfg.out_dir + "/predictions.csv");
    pred.precision(17);
    pred << "row,response,premium\n";
    for (std::size_t i = 0; i < p.n(); ++i)
        pred << i << ',' << response[i] << ',' << premium[i] << '\n';
    std::cout << "wrote " << cfg.out_dir << "/model.json and predictions.csv (deviance="
              << model.report().deviance << ", iterations=" << model.report().iterations << ")\n";
    return kExitOk;
}

int cmd_audit(const GlobalArgs& g, const std::string& data_path,
              const std::string& predictions_path) {
    const RunConfig cfg = load_config(g, true);
    const Portfolio p = load_data(cfg, data_path);

    std::vector<double> values;
    std::string label;
    if (predictions_path.empty()) {
        values = p.require_role(ColumnRole::target).num;  // historical audit
        label = "historical_y";
    } else {
        values = read_predictions(predictions_path, p.n());
        label = "predictions";
    }

    const FairnessPanel panel = compute_panel(p, values, cfg.metrics);
    write_text(cfg.out_dir + "/panel.json", panel_to_json(panel));
    std::ostringstream csv;
    csv << panel_csv_header() << '\n' << panel_csv_row(label, panel) << '\n';
    write_text(cfg.out_dir + "/panel.csv", csv.str());
    std::cout << panel_csv_header() << '\n' << panel_csv_row(label, panel) << '\n';
    return kExitOk;
}

struct MitigateOverrides {
    std::optional<double> alpha, eta, zeta, st, ft;
    std::optional<std::size_t> k;
};

int cmd_mitigate(const GlobalArgs& g, const std::string& method_name,
                 const std::string& data_path, const MitigateOverrides& ov) {
    const MitigationMethod method = mitigation_method_from_string(method_name);
    RunConfig cfg = load_config(g, true);
    if (ov.alpha) cfg.corr_alpha = *ov.alpha;
    if (ov.eta) cfg.redist.eta = *ov.eta;
    if (ov.zeta) {
        cfg.redist.zeta = *ov.zeta;
        cfg.eg_constraint.zeta = *ov.zeta;
    }
    if (ov.st) cfg.smote.st = *ov.st;
    if (ov.ft) cfg.smote.ft = *ov.ft;
    if (ov.k) {
        cfg.redist.k = *ov.k;
        cfg.metrics.flip_k = *ov.k;
    }

    const Portfolio p = load_data(cfg, data_path);
    const auto [train, test] = split(p, cfg.test_fraction, cfg.seed);

    const ScenarioPipeline pipeline = cfg.pipeline_for(method);
    const ScenarioOutcome outcome = evaluate(pipeline, train, test);
    if (outcome.scenario.failed)
        throw std::runtime_error("mitigation '" + method_name +
                                 "' failed: " + outcome.scenario.failure_cause);

    const std::string record = cfg.out_dir + "/scenario_" + method_name + ".json";
    write_text(record, scenarios_to_json({outcome.scenario}));

    if (outcome.model)
        write_text(cfg.out_dir + "/model_" + method_name + ".json", outcome.model->to_json());
    if (outcome.transformed_train) {
        const bool provenance = method == MitigationMethod::fair_smote;
        save_csv(*outcome.transformed_train, cfg.out_dir + "/train_" + method_name + ".csv",
                 provenance);
    }
    if (outcome.redistribution) {
        const auto base = outcome.model->predict_total(test);
        save_correction_table(*outcome.redistribution, base,
                              cfg.out_dir + "/correction_table.csv");
        std::ofstream trace(cfg.out_dir + "/redist_trace.log");
        trace.precision(17);
        std::size_t it = 1;
        for (const auto& step : outcome.redistribution->trace)
            trace << "[redist] iter=" << it++ << " group=" << step.group
                  << " sigma_before=" << step.sigma_before
                  << " sigma_after=" << step.sigma_after_correction
                  << " sigma_opposite=" << step.sigma_opposite << '\n';
    }
    if (outcome.eg_report) {
        std::ofstream trace(cfg.out_dir + "/eg_trace.log");
        trace.precision(17);
        std::size_t it = 1;
        for (const auto& row : outcome.eg_report->trace)
            trace << "[eg] iter=" << it++ << " lambda0=" << row[0] << " lambda1=" << row[1]
                  << " gap=" << row[2] << '\n';
    }

    std::cout << "scenario " << outcome.scenario.id << ": hgr=" << outcome.scenario.fairness
              << " rmse=" << outcome.scenario.performance << " lr=" << outcome.scenario.lr
              << " -> " << record << '\n';
    return kExitOk;
}

int cmd_compare(const GlobalArgs& g, const std::vector<std::string>& records) {
    RunConfig cfg = load_config(g, false);
    std::vector<MitigationScenario> merged;
    for (const auto& path : records) {
        std::ifstream in(path);
        if (!in) throw std::invalid_argument("cannot open scenario record: " + path);
        std::ostringstream buf;
        buf << in.rdbuf();
        try {
            for (auto& s : scenarios_from_json(buf.str())) merged.push_back(std::move(s));
        } catch (const std::exception& e) {
            throw std::invalid_argument("malformed scenario record " + path + ": " + e.what());
        }
    }
    if (merged.empty()) throw std::invalid_argument("no scenarios to compare");

    const ReportPaths paths = write_report(merged, cfg.out_dir + "/compare");
    std::sort(merged.begin(), merged.end(),
              [](const MitigationScenario& a, const MitigationScenario& b) { return a.id < b.id; });
    const auto front = pareto_front(merged);
    std::cout << "id,hgr,rmse,lr,nondominated\n";
    std::cout.precision(17);
    for (std::size_t i = 0; i < merged.size(); ++i) {
        if (merged[i].failed) {
            std::cout << merged[i].id << ",failed,,,0\n";
            continue;
        }
        std::cout << merged[i].id << ',' << merged[i].fairness << ',' << merged[i].performance
                  << ',' << merged[i].lr << ',' << (front[i] ? 1 : 0) << '\n';
    }
    std::cout << "wrote " << paths.csv << ", " << paths.json << ", " << paths.plot_csv << '\n';
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fairness measurement and mitigation toolkit for regression pricing"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags may follow the subcommand

    GlobalArgs g;
    app.add_option("--config", g.config_path, "toolkit config file (JSON)");
    uint64_t seed_val = 0;
    auto* seed_opt = app.add_option("--seed", seed_val, "override config seed");
    std::string out_val;
    auto* out_opt = app.add_option("--out", out_val, "override output directory");
    std::size_t workers_val = 0;
    auto* workers_opt = app.add_option("--workers", workers_val, "worker pool size");

    auto* synth = app.add_subcommand("synth", "generate a synthetic portfolio");
    std::size_t synth_n = 0;
    auto* synth_n_opt = synth->add_option("--n", synth_n, "row count");

    auto* fit = app.add_subcommand("fit", "fit the configured pricing model");
    std::string fit_data;
    fit->add_option("--data", fit_data, "portfolio CSV")->required();

    auto* audit = app.add_subcommand("audit", "compute the fairness panel");
    std::string audit_data, audit_preds;
    audit->add_option("--data", audit_data, "portfolio CSV")->required();
    audit->add_option("--predictions", audit_preds, "predictions CSV (absent: audit historical y)");

    auto* mitigate = app.add_subcommand("mitigate", "run one mitigation end to end");
    std::string mit_method, mit_data;
    mitigate->add_option("method", mit_method, "delete|corr|smote|eg|redist|avg")->required();
    mitigate->add_option("--data", mit_data, "portfolio CSV")->required();
    MitigateOverrides ov;
    double ov_alpha = 0, ov_eta = 0, ov_zeta = 0, ov_st = 0, ov_ft = 0;
    std::size_t ov_k = 0;
    auto* oa = mitigate->add_option("--alpha", ov_alpha, "correlation remover alpha");
    auto* oe = mitigate->add_option("--eta", ov_eta, "redistribution eta");
    auto* oz = mitigate->add_option("--zeta", ov_zeta, "redistribution / EG zeta");
    auto* os = mitigate->add_option("--st", ov_st, "fair-SMOTE st");
    auto* of = mitigate->add_option("--ft", ov_ft, "fair-SMOTE ft");
    auto* ok = mitigate->add_option("--k", ov_k, "neighbor count");

    auto* compare = app.add_subcommand("compare", "merge scenario records into a Pareto report");
    std::vector<std::string> compare_records;
    compare->add_option("records", compare_records, "scenario JSON files")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    if (*seed_opt) g.seed = seed_val;
    if (*out_opt) g.out = out_val;
    if (*workers_opt) g.workers = workers_val;
    if (*oa) ov.alpha = ov_alpha;
    if (*oe) ov.eta = ov_eta;
    if (*oz) ov.zeta = ov_zeta;
    if (*os) ov.st = ov_st;
    if (*of) ov.ft = ov_ft;
    if (*ok) ov.k = ov_k;

    try {
        if (synth->parsed())
            return cmd_synth(g, *synth_n_opt ? std::optional<std::size_t>(synth_n) : std::nullopt);
        if (fit->parsed()) return cmd_fit(g, fit_data);
        if (audit->parsed()) return cmd_audit(g, audit_data, audit_preds);
        if (mitigate->parsed()) return cmd_mitigate(g, mit_method, mit_data, ov);
        if (compare->parsed()) return cmd_compare(g, compare_records);
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNumeric;
    }
    return kExitConfig;
}

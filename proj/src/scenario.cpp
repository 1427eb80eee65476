#include "fairprice/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "fairprice/pareto.hpp"

#include "json.hpp"

namespace fairprice {

std::string to_string(MitigationMethod m) {
    switch (m) {
        case MitigationMethod::reference: return "reference";
        case MitigationMethod::delete_features: return "delete";
        case MitigationMethod::corr_remover: return "corr";
        case MitigationMethod::fair_smote: return "smote";
        case MitigationMethod::exponentiated_gradient: return "eg";
        case MitigationMethod::redistribution: return "redist";
        case MitigationMethod::output_averaging: return "avg";
    }
    return "?";
}

MitigationMethod mitigation_method_from_string(const std::string& s) {
    if (s == "reference") return MitigationMethod::reference;
    if (s == "delete") return MitigationMethod::delete_features;
    if (s == "corr") return MitigationMethod::corr_remover;
    if (s == "smote") return MitigationMethod::fair_smote;
    if (s == "eg") return MitigationMethod::exponentiated_gradient;
    if (s == "redist") return MitigationMethod::redistribution;
    if (s == "avg") return MitigationMethod::output_averaging;
    throw std::invalid_argument("unknown mitigation method: " + s +
                                " (valid: reference, delete, corr, smote, eg, redist, avg)");
}

std::string to_string(PipelineStage s) {
    switch (s) {
        case PipelineStage::pre: return "pre";
        case PipelineStage::in: return "in";
        case PipelineStage::post: return "post";
        case PipelineStage::reference: return "reference";
    }
    return "?";
}

PipelineStage ScenarioPipeline::stage() const {
    switch (method) {
        case MitigationMethod::reference: return PipelineStage::reference;
        case MitigationMethod::delete_features:
        case MitigationMethod::corr_remover:
        case MitigationMethod::fair_smote: return PipelineStage::pre;
        case MitigationMethod::exponentiated_gradient: return PipelineStage::in;
        case MitigationMethod::redistribution:
        case MitigationMethod::output_averaging: return PipelineStage::post;
    }
    return PipelineStage::reference;
}

namespace {

std::vector<std::string> without(const std::vector<std::string>& all,
                                 const std::vector<std::string>& drop) {
    std::vector<std::string> out;
    for (const auto& f : all)
        if (std::find(drop.begin(), drop.end(), f) == drop.end()) out.push_back(f);
    if (out.empty()) throw std::invalid_argument("deletion scenario removes every feature");
    return out;
}

}  // namespace

ScenarioOutcome evaluate(const ScenarioPipeline& pipeline, const Portfolio& train,
                         const Portfolio& test) {
    if (test.n() == 0) throw std::invalid_argument("evaluate: empty test set");
    ScenarioOutcome out;
    MitigationScenario& sc = out.scenario;
    sc.id = pipeline.id;
    sc.description = pipeline.description;
    sc.stage = pipeline.stage();

    try {
        GlmSpec spec = pipeline.glm;
        std::vector<double> predictions;  // premium scale on test rows

        switch (pipeline.method) {
            case MitigationMethod::reference: {
                FittedGLM model = fit_glm(train, spec);
                predictions = model.predict_total(test);
                out.model = std::move(model);
                break;
            }
            case MitigationMethod::delete_features: {
                spec.features = without(spec.features, pipeline.delete_columns);
                FittedGLM model = fit_glm(train, spec);
                predictions = model.predict_total(test);
                out.model = std::move(model);
                break;
            }
            case MitigationMethod::corr_remover: {
                const CorrelationRemover cr =
                    CorrelationRemover::fit(train, pipeline.corr_alpha, pipeline.corr_columns);
                Portfolio train_adj = cr.apply(train);
                const Portfolio test_adj = cr.apply(test);
                FittedGLM model = fit_glm(train_adj, spec);
                predictions = model.predict_total(test_adj);
                out.model = std::move(model);
                out.transformed_train = std::move(train_adj);
                break;
            }
            case MitigationMethod::fair_smote: {
                auto [augmented, report] = fair_smote(train, pipeline.smote);
                sc.extras["smote_synthetic_rows"] = static_cast<double>(report.synthetic_rows);
                FittedGLM model = fit_glm(augmented, spec);
                predictions = model.predict_total(test);
                out.model = std::move(model);
                out.transformed_train = std::move(augmented);
                break;
            }
            case MitigationMethod::exponentiated_gradient: {
                const auto [predictor, report] = exponentiated_gradient(
                    train, spec, pipeline.eg_constraint, pipeline.eg_eta_lr, pipeline.eg_rounds,
                    pipeline.eg_dual_bound);
                predictions = predictor.predict_total(test);
                sc.extras["eg_gap"] = report.best_gap;
                sc.extras["eg_converged"] = report.converged ? 1.0 : 0.0;
                out.eg_report = report;
                break;
            }
            case MitigationMethod::redistribution: {
                FittedGLM model = fit_glm(train, spec);
                const auto base = model.predict_total(test);
                RedistResult r = redistribute(test, base, pipeline.redist);
                predictions = r.corrected;
                sc.extras["redist_integrity"] = r.report.integrity;
                sc.extras["redist_global_variation"] = r.report.global_variation;
                sc.extras["redist_iterations"] = static_cast<double>(r.report.iterations);
                out.model = std::move(model);
                out.redistribution = std::move(r);
                break;
            }
            case MitigationMethod::output_averaging: {
                GlmSpec with_s = spec;
                with_s.include_sensitive = true;
                const FittedGLM model = fit_glm(train, with_s);
                predictions = output_averaging(model, test, pipeline.averaging);
                if (spec.response == ResponseKind::per_exposure) {
                    const Column& expo = test.require_role(ColumnRole::exposure);
                    for (std::size_t i = 0; i < predictions.size(); ++i)
                        predictions[i] *= expo.num[i];
                } else if (spec.response == ResponseKind::per_claim) {
                    const Column& claims = test.require_role(ColumnRole::claim_count);
                    for (std::size_t i = 0; i < predictions.size(); ++i)
                        predictions[i] *= claims.num[i];
                }
                break;
            }
        }

        sc.panel = compute_panel(test, predictions, pipeline.metrics);
        sc.fairness = sc.panel.hgr;

        const std::vector<double>& y = test.require_role(ColumnRole::target).num;
        std::vector<double> w(test.n(), 1.0);
        if (const Column* expo = test.find_role(ColumnRole::exposure))
            w.assign(expo->num.begin(), expo->num.end());
        sc.performance = rmse(y, predictions, w);
        sc.lr = loss_ratio(y, predictions);
        out.test_predictions = std::move(predictions);
    } catch (const std::exception& e) {
        sc.failed = true;
        sc.failure_cause = e.what();
    }
    return out;
}

std::vector<bool> nondominated_flags(const std::vector<std::array<double, 2>>& points) {
    const std::size_t n = points.size();
    std::vector<bool> flags(n, true);
    // Sweep in lexicographic order; O(n^2) worst case but cheap at report
    // sizes, and exact (ties mutually non-dominated).
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            const bool le = points[j][0] <= points[i][0] && points[j][1] <= points[i][1];
            const bool lt = points[j][0] < points[i][0] || points[j][1] < points[i][1];
            if (le && lt) {
                flags[i] = false;
                break;
            }
        }
    }
    return flags;
}

std::vector<bool> pareto_front(const std::vector<MitigationScenario>& scenarios) {
    if (scenarios.empty()) throw std::invalid_argument("pareto_front: no scenarios");
    std::vector<std::array<double, 2>> pts;
    std::vector<std::size_t> live;
    for (std::size_t i = 0; i < scenarios.size(); ++i) {
        if (scenarios[i].failed) continue;
        live.push_back(i);
        pts.push_back({scenarios[i].fairness, scenarios[i].performance});
    }
    const auto sub = nondominated_flags(pts);
    std::vector<bool> flags(scenarios.size(), false);
    for (std::size_t k = 0; k < live.size(); ++k) flags[live[k]] = sub[k];
    return flags;
}

namespace {

nlohmann::ordered_json scenario_to_json_obj(const MitigationScenario& s) {
    nlohmann::ordered_json j;
    j["id"] = s.id;
    j["description"] = s.description;
    j["stage"] = to_string(s.stage);
    j["failed"] = s.failed;
    if (s.failed) {
        j["failure_cause"] = s.failure_cause;
        return j;
    }
    j["hgr"] = s.fairness;
    j["rmse"] = s.performance;
    j["lr"] = s.lr;
    nlohmann::ordered_json panel;
    panel["kendall_tau"] = s.panel.kendall_tau;
    panel["hgr_kde"] = s.panel.hgr;
    panel["ks_stat"] = s.panel.ks_stat;
    panel["ks_pvalue"] = s.panel.ks_pvalue;
    panel["js_divergence"] = s.panel.js_divergence;
    panel["mean_ratio"] = s.panel.mean_ratio;
    panel["flip_test_1"] = s.panel.flip_test_1;
    panel["flip_test_0"] = s.panel.flip_test_0;
    j["panel"] = panel;
    if (!s.extras.empty()) {
        nlohmann::ordered_json ex;
        for (const auto& [k, v] : s.extras) ex[k] = v;
        j["extras"] = ex;
    }
    return j;
}

MitigationScenario scenario_from_json_obj(const nlohmann::json& j) {
    MitigationScenario s;
    s.id = j.at("id").get<std::string>();
    s.description = j.value("description", std::string());
    const std::string stage = j.value("stage", std::string("reference"));
    if (stage == "pre") s.stage = PipelineStage::pre;
    else if (stage == "in") s.stage = PipelineStage::in;
    else if (stage == "post") s.stage = PipelineStage::post;
    else s.stage = PipelineStage::reference;
    s.failed = j.value("failed", false);
    if (s.failed) {
        s.failure_cause = j.value("failure_cause", std::string());
        return s;
    }
    s.fairness = j.at("hgr").get<double>();
    s.performance = j.at("rmse").get<double>();
    s.lr = j.at("lr").get<double>();
    if (j.contains("panel")) {
        const auto& p = j["panel"];
        s.panel.kendall_tau = p.value("kendall_tau", 0.0);
        s.panel.hgr = p.value("hgr_kde", s.fairness);
        s.panel.ks_stat = p.value("ks_stat", 0.0);
        s.panel.ks_pvalue = p.value("ks_pvalue", 1.0);
        s.panel.js_divergence = p.value("js_divergence", 0.0);
        s.panel.mean_ratio = p.value("mean_ratio", 1.0);
        s.panel.flip_test_1 = p.value("flip_test_1", 0.0);
        s.panel.flip_test_0 = p.value("flip_test_0", 0.0);
    }
    if (j.contains("extras"))
        for (const auto& [k, v] : j["extras"].items()) s.extras[k] = v.get<double>();
    return s;
}

}  // namespace

std::string scenarios_to_json(const std::vector<MitigationScenario>& scenarios) {
    nlohmann::ordered_json j;
    j["v"] = 1;
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& s : scenarios) arr.push_back(scenario_to_json_obj(s));
    j["scenarios"] = arr;
    return j.dump(2);
}

std::vector<MitigationScenario> scenarios_from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    std::vector<MitigationScenario> out;
    for (const auto& item : j.at("scenarios")) out.push_back(scenario_from_json_obj(item));
    return out;
}

ReportPaths write_report(const std::vector<MitigationScenario>& scenarios,
                         const std::string& path_prefix) {
    if (scenarios.empty()) throw std::invalid_argument("write_report: no scenarios");

    std::vector<MitigationScenario> ordered = scenarios;
    std::sort(ordered.begin(), ordered.end(),
              [](const MitigationScenario& a, const MitigationScenario& b) { return a.id < b.id; });
    const auto front = pareto_front(ordered);

    ReportPaths paths{path_prefix + "_summary.csv", path_prefix + "_summary.json",
                      path_prefix + "_plot.csv"};

    {
        std::ofstream csv(paths.csv);
        if (!csv) throw std::invalid_argument("cannot write file: " + paths.csv);
        csv.precision(17);
        csv << "id,stage,hgr_kde,rmse,loss_ratio,failed\n";
        for (const auto& s : ordered) {
            csv << s.id << ',' << to_string(s.stage) << ',';
            if (s.failed)
                csv << ",,," << 1 << '\n';
            else
                csv << s.fairness << ',' << s.performance << ',' << s.lr << ',' << 0 << '\n';
        }
    }
    {
        std::ofstream json(paths.json);
        if (!json) throw std::invalid_argument("cannot write file: " + paths.json);
        json << scenarios_to_json(ordered) << '\n';
    }
    {
        std::ofstream plot(paths.plot_csv);
        if (!plot) throw std::invalid_argument("cannot write file: " + paths.plot_csv);
        plot.precision(17);
        plot << "id,fairness,performance,dominated\n";
        for (std::size_t i = 0; i < ordered.size(); ++i) {
            if (ordered[i].failed) continue;
            plot << ordered[i].id << ',' << ordered[i].fairness << ',' << ordered[i].performance
                 << ',' << (front[i] ? 0 : 1) << '\n';
        }
    }
    return paths;
}

}  // namespace fairprice

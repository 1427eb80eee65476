#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fairprice/dataset.hpp"
#include "fairprice/glm.hpp"
#include "fairprice/metrics.hpp"
#include "fairprice/mitigation_in.hpp"
#include "fairprice/mitigation_post.hpp"
#include "fairprice/mitigation_pre.hpp"

namespace fairprice {

enum class MitigationMethod {
    reference,       // fit as specified, no transform
    delete_features, // drop listed features from the model
    corr_remover,
    fair_smote,
    exponentiated_gradient,
    redistribution,
    output_averaging,
};

std::string to_string(MitigationMethod m);
MitigationMethod mitigation_method_from_string(const std::string& s);

enum class PipelineStage { pre, in, post, reference };
std::string to_string(PipelineStage s);

struct ScenarioPipeline {
    std::string id = "reference";
    std::string description;
    MitigationMethod method = MitigationMethod::reference;
    GlmSpec glm;
    PanelOptions metrics;

    // Per-method parameters; only the active block is read.
    std::vector<std::string> delete_columns;
    double corr_alpha = 1.0;
    std::vector<std::string> corr_columns;
    SmoteConfig smote;
    ConstraintSpec eg_constraint;
    double eg_eta_lr = 2.0;
    int eg_rounds = 50;
    double eg_dual_bound = 100.0;
    RedistConfig redist;
    AveragingRule averaging = AveragingRule::group_share;

    PipelineStage stage() const;
};

struct MitigationScenario {
    std::string id;
    std::string description;
    PipelineStage stage = PipelineStage::reference;
    double fairness = 0.0;     // HGR on predicted premium (lower = fairer)
    double performance = 0.0;  // RMSE (lower = better)
    double lr = 1.0;
    FairnessPanel panel;
    std::map<std::string, double> extras;
    bool failed = false;
    std::string failure_cause;
};

struct ScenarioOutcome {
    MitigationScenario scenario;
    std::vector<double> test_predictions;  // premium scale, empty when failed
    // Method artifacts for export (filled when the method produces them).
    std::optional<Portfolio> transformed_train;  // corr / smote
    std::optional<RedistResult> redistribution;
    std::optional<FittedGLM> model;
    std::optional<EgReport> eg_report;
};

// Apply the pipeline to the training portfolio, fit, predict the test set,
// and fill the full panel plus RMSE and LR. Deterministic under the
// pipeline's seeds; failures are captured on the scenario.
ScenarioOutcome evaluate(const ScenarioPipeline& pipeline, const Portfolio& train,
                         const Portfolio& test);

// Non-domination flags on (fairness, performance), lower better on both.
// Failed scenarios are never on the front.
std::vector<bool> pareto_front(const std::vector<MitigationScenario>& scenarios);

struct ReportPaths {
    std::string csv;
    std::string json;
    std::string plot_csv;
};

// CSV + JSON summary in the Table 8 row layout ({HGR, RMSE, LR} per
// scenario) plus a plot-data CSV (id, fairness, performance, dominated).
ReportPaths write_report(const std::vector<MitigationScenario>& scenarios,
                         const std::string& path_prefix);

std::string scenarios_to_json(const std::vector<MitigationScenario>& scenarios);
std::vector<MitigationScenario> scenarios_from_json(const std::string& text);

}  // namespace fairprice

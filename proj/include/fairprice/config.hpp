#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fairprice/dataset.hpp"
#include "fairprice/glm.hpp"
#include "fairprice/metrics.hpp"
#include "fairprice/mitigation_in.hpp"
#include "fairprice/mitigation_post.hpp"
#include "fairprice/mitigation_pre.hpp"
#include "fairprice/scenario.hpp"
#include "fairprice/synthgen.hpp"

namespace fairprice {

// Toolkit configuration: one JSON file holding the schema, model, metric and
// per-method mitigation blocks. Every hyperparameter lives here; CLI flags
// override individual fields.
struct RunConfig {
    uint64_t seed = 0;
    std::string out_dir = "out";
    std::size_t workers = 0;  // 0 = hardware default

    std::vector<ColumnSpec> schema;
    SynthConfig synth;
    double test_fraction = 0.3;
    GlmSpec model;
    PanelOptions metrics;

    std::vector<std::string> delete_columns;
    std::vector<double> delete_thresholds;

    double corr_alpha = 1.0;
    std::vector<std::string> corr_columns;

    SmoteConfig smote;

    ConstraintSpec eg_constraint;
    double eg_eta_lr = 2.0;
    int eg_rounds = 50;
    double eg_dual_bound = 100.0;

    RedistConfig redist;
    std::vector<double> redist_etas;
    std::vector<double> redist_zetas;

    AveragingRule averaging = AveragingRule::group_share;

    static RunConfig from_file(const std::string& path);
    static RunConfig from_string(const std::string& text);

    // Cross-references: schema well-formed, referenced columns exist.
    void validate() const;

    ScenarioPipeline pipeline_for(MitigationMethod method) const;
};

}  // namespace fairprice

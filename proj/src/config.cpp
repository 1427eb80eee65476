#include "fairprice/config.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace fairprice {

namespace {

using nlohmann::json;

DistanceSpec distance_from_json(const json& j) {
    DistanceSpec d;
    d.metric = metric_from_string(j.value("metric", std::string("manhattan")));
    d.minkowski_q = j.value("q", 1.0);
    d.standardize = j.value("standardize", true);
    if (j.contains("features")) d.features = j["features"].get<std::vector<std::string>>();
    return d;
}

BinningSpec bins_from_json(const json& j) {
    BinningSpec b;
    b.edges = j.value("edges", std::vector<double>{0.0, 250.0, 500.0, 750.0, 1000.0, 1500.0});
    b.zero_bin = j.value("zero_bin", true);
    b.open_upper = j.value("open_upper", true);
    return b;
}

}  // namespace

RunConfig RunConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_string(buf.str());
}

RunConfig RunConfig::from_string(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("config parse error: ") + e.what());
    }

    RunConfig cfg;
    try {
        if (!j.contains("seed"))
            throw std::invalid_argument("config field 'seed' is required (deterministic runs)");
        cfg.seed = j["seed"].get<uint64_t>();
        cfg.out_dir = j.value("out", std::string("out"));
        cfg.workers = j.value("workers", std::size_t{0});

        if (j.contains("schema")) {
            for (const auto& col : j["schema"]) {
                ColumnSpec spec;
                spec.name = col.at("name").get<std::string>();
                spec.kind = column_kind_from_string(col.at("kind").get<std::string>());
                spec.role = column_role_from_string(col.value("role", std::string("feature")));
                cfg.schema.push_back(std::move(spec));
            }
        }

        if (j.contains("synth")) {
            const auto& s = j["synth"];
            cfg.synth.n = s.value("n", cfg.synth.n);
            cfg.synth.p_male = s.value("p_male", cfg.synth.p_male);
            cfg.synth.gamma_direct = s.value("gamma_direct", cfg.synth.gamma_direct);
            cfg.synth.rho_indirect = s.value("rho_indirect", cfg.synth.rho_indirect);
            cfg.synth.freq_base = s.value("freq_base", cfg.synth.freq_base);
            cfg.synth.sev_shape = s.value("sev_shape", cfg.synth.sev_shape);
            cfg.synth.sev_mean_base = s.value("sev_mean_base", cfg.synth.sev_mean_base);
        }
        cfg.synth.seed = cfg.seed;

        if (j.contains("split")) cfg.test_fraction = j["split"].value("test_fraction", 0.3);

        if (j.contains("model")) {
            const auto& m = j["model"];
            cfg.model.family = family_from_string(m.value("family", std::string("tweedie")));
            cfg.model.tweedie_power = m.value("tweedie_power", 1.5);
            if (m.contains("features"))
                cfg.model.features = m["features"].get<std::vector<std::string>>();
            cfg.model.weight = weight_role_from_string(m.value("weight", std::string("unit")));
            cfg.model.response =
                response_kind_from_string(m.value("response", std::string("raw")));
            cfg.model.offset_log_exposure = m.value("offset_log_exposure", false);
            cfg.model.include_sensitive = m.value("include_sensitive", false);
            cfg.model.max_iterations = m.value("max_iterations", 100);
        }

        if (j.contains("metrics")) {
            const auto& m = j["metrics"];
            cfg.metrics.hgr.grid_cc = m.value("hgr_grid_cc", 64);
            cfg.metrics.hgr.grid_bc = m.value("hgr_grid_bc", 256);
            cfg.metrics.js_bins = m.value("js_bins", 100);
            cfg.metrics.flip_k = m.value("flip_k", std::size_t{5});
            if (m.contains("flip_distance"))
                cfg.metrics.flip_distance = distance_from_json(m["flip_distance"]);
        }

        if (j.contains("mitigation")) {
            const auto& mit = j["mitigation"];
            if (mit.contains("delete")) {
                const auto& d = mit["delete"];
                if (d.contains("columns"))
                    cfg.delete_columns = d["columns"].get<std::vector<std::string>>();
                if (d.contains("thresholds"))
                    cfg.delete_thresholds = d["thresholds"].get<std::vector<double>>();
            }
            if (mit.contains("corr")) {
                const auto& c = mit["corr"];
                cfg.corr_alpha = c.value("alpha", 1.0);
                if (c.contains("columns"))
                    cfg.corr_columns = c["columns"].get<std::vector<std::string>>();
            }
            if (mit.contains("smote")) {
                const auto& s = mit["smote"];
                cfg.smote.st = s.value("st", 0.8);
                cfg.smote.ft = s.value("ft", 0.8);
                if (s.contains("bins")) cfg.smote.bins = bins_from_json(s["bins"]);
                if (s.contains("distance")) cfg.smote.distance = distance_from_json(s["distance"]);
                cfg.smote.per_column_u = s.value("per_column_u", false);
            }
            cfg.smote.seed = cfg.seed;
            if (mit.contains("eg")) {
                const auto& e = mit["eg"];
                cfg.eg_constraint.zeta = e.value("zeta", 1.0);
                if (e.contains("clip")) cfg.eg_constraint.clip = e["clip"].get<double>();
                cfg.eg_eta_lr = e.value("eta_lr", 2.0);
                cfg.eg_rounds = e.value("rounds", 50);
                cfg.eg_dual_bound = e.value("dual_bound", 100.0);
            }
            if (mit.contains("redist")) {
                const auto& r = mit["redist"];
                cfg.redist.eta = r.value("eta", 6.0);
                cfg.redist.zeta = r.value("zeta", 0.0);
                cfg.redist.k = r.value("k", std::size_t{5});
                cfg.redist.max_iter = r.value("max_iter", std::size_t{10000});
                cfg.redist.start_group = r.value("start_group", 0);
                if (r.contains("distance")) cfg.redist.d_spec = distance_from_json(r["distance"]);
                if (r.contains("etas")) cfg.redist_etas = r["etas"].get<std::vector<double>>();
                if (r.contains("zetas")) cfg.redist_zetas = r["zetas"].get<std::vector<double>>();
            }
            if (mit.contains("avg")) {
                const std::string rule = mit["avg"].value("rule", std::string("group_share"));
                if (rule == "group_share") cfg.averaging = AveragingRule::group_share;
                else if (rule == "equal") cfg.averaging = AveragingRule::equal;
                else throw std::invalid_argument("unknown averaging rule: " + rule);
            }
        }
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("config error: ") + e.what());
    }
    cfg.redist.workers = cfg.workers;
    cfg.metrics.workers = cfg.workers;
    return cfg;
}

void RunConfig::validate() const {
    if (schema.empty()) return;
    std::set<std::string> names;
    std::size_t sensitive = 0;
    for (const auto& col : schema) {
        if (!names.insert(col.name).second)
            throw std::invalid_argument("duplicate schema column: " + col.name);
        if (col.role == ColumnRole::sensitive) ++sensitive;
    }
    if (sensitive != 1)
        throw std::invalid_argument("config schema must declare exactly one sensitive column");

    auto check = [&](const std::vector<std::string>& cols, const char* what) {
        for (const auto& c : cols)
            if (!names.count(c))
                throw std::invalid_argument(std::string(what) + " references unknown column: " + c);
    };
    check(model.features, "model.features");
    check(metrics.flip_distance.features, "metrics.flip_distance");
    check(delete_columns, "mitigation.delete");
    check(corr_columns, "mitigation.corr");
    check(smote.distance.features, "mitigation.smote.distance");
    check(redist.d_spec.features, "mitigation.redist.distance");
}

ScenarioPipeline RunConfig::pipeline_for(MitigationMethod method) const {
    ScenarioPipeline p;
    p.id = to_string(method);
    p.method = method;
    p.glm = model;
    p.metrics = metrics;
    p.delete_columns = delete_columns;
    p.corr_alpha = corr_alpha;
    p.corr_columns = corr_columns;
    p.smote = smote;
    p.eg_constraint = eg_constraint;
    p.eg_eta_lr = eg_eta_lr;
    p.eg_rounds = eg_rounds;
    p.eg_dual_bound = eg_dual_bound;
    p.redist = redist;
    p.averaging = averaging;
    return p;
}

}  // namespace fairprice

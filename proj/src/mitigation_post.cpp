#include "fairprice/mitigation_post.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "fairprice/parallel.hpp"
#include "fairprice/pareto.hpp"

namespace fairprice {

void RedistConfig::validate() const {
    if (!(eta >= 1.0)) throw std::invalid_argument("redistribution eta must be >= 1");
    if (!(zeta >= 0.0)) throw std::invalid_argument("redistribution zeta must be >= 0");
    if (k < 1) throw std::invalid_argument("redistribution k must be >= 1");
    if (max_iter < 1) throw std::invalid_argument("redistribution max_iter must be >= 1");
    if (start_group != 0 && start_group != 1)
        throw std::invalid_argument("start_group must be 0 or 1");
}

namespace {

// epsilon_i = current_i - mean(current over fixed opposite-group neighbors),
// for rows of one group; compensated group sum returned.
double recompute_group_bias(const Portfolio& p, const CrossNeighbors& nbrs,
                            const std::vector<double>& current, int group,
                            std::vector<double>& epsilon) {
    const auto& rows = p.group_rows(group);
    CompensatedSum sigma;
    for (const std::size_t i : rows) {
        const auto& ids = nbrs.neighbors[i];
        double acc = 0.0;
        for (auto j : ids) acc += current[j];
        const double eps = current[i] - acc / static_cast<double>(ids.size());
        epsilon[i] = eps;
        sigma.add(eps);
    }
    return sigma.value();
}

}  // namespace

RedistResult redistribute(const Portfolio& p, std::span<const double> predictions,
                          const RedistConfig& cfg) {
    cfg.validate();
    const CrossNeighbors nbrs = cross_group_neighbors(p, cfg.d_spec, cfg.k, cfg.workers);
    return redistribute_with_neighbors(p, predictions, nbrs, cfg);
}

RedistResult redistribute_with_neighbors(const Portfolio& p,
                                         std::span<const double> predictions,
                                         const CrossNeighbors& nbrs,
                                         const RedistConfig& cfg) {
    cfg.validate();
    if (predictions.size() != p.n())
        throw std::invalid_argument("redistribute: predictions not aligned");
    if (p.group_count(0) == 0 || p.group_count(1) == 0)
        throw std::invalid_argument("redistribute: both groups required");

    const auto [mn, mx] = std::minmax_element(predictions.begin(), predictions.end());
    const double original_range = *mx - *mn;
    if (!(original_range > 0.0))
        throw std::invalid_argument("redistribute: constant premiums, integrity undefined");

    RedistResult out;
    out.corrected.assign(predictions.begin(), predictions.end());
    std::vector<double>& current = out.corrected;
    std::vector<double> epsilon(p.n(), 0.0);

    int group = cfg.start_group;
    double sigma = recompute_group_bias(p, nbrs, current, group, epsilon);
    out.state.sigma[group] = sigma;

    std::size_t iter = 0;
    while (std::fabs(sigma) >= cfg.zeta && iter < cfg.max_iter) {
        RedistStep step;
        step.group = group;
        step.sigma_before = sigma;

        const double inv_eta = 1.0 / cfg.eta;
        for (const std::size_t i : p.group_rows(group)) current[i] -= epsilon[i] * inv_eta;

        // Same-group bias right after the correction; neighbors sit in the
        // opposite group, so this contracts by exactly (1 - 1/eta).
        step.sigma_after_correction = recompute_group_bias(p, nbrs, current, group, epsilon);
        out.state.sigma[group] = step.sigma_after_correction;

        group = 1 - group;
        sigma = recompute_group_bias(p, nbrs, current, group, epsilon);
        out.state.sigma[group] = sigma;
        step.sigma_opposite = sigma;

        ++iter;
        out.trace.push_back(step);
        if (cfg.zeta == 0.0 && sigma == 0.0) break;  // exact fixed point
    }

    out.state.premiums = current;
    out.state.epsilon = std::move(epsilon);
    out.state.iteration = iter;
    out.state.epsilon_final.resize(p.n());
    for (std::size_t i = 0; i < p.n(); ++i)
        out.state.epsilon_final[i] = predictions[i] - current[i];

    const auto [cmn, cmx] = std::minmax_element(current.begin(), current.end());
    out.report.integrity = (*cmx - *cmn) / original_range;
    CompensatedSum variation;
    for (std::size_t i = 0; i < p.n(); ++i) variation.add(current[i] - predictions[i]);
    out.report.global_variation = variation.value();
    out.report.iterations = iter;
    const bool hit_threshold = std::fabs(sigma) < cfg.zeta || sigma == 0.0;
    out.report.stop_reason = hit_threshold ? "threshold" : "iteration cap";
    out.report.truncated_neighbors = nbrs.truncated;
    return out;
}

std::vector<RedistCell> redist_grid(const Portfolio& p, std::span<const double> predictions,
                                    const std::vector<double>& etas,
                                    const std::vector<double>& zetas,
                                    const DistanceSpec& d_spec, std::size_t k,
                                    std::size_t max_iter, std::size_t workers) {
    if (etas.empty() || zetas.empty()) throw std::invalid_argument("redist_grid: empty grid");
    const CrossNeighbors nbrs = cross_group_neighbors(p, d_spec, k, workers);

    const std::vector<double>& y = p.require_role(ColumnRole::target).num;
    std::vector<double> w(p.n(), 1.0);
    if (const Column* expo = p.find_role(ColumnRole::exposure))
        w.assign(expo->num.begin(), expo->num.end());

    std::vector<RedistCell> cells;
    cells.reserve(etas.size() * zetas.size());
    for (const double eta : etas) {
        for (const double zeta : zetas) {
            RedistCell cell;
            cell.cfg.eta = eta;
            cell.cfg.zeta = zeta;
            cell.cfg.k = k;
            cell.cfg.d_spec = d_spec;
            cell.cfg.max_iter = max_iter;
            cell.cfg.workers = workers;
            const RedistResult r = redistribute_with_neighbors(p, predictions, nbrs, cell.cfg);
            cell.report = r.report;
            cell.hgr = hgr_kde(p.sensitive(), r.corrected);
            cell.rmse = rmse(y, r.corrected, w);
            cells.push_back(std::move(cell));
        }
    }

    std::vector<std::array<double, 2>> points;
    points.reserve(cells.size());
    for (const auto& c : cells)
        points.push_back({std::fabs(c.report.global_variation), 1.0 - c.report.integrity});
    const auto flags = nondominated_flags(points);
    for (std::size_t i = 0; i < cells.size(); ++i) cells[i].nondominated = flags[i];
    return cells;
}

void save_correction_table(const RedistResult& r, std::span<const double> original,
                           const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::invalid_argument("cannot write file: " + path);
    out.precision(17);
    out << "row,y_hat,epsilon_final,y_tilde\n";
    for (std::size_t i = 0; i < r.corrected.size(); ++i)
        out << i << ',' << original[i] << ',' << r.state.epsilon_final[i] << ','
            << r.corrected[i] << '\n';
}

std::vector<double> output_averaging(const FittedGLM& model_with_s, const Portfolio& p,
                                     AveragingRule rule) {
    if (!model_with_s.spec().include_sensitive)
        throw std::invalid_argument("output_averaging: model does not include the sensitive column");
    const std::string s_name = p.require_role(ColumnRole::sensitive).spec.name;

    const Portfolio p0 = p.with_numeric_column(s_name, std::vector<double>(p.n(), 0.0));
    const Portfolio p1 = p.with_numeric_column(s_name, std::vector<double>(p.n(), 1.0));
    const auto pred0 = model_with_s.predict(p0);
    const auto pred1 = model_with_s.predict(p1);

    double w1 = 0.5;
    if (rule == AveragingRule::group_share)
        w1 = static_cast<double>(p.group_count(1)) / static_cast<double>(p.n());
    const double w0 = 1.0 - w1;

    std::vector<double> out(p.n());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = w0 * pred0[i] + w1 * pred1[i];
    return out;
}

}  // namespace fairprice

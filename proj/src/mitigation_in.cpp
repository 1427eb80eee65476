#include "fairprice/mitigation_in.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "fairprice/parallel.hpp"

namespace fairprice {

void ConstraintSpec::validate() const {
    if (!(zeta > 0.0)) throw std::invalid_argument("constraint zeta must be > 0");
    if (clip && !(*clip > 0.0)) throw std::invalid_argument("constraint clip M must be > 0");
}

std::vector<double> RandomizedPredictor::predict(const Portfolio& p) const {
    if (members.empty()) throw std::logic_error("empty randomized predictor");
    std::vector<double> out(p.n(), 0.0);
    for (const auto& [model, weight] : members) {
        const auto preds = model.predict(p);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += weight * preds[i];
    }
    return out;
}

std::vector<double> RandomizedPredictor::predict_total(const Portfolio& p) const {
    if (members.empty()) throw std::logic_error("empty randomized predictor");
    std::vector<double> out(p.n(), 0.0);
    for (const auto& [model, weight] : members) {
        const auto preds = model.predict_total(p);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += weight * preds[i];
    }
    return out;
}

std::array<double, 2> group_clipped_loss(std::span<const double> y,
                                         std::span<const double> y_hat,
                                         std::span<const double> s,
                                         std::optional<double> clip) {
    if (y.size() != y_hat.size() || y.size() != s.size())
        throw std::invalid_argument("group_clipped_loss: inputs not aligned");
    CompensatedSum acc[2];
    std::size_t count[2] = {0, 0};
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double e = y[i] - y_hat[i];
        double l = e * e;
        if (clip) l = std::min(l, *clip);
        const int g = s[i] == 1.0 ? 1 : 0;
        acc[g].add(l);
        ++count[g];
    }
    if (count[0] == 0 || count[1] == 0)
        throw std::invalid_argument("group_clipped_loss: empty group");
    return {acc[0].value() / static_cast<double>(count[0]),
            acc[1].value() / static_cast<double>(count[1])};
}

namespace {

double overall_sq_loss(std::span<const double> y, std::span<const double> y_hat) {
    CompensatedSum acc;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double e = y[i] - y_hat[i];
        acc.add(e * e);
    }
    return acc.value() / static_cast<double>(y.size());
}

// Row weights of the Lagrangian best response: rows inside the clip region
// (boundary inclusive) get the multiplicative uplift 1 + lambda_s * n/n_s.
std::vector<double> lagrangian_weights(const Portfolio& p, const std::array<double, 2>& lambda,
                                       std::span<const double> y,
                                       std::span<const double> ref_predictions,
                                       std::optional<double> clip) {
    const auto& s = p.sensitive();
    const double n = static_cast<double>(p.n());
    const double uplift[2] = {lambda[0] * n / static_cast<double>(p.group_count(0)),
                              lambda[1] * n / static_cast<double>(p.group_count(1))};
    std::vector<double> w(p.n(), 1.0);
    for (std::size_t i = 0; i < w.size(); ++i) {
        bool inside = true;
        if (clip && !ref_predictions.empty()) {
            const double e = y[i] - ref_predictions[i];
            inside = e * e <= *clip;
        }
        if (inside) w[i] += uplift[s[i] == 1.0 ? 1 : 0];
    }
    return w;
}

std::array<double, 2> constraint_values(const Portfolio& p, const ConstraintSpec& c,
                                        std::span<const double> y,
                                        std::span<const double> preds) {
    const auto losses = group_clipped_loss(y, preds, p.sensitive(), c.clip);
    return {losses[0] - c.zeta, losses[1] - c.zeta};
}

}  // namespace

double eg_duality_gap(const Portfolio& p, const GlmSpec& spec, const ConstraintSpec& c,
                      std::span<const double> mixture_predictions,
                      const std::array<double, 2>& lambda, double dual_bound) {
    const std::vector<double> y = model_response(p, spec);
    const auto g_mix = constraint_values(p, c, y, mixture_predictions);
    const double primal = overall_sq_loss(y, mixture_predictions) +
                          dual_bound * std::max({0.0, g_mix[0], g_mix[1]});

    const auto w = lagrangian_weights(p, lambda, y, mixture_predictions, c.clip);
    const FittedGLM br = fit_glm_weighted(p, spec, w);
    const auto br_preds = br.predict(p);
    const auto g_br = constraint_values(p, c, y, br_preds);
    const double dual = overall_sq_loss(y, br_preds) + lambda[0] * g_br[0] + lambda[1] * g_br[1];
    return std::max(0.0, primal - dual);
}

std::pair<RandomizedPredictor, EgReport> exponentiated_gradient(
    const Portfolio& p, const GlmSpec& spec, const ConstraintSpec& c, double eta_lr,
    int rounds, double dual_bound) {
    c.validate();
    spec.validate();
    if (spec.include_sensitive)
        throw std::invalid_argument("exponentiated_gradient: spec must exclude the sensitive column");
    if (rounds < 1) throw std::invalid_argument("rounds must be >= 1");
    if (!(eta_lr > 0.0)) throw std::invalid_argument("eta_lr must be > 0");

    const std::vector<double> y = model_response(p, spec);
    EgReport report;

    FittedGLM base;
    try {
        base = fit_glm(p, spec);
    } catch (const std::exception& e) {
        throw std::runtime_error(std::string("EG learner failed at round 0: ") + e.what());
    }
    const auto base_preds = base.predict(p);

    // Vacuous constraint (one group) or feasible unconstrained optimum:
    // lambda* = 0 and the unconstrained fit solves the constrained problem.
    const bool single_group = p.group_count(0) == 0 || p.group_count(1) == 0;
    if (!single_group) {
        const auto g0 = constraint_values(p, c, y, base_preds);
        if (std::max(g0[0], g0[1]) <= 0.0) {
            report.iterations = 0;
            report.best_gap = 0.0;
            report.converged = true;
            const auto losses = group_clipped_loss(y, base_preds, p.sensitive(), c.clip);
            report.group_losses = losses;
            report.overall_loss = overall_sq_loss(y, base_preds);
            RandomizedPredictor q;
            q.members.emplace_back(std::move(base), 1.0);
            return {std::move(q), std::move(report)};
        }
    } else {
        report.iterations = 0;
        report.best_gap = 0.0;
        report.converged = true;
        report.overall_loss = overall_sq_loss(y, base_preds);
        RandomizedPredictor q;
        q.members.emplace_back(std::move(base), 1.0);
        return {std::move(q), std::move(report)};
    }

    std::array<double, 2> theta = {0.0, 0.0};
    std::vector<FittedGLM> iterates;
    std::vector<std::vector<double>> iterate_preds;
    std::vector<double> mix_preds(p.n(), 0.0);
    std::array<double, 2> lambda_sum = {0.0, 0.0};

    double best_gap = std::numeric_limits<double>::infinity();
    int best_prefix = 0;

    // Scale the multiplicative updates by the starting constraint magnitude
    // so eta_lr is dimensionless; otherwise large loss scales saturate the
    // dual simplex after one round.
    const auto g_base = constraint_values(p, c, y, base_preds);
    const double g_scale = std::max({std::fabs(g_base[0]), std::fabs(g_base[1]), 1e-12});

    std::vector<double> ref_preds = base_preds;
    for (int t = 1; t <= rounds; ++t) {
        // lambda on the bounded simplex: B * e^theta / (1 + sum e^theta)
        const double e0 = std::exp(theta[0]), e1 = std::exp(theta[1]);
        const std::array<double, 2> lambda = {dual_bound * e0 / (1.0 + e0 + e1),
                                              dual_bound * e1 / (1.0 + e0 + e1)};

        const auto w = lagrangian_weights(p, lambda, y, ref_preds, c.clip);
        FittedGLM m;
        try {
            m = fit_glm_weighted(p, spec, w);
        } catch (const std::exception& e) {
            throw std::runtime_error("EG learner failed at round " + std::to_string(t) + ": " +
                                     e.what());
        }
        auto preds = m.predict(p);
        const auto g = constraint_values(p, c, y, preds);
        theta[0] += eta_lr * g[0] / g_scale;
        theta[1] += eta_lr * g[1] / g_scale;

        iterates.push_back(std::move(m));
        const double tm1 = static_cast<double>(t - 1), tt = static_cast<double>(t);
        for (std::size_t i = 0; i < mix_preds.size(); ++i)
            mix_preds[i] = (mix_preds[i] * tm1 + preds[i]) / tt;
        lambda_sum[0] += lambda[0];
        lambda_sum[1] += lambda[1];
        ref_preds = preds;
        iterate_preds.push_back(std::move(preds));

        const std::array<double, 2> lambda_bar = {lambda_sum[0] / tt, lambda_sum[1] / tt};
        const double gap = eg_duality_gap(p, spec, c, mix_preds, lambda_bar, dual_bound);
        report.trace.push_back({lambda[0], lambda[1], gap});
        if (gap < best_gap) {
            best_gap = gap;
            best_prefix = t;
        }
        report.iterations = t;
        if (gap < 1e-3 * c.zeta) break;
    }

    RandomizedPredictor q;
    const double wgt = 1.0 / static_cast<double>(best_prefix);
    std::vector<double> final_preds(p.n(), 0.0);
    for (int t = 0; t < best_prefix; ++t) {
        for (std::size_t i = 0; i < final_preds.size(); ++i)
            final_preds[i] += wgt * iterate_preds[t][i];
        q.members.emplace_back(std::move(iterates[t]), wgt);
    }

    report.best_gap = best_gap;
    report.group_losses = group_clipped_loss(y, final_preds, p.sensitive(), c.clip);
    report.overall_loss = overall_sq_loss(y, final_preds);
    const double max_loss = std::max(report.group_losses[0], report.group_losses[1]);
    report.converged = best_gap < 1e-3 * c.zeta && max_loss <= c.zeta * (1.0 + 1e-2);
    return {std::move(q), std::move(report)};
}

std::vector<GridPointResult> lambda_grid_search(const Portfolio& p, const GlmSpec& spec,
                                                const ConstraintSpec& c,
                                                const std::vector<std::array<double, 2>>& grid) {
    c.validate();
    if (grid.empty()) throw std::invalid_argument("lambda grid is empty");

    const std::vector<double> y = model_response(p, spec);
    std::vector<double> ref_preds;  // empty: clip region defaults to all rows
    try {
        const FittedGLM base = fit_glm(p, spec);
        ref_preds = base.predict(p);
    } catch (const std::exception&) {
    }

    std::vector<GridPointResult> out;
    out.reserve(grid.size());
    for (const auto& lambda : grid) {
        GridPointResult r;
        r.lambda = lambda;
        try {
            const auto w = lagrangian_weights(p, lambda, y, ref_preds, c.clip);
            r.model = fit_glm_weighted(p, spec, w);
            const auto preds = r.model.predict(p);
            r.group_losses = group_clipped_loss(y, preds, p.sensitive(), c.clip);
            r.overall_loss = overall_sq_loss(y, preds);
            r.feasible = std::max(r.group_losses[0], r.group_losses[1]) <= c.zeta;
        } catch (const std::exception& e) {
            r.failed = true;
            r.failure = e.what();
        }
        out.push_back(std::move(r));
    }
    std::stable_sort(out.begin(), out.end(), [](const GridPointResult& a, const GridPointResult& b) {
        if (a.failed != b.failed) return !a.failed;
        if (a.feasible != b.feasible) return a.feasible;
        return a.overall_loss < b.overall_loss;
    });
    return out;
}

}  // namespace fairprice

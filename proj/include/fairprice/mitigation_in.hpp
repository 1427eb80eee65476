#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fairprice/dataset.hpp"
#include "fairprice/glm.hpp"

namespace fairprice {

// Bounded group loss constraint: E[min((y - yhat)^2, M) | S=s] < zeta.
struct ConstraintSpec {
    double zeta = 1.0;
    std::optional<double> clip;  // M; absent means no clipping

    void validate() const;
};

// Distribution over fitted models; prediction is the probability-weighted
// mean of member predictions.
struct RandomizedPredictor {
    std::vector<std::pair<FittedGLM, double>> members;

    std::vector<double> predict(const Portfolio& p) const;
    std::vector<double> predict_total(const Portfolio& p) const;
};

struct EgReport {
    int iterations = 0;
    double best_gap = 0.0;
    std::array<double, 2> group_losses = {0.0, 0.0};  // clipped, on the mixture
    double overall_loss = 0.0;
    bool converged = false;
    // per-round trace: (lambda0, lambda1, gap of the prefix mixture)
    std::vector<std::array<double, 3>> trace;
};

std::array<double, 2> group_clipped_loss(std::span<const double> y,
                                         std::span<const double> y_hat,
                                         std::span<const double> s,
                                         std::optional<double> clip);

// Lagrangian game of reweighted GLM best responses against multiplicative
// dual updates on the per-group bounded-loss constraints. Returns the prefix
// mixture of iterates with the smallest empirical duality gap. A feasible
// unconstrained optimum short-circuits to a single-member mixture.
std::pair<RandomizedPredictor, EgReport> exponentiated_gradient(
    const Portfolio& p, const GlmSpec& spec, const ConstraintSpec& c,
    double eta_lr = 2.0, int rounds = 50, double dual_bound = 100.0);

struct GridPointResult {
    std::array<double, 2> lambda = {0.0, 0.0};
    FittedGLM model;
    std::array<double, 2> group_losses = {0.0, 0.0};
    double overall_loss = 0.0;
    bool feasible = false;
    bool failed = false;
    std::string failure;
};

// One reweighted fit per dual vector; feasible points first, ordered by
// overall loss, then infeasible ones (flagged), fit failures recorded.
std::vector<GridPointResult> lambda_grid_search(
    const Portfolio& p, const GlmSpec& spec, const ConstraintSpec& c,
    const std::vector<std::array<double, 2>>& grid);

// Duality-gap evaluation shared with the dual-grid oracle in tests:
// gap(Q, lambda) = [L(Q) + B * max(0, max_s g_s(Q))]
//                - [L(BR(lambda)) + sum_s lambda_s g_s(BR(lambda))].
double eg_duality_gap(const Portfolio& p, const GlmSpec& spec, const ConstraintSpec& c,
                      std::span<const double> mixture_predictions,
                      const std::array<double, 2>& lambda, double dual_bound);

}  // namespace fairprice

#pragma once

#include <array>
#include <string>
#include <vector>

#include "fairprice/dataset.hpp"
#include "fairprice/glm.hpp"
#include "fairprice/knn.hpp"
#include "fairprice/metrics.hpp"

namespace fairprice {

struct RedistConfig {
    double eta = 6.0;    // correction damping, >= 1
    double zeta = 0.0;   // stop when |sum of group biases| falls below
    std::size_t k = 5;
    DistanceSpec d_spec;
    std::size_t max_iter = 10000;
    int start_group = 0;
    std::size_t workers = 0;

    void validate() const;
};

struct RedistributionState {
    std::vector<double> premiums;       // current y-hat
    std::vector<double> epsilon;        // current per-row bias of the last treated group
    std::vector<double> epsilon_final;  // original - current, per row
    std::array<double, 2> sigma = {0.0, 0.0};
    std::size_t iteration = 0;
};

struct RedistStep {
    int group;                      // group corrected this iteration
    double sigma_before;            // its bias sum driving the correction
    double sigma_after_correction;  // recomputed on the same group right after
    double sigma_opposite;          // the switch-side sum checked against zeta
};

struct RedistReport {
    double integrity = 1.0;          // corrected range / original range
    double global_variation = 0.0;   // sum(y-tilde) - sum(y-hat)
    std::size_t iterations = 0;
    std::string stop_reason;         // "threshold" or "iteration cap"
    bool truncated_neighbors = false;
};

struct RedistResult {
    std::vector<double> corrected;  // y-tilde
    RedistReport report;
    RedistributionState state;
    std::vector<RedistStep> trace;
};

// Iterative premium redistribution: alternate groups, subtracting
// epsilon_i / eta from the treated group's premiums where epsilon is the
// flip-test gap against fixed opposite-group neighbor sets, until the
// switched group's |sum of biases| drops below zeta. Neighbor sets come from
// the original features and never change; only premiums move.
RedistResult redistribute(const Portfolio& p, std::span<const double> predictions,
                          const RedistConfig& cfg);

// Variant on a precomputed neighbor table (grid sweeps reuse one build).
RedistResult redistribute_with_neighbors(const Portfolio& p,
                                         std::span<const double> predictions,
                                         const CrossNeighbors& nbrs, const RedistConfig& cfg);

struct RedistCell {
    RedistConfig cfg;
    RedistReport report;
    double hgr = 0.0;   // HGR(S, corrected premiums)
    double rmse = 0.0;  // against observed targets, exposure-weighted
    bool nondominated = false;  // on (global variation magnitude, 1 - integrity)
};

// Full eta x zeta sweep sharing one neighbor build.
std::vector<RedistCell> redist_grid(const Portfolio& p, std::span<const double> predictions,
                                    const std::vector<double>& etas,
                                    const std::vector<double>& zetas,
                                    const DistanceSpec& d_spec, std::size_t k,
                                    std::size_t max_iter = 10000, std::size_t workers = 0);

// Correction table CSV: row id, original premium, final bias, corrected.
void save_correction_table(const RedistResult& r, std::span<const double> original,
                           const std::string& path);

enum class AveragingRule { group_share, equal };

// Post-hoc output averaging of a model that includes S: predict with s
// forced to 0 and to 1, then mix with the portfolio's group shares (or
// equal weights). The result is identical for rows differing only in s.
std::vector<double> output_averaging(const FittedGLM& model_with_s, const Portfolio& p,
                                     AveragingRule rule = AveragingRule::group_share);

}  // namespace fairprice

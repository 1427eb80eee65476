#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fairprice/dataset.hpp"
#include "fairprice/knn.hpp"
#include "fairprice/metrics.hpp"

namespace fairprice {

struct DeletionScenario {
    std::string id;
    std::vector<std::string> deleted;  // features removed on top of the sensitive column
    std::optional<double> threshold;
};

// Feature -> HGR(S, feature), sorted descending. Quantitative features use
// the KDE estimator; binary/categorical features use the exact contingency
// construction.
std::vector<std::pair<std::string, double>> dependency_profile(
    const Portfolio& p, const HgrOptions& opts = {});

std::vector<DeletionScenario> scenarios_from_threshold(
    const std::vector<std::pair<std::string, double>>& profile,
    const std::vector<double>& thresholds);

// Linear decorrelation x_j - alpha * proj_s(x_j) fitted on training data;
// the centered projection preserves column means and kills the sample
// covariance with s exactly at alpha = 1. Stored parameters apply the same
// affine map to new data.
class CorrelationRemover {
public:
    static CorrelationRemover fit(const Portfolio& p, double alpha,
                                  const std::vector<std::string>& columns);
    Portfolio apply(const Portfolio& p) const;

    double alpha() const { return alpha_; }
    const std::vector<std::string>& columns() const { return columns_; }
    const std::vector<double>& projection_coefficients() const { return coef_; }

private:
    double alpha_ = 0.0;
    double s_mean_ = 0.0;
    std::vector<std::string> columns_;
    std::vector<double> coef_;  // per column: cov(x, s_c)/var(s_c)
};

struct SmoteConfig {
    double st = 0.8;  // column-resampling threshold
    double ft = 0.8;  // quantitative transformation factor
    BinningSpec bins = BinningSpec::seven_bin_default();
    DistanceSpec distance;  // nearest-2 search inside each (bin, group) cell
    uint64_t seed = 0;
    // Algorithm variant drawing a fresh u per column instead of one per
    // synthetic individual (sensitivity runs only).
    bool per_column_u = false;

    void validate() const;
};

struct SmoteReport {
    std::size_t synthetic_rows = 0;
    std::vector<int> bin_of_origin;           // per synthetic row
    std::size_t fallback_cells = 0;           // cells with < 3 rows, resampled with replacement
};

// Fair-SMOTE adaptation: equalize the two S groups within every target bin
// by synthesizing minority-group rows column-by-column from a seed row and
// its two nearest same-cell neighbors. Original rows pass through unchanged;
// synthetic rows carry a provenance flag on the returned portfolio.
std::pair<Portfolio, SmoteReport> fair_smote(const Portfolio& train, const SmoteConfig& cfg);

}  // namespace fairprice

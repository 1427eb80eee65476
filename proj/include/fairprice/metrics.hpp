#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fairprice/dataset.hpp"
#include "fairprice/knn.hpp"

namespace fairprice {

// Confusion-matrix fairness rates for binary predictions.
struct BinaryPanel {
    double disparate_impact = 0.0;  // P(Yhat=1|S=1)/P(Yhat=1|S=0), +inf sentinel
    double m1 = 0.0;                // |P(Yhat=1|S=1) - P(Yhat=1|S=0)|
    std::optional<double> mistreatment_10;  // | P(Yhat=1|Y=0,S=1) - P(Yhat=1|Y=0,S=0) |
    std::optional<double> mistreatment_01;  // | P(Yhat=0|Y=1,S=1) - P(Yhat=0|Y=1,S=0) |
};

BinaryPanel binary_panel(std::span<const double> y_hat, std::span<const double> s,
                         std::span<const double> y = {});

// Tie-corrected Kendall tau-b, O(n log n). Errors on zero variance.
double kendall_tau(std::span<const double> a, std::span<const double> b);

struct HgrOptions {
    int grid_cc = 64;    // grid points per continuous axis
    int grid_bc = 256;   // continuous-axis grid when the other axis is binary
    double bandwidth_mult = 1.0;
};

struct HgrResult {
    double value = 0.0;
    bool degenerate = false;  // a constant input; value forced to 0
    bool low_n = false;       // n < 30, estimate unreliable
};

// HGR maximal correlation estimated as the second-largest singular value of
// the normalized joint-mass matrix built from a Gaussian KDE grid
// (two atoms with conditional KDEs when one input is binary, exact
// contingency when both are discrete).
HgrResult hgr_kde_full(std::span<const double> u, std::span<const double> v,
                       const HgrOptions& opts = {});
double hgr_kde(std::span<const double> u, std::span<const double> v,
               const HgrOptions& opts = {});

// Exact discrete x discrete HGR from the contingency table of integer codes.
double hgr_discrete(std::span<const int32_t> u, std::span<const int32_t> v);

struct KsResult {
    double stat = 0.0;
    double pvalue = 1.0;
};

KsResult ks_two_sample(std::span<const double> a, std::span<const double> b);

// Survival function of the asymptotic Kolmogorov distribution,
// 2 sum_j (-1)^{j-1} exp(-2 j^2 x^2); result floored at 1e-300.
double kolmogorov_sf(double x);

// Rejection threshold for the two-sample test at level alpha,
// sqrt(-ln(alpha/2)/2 * (n0+n1)/(n0*n1)).
double ks_reject_threshold(double alpha, std::size_t n0, std::size_t n1);

struct DivergenceResult {
    double kl = 0.0;
    double js = 0.0;
};

// Histogram KL(a||b) and symmetric JS on a shared equal-width grid spanning
// the pooled range; probabilities floored at 1e-10 and renormalized.
DivergenceResult divergences(std::span<const double> a, std::span<const double> b,
                             int bins = 100);

double mean_ratio(std::span<const double> v, std::span<const double> s);
double mean_ratio_weighted(std::span<const double> v, std::span<const double> s,
                           std::span<const double> w);

struct FlipTestResult {
    double ft1 = 0.0;  // mean prediction gap for s=1 rows vs their s=0 neighbors
    double ft0 = 0.0;
    std::vector<double> delta;  // per-row gap
    bool truncated = false;     // an opposite group was smaller than k
};

FlipTestResult flip_test(const Portfolio& p, std::span<const double> predictions,
                         const NeighborIndex& idx0, const NeighborIndex& idx1,
                         std::size_t k, std::size_t workers = 0);

// Variant on a precomputed cross-group neighbor table (redistribution reuses
// fixed neighbor sets across iterations).
FlipTestResult flip_test_with_neighbors(const Portfolio& p,
                                        std::span<const double> predictions,
                                        const CrossNeighbors& nbrs,
                                        std::size_t workers = 0);

struct PairSamplingPlan {
    std::size_t exhaustive_limit = 2000;  // all pairs when n <= limit
    std::size_t sample_pairs = 200000;
    uint64_t seed = 0;
};

// Fraction of pairs violating the Lipschitz condition
// |yhat_i - yhat_j| < lambda * d_X(x_i, x_j).
double lipschitz_violations(const Portfolio& p, std::span<const double> predictions,
                            double lambda, const DistanceSpec& d_spec,
                            const PairSamplingPlan& plan = {});

struct FairnessPanel {
    double kendall_tau = 0.0;
    double hgr = 0.0;
    double ks_stat = 0.0;
    double ks_pvalue = 1.0;
    double js_divergence = 0.0;
    double mean_ratio = 1.0;
    double flip_test_1 = 0.0;
    double flip_test_0 = 0.0;
};

struct PanelOptions {
    HgrOptions hgr;
    int js_bins = 100;
    std::size_t flip_k = 5;
    DistanceSpec flip_distance;  // features default to all portfolio features
    std::size_t workers = 0;
};

// The six-measure panel of one (values, S) pairing; `values` is either model
// predictions or the historical target.
FairnessPanel compute_panel(const Portfolio& p, std::span<const double> values,
                            const PanelOptions& opts);

std::string panel_to_json(const FairnessPanel& panel);
std::string panel_csv_header();
std::string panel_csv_row(const std::string& label, const FairnessPanel& panel);

}  // namespace fairprice

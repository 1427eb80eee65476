#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "fairprice/dataset.hpp"
#include "fairprice/encoder.hpp"

namespace fairprice {

enum class Metric { manhattan, euclidean, minkowski };

std::string to_string(Metric m);
Metric metric_from_string(const std::string& s);

struct DistanceSpec {
    Metric metric = Metric::manhattan;
    double minkowski_q = 1.0;  // only read when metric == minkowski, q >= 1
    std::vector<std::string> features;
    bool standardize = true;

    void validate() const;
};

struct Neighbor {
    std::size_t row_id;  // row index in the source portfolio
    double distance;
};

// Exact nearest-neighbor index over the rows of one sensitive group.
// Quantitative features are standardized with the reference group's
// mean/std when spec.standardize is set; categorical features are one-hot
// indicators with scaling 1. Queries are exhaustive scans (exact by
// construction) over the encoded matrix; ties break toward the lower row id.
class NeighborIndex {
public:
    static NeighborIndex build(const Portfolio& p, int group, const DistanceSpec& spec);

    std::size_t size() const { return row_ids_.size(); }
    std::size_t dim() const { return encoder_.dim(); }
    int group() const { return group_; }
    const DistanceSpec& spec() const { return spec_; }
    const Encoder& encoder() const { return encoder_; }

    // Encode a row of any schema-compatible portfolio for querying.
    std::vector<double> encode_query(const Portfolio& p, std::size_t row) const;

    // k smallest distances; if the group holds m < k rows, returns m
    // neighbors and sets *truncated.
    std::vector<Neighbor> query(std::span<const double> x, std::size_t k,
                                bool* truncated = nullptr) const;

private:
    Encoder encoder_;
    std::vector<double> mat_;  // row-major size() x dim()
    std::vector<std::size_t> row_ids_;
    DistanceSpec spec_;
    int group_ = 0;
};

// Per-row k nearest neighbors in the opposite sensitive group, computed once
// from features. Shared by the flip test and the redistribution loop.
struct CrossNeighbors {
    std::vector<std::vector<std::size_t>> neighbors;  // indexed by row id
    bool truncated = false;
};

CrossNeighbors cross_group_neighbors(const Portfolio& p, const DistanceSpec& spec,
                                     std::size_t k, std::size_t workers = 0);

struct TunerCandidate {
    DistanceSpec spec;
    std::size_t k = 1;
};

struct TunerResult {
    TunerCandidate best;
    std::size_t best_index = 0;
    double mean_distance = 0.0;   // mean cross-group neighbor distance at best
    double mean_abs_delta = 0.0;  // mean |prediction gap| at best
    double objective = 0.0;       // scalarized J at best
};

// Grid tuner for the flip-test knn: J = norm(mean distance) +
// weight * norm(mean |delta|), each term min-max scaled across the grid
// (constant term -> 0). Neighbors and gaps are evaluated cross-group within
// `p`, predictions aligned to its rows. Deterministic; ties keep the
// earliest grid entry.
TunerResult tune_flip_knn(const Portfolio& p, std::span<const double> predictions,
                          const std::vector<TunerCandidate>& grid, double weight = 1.0,
                          std::size_t workers = 0);

}  // namespace fairprice

#include "fairprice/knn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "fairprice/kernels.hpp"
#include "fairprice/parallel.hpp"

namespace fairprice {

std::string to_string(Metric m) {
    switch (m) {
        case Metric::manhattan: return "manhattan";
        case Metric::euclidean: return "euclidean";
        case Metric::minkowski: return "minkowski";
    }
    return "?";
}

Metric metric_from_string(const std::string& s) {
    if (s == "manhattan") return Metric::manhattan;
    if (s == "euclidean") return Metric::euclidean;
    if (s == "minkowski") return Metric::minkowski;
    throw std::invalid_argument("unknown metric: " + s);
}

void DistanceSpec::validate() const {
    if (features.empty()) throw std::invalid_argument("distance spec needs a non-empty feature subset");
    if (metric == Metric::minkowski && !(minkowski_q >= 1.0))
        throw std::invalid_argument("minkowski q must be >= 1");
}

namespace {

double minkowski_distance(const double* a, const double* b, std::size_t n, double q) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += std::pow(std::fabs(a[i] - b[i]), q);
    return std::pow(acc, 1.0 / q);
}

}  // namespace

NeighborIndex NeighborIndex::build(const Portfolio& p, int group, const DistanceSpec& spec) {
    spec.validate();
    const auto& rows = p.group_rows(group);
    if (rows.empty())
        throw std::invalid_argument("group " + std::to_string(group) + " has no rows");

    NeighborIndex idx;
    idx.spec_ = spec;
    idx.group_ = group;
    EncodeOptions opts;
    opts.standardize = spec.standardize;
    idx.encoder_ = Encoder::build(p, spec.features, opts, rows);
    idx.mat_ = idx.encoder_.encode_rows(p, rows);
    idx.row_ids_ = rows;
    return idx;
}

std::vector<double> NeighborIndex::encode_query(const Portfolio& p, std::size_t row) const {
    return encoder_.encode_rows(p, {row});
}

std::vector<Neighbor> NeighborIndex::query(std::span<const double> x, std::size_t k,
                                           bool* truncated) const {
    if (k < 1) throw std::invalid_argument("k must be >= 1");
    if (x.size() != dim()) throw std::invalid_argument("query dimension mismatch");
    const std::size_t m = size();
    const std::size_t kk = std::min(k, m);
    if (truncated) *truncated = k > m;

    thread_local std::vector<Neighbor> scratch;
    scratch.clear();
    scratch.reserve(m);
    const std::size_t d = dim();
    for (std::size_t j = 0; j < m; ++j) {
        const double* row = mat_.data() + j * d;
        double dist = 0.0;
        switch (spec_.metric) {
            case Metric::manhattan:
                dist = kernels::sum_abs_diff(x.data(), row, d);
                break;
            case Metric::euclidean:
                dist = std::sqrt(kernels::sum_sq_diff(x.data(), row, d));
                break;
            case Metric::minkowski:
                dist = minkowski_distance(x.data(), row, d, spec_.minkowski_q);
                break;
        }
        scratch.push_back(Neighbor{row_ids_[j], dist});
    }
    auto less = [](const Neighbor& a, const Neighbor& b) {
        if (a.distance != b.distance) return a.distance < b.distance;
        return a.row_id < b.row_id;
    };
    if (kk < m)
        std::nth_element(scratch.begin(), scratch.begin() + kk, scratch.end(), less);
    std::sort(scratch.begin(), scratch.begin() + kk, less);
    return std::vector<Neighbor>(scratch.begin(), scratch.begin() + kk);
}

CrossNeighbors cross_group_neighbors(const Portfolio& p, const DistanceSpec& spec,
                                     std::size_t k, std::size_t workers) {
    if (k < 1) throw std::invalid_argument("k must be >= 1");
    const NeighborIndex idx0 = NeighborIndex::build(p, 0, spec);
    const NeighborIndex idx1 = NeighborIndex::build(p, 1, spec);
    const auto& s = p.sensitive();

    // Encode every row against both encoders up front (cheap, contiguous).
    std::vector<std::size_t> all(p.n());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    const std::vector<double> enc0 = idx0.encoder().encode_rows(p, all);
    const std::vector<double> enc1 = idx1.encoder().encode_rows(p, all);

    CrossNeighbors out;
    out.neighbors.resize(p.n());
    out.truncated = (k > idx0.size()) || (k > idx1.size());

    parallel_chunks(p.n(), 512, workers, [&](std::size_t, std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const NeighborIndex& opp = s[i] == 1.0 ? idx0 : idx1;
            const std::vector<double>& enc = s[i] == 1.0 ? enc0 : enc1;
            std::span<const double> x(enc.data() + i * opp.dim(), opp.dim());
            const auto hits = opp.query(x, k);
            auto& ids = out.neighbors[i];
            ids.reserve(hits.size());
            for (const auto& h : hits) ids.push_back(h.row_id);
        }
    });
    return out;
}

TunerResult tune_flip_knn(const Portfolio& p, std::span<const double> predictions,
                          const std::vector<TunerCandidate>& grid, double weight,
                          std::size_t workers) {
    if (grid.empty()) throw std::invalid_argument("tuner grid is empty");
    if (predictions.size() != p.n())
        throw std::invalid_argument("predictions not aligned to portfolio rows");

    struct Eval {
        double mean_dist, mean_absdelta;
    };
    std::vector<Eval> evals(grid.size());
    for (std::size_t g = 0; g < grid.size(); ++g) {
        const auto& cand = grid[g];
        if (cand.k < 1) throw std::invalid_argument("tuner candidate k must be >= 1");
        const NeighborIndex idx0 = NeighborIndex::build(p, 0, cand.spec);
        const NeighborIndex idx1 = NeighborIndex::build(p, 1, cand.spec);
        std::vector<std::size_t> all(p.n());
        for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
        const std::vector<double> enc0 = idx0.encoder().encode_rows(p, all);
        const std::vector<double> enc1 = idx1.encoder().encode_rows(p, all);
        const auto& s = p.sensitive();

        const std::size_t chunks = chunk_count(p.n(), 512);
        std::vector<CompensatedSum> dist_part(chunks), delta_part(chunks);
        parallel_chunks(p.n(), 512, workers, [&](std::size_t c, std::size_t begin, std::size_t end) {
            for (std::size_t i = begin; i < end; ++i) {
                const NeighborIndex& opp = s[i] == 1.0 ? idx0 : idx1;
                const std::vector<double>& enc = s[i] == 1.0 ? enc0 : enc1;
                std::span<const double> x(enc.data() + i * opp.dim(), opp.dim());
                const auto hits = opp.query(x, cand.k);
                double dsum = 0.0, psum = 0.0;
                for (const auto& h : hits) {
                    dsum += h.distance;
                    psum += predictions[h.row_id];
                }
                const double m = static_cast<double>(hits.size());
                dist_part[c].add(dsum / m);
                delta_part[c].add(std::fabs(predictions[i] - psum / m));
            }
        });
        CompensatedSum dist_total, delta_total;
        for (std::size_t c = 0; c < chunks; ++c) {
            dist_total.add(dist_part[c].value());
            delta_total.add(delta_part[c].value());
        }
        evals[g] = Eval{dist_total.value() / static_cast<double>(p.n()),
                        delta_total.value() / static_cast<double>(p.n())};
    }

    // Min-max normalization of each term across the grid; a constant term
    // contributes 0 for every candidate.
    auto norm_term = [&](auto getter) {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (const auto& e : evals) {
            lo = std::min(lo, getter(e));
            hi = std::max(hi, getter(e));
        }
        std::vector<double> out(evals.size(), 0.0);
        if (hi > lo)
            for (std::size_t g = 0; g < evals.size(); ++g)
                out[g] = (getter(evals[g]) - lo) / (hi - lo);
        return out;
    };
    const auto nd = norm_term([](const Eval& e) { return e.mean_dist; });
    const auto na = norm_term([](const Eval& e) { return e.mean_absdelta; });

    std::size_t best = 0;
    double best_j = std::numeric_limits<double>::infinity();
    for (std::size_t g = 0; g < grid.size(); ++g) {
        const double j = nd[g] + weight * na[g];
        if (j < best_j) {
            best_j = j;
            best = g;
        }
    }
    return TunerResult{grid[best], best, evals[best].mean_dist, evals[best].mean_absdelta,
                       best_j};
}

}  // namespace fairprice

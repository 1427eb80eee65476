#include "fairprice/mitigation_pre.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "fairprice/kernels.hpp"

namespace fairprice {

std::vector<std::pair<std::string, double>> dependency_profile(const Portfolio& p,
                                                               const HgrOptions& opts) {
    const auto& s = p.sensitive();
    std::vector<int32_t> s_codes(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) s_codes[i] = s[i] == 1.0 ? 1 : 0;

    std::vector<std::pair<std::string, double>> profile;
    for (const auto& col : p.columns()) {
        if (col.spec.role != ColumnRole::feature) continue;
        double value = 0.0;
        if (col.spec.kind == ColumnKind::quantitative) {
            value = hgr_kde(s, col.num, opts);
        } else if (col.spec.kind == ColumnKind::binary) {
            std::vector<int32_t> codes(col.num.size());
            for (std::size_t i = 0; i < col.num.size(); ++i)
                codes[i] = col.num[i] == 1.0 ? 1 : 0;
            value = hgr_discrete(s_codes, codes);
        } else {
            value = hgr_discrete(s_codes, col.codes);
        }
        profile.emplace_back(col.spec.name, value);
    }
    std::sort(profile.begin(), profile.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    return profile;
}

std::vector<DeletionScenario> scenarios_from_threshold(
    const std::vector<std::pair<std::string, double>>& profile,
    const std::vector<double>& thresholds) {
    std::vector<DeletionScenario> out;
    for (double thr : thresholds) {
        if (!(thr > 0.0 && thr <= 1.0))
            throw std::invalid_argument("deletion threshold must be in (0,1]");
        DeletionScenario sc;
        sc.threshold = thr;
        for (const auto& [name, dep] : profile)
            if (dep > thr) sc.deleted.push_back(name);
        std::sort(sc.deleted.begin(), sc.deleted.end());
        const bool dup = std::any_of(out.begin(), out.end(), [&](const DeletionScenario& other) {
            return other.deleted == sc.deleted;
        });
        if (dup) continue;
        std::ostringstream id;
        id << "delete_thr_" << thr;
        sc.id = id.str();
        out.push_back(std::move(sc));
    }
    return out;
}

CorrelationRemover CorrelationRemover::fit(const Portfolio& p, double alpha,
                                           const std::vector<std::string>& columns) {
    if (!(alpha >= 0.0 && alpha <= 1.0))
        throw std::invalid_argument("correlation remover alpha must be in [0,1]");
    if (columns.empty()) throw std::invalid_argument("correlation remover needs columns");

    const auto& s = p.sensitive();
    double s_mean = 0.0;
    for (double v : s) s_mean += v;
    s_mean /= static_cast<double>(s.size());
    double s_var = 0.0;
    for (double v : s) s_var += (v - s_mean) * (v - s_mean);
    if (!(s_var > 0.0)) throw std::invalid_argument("sensitive column is constant");

    CorrelationRemover cr;
    cr.alpha_ = alpha;
    cr.s_mean_ = s_mean;
    cr.columns_ = columns;
    for (const auto& name : columns) {
        const Column& col = p.column(name);
        if (col.spec.kind != ColumnKind::quantitative)
            throw std::invalid_argument("correlation remover column must be quantitative: " + name);
        double cov = 0.0;
        for (std::size_t i = 0; i < s.size(); ++i) cov += (s[i] - s_mean) * col.num[i];
        cr.coef_.push_back(cov / s_var);
    }
    return cr;
}

Portfolio CorrelationRemover::apply(const Portfolio& p) const {
    const auto& s = p.sensitive();
    Portfolio out = p;
    for (std::size_t c = 0; c < columns_.size(); ++c) {
        const Column& col = p.column(columns_[c]);
        std::vector<double> adjusted(col.num.size());
        for (std::size_t i = 0; i < col.num.size(); ++i)
            adjusted[i] = col.num[i] - alpha_ * coef_[c] * (s[i] - s_mean_);
        out = out.with_numeric_column(columns_[c], std::move(adjusted));
    }
    return out;
}

void SmoteConfig::validate() const {
    if (!(st >= 0.0 && st <= 1.0)) throw std::invalid_argument("smote st must be in [0,1]");
    if (!(ft >= 0.0 && ft <= 1.0)) throw std::invalid_argument("smote ft must be in [0,1]");
}

namespace {

// Exhaustive nearest-2 inside one (bin, group) cell; cell sizes are small.
std::pair<std::size_t, std::size_t> nearest_two(const std::vector<double>& mat, std::size_t dim,
                                                const std::vector<std::size_t>& cell,
                                                std::size_t self, Metric metric, double q) {
    double d1 = std::numeric_limits<double>::infinity(), d2 = d1;
    std::size_t v1 = self, v2 = self;
    const double* x = mat.data() + self * dim;
    for (std::size_t other = 0; other < cell.size(); ++other) {
        if (other == self) continue;
        const double* y = mat.data() + other * dim;
        double dist = 0.0;
        switch (metric) {
            case Metric::manhattan: dist = kernels::sum_abs_diff(x, y, dim); break;
            case Metric::euclidean: dist = std::sqrt(kernels::sum_sq_diff(x, y, dim)); break;
            case Metric::minkowski: {
                for (std::size_t t = 0; t < dim; ++t)
                    dist += std::pow(std::fabs(x[t] - y[t]), q);
                dist = std::pow(dist, 1.0 / q);
                break;
            }
        }
        if (dist < d1 || (dist == d1 && other < v1)) {
            d2 = d1; v2 = v1;
            d1 = dist; v1 = other;
        } else if (dist < d2 || (dist == d2 && other < v2)) {
            d2 = dist; v2 = other;
        }
    }
    return {v1, v2};
}

}  // namespace

std::pair<Portfolio, SmoteReport> fair_smote(const Portfolio& train, const SmoteConfig& cfg) {
    cfg.validate();
    const std::vector<int> bins = bin_target(train, cfg.bins);
    const auto& s = train.sensitive();

    DistanceSpec dist = cfg.distance;
    if (dist.features.empty()) dist.features = train.feature_names();
    dist.validate();

    // (bin -> per-group row lists), bins processed in ascending order.
    std::map<int, std::array<std::vector<std::size_t>, 2>> cells;
    for (std::size_t i = 0; i < train.n(); ++i)
        cells[bins[i]][s[i] == 1.0 ? 1 : 0].push_back(i);

    SmoteReport report;
    struct SyntheticDraw {
        std::size_t p_row = 0, v1_row = 0, v2_row = 0;
        double u = 1.0;
        int group = 0;
        int bin = 0;
        bool copy_only = false;          // fallback cells clone the source row
        std::vector<double> col_u;       // per-column u (variant)
        std::vector<uint32_t> choices;   // pre-drawn 3-way choices, consumed in column order
    };
    std::vector<SyntheticDraw> draws;

    // Columns rebuilt by the Algorithm 1 rules, in schema order.
    std::size_t n_rule_cols = 0;
    std::unordered_map<std::string, std::size_t> rule_col_index;
    for (const auto& col : train.columns())
        if (col.spec.role == ColumnRole::feature || col.spec.role == ColumnRole::target)
            rule_col_index[col.spec.name] = n_rule_cols++;

    for (const auto& [bin, groups] : cells) {
        const std::size_t n0 = groups[0].size(), n1 = groups[1].size();
        if (n0 == n1) continue;
        const int minority = n0 < n1 ? 0 : 1;
        const std::size_t need = n0 < n1 ? n1 - n0 : n0 - n1;
        const auto& cell = groups[minority];
        if (cell.empty())
            throw std::invalid_argument("fair_smote: empty minority cell in bin " +
                                        std::to_string(bin));

        // Deterministic per-bin stream regardless of processing order.
        std::seed_seq seq{static_cast<uint64_t>(cfg.seed), static_cast<uint64_t>(bin),
                          static_cast<uint64_t>(minority)};
        std::mt19937_64 rng(seq);
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        std::uniform_int_distribution<std::size_t> pick(0, cell.size() - 1);
        std::uniform_int_distribution<uint32_t> choose3(0, 2);

        const bool fallback = cell.size() < 3;
        if (fallback) ++report.fallback_cells;

        std::vector<double> enc;
        std::vector<std::pair<std::size_t, std::size_t>> nn(cell.size());
        if (!fallback) {
            EncodeOptions opts;
            opts.standardize = dist.standardize;
            const Encoder enc_cell = Encoder::build(train, dist.features, opts, cell);
            enc = enc_cell.encode_rows(train, cell);
            for (std::size_t c = 0; c < cell.size(); ++c)
                nn[c] = nearest_two(enc, enc_cell.dim(), cell, c, dist.metric,
                                    dist.minkowski_q);
        }

        for (std::size_t t = 0; t < need; ++t) {
            SyntheticDraw d;
            d.bin = bin;
            d.group = minority;
            const std::size_t pi = pick(rng);
            d.p_row = cell[pi];
            d.copy_only = fallback;
            if (!fallback) {
                d.v1_row = cell[nn[pi].first];
                d.v2_row = cell[nn[pi].second];
                d.u = unif(rng);
                if (cfg.per_column_u) {
                    d.col_u.resize(n_rule_cols);
                    for (auto& cu : d.col_u) cu = unif(rng);
                }
                d.choices.resize(n_rule_cols);
                for (auto& ch : d.choices) ch = choose3(rng);
            }
            draws.push_back(std::move(d));
        }
    }

    // Assemble the augmented portfolio.
    const std::size_t n_old = train.n();
    const std::size_t n_new = draws.size();
    std::vector<Column> cols = train.columns();
    for (auto& col : cols) {
        const auto rule_it = rule_col_index.find(col.spec.name);
        const std::size_t rule_col_idx =
            rule_it != rule_col_index.end() ? rule_it->second : 0;
        for (std::size_t t = 0; t < n_new; ++t) {
            const SyntheticDraw& d = draws[t];
            const bool rule_driven =
                col.spec.role == ColumnRole::feature || col.spec.role == ColumnRole::target;
            if (col.spec.role == ColumnRole::sensitive) {
                col.num.push_back(static_cast<double>(d.group));
                continue;
            }
            if (col.spec.role == ColumnRole::identifier) {
                col.text.push_back(col.text[d.p_row]);
                continue;
            }
            if (!rule_driven || d.copy_only) {
                // exposure / claim_count and fallback cells copy the source row
                if (col.spec.kind == ColumnKind::categorical)
                    col.codes.push_back(col.codes[d.p_row]);
                else
                    col.num.push_back(col.num[d.p_row]);
                continue;
            }
            const double u = cfg.per_column_u ? d.col_u[rule_col_idx] : d.u;
            const uint32_t choice = d.choices[rule_col_idx];
            auto choose_row = [&](uint32_t c) {
                return c == 0 ? d.v1_row : (c == 1 ? d.v2_row : d.p_row);
            };
            if (col.spec.kind == ColumnKind::categorical) {
                col.codes.push_back(col.codes[choose_row(choice)]);
            } else if (col.spec.kind == ColumnKind::binary) {
                col.num.push_back(cfg.st > u ? col.num[choose_row(choice)]
                                             : col.num[d.p_row]);
            } else {
                double v = cfg.st > u ? col.num[d.p_row] +
                                            cfg.ft * (col.num[d.v1_row] - col.num[d.v2_row])
                                      : col.num[d.p_row];
                // targets live on [0, inf); the extrapolation rule may cross it
                if (col.spec.role == ColumnRole::target && v < 0.0) v = 0.0;
                col.num.push_back(v);
            }
        }
    }

    report.synthetic_rows = n_new;
    report.bin_of_origin.reserve(n_new);
    for (const auto& d : draws) report.bin_of_origin.push_back(d.bin);

    Portfolio out(std::move(cols), train.provenance() + "+fair_smote");
    std::vector<uint8_t> flags(n_old, 0);
    flags.resize(n_old + n_new, 1);
    out.set_synthetic_flags(std::move(flags));
    return {std::move(out), std::move(report)};
}

}  // namespace fairprice

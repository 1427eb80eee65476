#include "fairprice/metrics.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include "fairprice/kernels.hpp"
#include "fairprice/parallel.hpp"

#include "json.hpp"

namespace fairprice {

namespace {

constexpr double kPi = 3.14159265358979323846;

void require_aligned(std::span<const double> a, std::span<const double> b, const char* what) {
    if (a.size() != b.size())
        throw std::invalid_argument(std::string(what) + ": input vectors not aligned");
}

double group_rate(std::span<const double> y_hat, std::span<const double> s, double group,
                  const double* cond = nullptr, double cond_value = 0.0) {
    std::size_t num = 0, den = 0;
    for (std::size_t i = 0; i < y_hat.size(); ++i) {
        if (s[i] != group) continue;
        if (cond && cond[i] != cond_value) continue;
        ++den;
        if (y_hat[i] == 1.0) ++num;
    }
    if (den == 0) throw std::invalid_argument("binary_panel: empty conditioning cell");
    return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

BinaryPanel binary_panel(std::span<const double> y_hat, std::span<const double> s,
                         std::span<const double> y) {
    require_aligned(y_hat, s, "binary_panel");
    if (!y.empty()) require_aligned(y_hat, y, "binary_panel");
    bool has0 = false, has1 = false;
    for (double v : s) (v == 1.0 ? has1 : has0) = true;
    if (!has0 || !has1) throw std::invalid_argument("binary_panel: both S groups required");

    BinaryPanel out;
    const double r1 = group_rate(y_hat, s, 1.0);
    const double r0 = group_rate(y_hat, s, 0.0);
    out.disparate_impact = r0 == 0.0 ? std::numeric_limits<double>::infinity() : r1 / r0;
    out.m1 = std::fabs(r1 - r0);
    if (!y.empty()) {
        // P(Yhat=1 | Y=0, S=s) and P(Yhat=0 | Y=1, S=s)
        const double a1 = group_rate(y_hat, s, 1.0, y.data(), 0.0);
        const double a0 = group_rate(y_hat, s, 0.0, y.data(), 0.0);
        out.mistreatment_10 = std::fabs(a1 - a0);
        const double b1 = group_rate(y_hat, s, 1.0, y.data(), 1.0);
        const double b0 = group_rate(y_hat, s, 0.0, y.data(), 1.0);
        out.mistreatment_01 = std::fabs((1.0 - b1) - (1.0 - b0));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Kendall tau-b, Knight's O(n log n) construction.
// ---------------------------------------------------------------------------

namespace {

// Counts inversions of v via bottom-up merge sort; v ends up sorted.
uint64_t count_inversions(std::vector<double>& v) {
    const std::size_t n = v.size();
    std::vector<double> buf(n);
    uint64_t swaps = 0;
    for (std::size_t width = 1; width < n; width *= 2) {
        for (std::size_t lo = 0; lo < n; lo += 2 * width) {
            const std::size_t mid = std::min(lo + width, n);
            const std::size_t hi = std::min(lo + 2 * width, n);
            std::size_t i = lo, j = mid, k = lo;
            while (i < mid && j < hi) {
                if (v[j] < v[i]) {
                    swaps += mid - i;
                    buf[k++] = v[j++];
                } else {
                    buf[k++] = v[i++];
                }
            }
            while (i < mid) buf[k++] = v[i++];
            while (j < hi) buf[k++] = v[j++];
            std::copy(buf.begin() + lo, buf.begin() + hi, v.begin() + lo);
        }
    }
    return swaps;
}

uint64_t tie_pairs(const std::vector<double>& sorted) {
    uint64_t t = 0;
    std::size_t run = 1;
    for (std::size_t i = 1; i <= sorted.size(); ++i) {
        if (i < sorted.size() && sorted[i] == sorted[i - 1]) {
            ++run;
        } else {
            t += static_cast<uint64_t>(run) * (run - 1) / 2;
            run = 1;
        }
    }
    return t;
}

}  // namespace

double kendall_tau(std::span<const double> a, std::span<const double> b) {
    require_aligned(a, b, "kendall_tau");
    const std::size_t n = a.size();
    if (n < 2) throw std::invalid_argument("kendall_tau: need n >= 2");

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
        if (a[i] != a[j]) return a[i] < a[j];
        return b[i] < b[j];
    });

    const uint64_t tot = static_cast<uint64_t>(n) * (n - 1) / 2;
    uint64_t xtie = 0, ntie = 0;
    {
        std::size_t run_a = 1, run_ab = 1;
        for (std::size_t i = 1; i <= n; ++i) {
            const bool same_a = i < n && a[order[i]] == a[order[i - 1]];
            const bool same_ab = same_a && b[order[i]] == b[order[i - 1]];
            if (same_a) ++run_a; else { xtie += static_cast<uint64_t>(run_a) * (run_a - 1) / 2; run_a = 1; }
            if (same_ab) ++run_ab; else { ntie += static_cast<uint64_t>(run_ab) * (run_ab - 1) / 2; run_ab = 1; }
        }
    }

    std::vector<double> bseq(n);
    for (std::size_t i = 0; i < n; ++i) bseq[i] = b[order[i]];
    const uint64_t dis = count_inversions(bseq);  // bseq now sorted
    const uint64_t ytie = tie_pairs(bseq);

    if (xtie == tot || ytie == tot)
        throw std::invalid_argument("kendall_tau: zero variance input");

    const double con_minus_dis = static_cast<double>(tot) - static_cast<double>(xtie) -
                                 static_cast<double>(ytie) + static_cast<double>(ntie) -
                                 2.0 * static_cast<double>(dis);
    const double denom = std::sqrt(static_cast<double>(tot - xtie)) *
                         std::sqrt(static_cast<double>(tot - ytie));
    double tau = con_minus_dis / denom;
    return std::clamp(tau, -1.0, 1.0);
}

// ---------------------------------------------------------------------------
// HGR via Gaussian KDE grid and the second singular value of the normalized
// joint-mass matrix.
// ---------------------------------------------------------------------------

namespace {

double silverman_bandwidth(std::span<const double> x, double mult) {
    const std::size_t n = x.size();
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double v : x) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n);
    const double sd = std::sqrt(var);

    std::vector<double> sorted(x.begin(), x.end());
    std::sort(sorted.begin(), sorted.end());
    auto quantile = [&](double q) {
        const double pos = q * static_cast<double>(n - 1);
        const std::size_t lo = static_cast<std::size_t>(pos);
        const std::size_t hi = std::min(lo + 1, n - 1);
        const double w = pos - static_cast<double>(lo);
        return sorted[lo] * (1.0 - w) + sorted[hi] * w;
    };
    const double iqr = quantile(0.75) - quantile(0.25);

    double a = sd;
    if (iqr > 0.0) a = std::min(sd, iqr / 1.349);
    if (a == 0.0) a = std::max(sd, iqr / 1.349);
    return 1.06 * a * std::pow(static_cast<double>(n), -0.2) * mult;
}

int distinct_count_capped(std::span<const double> x, int cap, std::vector<double>* values) {
    std::set<double> seen;
    for (double v : x) {
        seen.insert(v);
        if (static_cast<int>(seen.size()) > cap) return cap + 1;
    }
    if (values) values->assign(seen.begin(), seen.end());
    return static_cast<int>(seen.size());
}

// Second singular value of q_ab = m_ab / sqrt(m_a. * m_.b), clamped to [0,1].
double second_singular_value(Eigen::MatrixXd m) {
    const double total = m.sum();
    if (!(total > 0.0)) return 0.0;
    m /= total;
    const Eigen::VectorXd r = m.rowwise().sum();
    const Eigen::VectorXd c = m.colwise().sum();
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            const double d = r[i] * c[j];
            m(i, j) = d > 0.0 ? m(i, j) / std::sqrt(d) : 0.0;
        }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    const auto& sv = svd.singularValues();
    if (sv.size() < 2) return 0.0;
    return std::clamp(sv[1], 0.0, 1.0);
}

std::vector<double> kde_grid(std::span<const double> x, double h, int g) {
    const auto [mn, mx] = std::minmax_element(x.begin(), x.end());
    const double lo = *mn - 3.0 * h, hi = *mx + 3.0 * h;
    std::vector<double> grid(g);
    const double step = (hi - lo) / static_cast<double>(g - 1);
    for (int i = 0; i < g; ++i) grid[i] = lo + step * static_cast<double>(i);
    return grid;
}

double hgr_continuous(std::span<const double> u, std::span<const double> v,
                      const HgrOptions& opts) {
    const int g = opts.grid_cc;
    const double hu = silverman_bandwidth(u, opts.bandwidth_mult);
    const double hv = silverman_bandwidth(v, opts.bandwidth_mult);
    const auto gu = kde_grid(u, hu, g);
    const auto gv = kde_grid(v, hv, g);

    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(g, g);
    std::vector<double> au(g), bv(g);
    const double inv_hu = 1.0 / hu, inv_hv = 1.0 / hv;
    for (std::size_t i = 0; i < u.size(); ++i) {
        for (int a = 0; a < g; ++a) {
            const double z = (gu[a] - u[i]) * inv_hu;
            au[a] = std::exp(-0.5 * z * z);
        }
        for (int b = 0; b < g; ++b) {
            const double z = (gv[b] - v[i]) * inv_hv;
            bv[b] = std::exp(-0.5 * z * z);
        }
        // row-major accumulate; Eigen matrices are column-major but the
        // joint-mass matrix is square and we normalize, so orientation only
        // transposes, leaving singular values unchanged
        kernels::outer_accum(m.data(), au.data(), g, bv.data(), g);
    }
    return second_singular_value(std::move(m));
}

double hgr_binary_continuous(std::span<const double> bvals, const std::vector<double>& atoms,
                             std::span<const double> v, const HgrOptions& opts) {
    const int g = opts.grid_bc;
    const double hv = silverman_bandwidth(v, opts.bandwidth_mult);
    const auto gv = kde_grid(v, hv, g);
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(2, g);
    const double inv_hv = 1.0 / hv;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const int row = bvals[i] == atoms[0] ? 0 : 1;
        for (int b = 0; b < g; ++b) {
            const double z = (gv[b] - v[i]) * inv_hv;
            m(row, b) += std::exp(-0.5 * z * z);
        }
    }
    return second_singular_value(std::move(m));
}

}  // namespace

double hgr_discrete(std::span<const int32_t> u, std::span<const int32_t> v) {
    if (u.size() != v.size()) throw std::invalid_argument("hgr_discrete: inputs not aligned");
    if (u.empty()) throw std::invalid_argument("hgr_discrete: empty input");
    const int32_t umax = *std::max_element(u.begin(), u.end());
    const int32_t vmax = *std::max_element(v.begin(), v.end());
    const int32_t umin = *std::min_element(u.begin(), u.end());
    const int32_t vmin = *std::min_element(v.begin(), v.end());
    if (umin < 0 || vmin < 0) throw std::invalid_argument("hgr_discrete: negative codes");
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(umax + 1, vmax + 1);
    for (std::size_t i = 0; i < u.size(); ++i) m(u[i], v[i]) += 1.0;
    return second_singular_value(std::move(m));
}

HgrResult hgr_kde_full(std::span<const double> u, std::span<const double> v,
                       const HgrOptions& opts) {
    require_aligned(u, v, "hgr_kde");
    if (u.size() < 2) throw std::invalid_argument("hgr_kde: need n >= 2");

    HgrResult out;
    out.low_n = u.size() < 30;

    std::vector<double> u_atoms, v_atoms;
    const int du = distinct_count_capped(u, 2, &u_atoms);
    const int dv = distinct_count_capped(v, 2, &v_atoms);
    if (du == 1 || dv == 1) {
        out.degenerate = true;
        out.value = 0.0;
        return out;
    }
    if (du <= 2 && dv <= 2) {
        std::vector<int32_t> uc(u.size()), vc(v.size());
        for (std::size_t i = 0; i < u.size(); ++i) {
            uc[i] = u[i] == u_atoms[0] ? 0 : 1;
            vc[i] = v[i] == v_atoms[0] ? 0 : 1;
        }
        out.value = hgr_discrete(uc, vc);
    } else if (du <= 2) {
        out.value = hgr_binary_continuous(u, u_atoms, v, opts);
    } else if (dv <= 2) {
        out.value = hgr_binary_continuous(v, v_atoms, u, opts);
    } else {
        out.value = hgr_continuous(u, v, opts);
    }
    return out;
}

double hgr_kde(std::span<const double> u, std::span<const double> v, const HgrOptions& opts) {
    return hgr_kde_full(u, v, opts).value;
}

// ---------------------------------------------------------------------------
// Two-sample Kolmogorov-Smirnov.
// ---------------------------------------------------------------------------

double kolmogorov_sf(double x) {
    if (x < 1e-10) return 1.0;
    double p;
    if (x < 1.18) {
        // Dual theta-series form, accurate for small arguments.
        const double t = kPi * kPi / (8.0 * x * x);
        double cdf = 0.0;
        for (int k = 0; k < 20; ++k) {
            const double term = std::exp(-static_cast<double>(2 * k + 1) *
                                         static_cast<double>(2 * k + 1) * t);
            cdf += term;
            if (term < 1e-300) break;
        }
        cdf *= std::sqrt(2.0 * kPi) / x;
        p = 1.0 - cdf;
    } else {
        double sum = 0.0;
        for (int j = 1; j <= 100; ++j) {
            const double term = std::exp(-2.0 * static_cast<double>(j) * j * x * x);
            sum += (j % 2 == 1) ? term : -term;
            if (term < 1e-300) break;
        }
        p = 2.0 * sum;
    }
    return std::clamp(p, 1e-300, 1.0);
}

double ks_reject_threshold(double alpha, std::size_t n0, std::size_t n1) {
    const double ne = static_cast<double>(n0) * static_cast<double>(n1) /
                      static_cast<double>(n0 + n1);
    return std::sqrt(-0.5 * std::log(alpha / 2.0) / ne);
}

KsResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("ks_two_sample: empty sample");
    std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    const double na = static_cast<double>(sa.size()), nb = static_cast<double>(sb.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < sa.size() && j < sb.size()) {
        const double x = std::min(sa[i], sb[j]);
        while (i < sa.size() && sa[i] == x) ++i;
        while (j < sb.size() && sb[j] == x) ++j;
        d = std::max(d, std::fabs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    const double ne = na * nb / (na + nb);
    return KsResult{d, kolmogorov_sf(std::sqrt(ne) * d)};
}

// ---------------------------------------------------------------------------
// Histogram divergences.
// ---------------------------------------------------------------------------

DivergenceResult divergences(std::span<const double> a, std::span<const double> b, int bins) {
    if (a.empty() || b.empty()) throw std::invalid_argument("divergences: empty sample");
    if (bins < 2) throw std::invalid_argument("divergences: bins must be >= 2");

    double lo = a[0], hi = a[0];
    for (double v : a) { lo = std::min(lo, v); hi = std::max(hi, v); }
    for (double v : b) { lo = std::min(lo, v); hi = std::max(hi, v); }
    if (hi == lo) return DivergenceResult{0.0, 0.0};

    const double width = (hi - lo) / static_cast<double>(bins);
    auto histogram = [&](std::span<const double> x) {
        std::vector<double> h(bins, 0.0);
        for (double v : x) {
            int idx = static_cast<int>((v - lo) / width);
            idx = std::clamp(idx, 0, bins - 1);
            h[idx] += 1.0;
        }
        constexpr double eps = 1e-10;
        double total = 0.0;
        for (double& c : h) {
            c = std::max(c / static_cast<double>(x.size()), eps);
            total += c;
        }
        for (double& c : h) c /= total;
        return h;
    };
    const auto pa = histogram(a);
    const auto pb = histogram(b);

    double kl = 0.0, js = 0.0;
    for (int k = 0; k < bins; ++k) {
        kl += pa[k] * std::log(pa[k] / pb[k]);
        const double pm = 0.5 * (pa[k] + pb[k]);
        js += 0.5 * (pa[k] * std::log(pa[k] / pm) + pb[k] * std::log(pb[k] / pm));
    }
    return DivergenceResult{kl, std::clamp(js, 0.0, std::log(2.0))};
}

double mean_ratio(std::span<const double> v, std::span<const double> s) {
    require_aligned(v, s, "mean_ratio");
    CompensatedSum s1, s0;
    std::size_t n1 = 0, n0 = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (s[i] == 1.0) { s1.add(v[i]); ++n1; }
        else { s0.add(v[i]); ++n0; }
    }
    if (n0 == 0 || n1 == 0) throw std::invalid_argument("mean_ratio: both groups required");
    const double m0 = s0.value() / static_cast<double>(n0);
    if (m0 == 0.0) throw std::invalid_argument("mean_ratio: zero denominator mean");
    return (s1.value() / static_cast<double>(n1)) / m0;
}

double mean_ratio_weighted(std::span<const double> v, std::span<const double> s,
                           std::span<const double> w) {
    require_aligned(v, s, "mean_ratio_weighted");
    require_aligned(v, w, "mean_ratio_weighted");
    CompensatedSum v1, v0, w1, w0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (s[i] == 1.0) { v1.add(w[i] * v[i]); w1.add(w[i]); }
        else { v0.add(w[i] * v[i]); w0.add(w[i]); }
    }
    if (w0.value() == 0.0 || w1.value() == 0.0)
        throw std::invalid_argument("mean_ratio_weighted: empty or zero-weight group");
    const double m0 = v0.value() / w0.value();
    if (m0 == 0.0) throw std::invalid_argument("mean_ratio_weighted: zero denominator mean");
    return (v1.value() / w1.value()) / m0;
}

// ---------------------------------------------------------------------------
// Flip test.
// ---------------------------------------------------------------------------

namespace {

FlipTestResult flip_aggregate(const Portfolio& p, std::span<const double> predictions,
                              const std::vector<std::vector<std::size_t>>& neighbor_ids,
                              bool truncated, std::size_t workers) {
    const auto& s = p.sensitive();
    FlipTestResult out;
    out.truncated = truncated;
    out.delta.assign(p.n(), 0.0);

    const std::size_t chunks = chunk_count(p.n(), 1024);
    std::vector<CompensatedSum> sum1(chunks), sum0(chunks);
    parallel_chunks(p.n(), 1024, workers, [&](std::size_t c, std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const auto& ids = neighbor_ids[i];
            double acc = 0.0;
            for (auto j : ids) acc += predictions[j];
            const double delta = predictions[i] - acc / static_cast<double>(ids.size());
            out.delta[i] = delta;
            (s[i] == 1.0 ? sum1 : sum0)[c].add(delta);
        }
    });
    CompensatedSum t1, t0;
    for (std::size_t c = 0; c < chunks; ++c) {
        t1.add(sum1[c].value());
        t0.add(sum0[c].value());
    }
    out.ft1 = t1.value() / static_cast<double>(p.group_count(1));
    out.ft0 = t0.value() / static_cast<double>(p.group_count(0));
    return out;
}

}  // namespace

FlipTestResult flip_test(const Portfolio& p, std::span<const double> predictions,
                         const NeighborIndex& idx0, const NeighborIndex& idx1,
                         std::size_t k, std::size_t workers) {
    if (k < 1) throw std::invalid_argument("flip_test: k must be >= 1");
    if (predictions.size() != p.n())
        throw std::invalid_argument("flip_test: predictions not aligned");
    if (idx0.group() != 0 || idx1.group() != 1)
        throw std::invalid_argument("flip_test: indexes must cover groups 0 and 1");

    std::vector<std::size_t> all(p.n());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    const std::vector<double> enc0 = idx0.encoder().encode_rows(p, all);
    const std::vector<double> enc1 = idx1.encoder().encode_rows(p, all);
    const auto& s = p.sensitive();

    std::vector<std::vector<std::size_t>> neighbor_ids(p.n());
    const bool truncated = k > idx0.size() || k > idx1.size();
    parallel_chunks(p.n(), 512, workers, [&](std::size_t, std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const NeighborIndex& opp = s[i] == 1.0 ? idx0 : idx1;
            const std::vector<double>& enc = s[i] == 1.0 ? enc0 : enc1;
            std::span<const double> x(enc.data() + i * opp.dim(), opp.dim());
            const auto hits = opp.query(x, k);
            auto& ids = neighbor_ids[i];
            ids.reserve(hits.size());
            for (const auto& h : hits) ids.push_back(h.row_id);
        }
    });
    return flip_aggregate(p, predictions, neighbor_ids, truncated, workers);
}

FlipTestResult flip_test_with_neighbors(const Portfolio& p, std::span<const double> predictions,
                                        const CrossNeighbors& nbrs, std::size_t workers) {
    if (predictions.size() != p.n())
        throw std::invalid_argument("flip_test: predictions not aligned");
    if (nbrs.neighbors.size() != p.n())
        throw std::invalid_argument("flip_test: neighbor table not aligned");
    return flip_aggregate(p, predictions, nbrs.neighbors, nbrs.truncated, workers);
}

// ---------------------------------------------------------------------------
// Lipschitz violation fraction.
// ---------------------------------------------------------------------------

double lipschitz_violations(const Portfolio& p, std::span<const double> predictions,
                            double lambda, const DistanceSpec& d_spec,
                            const PairSamplingPlan& plan) {
    if (!(lambda > 0.0)) throw std::invalid_argument("lipschitz: lambda must be > 0");
    if (predictions.size() != p.n())
        throw std::invalid_argument("lipschitz: predictions not aligned");
    d_spec.validate();

    EncodeOptions opts;
    opts.standardize = d_spec.standardize;
    const Encoder enc = Encoder::build(p, d_spec.features, opts);
    const std::vector<double> mat = enc.encode_all(p);
    const std::size_t d = enc.dim();

    auto pair_distance = [&](std::size_t i, std::size_t j) {
        const double* xi = mat.data() + i * d;
        const double* xj = mat.data() + j * d;
        switch (d_spec.metric) {
            case Metric::manhattan: return kernels::sum_abs_diff(xi, xj, d);
            case Metric::euclidean: return std::sqrt(kernels::sum_sq_diff(xi, xj, d));
            case Metric::minkowski: {
                double acc = 0.0;
                for (std::size_t t = 0; t < d; ++t)
                    acc += std::pow(std::fabs(xi[t] - xj[t]), d_spec.minkowski_q);
                return std::pow(acc, 1.0 / d_spec.minkowski_q);
            }
        }
        return 0.0;
    };
    auto violates = [&](std::size_t i, std::size_t j) {
        const double dy = std::fabs(predictions[i] - predictions[j]);
        const double dx = pair_distance(i, j);
        if (dx == 0.0) return dy > 0.0;  // infinite ratio
        return dy >= lambda * dx;
    };

    uint64_t violations = 0, total = 0;
    if (p.n() <= plan.exhaustive_limit) {
        for (std::size_t i = 0; i < p.n(); ++i)
            for (std::size_t j = i + 1; j < p.n(); ++j) {
                ++total;
                if (violates(i, j)) ++violations;
            }
    } else {
        std::mt19937_64 rng(plan.seed);
        std::uniform_int_distribution<std::size_t> pick(0, p.n() - 1);
        while (total < plan.sample_pairs) {
            const std::size_t i = pick(rng), j = pick(rng);
            if (i == j) continue;
            ++total;
            if (violates(i, j)) ++violations;
        }
    }
    return total ? static_cast<double>(violations) / static_cast<double>(total) : 0.0;
}

// ---------------------------------------------------------------------------
// Panel assembly and serialization.
// ---------------------------------------------------------------------------

FairnessPanel compute_panel(const Portfolio& p, std::span<const double> values,
                            const PanelOptions& opts) {
    if (values.size() != p.n()) throw std::invalid_argument("panel: values not aligned");
    const auto& s = p.sensitive();
    if (p.group_count(0) == 0 || p.group_count(1) == 0)
        throw std::invalid_argument("panel: both S groups required");

    FairnessPanel panel;
    panel.kendall_tau = kendall_tau(values, s);
    panel.hgr = hgr_kde(s, values, opts.hgr);

    std::vector<double> v1, v0;
    v1.reserve(p.group_count(1));
    v0.reserve(p.group_count(0));
    for (std::size_t i = 0; i < values.size(); ++i)
        (s[i] == 1.0 ? v1 : v0).push_back(values[i]);
    const KsResult ks = ks_two_sample(v1, v0);
    panel.ks_stat = ks.stat;
    panel.ks_pvalue = ks.pvalue;
    panel.js_divergence = divergences(v1, v0, opts.js_bins).js;
    panel.mean_ratio = mean_ratio(values, s);

    DistanceSpec d = opts.flip_distance;
    if (d.features.empty()) d.features = p.feature_names();
    const NeighborIndex idx0 = NeighborIndex::build(p, 0, d);
    const NeighborIndex idx1 = NeighborIndex::build(p, 1, d);
    const FlipTestResult ft = flip_test(p, values, idx0, idx1, opts.flip_k, opts.workers);
    panel.flip_test_1 = ft.ft1;
    panel.flip_test_0 = ft.ft0;
    return panel;
}

std::string panel_to_json(const FairnessPanel& panel) {
    nlohmann::ordered_json j;
    j["v"] = 1;
    j["kendall_tau"] = panel.kendall_tau;
    j["hgr_kde"] = panel.hgr;
    j["ks_stat"] = panel.ks_stat;
    j["ks_pvalue"] = panel.ks_pvalue;
    j["js_divergence"] = panel.js_divergence;
    j["mean_ratio"] = panel.mean_ratio;
    j["flip_test_1"] = panel.flip_test_1;
    j["flip_test_0"] = panel.flip_test_0;
    return j.dump(2);
}

std::string panel_csv_header() {
    return "label,kendall,hgr_kde,ks_pvalue,div_js,ratio_moy,flip_test_1,flip_test_0";
}

std::string panel_csv_row(const std::string& label, const FairnessPanel& panel) {
    std::ostringstream os;
    os.precision(17);
    os << label << ',' << panel.kendall_tau << ',' << panel.hgr << ',' << panel.ks_pvalue << ','
       << panel.js_divergence << ',' << panel.mean_ratio << ',' << panel.flip_test_1 << ','
       << panel.flip_test_0;
    return os.str();
}

}  // namespace fairprice

#include "doctest.h"

#include <stdexcept>
#include <algorithm>
#include <cmath>
#include <random>

#include "fairprice/metrics.hpp"
#include "test_helpers.hpp"

using namespace fairprice;
using fairprice::testing::PortfolioBuilder;

namespace {

// O(n^2) pair-counting tau-b oracle.
double tau_oracle(const std::vector<double>& a, const std::vector<double>& b) {
    const std::size_t n = a.size();
    long long con = 0, dis = 0, ta = 0, tb = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double da = a[i] - a[j], db = b[i] - b[j];
            if (da == 0 && db == 0) { ++ta; ++tb; continue; }
            if (da == 0) { ++ta; continue; }
            if (db == 0) { ++tb; continue; }
            if (da * db > 0) ++con;
            else ++dis;
        }
    const double tot = 0.5 * n * (n - 1);
    return (con - dis) / std::sqrt((tot - ta) * (tot - tb));
}

// Exhaustive ECDF-difference KS oracle.
double ks_oracle(const std::vector<double>& a, const std::vector<double>& b) {
    auto ecdf = [](const std::vector<double>& v, double x) {
        std::size_t c = 0;
        for (double t : v)
            if (t <= x) ++c;
        return static_cast<double>(c) / static_cast<double>(v.size());
    };
    double d = 0.0;
    for (double x : a) d = std::max(d, std::fabs(ecdf(a, x) - ecdf(b, x)));
    for (double x : b) d = std::max(d, std::fabs(ecdf(a, x) - ecdf(b, x)));
    return d;
}

// Plain 100-term alternating Kolmogorov series.
double kolmogorov_series_oracle(double x) {
    if (x < 1e-10) return 1.0;
    double sum = 0.0;
    for (int j = 1; j <= 100; ++j)
        sum += (j % 2 == 1 ? 1.0 : -1.0) * std::exp(-2.0 * j * j * x * x);
    return std::clamp(2.0 * sum, 1e-300, 1.0);
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("binary panel: constant predictions") {
    std::vector<double> yhat(20, 1.0), s(20);
    for (std::size_t i = 0; i < 20; ++i) s[i] = i < 8 ? 1.0 : 0.0;
    const BinaryPanel bp = binary_panel(yhat, s);
    CHECK(bp.disparate_impact == doctest::Approx(1.0));
    CHECK(bp.m1 == doctest::Approx(0.0));
}

TEST_CASE("binary panel: constructed 20-row table gives DI 2.0") {
    // group1: 10 rows, 6 positives (rate .6); group0: 10 rows, 3 positives (.3)
    std::vector<double> yhat, s;
    for (int i = 0; i < 10; ++i) { s.push_back(1.0); yhat.push_back(i < 6 ? 1.0 : 0.0); }
    for (int i = 0; i < 10; ++i) { s.push_back(0.0); yhat.push_back(i < 3 ? 1.0 : 0.0); }
    const BinaryPanel bp = binary_panel(yhat, s);
    CHECK(bp.disparate_impact == doctest::Approx(2.0));
    CHECK(bp.m1 == doctest::Approx(0.3));
}

TEST_CASE("binary panel: m1 equals m0 on complement predictions") {
    std::mt19937_64 rng(3);
    std::vector<double> yhat(50), s(50);
    for (std::size_t i = 0; i < 50; ++i) {
        yhat[i] = rng() % 2 ? 1.0 : 0.0;
        s[i] = rng() % 3 == 0 ? 1.0 : 0.0;
    }
    std::vector<double> complement(50);
    for (std::size_t i = 0; i < 50; ++i) complement[i] = 1.0 - yhat[i];
    CHECK(binary_panel(yhat, s).m1 == doctest::Approx(binary_panel(complement, s).m1));
}

TEST_CASE("binary panel: infinity sentinel and mistreatment rates") {
    std::vector<double> yhat = {1, 1, 0, 0}, s = {1, 1, 0, 0};
    CHECK(std::isinf(binary_panel(yhat, s).disparate_impact));

    std::vector<double> yh = {1, 0, 1, 0, 1, 0, 1, 0};
    std::vector<double> sv = {1, 1, 1, 1, 0, 0, 0, 0};
    std::vector<double> yv = {0, 0, 1, 1, 0, 0, 1, 1};
    const BinaryPanel bp = binary_panel(yh, sv, yv);
    REQUIRE(bp.mistreatment_10.has_value());
    REQUIRE(bp.mistreatment_01.has_value());
    // P(yh=1|y=0,s=1)=0.5, P(yh=1|y=0,s=0)=0.5; same for the other branch
    CHECK(*bp.mistreatment_10 == doctest::Approx(0.0));
    CHECK(*bp.mistreatment_01 == doctest::Approx(0.0));
}

TEST_CASE("kendall tau basics") {
    CHECK(kendall_tau(std::vector<double>{1, 2, 3, 4}, std::vector<double>{1, 2, 3, 4}) ==
          doctest::Approx(1.0));
    CHECK(kendall_tau(std::vector<double>{1, 2, 3}, std::vector<double>{3, 1, 2}) ==
          doctest::Approx(-1.0 / 3.0));
    CHECK_THROWS_AS(kendall_tau(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}),
                    std::invalid_argument);
}

TEST_CASE("kendall tau-b matches the pair-counting oracle under ties") {
    std::mt19937_64 rng(17);
    std::uniform_int_distribution<int> small(0, 4);
    for (int rep = 0; rep < 5; ++rep) {
        std::vector<double> a(100), b(100);
        for (std::size_t i = 0; i < 100; ++i) {
            a[i] = small(rng);                  // heavy ties
            b[i] = rng() % 2 ? 1.0 : 0.0;       // binary
        }
        if (std::equal(a.begin() + 1, a.end(), a.begin())) continue;
        if (std::equal(b.begin() + 1, b.end(), b.begin())) continue;
        CHECK(kendall_tau(a, b) == doctest::Approx(tau_oracle(a, b)).epsilon(1e-12));
    }
}

TEST_CASE("kendall anti-symmetry is exact") {
    std::mt19937_64 rng(23);
    std::vector<double> a(200), b(200);
    for (std::size_t i = 0; i < 200; ++i) {
        a[i] = static_cast<double>(rng() % 50);
        b[i] = static_cast<double>(rng() % 7);
    }
    std::vector<double> neg_b = b;
    for (auto& v : neg_b) v = -v;
    CHECK(kendall_tau(a, b) == -kendall_tau(a, neg_b));
}

TEST_CASE("hgr: near-deterministic dependence approaches one") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> norm(0.0, 1.0);
    std::vector<double> u(5000), v(5000);
    for (std::size_t i = 0; i < u.size(); ++i) {
        u[i] = rng() % 2 ? 1.0 : 0.0;
        v[i] = u[i] + norm(rng) * 1e-3;
    }
    CHECK(hgr_kde(u, v) > 0.95);
}

TEST_CASE("hgr: bivariate gaussian matches the analytic value") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> norm(0.0, 1.0);
    const double rho = 0.5;
    std::vector<double> u(50000), v(50000);
    for (std::size_t i = 0; i < u.size(); ++i) {
        u[i] = norm(rng);
        v[i] = rho * u[i] + std::sqrt(1 - rho * rho) * norm(rng);
    }
    CHECK(hgr_kde(u, v) == doctest::Approx(rho).epsilon(0.1));
    CHECK(std::fabs(hgr_kde(u, v) - rho) < 0.05);
}

TEST_CASE("hgr: symmetry and monotone-transform invariance") {
    std::mt19937_64 rng(13);
    std::normal_distribution<double> norm(0.0, 1.0);
    std::vector<double> u(20000), v(20000);
    for (std::size_t i = 0; i < u.size(); ++i) {
        u[i] = norm(rng);
        v[i] = 0.4 * u[i] + norm(rng);
    }
    CHECK(hgr_kde(u, v) == doctest::Approx(hgr_kde(v, u)).epsilon(1e-6));

    std::vector<double> v2 = v;
    for (auto& x : v2) x = 2.0 * x + 3.0;
    CHECK(std::fabs(hgr_kde(u, v) - hgr_kde(u, v2)) < 0.02);

    // binary-by-continuous symmetry
    std::vector<double> s(20000);
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = i % 2 ? 1.0 : 0.0;
    CHECK(hgr_kde(s, v) == doctest::Approx(hgr_kde(v, s)).epsilon(1e-6));
}

TEST_CASE("hgr: degenerate and small-sample flags") {
    std::vector<double> constant(100, 3.0), varying(100);
    for (std::size_t i = 0; i < 100; ++i) varying[i] = static_cast<double>(i);
    const HgrResult r = hgr_kde_full(varying, constant);
    CHECK(r.degenerate);
    CHECK(r.value == 0.0);
    const HgrResult small = hgr_kde_full(std::vector<double>{1, 2, 3, 4, 5},
                                         std::vector<double>{2, 1, 4, 3, 5});
    CHECK(small.low_n);
}

TEST_CASE("hgr: exact contingency for binary pairs") {
    // perfectly dependent binary pair -> 1, independent-ish -> small
    std::vector<double> u(1000), v(1000);
    for (std::size_t i = 0; i < 1000; ++i) {
        u[i] = i % 2 ? 1.0 : 0.0;
        v[i] = u[i];
    }
    CHECK(hgr_kde(u, v) == doctest::Approx(1.0));
    for (std::size_t i = 0; i < 1000; ++i) v[i] = (i / 2) % 2 ? 1.0 : 0.0;
    CHECK(hgr_kde(u, v) < 0.05);
}

TEST_CASE("ks: identity and disjoint supports") {
    const std::vector<double> a = {3, 1, 2, 2};
    const KsResult same = ks_two_sample(a, std::vector<double>{2, 3, 1, 2});
    CHECK(same.stat == doctest::Approx(0.0));
    CHECK(same.pvalue == doctest::Approx(1.0));
    const KsResult far =
        ks_two_sample(std::vector<double>{1, 2, 3, 4}, std::vector<double>{5, 6, 7, 8});
    CHECK(far.stat == doctest::Approx(1.0));
}

TEST_CASE("ks: stat matches exhaustive oracle exactly, p-value matches the series") {
    std::mt19937_64 rng(19);
    std::normal_distribution<double> norm(0.0, 1.0);
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<double> a(200), b(170);
        for (auto& x : a) x = norm(rng);
        for (auto& x : b) x = norm(rng) + 0.1 * rep;
        const KsResult r = ks_two_sample(a, b);
        CHECK(r.stat == ks_oracle(a, b));
        const double ne = 200.0 * 170.0 / 370.0;
        CHECK(r.pvalue ==
              doctest::Approx(kolmogorov_series_oracle(std::sqrt(ne) * r.stat)).epsilon(1e-3));
    }
}

TEST_CASE("ks: rejection rule consistent with the threshold formula") {
    std::mt19937_64 rng(29);
    std::normal_distribution<double> norm(0.0, 1.0);
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<double> a(150), b(120);
        for (auto& x : a) x = norm(rng);
        for (auto& x : b) x = norm(rng) + 0.02 * rep;
        const KsResult r = ks_two_sample(a, b);
        for (double alpha : {0.01, 0.05}) {
            const double thr = ks_reject_threshold(alpha, 150, 120);
            if (std::fabs(r.pvalue - alpha) < 1e-5) continue;  // discretization band
            CHECK((r.stat > thr) == (r.pvalue < alpha));
        }
    }
}

TEST_CASE("ks: stat invariant under common strictly increasing transforms") {
    std::mt19937_64 rng(31);
    std::vector<double> a(100), b(80);
    for (auto& x : a) x = static_cast<double>(rng() % 1000);
    for (auto& x : b) x = static_cast<double>(rng() % 1000) + 50.0;
    const double base = ks_two_sample(a, b).stat;
    auto f = [](double x) { return std::exp(x / 300.0); };
    std::vector<double> fa = a, fb = b;
    for (auto& x : fa) x = f(x);
    for (auto& x : fb) x = f(x);
    CHECK(ks_two_sample(fa, fb).stat == doctest::Approx(base));
}

TEST_CASE("divergences: identity, symmetry, hand value, bound") {
    std::mt19937_64 rng(37);
    std::vector<double> a(500), b(500);
    for (auto& x : a) x = static_cast<double>(rng() % 100);
    for (auto& x : b) x = static_cast<double>(rng() % 120);

    const DivergenceResult same = divergences(a, a, 50);
    CHECK(same.kl == doctest::Approx(0.0));
    CHECK(same.js == doctest::Approx(0.0));

    CHECK(divergences(a, b, 50).js == doctest::Approx(divergences(b, a, 50).js).epsilon(1e-12));
    CHECK(divergences(a, b, 50).js <= std::log(2.0));

    // p = (.5,.5), q = (.9,.1) realized as two-bin histograms
    std::vector<double> p, q;
    for (int i = 0; i < 5; ++i) p.push_back(0.25);
    for (int i = 0; i < 5; ++i) p.push_back(0.75);
    for (int i = 0; i < 9; ++i) q.push_back(0.25);
    q.push_back(0.75);
    const DivergenceResult d = divergences(p, q, 2);
    CHECK(d.kl == doctest::Approx(0.5 * std::log(0.5 / 0.9) + 0.5 * std::log(0.5 / 0.1))
                      .epsilon(1e-9));
    CHECK(d.kl == doctest::Approx(0.5108).epsilon(1e-3));
}

TEST_CASE("mean ratio") {
    std::vector<double> v = {120, 120, 100, 100}, s = {1, 1, 0, 0};
    CHECK(mean_ratio(v, s) == doctest::Approx(1.2));
    CHECK(mean_ratio(std::vector<double>{5, 5, 5, 5}, s) == doctest::Approx(1.0));
    CHECK_THROWS_AS(mean_ratio(std::vector<double>{1, 1, 0, 0}, s), std::invalid_argument);

    // weighted variant against a 6-row hand computation
    std::vector<double> vv = {10, 20, 30, 40, 50, 60};
    std::vector<double> ss = {1, 1, 1, 0, 0, 0};
    std::vector<double> ww = {1, 2, 3, 1, 1, 2};
    const double m1 = (10 * 1 + 20 * 2 + 30 * 3) / 6.0;
    const double m0 = (40 * 1 + 50 * 1 + 60 * 2) / 4.0;
    CHECK(mean_ratio_weighted(vv, ss, ww) == doctest::Approx(m1 / m0).epsilon(1e-12));
}

TEST_CASE("flip test: constant predictions give zero means") {
    const Portfolio p = fairprice::testing::random_portfolio(60, 43);
    DistanceSpec spec;
    spec.features = {"x1", "x2"};
    const NeighborIndex idx0 = NeighborIndex::build(p, 0, spec);
    const NeighborIndex idx1 = NeighborIndex::build(p, 1, spec);
    const FlipTestResult r = flip_test(p, std::vector<double>(p.n(), 42.0), idx0, idx1, 3);
    CHECK(r.ft1 == doctest::Approx(0.0));
    CHECK(r.ft0 == doctest::Approx(0.0));
}

TEST_CASE("flip test: mirrored groups with a shifted premium") {
    // identical feature values in both groups; group-1 predictions +c
    const double c = 12.5;
    std::vector<double> x, s, y, preds;
    for (int i = 0; i < 30; ++i) {
        x.push_back(i);
        s.push_back(0.0);
        y.push_back(1.0);
        preds.push_back(100.0 + i);
        x.push_back(i);
        s.push_back(1.0);
        y.push_back(1.0);
        preds.push_back(100.0 + i + c);
    }
    PortfolioBuilder pb;
    pb.num("x", ColumnKind::quantitative, ColumnRole::feature, x)
        .num("s", ColumnKind::binary, ColumnRole::sensitive, s)
        .num("y", ColumnKind::quantitative, ColumnRole::target, y);
    const Portfolio p = pb.build();
    DistanceSpec spec;
    spec.features = {"x"};
    spec.standardize = false;
    const NeighborIndex idx0 = NeighborIndex::build(p, 0, spec);
    const NeighborIndex idx1 = NeighborIndex::build(p, 1, spec);
    const FlipTestResult r = flip_test(p, preds, idx0, idx1, 1);
    CHECK(r.ft1 == doctest::Approx(c).epsilon(1e-12));
    CHECK(r.ft0 == doctest::Approx(-c).epsilon(1e-12));
}

TEST_CASE("flip test: k equal to the opposite group size averages the whole group") {
    const Portfolio p = fairprice::testing::random_portfolio(40, 47);
    std::vector<double> preds(p.n());
    for (std::size_t i = 0; i < p.n(); ++i) preds[i] = 10.0 + static_cast<double>(i % 7);
    DistanceSpec spec;
    spec.features = {"x1"};
    const NeighborIndex idx0 = NeighborIndex::build(p, 0, spec);
    const NeighborIndex idx1 = NeighborIndex::build(p, 1, spec);
    const std::size_t k = p.group_count(0);
    const FlipTestResult r = flip_test(p, preds, idx0, idx1, k);
    double opp_mean = 0.0;
    for (const std::size_t i : p.group_rows(0)) opp_mean += preds[i];
    opp_mean /= static_cast<double>(p.group_count(0));
    for (const std::size_t i : p.group_rows(1))
        CHECK(r.delta[i] == doctest::Approx(preds[i] - opp_mean).epsilon(1e-12));
}

TEST_CASE("flip test: additive shift leaves every delta unchanged") {
    const Portfolio p = fairprice::testing::random_portfolio(50, 53);
    std::vector<double> preds(p.n());
    for (std::size_t i = 0; i < p.n(); ++i) preds[i] = 50.0 + 3.0 * (i % 11);
    std::vector<double> shifted = preds;
    for (auto& v : shifted) v += 1000.0;
    DistanceSpec spec;
    spec.features = {"x1", "x2"};
    const NeighborIndex idx0 = NeighborIndex::build(p, 0, spec);
    const NeighborIndex idx1 = NeighborIndex::build(p, 1, spec);
    const FlipTestResult a = flip_test(p, preds, idx0, idx1, 4);
    const FlipTestResult b = flip_test(p, shifted, idx0, idx1, 4);
    for (std::size_t i = 0; i < p.n(); ++i)
        CHECK(a.delta[i] == doctest::Approx(b.delta[i]).epsilon(1e-9));
}

TEST_CASE("flip test: worker count does not change results") {
    const Portfolio p = fairprice::testing::random_portfolio(300, 59);
    std::vector<double> preds(p.n());
    for (std::size_t i = 0; i < p.n(); ++i) preds[i] = p.column("x1").num[i] * 2.0;
    DistanceSpec spec;
    spec.features = {"x1", "x2", "b"};
    const NeighborIndex idx0 = NeighborIndex::build(p, 0, spec);
    const NeighborIndex idx1 = NeighborIndex::build(p, 1, spec);
    const FlipTestResult one = flip_test(p, preds, idx0, idx1, 5, 1);
    const FlipTestResult four = flip_test(p, preds, idx0, idx1, 5, 4);
    CHECK(one.ft1 == four.ft1);
    CHECK(one.ft0 == four.ft0);
}

TEST_CASE("lipschitz violations") {
    const Portfolio p = fairprice::testing::random_portfolio(40, 61);
    DistanceSpec spec;
    spec.features = {"x1", "x2"};

    CHECK(lipschitz_violations(p, std::vector<double>(p.n(), 7.0), 0.5, spec) == 0.0);

    std::vector<double> preds(p.n());
    for (std::size_t i = 0; i < p.n(); ++i) preds[i] = p.column("x1").num[i];
    CHECK(lipschitz_violations(p, preds, 1e12, spec) == 0.0);  // lambda -> infinity

    // 5-point hand instance: all 10 pairs enumerable
    PortfolioBuilder pb;
    pb.num("x", ColumnKind::quantitative, ColumnRole::feature, {0, 1, 2, 3, 4})
        .num("s", ColumnKind::binary, ColumnRole::sensitive, {0, 1, 0, 1, 0})
        .num("y", ColumnKind::quantitative, ColumnRole::target, {1, 1, 1, 1, 1});
    const Portfolio tiny = pb.build();
    DistanceSpec d;
    d.features = {"x"};
    d.standardize = false;
    const std::vector<double> yh = {0.0, 5.0, 1.0, 2.0, 8.0};
    const double lambda = 2.0;
    std::size_t violations = 0;
    for (int i = 0; i < 5; ++i)
        for (int j = i + 1; j < 5; ++j) {
            const double dy = std::fabs(yh[i] - yh[j]);
            const double dx = std::fabs(static_cast<double>(i - j));
            if (dy >= lambda * dx) ++violations;
        }
    CHECK(lipschitz_violations(tiny, yh, lambda, d) ==
          doctest::Approx(static_cast<double>(violations) / 10.0));

    // zero-distance pair with unequal predictions counts as a violation
    PortfolioBuilder pb2;
    pb2.num("x", ColumnKind::quantitative, ColumnRole::feature, {1, 1})
        .num("s", ColumnKind::binary, ColumnRole::sensitive, {0, 1})
        .num("y", ColumnKind::quantitative, ColumnRole::target, {1, 1});
    const Portfolio dup = pb2.build();
    CHECK(lipschitz_violations(dup, std::vector<double>{1.0, 2.0}, 3.0, d) == 1.0);
}

TEST_CASE("panel assembly and serialization") {
    const Portfolio p = fairprice::testing::random_portfolio(400, 67);
    std::vector<double> preds(p.n());
    for (std::size_t i = 0; i < p.n(); ++i)
        preds[i] = 20.0 + p.column("x1").num[i] + 0.1 * p.column("x2").num[i];
    PanelOptions opts;
    opts.flip_k = 3;
    const FairnessPanel panel = compute_panel(p, preds, opts);
    CHECK(panel.ks_pvalue > 0.0);
    CHECK(panel.ks_pvalue <= 1.0);
    CHECK(panel.hgr >= 0.0);
    CHECK(panel.hgr <= 1.0);
    CHECK(panel.js_divergence <= std::log(2.0));
    CHECK(panel.mean_ratio > 0.0);

    const std::string json = panel_to_json(panel);
    CHECK(json.find("kendall_tau") != std::string::npos);
    CHECK(json.find("hgr_kde") != std::string::npos);
    const std::string row = panel_csv_row("test", panel);
    CHECK(row.rfind("test,", 0) == 0);
}

TEST_CASE("kolmogorov sf never prints exact zero") {
    CHECK(kolmogorov_sf(50.0) >= 1e-300);
    CHECK(kolmogorov_sf(0.0) == 1.0);
    CHECK(kolmogorov_sf(1.18) == doctest::Approx(kolmogorov_series_oracle(1.18)).epsilon(1e-10));
}

}  // TEST_SUITE

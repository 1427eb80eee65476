#include "doctest.h"

#include <stdexcept>
#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <random>
#include <set>

#include "fairprice/mitigation_pre.hpp"
#include "fairprice/synthgen.hpp"
#include "test_helpers.hpp"

using namespace fairprice;
using fairprice::testing::PortfolioBuilder;

namespace {

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    const std::size_t n = a.size();
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < n; ++i) { ma += a[i]; mb += b[i]; }
    ma /= n;
    mb /= n;
    double cov = 0, va = 0, vb = 0;
    for (std::size_t i = 0; i < n; ++i) {
        cov += (a[i] - ma) * (b[i] - mb);
        va += (a[i] - ma) * (a[i] - ma);
        vb += (b[i] - mb) * (b[i] - mb);
    }
    return cov / std::sqrt(va * vb);
}

Portfolio biased_synth(std::size_t n, uint64_t seed) {
    SynthConfig cfg;
    cfg.n = n;
    cfg.seed = seed;
    cfg.rho_indirect = 0.8;
    cfg.freq_base = 0.2;
    return generate(cfg).portfolio;
}

}  // namespace

TEST_SUITE("mitigation_pre") {

TEST_CASE("dependency profile: a feature equal to S scores one, independents score low") {
    const Portfolio base = biased_synth(20000, 3);
    // append a feature that copies s exactly
    std::vector<Column> cols = base.columns();
    Column copy_s;
    copy_s.spec = ColumnSpec{"s_copy", ColumnKind::binary, ColumnRole::feature};
    copy_s.num = base.sensitive();
    cols.push_back(copy_s);
    const Portfolio p(cols, "test");

    const auto profile = dependency_profile(p);
    REQUIRE(!profile.empty());
    CHECK(profile.front().first == "s_copy");
    CHECK(profile.front().second == doctest::Approx(1.0).epsilon(1e-9));

    double age_dep = -1, power_dep = -1;
    for (const auto& [name, dep] : profile) {
        if (name == "driv_age") age_dep = dep;
        if (name == "veh_power") power_dep = dep;
    }
    CHECK(age_dep < 0.05);       // independent of s by construction
    CHECK(power_dep > 0.2);      // the indirect channel
    // deterministic ordering
    const auto profile2 = dependency_profile(p);
    CHECK(profile == profile2);
}

TEST_CASE("threshold scenarios") {
    const std::vector<std::pair<std::string, double>> profile = {
        {"a", 0.9}, {"b", 0.5}, {"c", 0.2}, {"d", 0.05}};
    const auto scs = scenarios_from_threshold(profile, {1.0, 0.7, 0.3, 0.1, 0.01});
    REQUIRE(scs.size() == 5);
    CHECK(scs[0].deleted.empty());                      // threshold 1.0
    CHECK(scs[1].deleted == std::vector<std::string>{"a"});
    CHECK(scs[2].deleted == std::vector<std::string>{"a", "b"});
    CHECK(scs[3].deleted == std::vector<std::string>{"a", "b", "c"});
    CHECK(scs[4].deleted == std::vector<std::string>{"a", "b", "c", "d"});

    // antitone: higher threshold gives a subset
    for (std::size_t i = 1; i < scs.size(); ++i)
        CHECK(std::includes(scs[i].deleted.begin(), scs[i].deleted.end(),
                            scs[i - 1].deleted.begin(), scs[i - 1].deleted.end()));

    // duplicates collapse
    const auto dedup = scenarios_from_threshold(profile, {0.95, 0.93, 0.6});
    CHECK(dedup.size() == 2);
}

TEST_CASE("correlation remover: alpha endpoints and linearity") {
    const Portfolio p = biased_synth(5000, 7);
    const std::vector<std::string> columns = {"veh_power", "driv_age"};

    const Portfolio unchanged = CorrelationRemover::fit(p, 0.0, columns).apply(p);
    CHECK(unchanged.column("veh_power").num == p.column("veh_power").num);

    const Portfolio ortho = CorrelationRemover::fit(p, 1.0, columns).apply(p);
    for (const auto& c : columns)
        CHECK(std::fabs(pearson(ortho.column(c).num, p.sensitive())) < 1e-10);

    // midpoint is the exact average of the endpoints
    const Portfolio mid = CorrelationRemover::fit(p, 0.5, columns).apply(p);
    for (std::size_t i = 0; i < p.n(); ++i) {
        const double expect =
            0.5 * (unchanged.column("veh_power").num[i] + ortho.column("veh_power").num[i]);
        CHECK(mid.column("veh_power").num[i] == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("correlation remover: affine identity on random alphas") {
    const Portfolio p = biased_synth(2000, 11);
    const std::vector<std::string> columns = {"veh_power"};
    const auto x0 = CorrelationRemover::fit(p, 0.0, columns).apply(p).column("veh_power").num;
    const auto x1 = CorrelationRemover::fit(p, 1.0, columns).apply(p).column("veh_power").num;
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int rep = 0; rep < 20; ++rep) {
        const double alpha = unif(rng);
        const auto xa = CorrelationRemover::fit(p, alpha, columns).apply(p).column("veh_power").num;
        for (std::size_t i = 0; i < p.n(); i += 97)
            CHECK(xa[i] ==
                  doctest::Approx((1.0 - alpha) * x0[i] + alpha * x1[i]).epsilon(1e-12));
    }
}

TEST_CASE("correlation remover: means preserved and transform reusable on new data") {
    const Portfolio train = biased_synth(4000, 17);
    const Portfolio test = biased_synth(1000, 18);
    const CorrelationRemover cr = CorrelationRemover::fit(train, 1.0, {"veh_power"});

    auto mean = [](const std::vector<double>& v) {
        double m = 0;
        for (double x : v) m += x;
        return m / static_cast<double>(v.size());
    };
    const Portfolio adj = cr.apply(train);
    CHECK(mean(adj.column("veh_power").num) ==
          doctest::Approx(mean(train.column("veh_power").num)).epsilon(1e-9));

    // applying the stored transform to new rows uses train-fitted parameters
    const Portfolio test_adj = cr.apply(test);
    const auto& before = test.column("veh_power").num;
    const auto& after = test_adj.column("veh_power").num;
    bool changed = false;
    for (std::size_t i = 0; i < test.n(); ++i)
        if (before[i] != after[i]) changed = true;
    CHECK(changed);
}

TEST_CASE("correlation remover input validation") {
    PortfolioBuilder pb;
    pb.num("x", ColumnKind::quantitative, ColumnRole::feature, {1, 2, 3})
        .num("s", ColumnKind::binary, ColumnRole::sensitive, {0, 0, 0})
        .num("y", ColumnKind::quantitative, ColumnRole::target, {1, 1, 1});
    CHECK_THROWS_AS(CorrelationRemover::fit(pb.build(), 1.0, {"x"}), std::invalid_argument);

    const Portfolio p = biased_synth(100, 19);
    CHECK_THROWS_AS(CorrelationRemover::fit(p, 1.5, {"veh_power"}), std::invalid_argument);
    CHECK_THROWS_AS(CorrelationRemover::fit(p, 1.0, {"zone"}), std::invalid_argument);
}

TEST_CASE("fair smote: balanced bins produce no synthetic rows") {
    PortfolioBuilder pb;
    pb.num("x", ColumnKind::quantitative, ColumnRole::feature, {1, 2, 3, 4, 5, 6})
        .num("s", ColumnKind::binary, ColumnRole::sensitive, {0, 1, 0, 1, 0, 1})
        .num("y", ColumnKind::quantitative, ColumnRole::target, {10, 20, 30, 40, 50, 60});
    SmoteConfig cfg;
    cfg.bins = BinningSpec{{0.0, 100.0}, false, false};
    cfg.distance.features = {"x"};
    const auto [augmented, report] = fair_smote(pb.build(), cfg);
    CHECK(report.synthetic_rows == 0);
    CHECK(augmented.n() == 6);
}

TEST_CASE("fair smote: per-bin counts equalize and the count identity holds") {
    const Portfolio p = biased_synth(6000, 23);
    SmoteConfig cfg;
    cfg.seed = 5;
    const auto bins_before = bin_target(p, cfg.bins);
    const auto& s = p.sensitive();
    std::map<int, std::array<std::size_t, 2>> counts;
    for (std::size_t i = 0; i < p.n(); ++i) counts[bins_before[i]][s[i] == 1.0 ? 1 : 0]++;
    std::size_t expected = 0;
    for (const auto& [bin, c] : counts)
        expected += c[0] > c[1] ? c[0] - c[1] : c[1] - c[0];

    const auto [augmented, report] = fair_smote(p, cfg);
    CHECK(report.synthetic_rows == expected);
    CHECK(augmented.n() == p.n() + expected);

    // synthetic y is not clamped to its bin, so cell membership is the
    // recorded bin of origin
    const auto& s2 = augmented.sensitive();
    std::map<int, std::array<std::size_t, 2>> after;
    for (std::size_t i = 0; i < p.n(); ++i) after[bins_before[i]][s2[i] == 1.0 ? 1 : 0]++;
    for (std::size_t i = p.n(); i < augmented.n(); ++i)
        after[report.bin_of_origin[i - p.n()]][s2[i] == 1.0 ? 1 : 0]++;
    for (const auto& [bin, c] : after) CHECK(c[0] == c[1]);

    // original rows pass through unchanged, synthetic rows are flagged
    for (std::size_t i = 0; i < p.n(); ++i) {
        CHECK(augmented.column("veh_power").num[i] == p.column("veh_power").num[i]);
        CHECK(augmented.synthetic_flags()[i] == 0);
    }
    for (std::size_t i = p.n(); i < augmented.n(); ++i)
        CHECK(augmented.synthetic_flags()[i] == 1);
}

TEST_CASE("fair smote: st=0 clones the source row exactly") {
    // schema without non-binary categoricals so every column follows the
    // p-copy branch when st <= u
    std::mt19937_64 rng(29);
    std::vector<double> x1, b, s, y, expo;
    for (int i = 0; i < 400; ++i) {
        x1.push_back(static_cast<double>(rng() % 1000) / 10.0);
        b.push_back(rng() % 2 ? 1.0 : 0.0);
        s.push_back(rng() % 4 == 0 ? 1.0 : 0.0);  // imbalanced groups
        y.push_back(rng() % 3 == 0 ? 0.0 : static_cast<double>(rng() % 2000));
        expo.push_back(0.5);
    }
    PortfolioBuilder pb;
    pb.num("x1", ColumnKind::quantitative, ColumnRole::feature, x1)
        .num("b", ColumnKind::binary, ColumnRole::feature, b)
        .num("expo", ColumnKind::quantitative, ColumnRole::exposure, expo)
        .num("s", ColumnKind::binary, ColumnRole::sensitive, s)
        .num("y", ColumnKind::quantitative, ColumnRole::target, y);
    const Portfolio p = pb.build();

    SmoteConfig cfg;
    cfg.st = 0.0;
    cfg.seed = 31;
    cfg.distance.features = {"x1", "b"};
    const auto [augmented, report] = fair_smote(p, cfg);
    REQUIRE(report.synthetic_rows > 0);

    // every synthetic row must equal some original row on all columns
    for (std::size_t i = p.n(); i < augmented.n(); ++i) {
        bool found = false;
        for (std::size_t j = 0; j < p.n() && !found; ++j) {
            found = augmented.column("x1").num[i] == p.column("x1").num[j] &&
                    augmented.column("b").num[i] == p.column("b").num[j] &&
                    augmented.column("y").num[i] == p.column("y").num[j] &&
                    augmented.column("expo").num[i] == p.column("expo").num[j];
        }
        CHECK(found);
    }
}

TEST_CASE("fair smote: bounded extrapolation of quantitative values") {
    const Portfolio p = biased_synth(3000, 37);
    SmoteConfig cfg;
    cfg.seed = 41;
    const auto bins = bin_target(p, cfg.bins);
    const auto [augmented, report] = fair_smote(p, cfg);

    // per (bin, group) quantitative ranges of the original cells
    const auto& s = p.sensitive();
    std::map<std::pair<int, int>, std::pair<double, double>> range;
    for (std::size_t i = 0; i < p.n(); ++i) {
        const auto key = std::make_pair(bins[i], s[i] == 1.0 ? 1 : 0);
        const double v = p.column("veh_power").num[i];
        auto it = range.find(key);
        if (it == range.end())
            range[key] = {v, v};
        else {
            it->second.first = std::min(it->second.first, v);
            it->second.second = std::max(it->second.second, v);
        }
    }
    const auto& s2 = augmented.sensitive();
    for (std::size_t i = p.n(); i < augmented.n(); ++i) {
        const int bin = report.bin_of_origin[i - p.n()];
        const auto key = std::make_pair(bin, s2[i] == 1.0 ? 1 : 0);
        const auto [lo, hi] = range.at(key);
        const double span = hi - lo;
        const double v = augmented.column("veh_power").num[i];
        CHECK(v >= lo - cfg.ft * span - 1e-9);
        CHECK(v <= hi + cfg.ft * span + 1e-9);
    }
}

TEST_CASE("fair smote: deterministic under a fixed seed") {
    const Portfolio p = biased_synth(2000, 43);
    SmoteConfig cfg;
    cfg.seed = 47;
    const auto [a, ra] = fair_smote(p, cfg);
    const auto [b, rb] = fair_smote(p, cfg);
    CHECK(ra.synthetic_rows == rb.synthetic_rows);
    CHECK(a.column("veh_power").num == b.column("veh_power").num);
    CHECK(a.column("y").num == b.column("y").num);
}

TEST_CASE("fair smote: tiny cells fall back to resampling, empty minority errors") {
    PortfolioBuilder pb;
    // bin (0,100]: 4 group-0 rows, 1 group-1 row (cell of 1 < 3 -> fallback)
    pb.num("x", ColumnKind::quantitative, ColumnRole::feature, {1, 2, 3, 4, 5})
        .num("s", ColumnKind::binary, ColumnRole::sensitive, {0, 0, 0, 0, 1})
        .num("y", ColumnKind::quantitative, ColumnRole::target, {10, 20, 30, 40, 50});
    SmoteConfig cfg;
    cfg.bins = BinningSpec{{0.0, 100.0}, false, false};
    cfg.distance.features = {"x"};
    cfg.seed = 3;
    const auto [augmented, report] = fair_smote(pb.build(), cfg);
    CHECK(report.synthetic_rows == 3);
    CHECK(report.fallback_cells == 1);
    for (std::size_t i = 5; i < augmented.n(); ++i)
        CHECK(augmented.column("x").num[i] == 5.0);  // clones of the only group-1 row

    // empty minority cell: a bin with rows from one group only
    PortfolioBuilder pb2;
    pb2.num("x", ColumnKind::quantitative, ColumnRole::feature, {1, 2, 3, 150})
        .num("s", ColumnKind::binary, ColumnRole::sensitive, {0, 0, 0, 1})
        .num("y", ColumnKind::quantitative, ColumnRole::target, {10, 20, 30, 150});
    SmoteConfig cfg2;
    cfg2.bins = BinningSpec{{0.0, 100.0, 200.0}, false, false};
    cfg2.distance.features = {"x"};
    CHECK_THROWS_WITH_AS(fair_smote(pb2.build(), cfg2), doctest::Contains("bin"),
                         std::invalid_argument);
}

}  // TEST_SUITE

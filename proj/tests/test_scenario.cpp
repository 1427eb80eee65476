#include "doctest.h"

#include <stdexcept>
#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <random>

#include "fairprice/pareto.hpp"
#include "fairprice/scenario.hpp"
#include "fairprice/synthgen.hpp"

using namespace fairprice;

namespace {

std::pair<Portfolio, Portfolio> synth_split(double rho, double gamma, uint64_t seed) {
    SynthConfig cfg;
    cfg.n = 8000;
    cfg.seed = seed;
    cfg.rho_indirect = rho;
    cfg.gamma_direct = gamma;
    cfg.freq_base = 0.25;
    const SynthResult r = generate(cfg);
    return split(r.portfolio, 0.3, seed);
}

ScenarioPipeline reference_pipeline() {
    ScenarioPipeline p;
    p.id = "reference";
    p.method = MitigationMethod::reference;
    p.glm.family = Family::tweedie;
    p.glm.features = {"driv_age", "veh_power", "zone", "driv_2"};
    p.glm.response = ResponseKind::per_exposure;
    p.glm.weight = WeightRole::exposure;
    p.metrics.flip_k = 5;
    p.metrics.flip_distance.features = {"driv_age", "veh_power", "driv_2"};
    return p;
}

// O(n^2) pairwise domination oracle, lower better on both axes.
std::vector<bool> pareto_oracle(const std::vector<std::array<double, 2>>& pts) {
    std::vector<bool> flags(pts.size(), true);
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t j = 0; j < pts.size(); ++j) {
            if (i == j) continue;
            if (pts[j][0] <= pts[i][0] && pts[j][1] <= pts[i][1] &&
                (pts[j][0] < pts[i][0] || pts[j][1] < pts[i][1]))
                flags[i] = false;
        }
    return flags;
}

}  // namespace

TEST_SUITE("scenario") {

TEST_CASE("reference pipeline fills every field deterministically") {
    const auto [train, test] = synth_split(0.5, 0.2, 21);
    const ScenarioPipeline pipeline = reference_pipeline();
    const ScenarioOutcome a = evaluate(pipeline, train, test);
    REQUIRE(!a.scenario.failed);
    CHECK(a.scenario.fairness >= 0.0);
    CHECK(a.scenario.fairness <= 1.0);
    CHECK(a.scenario.performance > 0.0);
    CHECK(a.scenario.lr > 0.0);
    CHECK(a.scenario.panel.ks_pvalue > 0.0);
    CHECK(a.test_predictions.size() == test.n());

    const ScenarioOutcome b = evaluate(pipeline, train, test);
    CHECK(a.scenario.fairness == b.scenario.fairness);
    CHECK(a.scenario.performance == b.scenario.performance);
    CHECK(a.scenario.lr == b.scenario.lr);
}

TEST_CASE("deleting the only indirect channel lowers fairness below the reference") {
    // gamma_direct = 0: veh_power is the only S channel
    const auto [train, test] = synth_split(0.9, 0.0, 23);
    const ScenarioPipeline ref = reference_pipeline();
    const ScenarioOutcome base = evaluate(ref, train, test);
    REQUIRE(!base.scenario.failed);

    ScenarioPipeline del = ref;
    del.id = "delete_power";
    del.method = MitigationMethod::delete_features;
    del.delete_columns = {"veh_power"};
    const ScenarioOutcome dropped = evaluate(del, train, test);
    REQUIRE(!dropped.scenario.failed);
    CHECK(dropped.scenario.fairness < base.scenario.fairness);
}

TEST_CASE("pipeline failure is captured, not thrown") {
    const auto [train, test] = synth_split(0.2, 0.2, 29);
    ScenarioPipeline bad = reference_pipeline();
    bad.method = MitigationMethod::delete_features;
    bad.delete_columns = bad.glm.features;  // removes everything
    const ScenarioOutcome out = evaluate(bad, train, test);
    CHECK(out.scenario.failed);
    CHECK(!out.scenario.failure_cause.empty());
}

TEST_CASE("pareto front basics") {
    std::vector<MitigationScenario> scs(2);
    scs[0].id = "a";
    scs[0].fairness = 0.3;
    scs[0].performance = 100.0;
    scs[1].id = "b";
    scs[1].fairness = 0.2;
    scs[1].performance = 90.0;  // dominates a
    const auto flags = pareto_front(scs);
    CHECK(!flags[0]);
    CHECK(flags[1]);

    const auto single = pareto_front({scs[0]});
    CHECK(single[0]);

    // ties are mutually non-dominated
    std::vector<MitigationScenario> tied(2, scs[0]);
    tied[1].id = "a2";
    const auto tie_flags = pareto_front(tied);
    CHECK(tie_flags[0]);
    CHECK(tie_flags[1]);
}

TEST_CASE("pareto front equals the pairwise oracle on random sets") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int rep = 0; rep < 50; ++rep) {
        const std::size_t n = 1 + rng() % 100;
        std::vector<std::array<double, 2>> pts(n);
        for (auto& p : pts) {
            p[0] = std::round(unif(rng) * 20.0) / 20.0;  // force some ties
            p[1] = std::round(unif(rng) * 20.0) / 20.0;
        }
        CHECK(nondominated_flags(pts) == pareto_oracle(pts));
    }
}

TEST_CASE("pareto front is idempotent and ignores dominated additions") {
    std::mt19937_64 rng(37);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<MitigationScenario> scs(30);
    for (std::size_t i = 0; i < scs.size(); ++i) {
        scs[i].id = "s" + std::to_string(i);
        scs[i].fairness = unif(rng);
        scs[i].performance = unif(rng);
    }
    const auto flags = pareto_front(scs);
    std::vector<MitigationScenario> front;
    for (std::size_t i = 0; i < scs.size(); ++i)
        if (flags[i]) front.push_back(scs[i]);
    for (bool f : pareto_front(front)) CHECK(f);

    // adding a clearly dominated point changes nothing
    MitigationScenario dominated;
    dominated.id = "dominated";
    dominated.fairness = 2.0;
    dominated.performance = 2.0;
    auto extended = scs;
    extended.push_back(dominated);
    const auto flags2 = pareto_front(extended);
    for (std::size_t i = 0; i < scs.size(); ++i) CHECK(flags[i] == flags2[i]);
    CHECK(!flags2.back());
}

TEST_CASE("front membership is invariant under monotone axis transforms") {
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<std::array<double, 2>> pts(40);
    for (auto& p : pts) p = {unif(rng), unif(rng)};
    const auto before = nondominated_flags(pts);
    for (auto& p : pts) p[0] = std::exp(3.0 * p[0]);  // strictly increasing
    CHECK(nondominated_flags(pts) == before);
}

TEST_CASE("report round-trips and carries the Table-8-shaped columns") {
    std::vector<MitigationScenario> scs;
    const char* ids[] = {"reference", "delete", "corr", "smote", "eg", "redist"};
    std::mt19937_64 rng(43);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (const char* id : ids) {
        MitigationScenario s;
        s.id = id;
        s.fairness = unif(rng);
        s.performance = 100.0 + unif(rng) * 50.0;
        s.lr = 0.99 + unif(rng) * 0.02;
        s.panel.hgr = s.fairness;
        scs.push_back(s);
    }
    const ReportPaths paths = write_report(scs, "/tmp/fairprice_test_report");
    std::ifstream csv(paths.csv);
    std::string header;
    std::getline(csv, header);
    CHECK(header == "id,stage,hgr_kde,rmse,loss_ratio,failed");
    std::size_t rows = 0;
    std::string line;
    while (std::getline(csv, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 6);

    std::ifstream json(paths.json);
    std::ostringstream buf;
    buf << json.rdbuf();
    const auto loaded = scenarios_from_json(buf.str());
    REQUIRE(loaded.size() == scs.size());
    // reports are ordered by scenario id
    auto expected = scs;
    std::sort(expected.begin(), expected.end(),
              [](const MitigationScenario& a, const MitigationScenario& b) { return a.id < b.id; });
    for (std::size_t i = 0; i < expected.size(); ++i) {
        CHECK(loaded[i].id == expected[i].id);
        CHECK(loaded[i].fairness == expected[i].fairness);
        CHECK(loaded[i].performance == expected[i].performance);
        CHECK(loaded[i].lr == expected[i].lr);
    }
    std::remove(paths.csv.c_str());
    std::remove(paths.json.c_str());
    std::remove(paths.plot_csv.c_str());
}

}  // TEST_SUITE

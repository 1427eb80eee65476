#include "fairprice/synthgen.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace fairprice {

void SynthConfig::validate() const {
    if (n < 1) throw std::invalid_argument("synth: n must be >= 1");
    if (!(p_male > 0.0 && p_male < 1.0))
        throw std::invalid_argument("synth: p_male must be in (0,1)");
    if (!(rho_indirect >= 0.0 && rho_indirect <= 1.0))
        throw std::invalid_argument("synth: rho_indirect must be in [0,1]");
    if (!(freq_base > 0.0)) throw std::invalid_argument("synth: freq_base must be > 0");
    if (!(sev_shape > 0.0)) throw std::invalid_argument("synth: sev_shape must be > 0");
}

namespace {

constexpr const char* kZoneLevels[6] = {"A", "B", "C", "D", "E", "F"};
constexpr double kZoneProbs[6] = {0.10, 0.15, 0.20, 0.29, 0.16, 0.10};
constexpr double kZoneEffect[6] = {0.00, 0.05, -0.05, 0.10, -0.10, 0.15};
constexpr double kBetaAge = -0.15;
constexpr double kBetaPower = 0.20;
constexpr double kBetaDriv2 = 0.10;
constexpr double kPowerShift = 25.0;  // veh_power shift at rho_indirect = 1

}  // namespace

SynthResult generate(const SynthConfig& cfg) {
    cfg.validate();
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> norm(0.0, 1.0);
    std::gamma_distribution<double> beta_a(5.0, 1.0), beta_b(2.0, 1.0);
    std::gamma_distribution<double> severity(cfg.sev_shape, cfg.sev_mean_base / cfg.sev_shape);

    const std::size_t n = cfg.n;
    std::vector<double> s(n), driv_age(n), veh_power(n), driv_2(n), expo(n);
    std::vector<double> claim_nb(n), y(n), lambda(n), avg_amount(n);
    std::vector<int32_t> zone(n);

    for (std::size_t i = 0; i < n; ++i) {
        s[i] = unif(rng) < cfg.p_male ? 1.0 : 0.0;
        driv_age[i] = 18.0 + 59.0 * unif(rng);
        veh_power[i] = 90.0 + 20.0 * norm(rng) + cfg.rho_indirect * s[i] * kPowerShift;
        const double uz = unif(rng);
        double acc = 0.0;
        int32_t z = 0;
        for (int j = 0; j < 6; ++j) {
            acc += kZoneProbs[j];
            if (uz < acc) {
                z = j;
                break;
            }
            z = j;
        }
        zone[i] = z;
        driv_2[i] = unif(rng) < 0.31 ? 1.0 : 0.0;
        const double ga = beta_a(rng), gb = beta_b(rng);
        expo[i] = std::max(1e-3, ga / (ga + gb));

        const double eta = std::log(cfg.freq_base) + kBetaAge * (driv_age[i] - 45.0) / 30.0 +
                           kBetaPower * (veh_power[i] - 90.0) / 20.0 + kBetaDriv2 * driv_2[i] +
                           kZoneEffect[z] + cfg.gamma_direct * s[i];
        lambda[i] = std::exp(eta);
        std::poisson_distribution<int> pois(expo[i] * lambda[i]);
        const int claims = pois(rng);
        claim_nb[i] = static_cast<double>(claims);
        double total = 0.0;
        for (int c = 0; c < claims; ++c) total += severity(rng);
        y[i] = total;
        avg_amount[i] = claims > 0 ? total / claims : 0.0;
    }

    std::vector<Column> cols;
    auto add_num = [&](const char* name, ColumnKind kind, ColumnRole role, std::vector<double> v) {
        Column c;
        c.spec = ColumnSpec{name, kind, role};
        c.num = std::move(v);
        cols.push_back(std::move(c));
    };
    add_num("driv_age", ColumnKind::quantitative, ColumnRole::feature, std::move(driv_age));
    add_num("veh_power", ColumnKind::quantitative, ColumnRole::feature, std::move(veh_power));
    {
        Column c;
        c.spec = ColumnSpec{"zone", ColumnKind::categorical, ColumnRole::feature};
        c.codes = std::move(zone);
        c.levels.assign(kZoneLevels, kZoneLevels + 6);
        cols.push_back(std::move(c));
    }
    add_num("driv_2", ColumnKind::binary, ColumnRole::feature, std::move(driv_2));
    add_num("expo", ColumnKind::quantitative, ColumnRole::exposure, std::move(expo));
    add_num("s", ColumnKind::binary, ColumnRole::sensitive, std::move(s));
    add_num("claim_nb", ColumnKind::quantitative, ColumnRole::claim_count, std::move(claim_nb));
    add_num("y", ColumnKind::quantitative, ColumnRole::target, std::move(y));

    std::ostringstream prov;
    prov << "synthgen(seed=" << cfg.seed << ",n=" << cfg.n << ")";
    return SynthResult{Portfolio(std::move(cols), prov.str()), std::move(lambda),
                       std::move(avg_amount)};
}

void save_truth_csv(const SynthResult& r, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::invalid_argument("cannot write file: " + path);
    out << "row,lambda,avg_claim_amount\n";
    out.precision(17);
    for (std::size_t i = 0; i < r.lambda.size(); ++i)
        out << i << ',' << r.lambda[i] << ',' << r.avg_claim_amount[i] << '\n';
}

}  // namespace fairprice

#pragma once

#include <cstdint>
#include <vector>

#include "fairprice/dataset.hpp"

namespace fairprice {

// Synthetic motor portfolio with controllable direct and indirect
// sensitive-attribute effects. gamma_direct shifts the log claim rate for
// s=1; rho_indirect shifts the veh_power distribution for s=1, creating an
// indirect channel. With both at zero, s is independent of everything.
struct SynthConfig {
    std::size_t n = 10000;
    double p_male = 0.584;
    double gamma_direct = 0.0;
    double rho_indirect = 0.0;
    double freq_base = 0.1;
    double sev_shape = 2.0;
    double sev_mean_base = 580.0;
    uint64_t seed = 1;

    void validate() const;
};

struct SynthResult {
    Portfolio portfolio;
    // Ground-truth per-row claim rate lambda_i (before exposure), enabling
    // oracle checks of metric signs on known biases.
    std::vector<double> lambda;
    // Per-claim average cost for rows with claims (0 otherwise).
    std::vector<double> avg_claim_amount;
};

SynthResult generate(const SynthConfig& cfg);

// Sidecar CSV of per-row ground truth (row, lambda, avg_claim_amount).
void save_truth_csv(const SynthResult& r, const std::string& path);

}  // namespace fairprice

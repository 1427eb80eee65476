#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fairprice/dataset.hpp"
#include "fairprice/encoder.hpp"

namespace fairprice {

enum class Family { poisson, gamma, tweedie };
enum class WeightRole { unit, exposure, claim_count };
// What the model's response is, derived from the target column:
// raw target, target per unit exposure (pure premium), or target per claim
// (average cost; rows need claim_count > 0).
enum class ResponseKind { raw, per_exposure, per_claim };

std::string to_string(Family f);
Family family_from_string(const std::string& s);
std::string to_string(WeightRole w);
WeightRole weight_role_from_string(const std::string& s);
std::string to_string(ResponseKind r);
ResponseKind response_kind_from_string(const std::string& s);

struct GlmSpec {
    Family family = Family::tweedie;
    double tweedie_power = 1.5;  // variance power, must stay in (1,2)
    std::vector<std::string> features;
    WeightRole weight = WeightRole::unit;
    ResponseKind response = ResponseKind::raw;
    bool offset_log_exposure = false;
    bool include_sensitive = false;
    int max_iterations = 100;
    double tolerance = 1e-8;  // relative deviance change
    double ridge = 1e-10;     // numerical stabilizer on the normal equations

    void validate() const;
};

struct FitReport {
    int iterations = 0;
    double deviance = 0.0;
    bool converged = false;
    std::vector<double> deviance_path;
};

class FittedGLM {
public:
    FittedGLM() = default;
    FittedGLM(GlmSpec spec, Encoder encoder, std::vector<double> coefficients,
              std::vector<std::string> names, FitReport report)
        : spec_(std::move(spec)), encoder_(std::move(encoder)),
          coef_(std::move(coefficients)), names_(std::move(names)),
          report_(std::move(report)) {}

    const GlmSpec& spec() const { return spec_; }
    const std::vector<double>& coefficients() const { return coef_; }
    const std::vector<std::string>& coefficient_names() const { return names_; }
    const FitReport& report() const { return report_; }

    // Mean on the response scale: exp(intercept + x'beta [+ log exposure]).
    std::vector<double> predict(const Portfolio& p) const;
    // Per-row totals on the target scale (response times exposure or claims
    // as dictated by the response kind).
    std::vector<double> predict_total(const Portfolio& p) const;

    std::string to_json() const;

private:
    GlmSpec spec_;
    Encoder encoder_;
    std::vector<double> coef_;
    std::vector<std::string> names_;
    FitReport report_;
};

FittedGLM fit_glm(const Portfolio& p, const GlmSpec& spec);
// Extra per-row multiplicative weights (constraint reweighting in the
// in-processing mitigations). Empty means all ones.
FittedGLM fit_glm_weighted(const Portfolio& p, const GlmSpec& spec,
                           std::span<const double> extra_row_weights);

// Response vector the spec's model is fit against (target, target/exposure
// or target/claims), and the prior weight vector it uses.
std::vector<double> model_response(const Portfolio& p, const GlmSpec& spec);
std::vector<double> model_weights(const Portfolio& p, const GlmSpec& spec);

// sqrt((1/n) sum_i w_i (yhat_i - y_i)^2) -- the printed formula, normalized
// by n rather than sum w.
double rmse(std::span<const double> y, std::span<const double> y_hat,
            std::span<const double> w);
// Conventional weight-normalized variant, sqrt(sum w e^2 / sum w).
double rmse_weight_normalized(std::span<const double> y, std::span<const double> y_hat,
                              std::span<const double> w);
// sum(y) / sum(yhat)
double loss_ratio(std::span<const double> y, std::span<const double> y_hat);

}  // namespace fairprice

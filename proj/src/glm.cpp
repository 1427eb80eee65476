#include "fairprice/glm.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "fairprice/parallel.hpp"

#include "json.hpp"

namespace fairprice {

std::string to_string(Family f) {
    switch (f) {
        case Family::poisson: return "poisson";
        case Family::gamma: return "gamma";
        case Family::tweedie: return "tweedie";
    }
    return "?";
}

Family family_from_string(const std::string& s) {
    if (s == "poisson") return Family::poisson;
    if (s == "gamma") return Family::gamma;
    if (s == "tweedie") return Family::tweedie;
    throw std::invalid_argument("unknown family: " + s);
}

std::string to_string(WeightRole w) {
    switch (w) {
        case WeightRole::unit: return "unit";
        case WeightRole::exposure: return "exposure";
        case WeightRole::claim_count: return "claim_count";
    }
    return "?";
}

WeightRole weight_role_from_string(const std::string& s) {
    if (s == "unit") return WeightRole::unit;
    if (s == "exposure") return WeightRole::exposure;
    if (s == "claim_count") return WeightRole::claim_count;
    throw std::invalid_argument("unknown weight role: " + s);
}

std::string to_string(ResponseKind r) {
    switch (r) {
        case ResponseKind::raw: return "raw";
        case ResponseKind::per_exposure: return "per_exposure";
        case ResponseKind::per_claim: return "per_claim";
    }
    return "?";
}

ResponseKind response_kind_from_string(const std::string& s) {
    if (s == "raw") return ResponseKind::raw;
    if (s == "per_exposure") return ResponseKind::per_exposure;
    if (s == "per_claim") return ResponseKind::per_claim;
    throw std::invalid_argument("unknown response kind: " + s);
}

void GlmSpec::validate() const {
    if (family == Family::tweedie && !(tweedie_power > 1.0 && tweedie_power < 2.0))
        throw std::invalid_argument("tweedie power must be in (1,2)");
    if (max_iterations < 1) throw std::invalid_argument("max_iterations must be >= 1");
    // an empty feature list is an intercept-only model
}

namespace {

// Unit deviance contributions, scaled by prior weight.
double deviance_sum(Family family, double power, std::span<const double> y,
                    const Eigen::VectorXd& mu, const Eigen::VectorXd& w) {
    CompensatedSum acc;
    switch (family) {
        case Family::poisson:
            for (std::size_t i = 0; i < y.size(); ++i) {
                const double ylogy = y[i] > 0.0 ? y[i] * std::log(y[i] / mu[i]) : 0.0;
                acc.add(2.0 * w[i] * (ylogy - (y[i] - mu[i])));
            }
            break;
        case Family::gamma:
            for (std::size_t i = 0; i < y.size(); ++i)
                acc.add(2.0 * w[i] * (-std::log(y[i] / mu[i]) + (y[i] - mu[i]) / mu[i]));
            break;
        case Family::tweedie: {
            const double p1 = 1.0 - power, p2 = 2.0 - power;
            for (std::size_t i = 0; i < y.size(); ++i) {
                const double t1 = y[i] > 0.0 ? std::pow(y[i], p2) / (p1 * p2) : 0.0;
                const double t2 = y[i] * std::pow(mu[i], p1) / p1;
                const double t3 = std::pow(mu[i], p2) / p2;
                acc.add(2.0 * w[i] * (t1 - t2 + t3));
            }
            break;
        }
    }
    return acc.value();
}

// IRLS working weight for the log link: w * mu^2 / V(mu).
double working_weight(Family family, double power, double w, double mu) {
    switch (family) {
        case Family::poisson: return w * mu;
        case Family::gamma: return w;
        case Family::tweedie: return w * std::pow(mu, 2.0 - power);
    }
    return w;
}

struct FitInputs {
    std::vector<double> y;       // response on the model scale
    Eigen::VectorXd w;           // prior weights
    Eigen::VectorXd offset;      // log-exposure or zeros
    Eigen::MatrixXd x;           // design with intercept column
    std::vector<std::string> names;
    Encoder encoder;
    std::vector<std::string> encoded_features;
};

FitInputs build_inputs(const Portfolio& p, const GlmSpec& spec,
                       std::span<const double> extra_weights) {
    spec.validate();
    const std::size_t n = p.n();
    if (!extra_weights.empty() && extra_weights.size() != n)
        throw std::invalid_argument("extra weight vector not aligned");

    FitInputs in;
    const Column& target = p.require_role(ColumnRole::target);
    in.y.assign(target.num.begin(), target.num.end());
    const Column* expo = p.find_role(ColumnRole::exposure);
    const Column* claims = p.find_role(ColumnRole::claim_count);

    switch (spec.response) {
        case ResponseKind::raw: break;
        case ResponseKind::per_exposure:
            if (!expo) throw std::invalid_argument("per_exposure response needs an exposure column");
            for (std::size_t i = 0; i < n; ++i) in.y[i] /= expo->num[i];
            break;
        case ResponseKind::per_claim:
            if (!claims) throw std::invalid_argument("per_claim response needs a claim_count column");
            for (std::size_t i = 0; i < n; ++i) {
                if (!(claims->num[i] > 0.0))
                    throw std::invalid_argument("per_claim response undefined at row " +
                                                std::to_string(i) + " (no claims)");
                in.y[i] /= claims->num[i];
            }
            break;
    }

    in.w = Eigen::VectorXd::Ones(n);
    if (spec.weight == WeightRole::exposure) {
        if (!expo) throw std::invalid_argument("exposure weights need an exposure column");
        for (std::size_t i = 0; i < n; ++i) in.w[i] = expo->num[i];
    } else if (spec.weight == WeightRole::claim_count) {
        if (!claims) throw std::invalid_argument("claim_count weights need a claim_count column");
        for (std::size_t i = 0; i < n; ++i) {
            if (!(claims->num[i] > 0.0))
                throw std::invalid_argument("claim_count weight non-positive at row " +
                                            std::to_string(i));
            in.w[i] = claims->num[i];
        }
    }
    if (!extra_weights.empty())
        for (std::size_t i = 0; i < n; ++i) {
            if (extra_weights[i] < 0.0)
                throw std::invalid_argument("extra weights must be non-negative");
            in.w[i] *= extra_weights[i];
        }

    in.offset = Eigen::VectorXd::Zero(n);
    if (spec.offset_log_exposure) {
        if (!expo) throw std::invalid_argument("offset needs an exposure column");
        for (std::size_t i = 0; i < n; ++i) in.offset[i] = std::log(expo->num[i]);
    }

    in.encoded_features = spec.features;
    if (spec.include_sensitive)
        in.encoded_features.push_back(p.require_role(ColumnRole::sensitive).spec.name);
    if (!in.encoded_features.empty()) {
        EncodeOptions opts;
        opts.drop_reference_level = true;
        in.encoder = Encoder::build(p, in.encoded_features, opts);
    }

    const std::vector<double> enc = in.encoder.encode_all(p);
    const std::size_t d = in.encoder.dim();
    in.x.resize(n, d + 1);
    for (std::size_t i = 0; i < n; ++i) {
        in.x(i, 0) = 1.0;
        for (std::size_t j = 0; j < d; ++j) in.x(i, j + 1) = enc[i * d + j];
    }
    in.names.push_back("(intercept)");
    for (const auto& s : in.encoder.slot_names()) in.names.push_back(s);
    return in;
}

void check_response_domain(Family family, std::span<const double> y) {
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (family == Family::gamma && !(y[i] > 0.0))
            throw std::invalid_argument("gamma response must be positive (row " +
                                        std::to_string(i) + ")");
        if (y[i] < 0.0)
            throw std::invalid_argument("response must be non-negative (row " +
                                        std::to_string(i) + ")");
    }
}

}  // namespace

FittedGLM fit_glm(const Portfolio& p, const GlmSpec& spec) {
    return fit_glm_weighted(p, spec, {});
}

FittedGLM fit_glm_weighted(const Portfolio& p, const GlmSpec& spec,
                           std::span<const double> extra_row_weights) {
    FitInputs in = build_inputs(p, spec, extra_row_weights);
    check_response_domain(spec.family, in.y);
    const std::size_t n = p.n();
    const Eigen::Index d = in.x.cols();

    {
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(in.x);
        if (qr.rank() < d) {
            const auto perm = qr.colsPermutation().indices();
            std::string bad;
            for (Eigen::Index j = qr.rank(); j < d; ++j) {
                if (!bad.empty()) bad += ", ";
                bad += in.names[perm[j]];
            }
            throw std::invalid_argument("design matrix is rank deficient; collinear columns: " + bad);
        }
    }

    // Initial mean pulled toward the weighted response mean.
    double ybar = 0.0, wsum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        ybar += in.w[i] * in.y[i];
        wsum += in.w[i];
    }
    ybar = wsum > 0.0 ? ybar / wsum : 1.0;
    if (!(ybar > 0.0)) ybar = 1.0;

    Eigen::VectorXd mu(n), eta(n);
    for (std::size_t i = 0; i < n; ++i) {
        mu[i] = std::max(0.5 * (in.y[i] + ybar), 1e-10);
        eta[i] = std::log(mu[i]) - in.offset[i];
    }

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(d);
    bool have_beta = false;
    double dev = deviance_sum(spec.family, spec.tweedie_power, in.y, mu, in.w);

    // deviance_path records fitted iterates only; the heuristic start is not
    // an IRLS step and is excluded from the monotonicity contract
    FitReport report;
    bool converged = false;

    for (int iter = 0; iter < spec.max_iterations; ++iter) {
        Eigen::VectorXd ww(n), z(n);
        for (std::size_t i = 0; i < n; ++i) {
            ww[i] = working_weight(spec.family, spec.tweedie_power, in.w[i], mu[i]);
            z[i] = eta[i] + (in.y[i] - mu[i]) / mu[i];
        }
        Eigen::MatrixXd xtwx = in.x.transpose() * ww.asDiagonal() * in.x;
        xtwx.diagonal().array() += spec.ridge;
        const Eigen::VectorXd xtwz = in.x.transpose() * (ww.cwiseProduct(z));
        Eigen::VectorXd beta_new = xtwx.ldlt().solve(xtwz);

        // Step-halving keeps the deviance non-increasing.
        double dev_new = 0.0;
        Eigen::VectorXd eta_new, mu_new;
        double step = 1.0;
        for (int h = 0; h < 30; ++h) {
            const Eigen::VectorXd cand =
                have_beta ? Eigen::VectorXd(beta + step * (beta_new - beta)) : beta_new;
            eta_new = in.x * cand;
            mu_new = (eta_new + in.offset).array().exp();
            bool finite = mu_new.allFinite();
            if (finite) {
                dev_new = deviance_sum(spec.family, spec.tweedie_power, in.y, mu_new, in.w);
                if (std::isfinite(dev_new) && (dev_new <= dev * (1.0 + 1e-12) || !have_beta)) {
                    beta_new = cand;
                    break;
                }
            }
            step *= 0.5;
            if (h == 29) {
                beta_new = have_beta ? beta : beta_new;
                eta_new = in.x * beta_new;
                mu_new = (eta_new + in.offset).array().exp();
                dev_new = deviance_sum(spec.family, spec.tweedie_power, in.y, mu_new, in.w);
            }
        }

        beta = beta_new;
        have_beta = true;
        eta = eta_new;
        mu = mu_new;
        report.iterations = iter + 1;
        report.deviance_path.push_back(dev_new);
        const double rel = std::fabs(dev - dev_new) / (std::fabs(dev_new) + 0.1);
        dev = dev_new;
        if (rel < spec.tolerance) {
            converged = true;
            break;
        }
    }

    report.deviance = dev;
    report.converged = converged;  // non-convergence: last iterate returned, flagged

    std::vector<double> coef(beta.data(), beta.data() + beta.size());
    return FittedGLM(spec, std::move(in.encoder), std::move(coef), std::move(in.names),
                     std::move(report));
}

std::vector<double> FittedGLM::predict(const Portfolio& p) const {
    const std::vector<double> enc = encoder_.encode_all(p);
    const std::size_t d = encoder_.dim();
    if (coef_.size() != d + 1) throw std::logic_error("coefficient/encoder mismatch");

    const Column* expo = p.find_role(ColumnRole::exposure);
    if (spec_.offset_log_exposure && !expo)
        throw std::invalid_argument("prediction needs an exposure column for the offset");

    std::vector<double> out(p.n());
    for (std::size_t i = 0; i < p.n(); ++i) {
        double eta = coef_[0];
        const double* row = enc.data() + i * d;
        for (std::size_t j = 0; j < d; ++j) eta += coef_[j + 1] * row[j];
        if (spec_.offset_log_exposure) eta += std::log(expo->num[i]);
        out[i] = std::exp(eta);
    }
    return out;
}

std::vector<double> FittedGLM::predict_total(const Portfolio& p) const {
    std::vector<double> out = predict(p);
    if (spec_.response == ResponseKind::per_exposure) {
        const Column& expo = p.require_role(ColumnRole::exposure);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] *= expo.num[i];
    } else if (spec_.response == ResponseKind::per_claim) {
        const Column& claims = p.require_role(ColumnRole::claim_count);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] *= claims.num[i];
    }
    return out;
}

std::string FittedGLM::to_json() const {
    nlohmann::ordered_json j;
    j["v"] = 1;
    j["family"] = to_string(spec_.family);
    if (spec_.family == Family::tweedie) j["tweedie_power"] = spec_.tweedie_power;
    j["link"] = "log";
    j["weight"] = to_string(spec_.weight);
    j["response"] = to_string(spec_.response);
    j["offset_log_exposure"] = spec_.offset_log_exposure;
    j["converged"] = report_.converged;
    j["iterations"] = report_.iterations;
    j["deviance"] = report_.deviance;
    nlohmann::ordered_json coefs;
    for (std::size_t i = 0; i < coef_.size(); ++i) coefs[names_[i]] = coef_[i];
    j["coefficients"] = coefs;
    return j.dump(2);
}

std::vector<double> model_response(const Portfolio& p, const GlmSpec& spec) {
    const Column& target = p.require_role(ColumnRole::target);
    std::vector<double> y(target.num.begin(), target.num.end());
    if (spec.response == ResponseKind::per_exposure) {
        const Column& expo = p.require_role(ColumnRole::exposure);
        for (std::size_t i = 0; i < y.size(); ++i) y[i] /= expo.num[i];
    } else if (spec.response == ResponseKind::per_claim) {
        const Column& claims = p.require_role(ColumnRole::claim_count);
        for (std::size_t i = 0; i < y.size(); ++i) {
            if (!(claims.num[i] > 0.0))
                throw std::invalid_argument("per_claim response undefined at row " +
                                            std::to_string(i));
            y[i] /= claims.num[i];
        }
    }
    return y;
}

std::vector<double> model_weights(const Portfolio& p, const GlmSpec& spec) {
    std::vector<double> w(p.n(), 1.0);
    if (spec.weight == WeightRole::exposure) {
        const Column& expo = p.require_role(ColumnRole::exposure);
        w.assign(expo.num.begin(), expo.num.end());
    } else if (spec.weight == WeightRole::claim_count) {
        const Column& claims = p.require_role(ColumnRole::claim_count);
        w.assign(claims.num.begin(), claims.num.end());
    }
    return w;
}

double rmse(std::span<const double> y, std::span<const double> y_hat,
            std::span<const double> w) {
    if (y.size() != y_hat.size() || y.size() != w.size())
        throw std::invalid_argument("rmse: inputs not aligned");
    if (y.empty()) throw std::invalid_argument("rmse: empty input");
    CompensatedSum acc;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double e = y_hat[i] - y[i];
        acc.add(w[i] * e * e);
    }
    return std::sqrt(acc.value() / static_cast<double>(y.size()));
}

double rmse_weight_normalized(std::span<const double> y, std::span<const double> y_hat,
                              std::span<const double> w) {
    if (y.size() != y_hat.size() || y.size() != w.size())
        throw std::invalid_argument("rmse: inputs not aligned");
    CompensatedSum acc, wsum;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double e = y_hat[i] - y[i];
        acc.add(w[i] * e * e);
        wsum.add(w[i]);
    }
    if (!(wsum.value() > 0.0)) throw std::invalid_argument("rmse: zero total weight");
    return std::sqrt(acc.value() / wsum.value());
}

double loss_ratio(std::span<const double> y, std::span<const double> y_hat) {
    if (y.size() != y_hat.size()) throw std::invalid_argument("loss_ratio: inputs not aligned");
    CompensatedSum sy, syh;
    for (double v : y) sy.add(v);
    for (double v : y_hat) syh.add(v);
    if (!(syh.value() > 0.0)) throw std::invalid_argument("loss_ratio: zero predicted total");
    return sy.value() / syh.value();
}

}  // namespace fairprice

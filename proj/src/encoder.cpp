#include "fairprice/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

namespace fairprice {

Encoder Encoder::build(const Portfolio& p, const std::vector<std::string>& features,
                       const EncodeOptions& options) {
    std::vector<std::size_t> all(p.n());
    std::iota(all.begin(), all.end(), std::size_t{0});
    return build(p, features, options, all);
}

Encoder Encoder::build(const Portfolio& p, const std::vector<std::string>& features,
                       const EncodeOptions& options, const std::vector<std::size_t>& stat_rows) {
    if (features.empty()) throw std::invalid_argument("feature list is empty");
    if (stat_rows.empty()) throw std::invalid_argument("no rows to build encoder on");

    Encoder e;
    e.options_ = options;
    e.features_ = features;
    for (const auto& name : features) {
        const Column& col = p.column(name);
        if (col.spec.role == ColumnRole::identifier)
            throw std::invalid_argument("identifier column cannot be encoded: " + name);
        ColumnPlan plan;
        plan.name = name;
        plan.kind = col.spec.kind;
        plan.first_slot = e.dim_;
        if (col.spec.kind == ColumnKind::categorical) {
            // Levels observed on the build rows, slot order lexicographic.
            std::unordered_map<int32_t, std::size_t> counts;
            for (auto r : stat_rows) ++counts[col.codes[r]];
            std::vector<std::string> levels;
            int32_t ref_code = -1;
            std::size_t ref_count = 0;
            for (const auto& [code, cnt] : counts) {
                levels.push_back(col.levels[code]);
                if (cnt > ref_count ||
                    (cnt == ref_count && (ref_code < 0 || col.levels[code] < col.levels[ref_code])))
                    ref_code = code, ref_count = cnt;
            }
            std::sort(levels.begin(), levels.end());
            if (options.drop_reference_level) {
                plan.dropped_level = col.levels[ref_code];
                levels.erase(std::remove(levels.begin(), levels.end(), plan.dropped_level),
                             levels.end());
            }
            plan.levels = levels;
            for (const auto& lv : levels) e.slot_names_.push_back(name + "=" + lv);
            e.dim_ += levels.size();
        } else {
            if (options.standardize && col.spec.kind == ColumnKind::quantitative) {
                double mean = 0.0;
                for (auto r : stat_rows) mean += col.num[r];
                mean /= static_cast<double>(stat_rows.size());
                double var = 0.0;
                for (auto r : stat_rows) {
                    const double d = col.num[r] - mean;
                    var += d * d;
                }
                var /= static_cast<double>(stat_rows.size());
                const double sd = std::sqrt(var);
                plan.mean = mean;
                plan.inv_sd = sd > 0.0 ? 1.0 / sd : 1.0;
            }
            e.slot_names_.push_back(name);
            e.dim_ += 1;
        }
        e.plans_.push_back(std::move(plan));
    }
    return e;
}

std::vector<double> Encoder::encode_rows(const Portfolio& p,
                                         const std::vector<std::size_t>& rows) const {
    // Map each plan's levels onto this portfolio's codes once per call.
    struct Prep {
        const Column* col;
        std::vector<int> code_to_slot;  // -1 = dropped reference, -2 = unseen
    };
    std::vector<Prep> preps;
    preps.reserve(plans_.size());
    for (const auto& plan : plans_) {
        Prep prep;
        prep.col = &p.column(plan.name);
        if (prep.col->spec.kind != plan.kind)
            throw std::invalid_argument("column kind mismatch for " + plan.name);
        if (plan.kind == ColumnKind::categorical) {
            prep.code_to_slot.assign(prep.col->levels.size(), -2);
            for (std::size_t code = 0; code < prep.col->levels.size(); ++code) {
                const std::string& lv = prep.col->levels[code];
                auto it = std::find(plan.levels.begin(), plan.levels.end(), lv);
                if (it != plan.levels.end())
                    prep.code_to_slot[code] = static_cast<int>(it - plan.levels.begin());
                else if (lv == plan.dropped_level)
                    prep.code_to_slot[code] = -1;
            }
        }
        preps.push_back(std::move(prep));
    }

    std::vector<double> out(rows.size() * dim_, 0.0);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const std::size_t r = rows[i];
        double* dst = out.data() + i * dim_;
        for (std::size_t c = 0; c < plans_.size(); ++c) {
            const ColumnPlan& plan = plans_[c];
            const Column& col = *preps[c].col;
            if (plan.kind == ColumnKind::categorical) {
                const int slot = preps[c].code_to_slot[col.codes[r]];
                if (slot == -2)
                    throw std::invalid_argument("unseen category level '" +
                                                col.levels[col.codes[r]] + "' in column " +
                                                plan.name);
                if (slot >= 0) dst[plan.first_slot + slot] = 1.0;
            } else {
                dst[plan.first_slot] = (col.num[r] - plan.mean) * plan.inv_sd;
            }
        }
    }
    return out;
}

std::vector<double> Encoder::encode_all(const Portfolio& p) const {
    std::vector<std::size_t> all(p.n());
    std::iota(all.begin(), all.end(), std::size_t{0});
    return encode_rows(p, all);
}

}  // namespace fairprice

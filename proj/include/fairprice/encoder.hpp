#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "fairprice/dataset.hpp"

namespace fairprice {

struct EncodeOptions {
    // Drop the most frequent level of each categorical column (GLM designs).
    bool drop_reference_level = false;
    // Center/scale quantitative columns; stats come from the rows the
    // encoder was built on. Binary and one-hot slots keep scaling 1.
    bool standardize = false;
};

// Learned mapping from portfolio columns to a dense numeric row. Built once
// (on training rows or an index's reference group) and applied to any
// portfolio sharing the column names; unseen categorical levels are errors.
class Encoder {
public:
    static Encoder build(const Portfolio& p, const std::vector<std::string>& features,
                         const EncodeOptions& options);
    static Encoder build(const Portfolio& p, const std::vector<std::string>& features,
                         const EncodeOptions& options, const std::vector<std::size_t>& stat_rows);

    std::size_t dim() const { return dim_; }
    const std::vector<std::string>& slot_names() const { return slot_names_; }
    const std::vector<std::string>& features() const { return features_; }

    // Row-major rows.size() x dim() matrix.
    std::vector<double> encode_rows(const Portfolio& p,
                                    const std::vector<std::size_t>& rows) const;
    std::vector<double> encode_all(const Portfolio& p) const;

private:
    struct ColumnPlan {
        std::string name;
        ColumnKind kind;
        std::size_t first_slot = 0;
        std::vector<std::string> levels;   // slot order (reference dropped)
        std::string dropped_level;         // empty when nothing dropped
        double mean = 0.0, inv_sd = 1.0;   // quantitative standardization
    };

    std::vector<ColumnPlan> plans_;
    std::vector<std::string> features_;
    std::vector<std::string> slot_names_;
    std::size_t dim_ = 0;
    EncodeOptions options_;
};

}  // namespace fairprice

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace fairprice {

enum class ColumnKind { quantitative, binary, categorical };
enum class ColumnRole { feature, target, sensitive, exposure, claim_count, identifier };

std::string to_string(ColumnKind k);
std::string to_string(ColumnRole r);
ColumnKind column_kind_from_string(const std::string& s);
ColumnRole column_role_from_string(const std::string& s);

struct ColumnSpec {
    std::string name;
    ColumnKind kind = ColumnKind::quantitative;
    ColumnRole role = ColumnRole::feature;
};

// One column of portfolio data. Quantitative and binary cells live in `num`
// (binary restricted to 0/1); categorical cells are integer codes into
// `levels`; identifier cells are raw strings in `text`.
struct Column {
    ColumnSpec spec;
    std::vector<double> num;
    std::vector<int32_t> codes;
    std::vector<std::string> levels;
    std::vector<std::string> text;

    std::size_t size() const;
    bool is_numeric() const {
        return spec.kind != ColumnKind::categorical &&
               spec.role != ColumnRole::identifier;
    }
};

// Immutable tabular portfolio. Schema invariants are enforced on
// construction: exactly one binary sensitive column with levels {0,1},
// strictly positive exposure, at most one target/exposure/claim_count
// column, no missing cells, n >= 1.
class Portfolio {
public:
    Portfolio(std::vector<Column> columns, std::string provenance);

    std::size_t n() const { return n_; }
    const std::string& provenance() const { return provenance_; }
    const std::vector<Column>& columns() const { return cols_; }

    bool has_column(const std::string& name) const;
    const Column& column(const std::string& name) const;
    std::vector<ColumnSpec> schema() const;

    const Column* find_role(ColumnRole role) const;  // nullptr when absent
    const Column& require_role(ColumnRole role) const;

    // Sensitive vector as 0/1 doubles, and per-group row index lists.
    const std::vector<double>& sensitive() const;
    const std::vector<std::size_t>& group_rows(int group) const;
    std::size_t group_count(int group) const { return group_rows(group).size(); }

    std::vector<std::string> feature_names() const;

    // Synthetic-row provenance flags (fair-SMOTE augmentation marks its
    // output rows). Empty means "all original".
    const std::vector<uint8_t>& synthetic_flags() const { return synthetic_; }
    void set_synthetic_flags(std::vector<uint8_t> flags);

    // New portfolio restricted to the given rows, order preserved.
    Portfolio take_rows(const std::vector<std::size_t>& rows) const;
    // New portfolio with one numeric column's values replaced.
    Portfolio with_numeric_column(const std::string& name,
                                  std::vector<double> values) const;

private:
    std::vector<Column> cols_;
    std::size_t n_ = 0;
    std::string provenance_;
    std::vector<uint8_t> synthetic_;
    std::vector<std::size_t> rows0_, rows1_;
    std::size_t sensitive_idx_ = 0;

    void validate_and_index();
};

struct BinningSpec {
    std::vector<double> edges;  // strictly increasing interval boundaries
    bool zero_bin = false;      // dedicated closed bin for target == 0
    bool open_upper = false;    // (edges.back(), +inf) as final bin

    std::size_t bin_count() const;
    // §5.3-style seven-bin layout over {0} u (0,250] ... (1500, inf).
    static BinningSpec seven_bin_default();
};

struct LoadResult {
    Portfolio portfolio;
    std::size_t rows_rejected_missing = 0;
};

LoadResult load_csv(const std::string& path, const std::vector<ColumnSpec>& schema);
void save_csv(const Portfolio& p, const std::string& path,
              bool include_provenance = false);

// Stratified train/test split on the sensitive column. Test size is
// round(n * test_fraction), allocated per group by largest remainder so
// group shares are preserved within one row.
std::pair<Portfolio, Portfolio> split(const Portfolio& p, double test_fraction,
                                      uint64_t seed);

// Per-row bin index, 1-based to match the zero bin = bin 1 convention.
// Intervals are left-open/right-closed.
std::vector<int> bin_target(const Portfolio& p, const BinningSpec& spec);
std::vector<int> bin_values(const std::vector<double>& values, const BinningSpec& spec);

}  // namespace fairprice

#include "fairprice/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace fairprice {

std::string to_string(ColumnKind k) {
    switch (k) {
        case ColumnKind::quantitative: return "quantitative";
        case ColumnKind::binary: return "binary";
        case ColumnKind::categorical: return "categorical";
    }
    return "?";
}

std::string to_string(ColumnRole r) {
    switch (r) {
        case ColumnRole::feature: return "feature";
        case ColumnRole::target: return "target";
        case ColumnRole::sensitive: return "sensitive";
        case ColumnRole::exposure: return "exposure";
        case ColumnRole::claim_count: return "claim_count";
        case ColumnRole::identifier: return "identifier";
    }
    return "?";
}

ColumnKind column_kind_from_string(const std::string& s) {
    if (s == "quantitative") return ColumnKind::quantitative;
    if (s == "binary") return ColumnKind::binary;
    if (s == "categorical") return ColumnKind::categorical;
    throw std::invalid_argument("unknown column kind: " + s);
}

ColumnRole column_role_from_string(const std::string& s) {
    if (s == "feature") return ColumnRole::feature;
    if (s == "target") return ColumnRole::target;
    if (s == "sensitive") return ColumnRole::sensitive;
    if (s == "exposure") return ColumnRole::exposure;
    if (s == "claim_count") return ColumnRole::claim_count;
    if (s == "identifier") return ColumnRole::identifier;
    throw std::invalid_argument("unknown column role: " + s);
}

std::size_t Column::size() const {
    if (spec.role == ColumnRole::identifier) return text.size();
    if (spec.kind == ColumnKind::categorical) return codes.size();
    return num.size();
}

Portfolio::Portfolio(std::vector<Column> columns, std::string provenance)
    : cols_(std::move(columns)), provenance_(std::move(provenance)) {
    validate_and_index();
}

void Portfolio::validate_and_index() {
    if (cols_.empty()) throw std::invalid_argument("portfolio has no columns");
    n_ = cols_.front().size();
    if (n_ < 1) throw std::invalid_argument("portfolio must have n >= 1 rows");

    std::set<std::string> names;
    std::size_t n_sensitive = 0, n_target = 0, n_exposure = 0, n_claims = 0;
    for (std::size_t c = 0; c < cols_.size(); ++c) {
        const Column& col = cols_[c];
        if (col.size() != n_)
            throw std::invalid_argument("column '" + col.spec.name + "' has inconsistent length");
        if (!names.insert(col.spec.name).second)
            throw std::invalid_argument("duplicate column name: " + col.spec.name);
        switch (col.spec.role) {
            case ColumnRole::sensitive:
                ++n_sensitive;
                sensitive_idx_ = c;
                break;
            case ColumnRole::target: ++n_target; break;
            case ColumnRole::exposure: ++n_exposure; break;
            case ColumnRole::claim_count: ++n_claims; break;
            default: break;
        }
        if (col.spec.kind == ColumnKind::binary && col.is_numeric()) {
            for (std::size_t i = 0; i < n_; ++i)
                if (col.num[i] != 0.0 && col.num[i] != 1.0)
                    throw std::invalid_argument("binary column '" + col.spec.name +
                                                "' has non 0/1 value at row " + std::to_string(i));
        }
        if (col.spec.role == ColumnRole::exposure) {
            for (std::size_t i = 0; i < n_; ++i)
                if (!(col.num[i] > 0.0))
                    throw std::invalid_argument("exposure non-positive at row " + std::to_string(i));
        }
        if (col.spec.kind == ColumnKind::categorical && col.spec.role != ColumnRole::identifier) {
            for (std::size_t i = 0; i < n_; ++i)
                if (col.codes[i] < 0 || col.codes[i] >= static_cast<int32_t>(col.levels.size()))
                    throw std::invalid_argument("categorical code out of range in '" + col.spec.name + "'");
        }
    }
    if (n_sensitive != 1)
        throw std::invalid_argument("schema must have exactly one sensitive column, found " +
                                    std::to_string(n_sensitive));
    if (n_target > 1 || n_exposure > 1 || n_claims > 1)
        throw std::invalid_argument("at most one target/exposure/claim_count column allowed");

    const Column& s = cols_[sensitive_idx_];
    if (s.spec.kind != ColumnKind::binary)
        throw std::invalid_argument("sensitive column not binary");

    rows0_.clear();
    rows1_.clear();
    for (std::size_t i = 0; i < n_; ++i)
        (s.num[i] == 1.0 ? rows1_ : rows0_).push_back(i);

    if (!synthetic_.empty() && synthetic_.size() != n_)
        throw std::invalid_argument("synthetic flag vector length mismatch");
}

bool Portfolio::has_column(const std::string& name) const {
    for (const auto& c : cols_)
        if (c.spec.name == name) return true;
    return false;
}

const Column& Portfolio::column(const std::string& name) const {
    for (const auto& c : cols_)
        if (c.spec.name == name) return c;
    throw std::invalid_argument("unknown column: " + name);
}

std::vector<ColumnSpec> Portfolio::schema() const {
    std::vector<ColumnSpec> out;
    out.reserve(cols_.size());
    for (const auto& c : cols_) out.push_back(c.spec);
    return out;
}

const Column* Portfolio::find_role(ColumnRole role) const {
    for (const auto& c : cols_)
        if (c.spec.role == role) return &c;
    return nullptr;
}

const Column& Portfolio::require_role(ColumnRole role) const {
    const Column* c = find_role(role);
    if (!c) throw std::invalid_argument("portfolio lacks a " + to_string(role) + " column");
    return *c;
}

const std::vector<double>& Portfolio::sensitive() const {
    return cols_[sensitive_idx_].num;
}

const std::vector<std::size_t>& Portfolio::group_rows(int group) const {
    if (group != 0 && group != 1) throw std::invalid_argument("group must be 0 or 1");
    return group == 0 ? rows0_ : rows1_;
}

std::vector<std::string> Portfolio::feature_names() const {
    std::vector<std::string> out;
    for (const auto& c : cols_)
        if (c.spec.role == ColumnRole::feature) out.push_back(c.spec.name);
    return out;
}

void Portfolio::set_synthetic_flags(std::vector<uint8_t> flags) {
    if (!flags.empty() && flags.size() != n_)
        throw std::invalid_argument("synthetic flag vector length mismatch");
    synthetic_ = std::move(flags);
}

Portfolio Portfolio::take_rows(const std::vector<std::size_t>& rows) const {
    std::vector<Column> out = cols_;
    for (auto& col : out) {
        if (col.spec.role == ColumnRole::identifier) {
            std::vector<std::string> t;
            t.reserve(rows.size());
            for (auto r : rows) t.push_back(col.text[r]);
            col.text = std::move(t);
        } else if (col.spec.kind == ColumnKind::categorical) {
            std::vector<int32_t> c;
            c.reserve(rows.size());
            for (auto r : rows) c.push_back(col.codes[r]);
            col.codes = std::move(c);
        } else {
            std::vector<double> v;
            v.reserve(rows.size());
            for (auto r : rows) v.push_back(col.num[r]);
            col.num = std::move(v);
        }
    }
    Portfolio p(std::move(out), provenance_);
    if (!synthetic_.empty()) {
        std::vector<uint8_t> f;
        f.reserve(rows.size());
        for (auto r : rows) f.push_back(synthetic_[r]);
        p.set_synthetic_flags(std::move(f));
    }
    return p;
}

Portfolio Portfolio::with_numeric_column(const std::string& name,
                                         std::vector<double> values) const {
    if (values.size() != n_)
        throw std::invalid_argument("replacement column length mismatch for " + name);
    std::vector<Column> out = cols_;
    bool found = false;
    for (auto& col : out) {
        if (col.spec.name != name) continue;
        if (!col.is_numeric())
            throw std::invalid_argument("column '" + name + "' is not numeric");
        col.num = std::move(values);
        found = true;
        break;
    }
    if (!found) throw std::invalid_argument("unknown column: " + name);
    Portfolio p(std::move(out), provenance_);
    p.set_synthetic_flags(synthetic_);
    return p;
}

std::size_t BinningSpec::bin_count() const {
    std::size_t intervals = edges.size() >= 2 ? edges.size() - 1 : 0;
    return intervals + (zero_bin ? 1 : 0) + (open_upper ? 1 : 0);
}

BinningSpec BinningSpec::seven_bin_default() {
    return BinningSpec{{0.0, 250.0, 500.0, 750.0, 1000.0, 1500.0}, true, true};
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur.push_back(ch);
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    out.push_back(cur);
    return out;
}

bool parse_double(const std::string& s, double& out) {
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last;
}

std::string format_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

}  // namespace

LoadResult load_csv(const std::string& path, const std::vector<ColumnSpec>& schema) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open file: " + path);

    std::string header;
    if (!std::getline(in, header))
        throw std::invalid_argument("empty file: " + path);
    const auto names = split_csv_line(header);
    if (names.size() != schema.size())
        throw std::invalid_argument("header has " + std::to_string(names.size()) +
                                    " columns, schema expects " + std::to_string(schema.size()));
    {
        std::set<std::string> seen;
        for (const auto& s : schema)
            if (!seen.insert(s.name).second)
                throw std::invalid_argument("duplicate column name in schema: " + s.name);
    }
    for (std::size_t c = 0; c < schema.size(); ++c)
        if (names[c] != schema[c].name)
            throw std::invalid_argument("header column '" + names[c] +
                                        "' does not match schema column '" + schema[c].name + "'");

    std::vector<Column> cols(schema.size());
    std::vector<std::unordered_map<std::string, int32_t>> level_of(schema.size());
    for (std::size_t c = 0; c < schema.size(); ++c) cols[c].spec = schema[c];

    std::string line;
    std::size_t row = 0, rejected = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        ++row;
        const auto cells = split_csv_line(line);
        if (cells.size() != schema.size())
            throw std::invalid_argument("row " + std::to_string(row) + " has " +
                                        std::to_string(cells.size()) + " cells, expected " +
                                        std::to_string(schema.size()));
        bool missing = false;
        for (const auto& cell : cells)
            if (cell.empty()) missing = true;
        if (missing) {
            ++rejected;
            continue;
        }
        for (std::size_t c = 0; c < schema.size(); ++c) {
            Column& col = cols[c];
            const std::string& cell = cells[c];
            if (col.spec.role == ColumnRole::identifier) {
                col.text.push_back(cell);
            } else if (col.spec.kind == ColumnKind::categorical) {
                auto [it, inserted] = level_of[c].emplace(cell, static_cast<int32_t>(col.levels.size()));
                if (inserted) col.levels.push_back(cell);
                col.codes.push_back(it->second);
            } else {
                double v = 0.0;
                if (!parse_double(cell, v))
                    throw std::invalid_argument("unparseable cell at row " + std::to_string(row) +
                                                ", column '" + col.spec.name + "': '" + cell + "'");
                col.num.push_back(v);
            }
        }
    }
    if (cols.front().size() == 0)
        throw std::invalid_argument("no usable rows in " + path);

    return LoadResult{Portfolio(std::move(cols), path), rejected};
}

void save_csv(const Portfolio& p, const std::string& path, bool include_provenance) {
    std::ofstream out(path);
    if (!out) throw std::invalid_argument("cannot write file: " + path);

    const auto& cols = p.columns();
    for (std::size_t c = 0; c < cols.size(); ++c) {
        if (c) out << ',';
        out << cols[c].spec.name;
    }
    if (include_provenance) out << ",synthetic";
    out << '\n';

    const auto& flags = p.synthetic_flags();
    for (std::size_t i = 0; i < p.n(); ++i) {
        for (std::size_t c = 0; c < cols.size(); ++c) {
            if (c) out << ',';
            const Column& col = cols[c];
            if (col.spec.role == ColumnRole::identifier)
                out << col.text[i];
            else if (col.spec.kind == ColumnKind::categorical)
                out << col.levels[col.codes[i]];
            else
                out << format_double(col.num[i]);
        }
        if (include_provenance) out << ',' << (flags.empty() ? 0 : int(flags[i]));
        out << '\n';
    }
}

std::pair<Portfolio, Portfolio> split(const Portfolio& p, double test_fraction, uint64_t seed) {
    if (p.n() < 2) throw std::invalid_argument("split requires n >= 2");
    if (!(test_fraction > 0.0 && test_fraction < 1.0))
        throw std::invalid_argument("test_fraction must be in (0,1)");

    const std::size_t n_test = static_cast<std::size_t>(std::llround(p.n() * test_fraction));
    if (n_test == 0 || n_test == p.n())
        throw std::invalid_argument("test_fraction yields an empty partition");

    // Per-group quotas by largest remainder against the exact total.
    const std::size_t n0 = p.group_count(0), n1 = p.group_count(1);
    const double q0 = static_cast<double>(n0) * n_test / p.n();
    const double q1 = static_cast<double>(n1) * n_test / p.n();
    std::size_t t0 = static_cast<std::size_t>(std::floor(q0));
    std::size_t t1 = static_cast<std::size_t>(std::floor(q1));
    while (t0 + t1 < n_test) {
        const double r0 = q0 - static_cast<double>(t0), r1 = q1 - static_cast<double>(t1);
        if (r0 > r1 || (r0 == r1 && n0 >= n1))
            ++t0;
        else
            ++t1;
    }
    t0 = std::min(t0, n0);
    t1 = std::min(t1, n1);

    std::mt19937_64 rng(seed);
    std::vector<std::size_t> test_rows, train_rows;
    for (int g = 0; g < 2; ++g) {
        auto rows = p.group_rows(g);
        std::shuffle(rows.begin(), rows.end(), rng);
        const std::size_t tg = (g == 0) ? t0 : t1;
        for (std::size_t i = 0; i < rows.size(); ++i)
            (i < tg ? test_rows : train_rows).push_back(rows[i]);
    }
    std::sort(test_rows.begin(), test_rows.end());
    std::sort(train_rows.begin(), train_rows.end());
    if (test_rows.empty() || train_rows.empty())
        throw std::invalid_argument("test_fraction yields an empty partition");
    return {p.take_rows(train_rows), p.take_rows(test_rows)};
}

std::vector<int> bin_values(const std::vector<double>& values, const BinningSpec& spec) {
    for (std::size_t i = 1; i < spec.edges.size(); ++i)
        if (!(spec.edges[i] > spec.edges[i - 1]))
            throw std::invalid_argument("bin edges must be strictly increasing");

    std::vector<int> out(values.size(), 0);
    const int base = spec.zero_bin ? 1 : 0;
    const std::size_t n_intervals = spec.edges.size() >= 2 ? spec.edges.size() - 1 : 0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double y = values[i];
        if (spec.zero_bin && y == 0.0) {
            out[i] = 1;
            continue;
        }
        int idx = -1;
        // left-open/right-closed intervals (e_j, e_{j+1}]
        for (std::size_t j = 0; j < n_intervals; ++j) {
            if (y > spec.edges[j] && y <= spec.edges[j + 1]) {
                idx = base + static_cast<int>(j) + 1;
                break;
            }
        }
        if (idx < 0 && spec.open_upper && !spec.edges.empty() && y > spec.edges.back())
            idx = base + static_cast<int>(n_intervals) + 1;
        if (idx < 0)
            throw std::invalid_argument("target value " + format_double(y) + " at row " +
                                        std::to_string(i) + " falls outside the binning spec");
        out[i] = idx;
    }
    return out;
}

std::vector<int> bin_target(const Portfolio& p, const BinningSpec& spec) {
    return bin_values(p.require_role(ColumnRole::target).num, spec);
}

}  // namespace fairprice

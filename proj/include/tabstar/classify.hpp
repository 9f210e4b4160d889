#ifndef TABSTAR_CLASSIFY_HPP
#define TABSTAR_CLASSIFY_HPP

#include <algorithm>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "tabstar/error.hpp"
#include "tabstar/grid.hpp"
#include "tabstar/value.hpp"

namespace tabstar {

enum class Structure { Listing, Horizontal, Vertical, SuperRow, Cross };
enum class CellContent {
    Simple,
    MergedCategory,
    MergedValue,
    Nested,
    MultivaluedSimple,
    MultivaluedComposed,
};
enum class HeaderKind { None, Simple, Hierarchical };
enum class HeaderArrangement { Single, Distributed, Duplicated };
enum class Orientation { RowsAreTuples, ColumnsAreTuples };

inline const char* to_string(Structure s) {
    switch (s) {
    case Structure::Listing: return "listing";
    case Structure::Horizontal: return "horizontal";
    case Structure::Vertical: return "vertical";
    case Structure::SuperRow: return "super_row";
    case Structure::Cross: return "cross";
    }
    return "?";
}

inline const char* to_string(CellContent c) {
    switch (c) {
    case CellContent::Simple: return "simple";
    case CellContent::MergedCategory: return "merged_category";
    case CellContent::MergedValue: return "merged_value";
    case CellContent::Nested: return "nested";
    case CellContent::MultivaluedSimple: return "multivalued_simple";
    case CellContent::MultivaluedComposed: return "multivalued_composed";
    }
    return "?";
}

inline const char* to_string(HeaderKind h) {
    switch (h) {
    case HeaderKind::None: return "none";
    case HeaderKind::Simple: return "simple";
    case HeaderKind::Hierarchical: return "hierarchical";
    }
    return "?";
}

inline const char* to_string(HeaderArrangement a) {
    switch (a) {
    case HeaderArrangement::Single: return "single";
    case HeaderArrangement::Distributed: return "distributed";
    case HeaderArrangement::Duplicated: return "duplicated";
    }
    return "?";
}

/// Position of a table on the three typology axes. header_rows is the number
/// of leading rows the header occupies (0 when header == None); for cross
/// tables it counts the column-rail rows consumed by unpivoting.
struct TableTypology {
    Structure structure = Structure::Horizontal;
    std::set<CellContent> cell_content = {CellContent::Simple};
    HeaderKind header = HeaderKind::None;
    HeaderArrangement header_arrangement = HeaderArrangement::Single;
    int header_rows = 0;
    int cross_header_levels = 0; // 0 unless structure == Cross

    bool operator==(const TableTypology&) const = default;
};

struct ClassifyOptions {
    std::string multivalue_delimiters = ",;/|";
};

namespace detail {

inline bool cell_non_numeric(const Cell& c) {
    auto t = infer_type(c.text);
    return t != ValueType::Integer && t != ValueType::Real;
}

inline std::vector<ValueType> column_types(const RawGrid& g, std::size_t col,
                                           std::size_t from_row) {
    std::vector<ValueType> out;
    out.reserve(g.n_rows() - from_row);
    for (std::size_t r = from_row; r < g.n_rows(); ++r)
        out.push_back(infer_type(g.at(r, col).text));
    return out;
}

inline std::vector<ValueType> row_types(const RawGrid& g, std::size_t row,
                                        std::size_t from_col) {
    std::vector<ValueType> out;
    out.reserve(g.n_cols() - from_col);
    for (std::size_t c = from_col; c < g.n_cols(); ++c)
        out.push_back(infer_type(g.at(row, c).text));
    return out;
}

inline ValueType column_majority_type(const RawGrid& g, std::size_t col,
                                      std::size_t from_row) {
    int counts[6] = {};
    for (std::size_t r = from_row; r < g.n_rows(); ++r) {
        auto t = infer_type(g.at(r, col).text);
        if (t != ValueType::Empty) counts[static_cast<int>(t)]++;
    }
    int best = 0;
    ValueType best_t = ValueType::Empty;
    for (int i = 0; i < 6; ++i)
        if (counts[i] > best) { best = counts[i]; best_t = static_cast<ValueType>(i); }
    return best_t;
}

struct HeaderScan {
    HeaderKind kind = HeaderKind::None;
    HeaderArrangement arrangement = HeaderArrangement::Single;
    int rows = 0;
    std::size_t block_width = 0; // set for distributed headers
};

/// A label-like row has at least one non-empty cell and no numeric cell.
inline bool label_like_row(const RawGrid& g, std::size_t r) {
    bool any = false;
    for (std::size_t c = 0; c < g.n_cols(); ++c) {
        const Cell& cell = g.at(r, c);
        if (cell.is_empty()) continue;
        any = true;
        if (!cell_non_numeric(cell)) return false;
    }
    return any;
}

inline bool row_has_duplicates(const RawGrid& g, std::size_t r, bool adjacent_only) {
    std::set<std::string> seen;
    std::string prev;
    for (std::size_t c = 0; c < g.n_cols(); ++c) {
        const std::string& v = g.at(r, c).text;
        if (!v.empty()) {
            if (adjacent_only) {
                if (v == prev) return true;
            } else if (!seen.insert(v).second) {
                return true;
            }
        }
        prev = v;
    }
    return false;
}

/// Detects header kind and arrangement over the top rows of a grid.
/// Rules, in order: two stacked label rows where lower labels repeat under
/// spanning/gapped upper labels are hierarchical; a repeating name-block row
/// is a distributed simple header; a distinct non-numeric row over
/// type-homogeneous body columns is a simple header (duplicated when it
/// reappears verbatim in the body). Plain text-over-text needs every header
/// name absent from its own column to count as evidence, and at least two
/// columns.
inline HeaderScan detect_row_header(const RawGrid& g) {
    HeaderScan none;
    if (g.n_rows() < 2 || g.n_cols() == 0) return none;

    // Hierarchical: rows 0 and 1 both label-like, lower row full and
    // repeating under gapped/duplicated/spanning upper labels.
    if (g.n_rows() >= 3 && label_like_row(g, 0) && label_like_row(g, 1)) {
        bool row1_full = true;
        for (std::size_t c = 0; c < g.n_cols(); ++c)
            if (g.at(1, c).is_empty()) { row1_full = false; break; }
        if (row1_full) {
            bool spans = false;
            for (std::size_t r = 0; r < 2 && !spans; ++r)
                for (std::size_t c = 0; c < g.n_cols() && !spans; ++c)
                    if (g.at(r, c).col_span > 1 || g.at(r, c).row_span > 1) spans = true;
            bool row0_gaps = false, row0_any = false;
            for (std::size_t c = 0; c < g.n_cols(); ++c) {
                if (g.at(0, c).is_empty()) row0_gaps = true;
                else row0_any = true;
            }
            bool lower_repeats = row_has_duplicates(g, 1, false);
            bool upper_runs = row_has_duplicates(g, 0, true);
            if (spans || (lower_repeats && row0_any && (row0_gaps || upper_runs)))
                return HeaderScan{HeaderKind::Hierarchical, HeaderArrangement::Single, 2, 0};
        }
    }

    // Single-row candidates need a full non-numeric first row.
    bool full_non_numeric = true;
    bool row0_spans = false;
    for (std::size_t c = 0; c < g.n_cols(); ++c) {
        const Cell& cell = g.at(0, c);
        if (cell.is_empty() || !cell_non_numeric(cell)) { full_non_numeric = false; break; }
        if (cell.col_span > 1 || cell.row_span > 1) row0_spans = true;
    }
    if (!full_non_numeric) return none;

    // Distributed: the header row is one name-block repeated k >= 2 times.
    if (!row0_spans) {
        for (std::size_t w = 1; w * 2 <= g.n_cols(); ++w) {
            if (g.n_cols() % w != 0) continue;
            bool repeats = true;
            for (std::size_t c = w; c < g.n_cols() && repeats; ++c)
                if (g.at(0, c).text != g.at(0, c % w).text) repeats = false;
            if (!repeats) continue;
            std::set<std::string> block;
            for (std::size_t c = 0; c < w; ++c) block.insert(g.at(0, c).text);
            if (block.size() == w)
                return HeaderScan{HeaderKind::Simple, HeaderArrangement::Distributed, 1, w};
        }
    }

    std::set<std::string> names;
    for (std::size_t c = 0; c < g.n_cols(); ++c) names.insert(g.at(0, c).text);
    if (names.size() != g.n_cols()) return none;

    double homogeneity_sum = 0.0;
    for (std::size_t c = 0; c < g.n_cols(); ++c)
        homogeneity_sum += type_homogeneity(column_types(g, c, 1));
    if (homogeneity_sum / g.n_cols() < 0.7) return none;

    bool type_evidence = false;
    for (std::size_t c = 0; c < g.n_cols(); ++c) {
        ValueType body = column_majority_type(g, c, 1);
        if (body != ValueType::Text && body != ValueType::Empty) { type_evidence = true; break; }
    }
    bool text_evidence = g.n_cols() >= 2;
    if (!type_evidence && text_evidence) {
        for (std::size_t c = 0; c < g.n_cols() && text_evidence; ++c)
            for (std::size_t r = 1; r < g.n_rows() && text_evidence; ++r)
                if (g.at(r, c).text == g.at(0, c).text) text_evidence = false;
    }

    bool duplicated = false;
    for (std::size_t r = 1; r < g.n_rows() && !duplicated; ++r) {
        bool same = true;
        for (std::size_t c = 0; c < g.n_cols(); ++c)
            if (g.at(r, c).text != g.at(0, c).text) { same = false; break; }
        duplicated = same;
    }
    if (duplicated)
        return HeaderScan{HeaderKind::Simple, HeaderArrangement::Duplicated, 1, 0};
    if (type_evidence || text_evidence)
        return HeaderScan{HeaderKind::Simple, HeaderArrangement::Single, 1, 0};
    return none;
}

struct CrossShape {
    int levels = 1;
    double interior_numeric_fraction = 0.0;
};

inline bool distinct_non_empty(const std::vector<std::string>& values) {
    std::set<std::string> seen;
    for (const auto& v : values) {
        if (v.empty()) return false;
        if (!seen.insert(v).second) return false;
    }
    return !values.empty();
}

/// Single-level cross: both rails distinct and non-empty, numeric interior,
/// and a corner cell that is empty or a "a/b" axis label (a non-empty plain
/// corner names the first column, which reads as an ordinary header).
inline std::optional<CrossShape> detect_cross_1(const RawGrid& g) {
    if (g.n_rows() < 3 || g.n_cols() < 3) return std::nullopt;
    const std::string& corner = g.at(0, 0).text;
    if (!corner.empty() && corner.find('/') == std::string::npos) return std::nullopt;

    std::vector<std::string> col_rail, row_rail;
    for (std::size_t c = 1; c < g.n_cols(); ++c) col_rail.push_back(g.at(0, c).text);
    for (std::size_t r = 1; r < g.n_rows(); ++r) row_rail.push_back(g.at(r, 0).text);
    if (!distinct_non_empty(col_rail) || !distinct_non_empty(row_rail)) return std::nullopt;

    std::size_t non_empty = 0, numeric = 0;
    for (std::size_t r = 1; r < g.n_rows(); ++r)
        for (std::size_t c = 1; c < g.n_cols(); ++c) {
            const Cell& cell = g.at(r, c);
            if (cell.is_empty()) continue;
            ++non_empty;
            if (is_numeric_type(infer_type(cell.text))) ++numeric;
        }
    if (non_empty == 0 || numeric != non_empty) return std::nullopt;
    return CrossShape{1, 1.0};
}

/// Two-level cross: rows 0-1 form a stacked column rail whose per-column
/// label pairs are distinct, column 0 of those rows names the rail levels,
/// and the interior below is numeric. Matches layouts like
///   Year    | 2018 | 2018 | 2019 | 2019
///   Quarter | Q1   | Q2   | Q1   | Q2
///   Paris   | ...
inline std::optional<CrossShape> detect_cross_2(const RawGrid& g) {
    if (g.n_rows() < 3 || g.n_cols() < 3) return std::nullopt;
    const Cell& name0 = g.at(0, 0);
    const Cell& name1 = g.at(1, 0);
    if (name0.is_empty() || name1.is_empty()) return std::nullopt;
    if (!cell_non_numeric(name0) || !cell_non_numeric(name1)) return std::nullopt;
    if (name0.text == name1.text) return std::nullopt;

    // Left-fill the upper rail (span serialization leaves gaps).
    std::vector<std::string> upper, lower;
    std::string fill;
    for (std::size_t c = 1; c < g.n_cols(); ++c) {
        const std::string& u = g.at(0, c).text;
        if (!u.empty()) fill = u;
        if (fill.empty()) return std::nullopt;
        upper.push_back(fill);
        const std::string& l = g.at(1, c).text;
        if (l.empty()) return std::nullopt;
        lower.push_back(l);
    }
    std::set<std::pair<std::string, std::string>> pairs;
    for (std::size_t i = 0; i < upper.size(); ++i)
        if (!pairs.insert({upper[i], lower[i]}).second) return std::nullopt;

    // The stacked shape needs span evidence: repeated or gapped upper labels
    // or repeated lower labels.
    bool upper_spanning = std::set<std::string>(upper.begin(), upper.end()).size() < upper.size();
    bool lower_repeats = std::set<std::string>(lower.begin(), lower.end()).size() < lower.size();
    for (std::size_t c = 1; c < g.n_cols(); ++c)
        if (g.at(0, c).is_empty()) upper_spanning = true;
    if (!upper_spanning && !lower_repeats) return std::nullopt;

    std::vector<std::string> row_rail;
    for (std::size_t r = 2; r < g.n_rows(); ++r) row_rail.push_back(g.at(r, 0).text);
    if (!distinct_non_empty(row_rail)) return std::nullopt;

    std::size_t non_empty = 0, numeric = 0;
    for (std::size_t r = 2; r < g.n_rows(); ++r)
        for (std::size_t c = 1; c < g.n_cols(); ++c) {
            const Cell& cell = g.at(r, c);
            if (cell.is_empty()) continue;
            ++non_empty;
            if (is_numeric_type(infer_type(cell.text))) ++numeric;
        }
    if (non_empty == 0 || numeric != non_empty) return std::nullopt;
    return CrossShape{2, 1.0};
}

inline bool super_row_shape(const RawGrid& g, std::size_t r) {
    if (g.at(r, 0).is_empty()) return false;
    for (std::size_t c = 1; c < g.n_cols(); ++c)
        if (!g.at(r, c).is_empty()) return false;
    return true;
}

/// Counts label-only rows that govern at least one following normal row.
inline std::size_t count_super_rows(const RawGrid& g, std::size_t body_start) {
    if (g.n_cols() < 2) return 0;
    std::size_t supers = 0;
    bool seen_normal_after = false;
    std::vector<std::size_t> candidate_rows;
    for (std::size_t r = body_start; r < g.n_rows(); ++r) {
        if (super_row_shape(g, r)) {
            candidate_rows.push_back(r);
        } else {
            std::size_t filled = 0;
            for (std::size_t c = 0; c < g.n_cols(); ++c)
                if (!g.at(r, c).is_empty()) ++filled;
            if (filled >= 2 && !candidate_rows.empty()) seen_normal_after = true;
            if (filled >= 2) supers = candidate_rows.size();
        }
    }
    return seen_normal_after ? supers : 0;
}

/// Splits a cell on the delimiter set; returns the parts when the cell is
/// genuinely multivalued (two or more non-empty parts under one delimiter),
/// along with the delimiter used. Whole-cell numbers, dates and booleans are
/// never multivalued.
inline std::optional<std::pair<char, std::vector<std::string>>>
split_multivalued(const std::string& text, const std::string& delimiters) {
    if (text.empty()) return std::nullopt;
    auto t = infer_type(text);
    if (t != ValueType::Text) return std::nullopt;
    for (char d : delimiters) {
        if (text.find(d) == std::string::npos) continue;
        std::vector<std::string> parts;
        std::size_t start = 0;
        bool all_non_empty = true;
        while (true) {
            std::size_t pos = text.find(d, start);
            std::string part = trim(std::string_view(text).substr(
                start, pos == std::string::npos ? text.size() - start : pos - start));
            if (part.empty()) all_non_empty = false;
            parts.push_back(std::move(part));
            if (pos == std::string::npos) break;
            start = pos + 1;
        }
        if (parts.size() >= 2 && all_non_empty)
            return std::make_pair(d, std::move(parts));
    }
    return std::nullopt;
}

} // namespace detail

/// Per-column and per-row type-homogeneity scores decide whether rows or
/// columns hold the tuples; ties favor rows as tuples. Scoring the full grid
/// keeps the measure exactly symmetric under transposition.
inline Orientation detect_orientation(const RawGrid& grid) {
    if (grid.n_rows() == 0 || grid.n_cols() == 0)
        throw Error(ErrorKind::InvariantViolation, "detect_orientation on empty grid");
    double col_sum = 0.0;
    for (std::size_t c = 0; c < grid.n_cols(); ++c)
        col_sum += type_homogeneity(detail::column_types(grid, c, 0));
    double row_sum = 0.0;
    for (std::size_t r = 0; r < grid.n_rows(); ++r)
        row_sum += type_homogeneity(detail::row_types(grid, r, 0));
    double col_mean = col_sum / grid.n_cols();
    double row_mean = row_sum / grid.n_rows();
    return col_mean >= row_mean ? Orientation::RowsAreTuples : Orientation::ColumnsAreTuples;
}

/// Classifies a grid on the three typology axes: header first, then
/// structure, then cell content. Total over non-empty rectangular grids
/// except for the declared cross/super-row ambiguity.
inline TableTypology classify_table(const RawGrid& grid,
                                    const ClassifyOptions& options = {}) {
    if (grid.n_rows() == 0 || grid.n_cols() == 0)
        throw Error(ErrorKind::InvariantViolation, "classify_table on empty grid");
    if (!grid.rectangular())
        throw Error(ErrorKind::InvariantViolation, "classify_table on ragged grid");

    TableTypology ty;

    // --- header axis ---
    detail::HeaderScan row_header = detail::detect_row_header(grid);
    RawGrid transposed = transpose(grid);
    detail::HeaderScan col_header = detail::detect_row_header(transposed);

    // --- structure axis ---
    auto cross2 = detail::detect_cross_2(grid);
    std::optional<detail::CrossShape> cross1;
    if (!cross2) cross1 = detail::detect_cross_1(grid);
    std::size_t body_start = row_header.rows;
    std::size_t supers = detail::count_super_rows(grid, body_start);

    if ((cross1 || cross2) && supers > 0) {
        double cross_score = cross2 ? cross2->interior_numeric_fraction
                                    : cross1->interior_numeric_fraction;
        double super_score =
            static_cast<double>(supers) / (grid.n_rows() - body_start);
        throw Error(ErrorKind::AmbiguousStructure,
                    "cross evidence " + std::to_string(cross_score) +
                        " vs super-row evidence " + std::to_string(super_score));
    }

    if (cross2) {
        ty.structure = Structure::Cross;
        ty.cross_header_levels = 2;
        ty.header = HeaderKind::Hierarchical;
        ty.header_arrangement = HeaderArrangement::Single;
        ty.header_rows = 2;
    } else if (cross1) {
        ty.structure = Structure::Cross;
        ty.cross_header_levels = 1;
        ty.header = row_header.kind;
        ty.header_arrangement = row_header.arrangement;
        ty.header_rows = 1;
    } else if (supers > 0) {
        ty.structure = Structure::SuperRow;
        ty.header = row_header.kind;
        ty.header_arrangement = row_header.arrangement;
        ty.header_rows = row_header.rows;
    } else if (grid.n_cols() == 1 || grid.n_rows() == 1) {
        ty.structure = Structure::Listing;
        ty.header = grid.n_cols() == 1 ? row_header.kind : HeaderKind::None;
        ty.header_arrangement =
            grid.n_cols() == 1 ? row_header.arrangement : HeaderArrangement::Single;
        ty.header_rows = grid.n_cols() == 1 ? row_header.rows : 0;
    } else if (row_header.kind != HeaderKind::None && col_header.kind == HeaderKind::None) {
        ty.structure = Structure::Horizontal;
        ty.header = row_header.kind;
        ty.header_arrangement = row_header.arrangement;
        ty.header_rows = row_header.rows;
    } else if (col_header.kind != HeaderKind::None && row_header.kind == HeaderKind::None) {
        ty.structure = Structure::Vertical;
        ty.header = col_header.kind;
        ty.header_arrangement = col_header.arrangement;
        ty.header_rows = col_header.rows;
    } else {
        // Both or neither side shows a header: orientation decides.
        if (detect_orientation(grid) == Orientation::RowsAreTuples) {
            ty.structure = Structure::Horizontal;
            ty.header = row_header.kind;
            ty.header_arrangement = row_header.arrangement;
            ty.header_rows = row_header.rows;
        } else {
            ty.structure = Structure::Vertical;
            ty.header = col_header.kind;
            ty.header_arrangement = col_header.arrangement;
            ty.header_rows = col_header.rows;
        }
    }

    // --- cell content axis, over the body region ---
    std::set<CellContent> content;
    std::size_t scan_start = ty.structure == Structure::Vertical ? 0 : ty.header_rows;
    std::size_t scan_col_start = ty.structure == Structure::Vertical ? ty.header_rows : 0;
    for (std::size_t r = scan_start; r < grid.n_rows(); ++r) {
        for (std::size_t c = scan_col_start; c < grid.n_cols(); ++c) {
            const Cell& cell = grid.at(r, c);
            if (cell.row_span > 1 || cell.col_span > 1) {
                if (detail::cell_non_numeric(cell))
                    content.insert(CellContent::MergedCategory);
                else
                    content.insert(CellContent::MergedValue);
            }
            if (!cell.is_empty() &&
                to_lower(cell.text).find("<table") != std::string::npos) {
                content.insert(CellContent::Nested);
                continue;
            }
            if (auto mv = detail::split_multivalued(cell.text,
                                                    options.multivalue_delimiters)) {
                std::set<ValueType> part_types;
                for (const auto& p : mv->second) part_types.insert(infer_type(p));
                content.insert(part_types.size() == 1
                                   ? CellContent::MultivaluedSimple
                                   : CellContent::MultivaluedComposed);
            }
        }
    }
    if (content.empty()) content.insert(CellContent::Simple);
    ty.cell_content = std::move(content);
    return ty;
}

} // namespace tabstar

#endif

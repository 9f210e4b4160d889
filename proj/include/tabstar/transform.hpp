#ifndef TABSTAR_TRANSFORM_HPP
#define TABSTAR_TRANSFORM_HPP

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "tabstar/classify.hpp"
#include "tabstar/error.hpp"
#include "tabstar/grid.hpp"
#include "tabstar/table.hpp"
#include "tabstar/value.hpp"

namespace tabstar {

struct TransformOptions {
    std::string multivalue_delimiters = ",;/|";
};

struct NormalizeResult {
    CanonicalTable table;
    std::vector<HierarchyHint> hints;
};

/// Attribute names for unpivoted cross tables.
struct CrossNames {
    std::string row_dim;
    std::string col_dim;
    std::string value;
};

namespace detail {

inline std::string slug(std::string_view label) {
    std::string out = to_lower(trim(label));
    for (auto& c : out)
        if (c == ' ') c = '_';
    return out;
}

/// Joins stacked header labels into one flat name: empty levels and
/// consecutive repeats are skipped, the rest lowercased and '_'-joined.
inline std::string join_levels(const std::vector<std::string>& levels) {
    std::string out;
    std::string prev;
    for (const auto& level : levels) {
        if (level.empty() || level == prev) continue;
        if (!out.empty()) out += '_';
        out += slug(level);
        prev = level;
    }
    return out;
}

} // namespace detail

/// Removes body rows that repeat the header row verbatim.
inline RawGrid collapse_duplicated_header(const RawGrid& grid) {
    RawGrid out;
    out.source_name = grid.source_name;
    out.origin_row = grid.origin_row;
    out.origin_col = grid.origin_col;
    out.cells.push_back(grid.cells[0]);
    for (std::size_t r = 1; r < grid.n_rows(); ++r) {
        bool same = true;
        for (std::size_t c = 0; c < grid.n_cols(); ++c)
            if (grid.at(r, c).text != grid.at(0, c).text) { same = false; break; }
        if (!same) out.cells.push_back(grid.cells[r]);
    }
    return out;
}

/// Stacks the k column blocks of a distributed header vertically under a
/// single header block (block-major order).
inline RawGrid merge_distributed_header(const RawGrid& grid) {
    std::size_t width = 0;
    for (std::size_t w = 1; w * 2 <= grid.n_cols(); ++w) {
        if (grid.n_cols() % w != 0) continue;
        bool repeats = true;
        for (std::size_t c = w; c < grid.n_cols() && repeats; ++c)
            if (grid.at(0, c).text != grid.at(0, c % w).text) repeats = false;
        if (!repeats) continue;
        std::set<std::string> block;
        for (std::size_t c = 0; c < w; ++c) block.insert(grid.at(0, c).text);
        if (block.size() == w) { width = w; break; }
    }
    if (width == 0)
        throw Error(ErrorKind::HeaderRepairFailed,
                    "header row does not factor into repeated blocks");

    RawGrid out;
    out.source_name = grid.source_name;
    out.origin_row = grid.origin_row;
    out.origin_col = grid.origin_col;
    std::vector<Cell> header(grid.cells[0].begin(), grid.cells[0].begin() + width);
    out.cells.push_back(std::move(header));
    std::size_t blocks = grid.n_cols() / width;
    for (std::size_t b = 0; b < blocks; ++b)
        for (std::size_t r = 1; r < grid.n_rows(); ++r) {
            std::vector<Cell> row(grid.cells[r].begin() + b * width,
                                  grid.cells[r].begin() + (b + 1) * width);
            out.cells.push_back(std::move(row));
        }
    return out;
}

/// Flattens a two-row hierarchical header into single-level names joined
/// with '_' (upper labels left-filled over their span gaps).
inline RawGrid flatten_hierarchical_header(const RawGrid& grid) {
    if (grid.n_rows() < 2)
        throw Error(ErrorKind::NormalizationFailed,
                    "flatten_hierarchical_header: fewer than two rows");
    RawGrid out;
    out.source_name = grid.source_name;
    out.origin_row = grid.origin_row;
    out.origin_col = grid.origin_col;
    std::vector<Cell> header;
    std::string fill;
    for (std::size_t c = 0; c < grid.n_cols(); ++c) {
        const std::string& upper_raw = grid.at(0, c).text;
        if (!upper_raw.empty()) fill = upper_raw;
        header.emplace_back(detail::join_levels({fill, grid.at(1, c).text}));
    }
    out.cells.push_back(std::move(header));
    for (std::size_t r = 2; r < grid.n_rows(); ++r) out.cells.push_back(grid.cells[r]);
    return out;
}

/// Repairs duplicated, distributed and hierarchical headers to a single
/// header row. Hierarchy hints for stacked value rails are produced by
/// cross-table unpivoting, not here; entity-grouping headers carry none.
inline std::pair<RawGrid, std::vector<HierarchyHint>>
normalize_headers(const RawGrid& grid, const TableTypology& typology) {
    std::vector<HierarchyHint> hints;
    if (typology.header == HeaderKind::None)
        return {grid, hints};
    if (typology.header == HeaderKind::Hierarchical) {
        if (typology.structure == Structure::Cross) return {grid, hints};
        return {flatten_hierarchical_header(grid), hints};
    }
    if (typology.header_arrangement == HeaderArrangement::Duplicated)
        return {collapse_duplicated_header(grid), hints};
    if (typology.header_arrangement == HeaderArrangement::Distributed)
        return {merge_distributed_header(grid), hints};
    return {grid, hints};
}

namespace detail {

/// Fill-down over label-like columns: majority non-numeric values and a
/// distinct ratio at most 0.5 of the column height. `barrier` rows reset the
/// fill (used to stop section labels leaking across super-rows).
inline RawGrid expand_merged_impl(const RawGrid& grid,
                                  const std::function<bool(std::size_t)>& barrier) {
    RawGrid out = grid;
    if (out.n_rows() == 0) return out;
    for (std::size_t c = 0; c < out.n_cols(); ++c) {
        std::size_t non_empty = 0, numeric = 0;
        std::set<std::string> distinct;
        for (std::size_t r = 0; r < out.n_rows(); ++r) {
            const Cell& cell = out.at(r, c);
            if (cell.is_empty()) continue;
            ++non_empty;
            if (is_numeric_type(infer_type(cell.text))) ++numeric;
            distinct.insert(cell.text);
        }
        if (non_empty == 0) continue;
        if (static_cast<double>(numeric) / non_empty >= 0.5) continue;
        if (static_cast<double>(distinct.size()) / out.n_rows() > 0.5) continue;
        std::string carry;
        for (std::size_t r = 0; r < out.n_rows(); ++r) {
            if (barrier && barrier(r)) { carry.clear(); continue; }
            Cell& cell = out.at(r, c);
            if (cell.is_empty()) {
                if (!carry.empty()) cell.text = carry;
            } else {
                carry = cell.text;
            }
        }
    }
    return out;
}

} // namespace detail

/// CSV-serialized merged cells: fills empty cells from the value above in
/// label-like columns; value columns are never touched.
inline RawGrid expand_merged(const RawGrid& grid) {
    return detail::expand_merged_impl(grid, nullptr);
}

namespace detail {

struct ExplodeResult {
    RawGrid grid;
    std::map<std::size_t, std::size_t> split_columns; // source column -> part count
};

/// Simple multivalued cells duplicate their row, one copy per part; composed
/// cells split the column in place into fixed-arity part columns.
inline ExplodeResult explode_multivalued_impl(const RawGrid& grid,
                                              const std::string& delimiters) {
    ExplodeResult result;
    result.grid = grid;
    if (delimiters.empty() || grid.n_rows() == 0) return result;

    RawGrid& g = result.grid;
    // Column verdicts on the current grid; columns processed left to right,
    // adjusting for columns already split.
    std::size_t col = 0;
    std::size_t source_col = 0;
    while (col < g.n_cols()) {
        bool any_composed = false, any_simple = false;
        std::size_t arity = 0;
        bool arity_conflict = false;
        for (std::size_t r = 0; r < g.n_rows(); ++r) {
            auto mv = split_multivalued(g.at(r, col).text, delimiters);
            if (!mv) continue;
            std::set<ValueType> types;
            for (const auto& p : mv->second) types.insert(infer_type(p));
            if (types.size() > 1) any_composed = true;
            else any_simple = true;
            if (arity == 0) arity = mv->second.size();
            else if (arity != mv->second.size()) arity_conflict = true;
        }
        if (any_composed) {
            if (arity_conflict)
                throw Error(ErrorKind::InconsistentCompositeArity,
                            "column " + std::to_string(source_col + 1) +
                                " splits into differing part counts");
            RawGrid widened;
            widened.source_name = g.source_name;
            widened.origin_row = g.origin_row;
            widened.origin_col = g.origin_col;
            for (std::size_t r = 0; r < g.n_rows(); ++r) {
                std::vector<Cell> row(g.cells[r].begin(), g.cells[r].begin() + col);
                auto mv = split_multivalued(g.at(r, col).text, delimiters);
                if (mv) {
                    for (const auto& p : mv->second) row.emplace_back(p);
                } else {
                    row.push_back(g.at(r, col));
                    for (std::size_t k = 1; k < arity; ++k) row.emplace_back();
                }
                row.insert(row.end(), g.cells[r].begin() + col + 1, g.cells[r].end());
                widened.cells.push_back(std::move(row));
            }
            g = std::move(widened);
            result.split_columns[source_col] = arity;
            col += arity;
        } else if (any_simple) {
            RawGrid duplicated;
            duplicated.source_name = g.source_name;
            duplicated.origin_row = g.origin_row;
            duplicated.origin_col = g.origin_col;
            for (std::size_t r = 0; r < g.n_rows(); ++r) {
                auto mv = split_multivalued(g.at(r, col).text, delimiters);
                if (mv) {
                    for (const auto& p : mv->second) {
                        auto row = g.cells[r];
                        row[col] = Cell(p);
                        duplicated.cells.push_back(std::move(row));
                    }
                } else {
                    duplicated.cells.push_back(g.cells[r]);
                }
            }
            g = std::move(duplicated);
            ++col;
        } else {
            ++col;
        }
        ++source_col;
    }
    return result;
}

} // namespace detail

/// Decomposes multivalued cells: same-domain parts expand into extra rows,
/// mixed-domain parts split the column.
inline RawGrid explode_multivalued(const RawGrid& grid, const std::string& delimiters) {
    return detail::explode_multivalued_impl(grid, delimiters).grid;
}

/// Prepends a synthetic col_1..col_n header row.
inline RawGrid synthesize_header(const RawGrid& grid) {
    RawGrid out;
    out.source_name = grid.source_name;
    out.origin_row = grid.origin_row;
    out.origin_col = grid.origin_col;
    std::vector<Cell> header;
    for (std::size_t c = 0; c < grid.n_cols(); ++c)
        header.emplace_back("col_" + std::to_string(c + 1));
    out.cells.push_back(std::move(header));
    for (const auto& row : grid.cells) out.cells.push_back(row);
    return out;
}

namespace detail {

struct UnpivotOutput {
    std::vector<std::string> names;
    std::vector<std::vector<std::string>> rows;
    std::vector<HierarchyHint> hints;
};

inline UnpivotOutput unpivot_cross_1(const RawGrid& grid,
                                     const std::optional<CrossNames>& names) {
    if (grid.n_rows() < 2 || grid.n_cols() < 2)
        throw Error(ErrorKind::NotACrossTable,
                    "grid is too small to hold rails and an interior");
    UnpivotOutput out;
    std::string row_dim = "row", col_dim = "column", value = "value";
    if (names) {
        row_dim = names->row_dim;
        col_dim = names->col_dim;
        value = names->value;
    } else {
        const std::string& corner = grid.at(0, 0).text;
        std::vector<std::string> parts;
        std::size_t start = 0;
        while (start <= corner.size()) {
            auto pos = corner.find('/', start);
            std::string part =
                trim(std::string_view(corner).substr(start, pos == std::string::npos
                                                                ? corner.size() - start
                                                                : pos - start));
            if (!part.empty()) parts.push_back(slug(part));
            if (pos == std::string::npos) break;
            start = pos + 1;
        }
        if (parts.size() >= 1) row_dim = parts[0];
        if (parts.size() >= 2) col_dim = parts[1];
    }
    out.names = {row_dim, col_dim, value};
    for (std::size_t r = 1; r < grid.n_rows(); ++r)
        for (std::size_t c = 1; c < grid.n_cols(); ++c) {
            const Cell& cell = grid.at(r, c);
            if (cell.is_empty()) continue;
            out.rows.push_back({grid.at(r, 0).text, grid.at(0, c).text, cell.text});
        }
    return out;
}

inline UnpivotOutput unpivot_cross_2(const RawGrid& grid) {
    if (grid.n_rows() < 3 || grid.n_cols() < 2)
        throw Error(ErrorKind::NotACrossTable,
                    "grid is too small for a two-level column rail");
    UnpivotOutput out;
    std::string upper_name = slug(grid.at(0, 0).text);
    std::string lower_name = slug(grid.at(1, 0).text);
    if (upper_name.empty()) upper_name = "level_1";
    if (lower_name.empty()) lower_name = "level_2";
    out.names = {"row", upper_name, lower_name, "value"};

    std::vector<std::string> upper;
    std::string fill;
    for (std::size_t c = 1; c < grid.n_cols(); ++c) {
        const std::string& u = grid.at(0, c).text;
        if (!u.empty()) fill = u;
        upper.push_back(fill);
    }
    for (std::size_t r = 2; r < grid.n_rows(); ++r)
        for (std::size_t c = 1; c < grid.n_cols(); ++c) {
            const Cell& cell = grid.at(r, c);
            if (cell.is_empty()) continue;
            out.rows.push_back(
                {grid.at(r, 0).text, upper[c - 1], grid.at(1, c).text, cell.text});
        }
    out.hints.push_back(HierarchyHint{{upper_name, lower_name}});
    return out;
}

} // namespace detail

/// Emits one canonical row per non-empty interior cell. Two-level column
/// rails are recognized automatically and produce one attribute per rail
/// level, named from the rail-name cells in column 0.
inline CanonicalTable unpivot_cross(const RawGrid& grid,
                                    const std::optional<CrossNames>& names = std::nullopt) {
    detail::UnpivotOutput out;
    if (!names && detail::detect_cross_2(grid)) out = detail::unpivot_cross_2(grid);
    else out = detail::unpivot_cross_1(grid, names);
    return CanonicalTable(out.names, std::move(out.rows),
                          {grid.source_name, {"unpivot_cross"}});
}

namespace detail {

struct TransformState {
    RawGrid grid;
    std::vector<std::string> names;
    bool names_known = false;
    std::vector<HierarchyHint> hints;
};

inline bool is_super_shape_row(const RawGrid& g, std::size_t r) {
    if (g.n_cols() < 2 || g.at(r, 0).is_empty()) return false;
    for (std::size_t c = 1; c < g.n_cols(); ++c)
        if (!g.at(r, c).is_empty()) return false;
    return true;
}

/// Converts runs of label-only rows into leading super_row_1..k columns,
/// filled down over the rows each run governs. A shallower run clears the
/// deeper levels of the previous one.
inline void super_rows_to_columns(TransformState& state) {
    RawGrid& g = state.grid;
    std::size_t k = 0, run = 0;
    for (std::size_t r = 0; r < g.n_rows(); ++r) {
        if (is_super_shape_row(g, r)) k = std::max(k, ++run);
        else run = 0;
    }
    if (k == 0) return;

    RawGrid out;
    out.source_name = g.source_name;
    out.origin_row = g.origin_row;
    out.origin_col = g.origin_col;
    std::vector<std::string> labels(k);
    std::size_t run_len = 0;
    for (std::size_t r = 0; r < g.n_rows(); ++r) {
        if (is_super_shape_row(g, r)) {
            if (run_len == 0)
                std::fill(labels.begin(), labels.end(), std::string());
            if (run_len < k) labels[run_len] = g.at(r, 0).text;
            ++run_len;
            continue;
        }
        run_len = 0;
        std::vector<Cell> row;
        row.reserve(k + g.n_cols());
        for (const auto& l : labels) row.emplace_back(l);
        for (const auto& cell : g.cells[r]) row.push_back(cell);
        out.cells.push_back(std::move(row));
    }
    g = std::move(out);

    std::vector<std::string> super_names;
    for (std::size_t i = 1; i <= k; ++i)
        super_names.push_back("super_row_" + std::to_string(i));
    if (state.names_known)
        state.names.insert(state.names.begin(), super_names.begin(), super_names.end());
    else {
        state.names = super_names;
        for (std::size_t c = 0; c < g.n_cols() - k; ++c)
            state.names.push_back("col_" + std::to_string(c + 1));
        state.names_known = true;
    }
    if (k >= 2) state.hints.push_back(HierarchyHint{super_names});
}

inline std::vector<std::string> normalize_plan(const RawGrid& grid,
                                               const TableTypology& ty) {
    std::vector<std::string> plan;
    bool row_listing = ty.structure == Structure::Listing && grid.n_rows() == 1 &&
                       grid.n_cols() > 1;
    if (ty.structure == Structure::Vertical || row_listing) plan.push_back("transpose");
    if (ty.header == HeaderKind::Simple &&
        ty.header_arrangement == HeaderArrangement::Duplicated)
        plan.push_back("collapse_duplicated_header");
    if (ty.header == HeaderKind::Simple &&
        ty.header_arrangement == HeaderArrangement::Distributed)
        plan.push_back("merge_distributed_header");
    if (ty.header == HeaderKind::Hierarchical && ty.structure != Structure::Cross)
        plan.push_back("flatten_hierarchical_header");
    if (ty.header != HeaderKind::None && ty.structure != Structure::Cross)
        plan.push_back("extract_header");
    plan.push_back("expand_merged");
    if (ty.structure == Structure::SuperRow) plan.push_back("super_rows_to_columns");
    if (ty.structure == Structure::Cross) plan.push_back("unpivot_cross");
    plan.push_back("explode_multivalued");
    if (ty.header == HeaderKind::None && ty.structure != Structure::Cross &&
        ty.structure != Structure::SuperRow)
        plan.push_back("synthesize_header");
    return plan;
}

inline void execute_step(TransformState& state, const std::string& step,
                         const TableTypology& ty, const TransformOptions& options) {
    RawGrid& g = state.grid;
    if (step == "transpose") {
        g = transpose(g);
    } else if (step == "collapse_duplicated_header") {
        g = collapse_duplicated_header(g);
    } else if (step == "merge_distributed_header") {
        g = merge_distributed_header(g);
    } else if (step == "flatten_hierarchical_header") {
        g = flatten_hierarchical_header(g);
    } else if (step == "extract_header") {
        if (g.n_rows() < 2)
            throw Error(ErrorKind::NormalizationFailed, "extract_header: no body rows");
        state.names.clear();
        for (std::size_t c = 0; c < g.n_cols(); ++c)
            state.names.push_back(g.at(0, c).text);
        state.names_known = true;
        g = sub_grid(g, 1, g.n_rows(), 0, g.n_cols());
    } else if (step == "expand_merged") {
        if (ty.structure == Structure::SuperRow)
            g = expand_merged_impl(
                g, [&g](std::size_t r) { return is_super_shape_row(g, r); });
        else
            g = expand_merged(g);
    } else if (step == "super_rows_to_columns") {
        super_rows_to_columns(state);
    } else if (step == "unpivot_cross") {
        UnpivotOutput out = ty.cross_header_levels == 2 ? unpivot_cross_2(g)
                                                        : unpivot_cross_1(g, std::nullopt);
        state.names = out.names;
        state.names_known = true;
        for (auto& h : out.hints) state.hints.push_back(std::move(h));
        RawGrid flat;
        flat.source_name = g.source_name;
        for (auto& row : out.rows) {
            std::vector<Cell> cells;
            cells.reserve(row.size());
            for (auto& v : row) cells.emplace_back(std::move(v));
            flat.cells.push_back(std::move(cells));
        }
        if (flat.cells.empty())
            flat.cells.emplace_back(std::vector<Cell>(state.names.size()));
        g = std::move(flat);
    } else if (step == "explode_multivalued") {
        ExplodeResult result = explode_multivalued_impl(g, options.multivalue_delimiters);
        if (!result.split_columns.empty() && state.names_known) {
            std::vector<std::string> renamed;
            for (std::size_t c = 0; c < state.names.size(); ++c) {
                auto it = result.split_columns.find(c);
                if (it == result.split_columns.end()) {
                    renamed.push_back(state.names[c]);
                } else {
                    for (std::size_t k = 1; k <= it->second; ++k)
                        renamed.push_back(state.names[c] + "_" + std::to_string(k));
                }
            }
            state.names = std::move(renamed);
        }
        g = std::move(result.grid);
    } else if (step == "synthesize_header") {
        if (!state.names_known) {
            state.names.clear();
            for (std::size_t c = 0; c < g.n_cols(); ++c)
                state.names.push_back("col_" + std::to_string(c + 1));
            state.names_known = true;
        }
    } else {
        throw Error(ErrorKind::NormalizationFailed, "unknown transform step '" + step + "'");
    }
}

inline NormalizeResult execute_plan(const RawGrid& grid, const TableTypology& ty,
                                    const std::vector<std::string>& plan,
                                    const TransformOptions& options) {
    if (ty.cell_content.count(CellContent::Nested))
        throw Error(ErrorKind::NestedTableUnsupported,
                    "a cell embeds another table; flattening is unsupported");

    TransformState state;
    state.grid = grid;
    for (const auto& step : plan) {
        try {
            execute_step(state, step, ty, options);
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::NormalizationFailed) throw;
            throw Error(ErrorKind::NormalizationFailed,
                        std::string("step '") + step + "': " + e.what());
        }
    }
    if (!state.names_known)
        throw Error(ErrorKind::NormalizationFailed, "no attribute names were derived");

    // Uniquify attribute names; renames propagate into the hints.
    std::map<std::string, std::string> rename;
    std::set<std::string> used;
    for (auto& name : state.names) {
        std::string base = name.empty() ? "col" : name;
        std::string candidate = base;
        int suffix = 2;
        while (used.count(candidate)) candidate = base + "_" + std::to_string(suffix++);
        if (candidate != name) rename[name] = candidate;
        used.insert(candidate);
        name = candidate;
    }
    std::vector<HierarchyHint> hints;
    for (auto& hint : state.hints) {
        bool valid = hint.attributes_coarse_to_fine.size() >= 2;
        for (auto& a : hint.attributes_coarse_to_fine) {
            auto it = rename.find(a);
            if (it != rename.end()) a = it->second;
            if (!used.count(a)) valid = false;
        }
        if (valid) hints.push_back(std::move(hint));
    }

    std::vector<std::vector<std::string>> rows;
    rows.reserve(state.grid.n_rows());
    for (const auto& row : state.grid.cells) {
        std::vector<std::string> values;
        values.reserve(row.size());
        for (const auto& cell : row) values.push_back(cell.text);
        rows.push_back(std::move(values));
    }
    CanonicalTable table(state.names, std::move(rows), {grid.source_name, plan});
    return NormalizeResult{std::move(table), std::move(hints)};
}

} // namespace detail

/// Rewrites a classified grid into a canonical table. The dispatch order is
/// fixed: transpose, header repairs, header flattening, merged-cell
/// expansion, super-row conversion, cross unpivoting, multivalue explosion,
/// header synthesis. The applied steps are recorded in the provenance log.
inline NormalizeResult normalize(const RawGrid& grid, const TableTypology& typology,
                                 const TransformOptions& options = {}) {
    auto plan = detail::normalize_plan(grid, typology);
    return detail::execute_plan(grid, typology, plan, options);
}

/// Re-runs a recorded transform log against a source grid. The typology is
/// re-derived with classify_table, so this reproduces normalize() exactly
/// for grids classified by this library.
inline NormalizeResult replay_transform_log(const RawGrid& grid,
                                            const std::vector<std::string>& log,
                                            const TransformOptions& options = {}) {
    TableTypology ty = classify_table(grid, ClassifyOptions{options.multivalue_delimiters});
    return detail::execute_plan(grid, ty, log, options);
}

} // namespace tabstar

#endif

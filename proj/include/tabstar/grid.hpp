#ifndef TABSTAR_GRID_HPP
#define TABSTAR_GRID_HPP

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "tabstar/error.hpp"
#include "tabstar/value.hpp"

namespace tabstar {

/// Detected parsing parameters of a delimited-text source.
struct Dialect {
    char field_delimiter = ',';
    char quote_character = '"';
    std::string encoding = "UTF-8"; // UTF-8 or Latin-1
    bool has_bom = false;

    bool operator==(const Dialect&) const = default;
};

/// One grid cell. Text is whitespace-trimmed at ingest. Spans larger than 1
/// can only come from HTML sources; the spanning value is replicated into
/// every covered position and the span recorded on each copy.
struct Cell {
    std::string text;
    int row_span = 1;
    int col_span = 1;

    Cell() = default;
    explicit Cell(std::string t, int rs = 1, int cs = 1)
        : text(std::move(t)), row_span(rs), col_span(cs) {}

    bool is_empty() const { return text.empty(); }
    bool operator==(const Cell&) const = default;
};

/// Dense rectangular grid of cells as read from a source, before any
/// interpretation. origin is the (row, col) offset within the source sheet.
struct RawGrid {
    std::vector<std::vector<Cell>> cells;
    std::string source_name;
    std::size_t origin_row = 0;
    std::size_t origin_col = 0;

    std::size_t n_rows() const { return cells.size(); }
    std::size_t n_cols() const { return cells.empty() ? 0 : cells[0].size(); }

    const Cell& at(std::size_t r, std::size_t c) const { return cells[r][c]; }
    Cell& at(std::size_t r, std::size_t c) { return cells[r][c]; }

    bool rectangular() const {
        for (const auto& row : cells)
            if (row.size() != n_cols()) return false;
        return true;
    }

    bool row_empty(std::size_t r) const {
        for (const auto& c : cells[r])
            if (!c.is_empty()) return false;
        return true;
    }

    bool col_empty(std::size_t c) const {
        for (const auto& row : cells)
            if (!row[c].is_empty()) return false;
        return true;
    }

    bool has_spans() const {
        for (const auto& row : cells)
            for (const auto& c : row)
                if (c.row_span > 1 || c.col_span > 1) return true;
        return false;
    }

    bool operator==(const RawGrid& other) const {
        return cells == other.cells;
    }
};

inline RawGrid transpose(const RawGrid& g) {
    RawGrid out;
    out.source_name = g.source_name;
    out.origin_row = g.origin_col;
    out.origin_col = g.origin_row;
    out.cells.assign(g.n_cols(), std::vector<Cell>(g.n_rows()));
    for (std::size_t r = 0; r < g.n_rows(); ++r)
        for (std::size_t c = 0; c < g.n_cols(); ++c) {
            Cell cell = g.at(r, c);
            std::swap(cell.row_span, cell.col_span);
            out.cells[c][r] = cell;
        }
    return out;
}

/// Copies the rectangle [r0, r1) x [c0, c1), adjusting the origin.
inline RawGrid sub_grid(const RawGrid& g, std::size_t r0, std::size_t r1,
                        std::size_t c0, std::size_t c1) {
    RawGrid out;
    out.source_name = g.source_name;
    out.origin_row = g.origin_row + r0;
    out.origin_col = g.origin_col + c0;
    for (std::size_t r = r0; r < r1; ++r) {
        std::vector<Cell> row;
        row.reserve(c1 - c0);
        for (std::size_t c = c0; c < c1; ++c) row.push_back(g.at(r, c));
        out.cells.push_back(std::move(row));
    }
    return out;
}

/// Convenience builder used throughout the tests: one string per cell.
inline RawGrid make_grid(std::vector<std::vector<std::string>> rows,
                         std::string source_name = "inline") {
    RawGrid g;
    g.source_name = std::move(source_name);
    std::size_t width = 0;
    for (const auto& r : rows) width = std::max(width, r.size());
    for (auto& r : rows) {
        std::vector<Cell> row;
        row.reserve(width);
        for (auto& v : r) row.emplace_back(trim(v));
        row.resize(width);
        g.cells.push_back(std::move(row));
    }
    return g;
}

} // namespace tabstar

#endif

#ifndef TABSTAR_INGEST_HPP
#define TABSTAR_INGEST_HPP

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tabstar/error.hpp"
#include "tabstar/grid.hpp"
#include "tabstar/value.hpp"

namespace tabstar {

enum class FormatHint { Csv, Tsv, Html };

namespace detail {

inline bool valid_utf8(std::string_view s) {
    std::size_t i = 0;
    while (i < s.size()) {
        unsigned char c = static_cast<unsigned char>(s[i]);
        std::size_t len;
        if (c < 0x80) len = 1;
        else if ((c & 0xE0) == 0xC0) len = 2;
        else if ((c & 0xF0) == 0xE0) len = 3;
        else if ((c & 0xF8) == 0xF0) len = 4;
        else return false;
        if (i + len > s.size()) return false;
        for (std::size_t k = 1; k < len; ++k)
            if ((static_cast<unsigned char>(s[i + k]) & 0xC0) != 0x80) return false;
        i += len;
    }
    return true;
}

inline std::string latin1_to_utf8(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (unsigned char c : s) {
        if (c < 0x80) {
            out.push_back(static_cast<char>(c));
        } else {
            out.push_back(static_cast<char>(0xC0 | (c >> 6)));
            out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
        }
    }
    return out;
}

/// Strips the BOM, rejects binary or UTF-16 input, and returns UTF-8 text.
inline std::string decode_bytes(std::string_view bytes, Dialect& dialect) {
    std::string_view body = bytes;
    if (body.size() >= 2) {
        unsigned char b0 = body[0], b1 = body[1];
        if ((b0 == 0xFF && b1 == 0xFE) || (b0 == 0xFE && b1 == 0xFF))
            throw Error(ErrorKind::UnreadableSource, "UTF-16 input is not supported");
    }
    if (body.size() >= 3 && static_cast<unsigned char>(body[0]) == 0xEF &&
        static_cast<unsigned char>(body[1]) == 0xBB &&
        static_cast<unsigned char>(body[2]) == 0xBF) {
        dialect.has_bom = true;
        body.remove_prefix(3);
    }
    if (body.find('\0') != std::string_view::npos)
        throw Error(ErrorKind::UnreadableSource, "input contains NUL bytes");
    if (valid_utf8(body)) {
        dialect.encoding = "UTF-8";
        return std::string(body);
    }
    dialect.encoding = "Latin-1";
    return latin1_to_utf8(body);
}

/// Counts fields of one line under a candidate delimiter, ignoring
/// delimiters inside double quotes.
inline std::size_t count_fields(std::string_view line, char delim) {
    std::size_t fields = 1;
    bool in_quote = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (c == '"') {
            if (in_quote && i + 1 < line.size() && line[i + 1] == '"') { ++i; continue; }
            in_quote = !in_quote;
        } else if (c == delim && !in_quote) {
            ++fields;
        }
    }
    return fields;
}

} // namespace detail

/// Sniffs the field delimiter over the first 20 lines: the candidate with the
/// most consistent per-line field count wins; consistency ties prefer higher
/// field counts, then the order , ; \t |.
inline Dialect sniff_dialect(std::string_view text) {
    Dialect d;
    std::vector<std::string_view> lines;
    std::size_t pos = 0;
    while (pos < text.size() && lines.size() < 20) {
        std::size_t nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.size() - pos
                                                                              : nl - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (!line.empty()) lines.push_back(line);
        if (nl == std::string_view::npos) break;
        pos = nl + 1;
    }
    if (lines.empty()) return d;

    const char candidates[4] = {',', ';', '\t', '|'};
    bool best_splits = false;
    double best_consistency = -1.0;
    std::size_t best_count = 0;
    for (char cand : candidates) {
        std::map<std::size_t, std::size_t> freq;
        for (auto line : lines) freq[detail::count_fields(line, cand)]++;
        std::size_t modal_count = 0, modal_freq = 0;
        for (auto [count, f] : freq) {
            if (f > modal_freq || (f == modal_freq && count > modal_count)) {
                modal_freq = f;
                modal_count = count;
            }
        }
        double consistency = static_cast<double>(modal_freq) / lines.size();
        // A delimiter that never splits anything is "perfectly consistent";
        // candidates that actually produce fields always rank above it.
        bool splits = modal_count > 1;
        bool better = false;
        if (splits != best_splits) better = splits;
        else if (consistency != best_consistency) better = consistency > best_consistency;
        else better = modal_count > best_count;
        if (better) {
            best_splits = splits;
            best_consistency = consistency;
            best_count = modal_count;
            d.field_delimiter = cand;
        }
    }
    return d;
}

namespace detail {

/// RFC-4180 state machine. Quoted fields may contain delimiters, doubled
/// quotes and embedded line breaks. Accepts LF and CRLF row endings.
inline std::vector<std::vector<std::string>> parse_delimited(std::string_view text,
                                                             const Dialect& dialect) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool in_quote = false;
    bool field_was_quoted = false;
    const char delim = dialect.field_delimiter;
    const char quote = dialect.quote_character;

    auto end_field = [&] {
        row.push_back(field_was_quoted ? field : trim(field));
        field.clear();
        field_was_quoted = false;
    };
    auto end_row = [&] {
        end_field();
        rows.push_back(std::move(row));
        row.clear();
    };

    std::size_t i = 0;
    while (i < text.size()) {
        char c = text[i];
        if (in_quote) {
            if (c == quote) {
                if (i + 1 < text.size() && text[i + 1] == quote) {
                    field.push_back(quote);
                    ++i;
                } else {
                    in_quote = false;
                }
            } else {
                field.push_back(c);
            }
        } else if (c == quote && trim(field).empty() && !field_was_quoted) {
            in_quote = true;
            field_was_quoted = true;
            field.clear();
        } else if (c == delim) {
            end_field();
        } else if (c == '\n') {
            end_row();
        } else if (c == '\r') {
            if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
            end_row();
        } else {
            field.push_back(c);
        }
        ++i;
    }
    if (!field.empty() || field_was_quoted || !row.empty()) end_row();

    // Quoted fields keep interior whitespace but outer trim still applies to
    // the value as stored in the grid.
    for (auto& r : rows)
        for (auto& f : r) f = trim(f);
    return rows;
}

/// Equalizes CSV row widths. Rows are padded with empty cells up to the modal
/// width; a row carrying non-empty cells beyond the modal width cannot be
/// repaired and raises RaggedRows.
inline RawGrid rows_to_grid(std::vector<std::vector<std::string>>&& rows,
                            const std::string& source_name) {
    // Drop a trailing fully-empty record produced by a final newline.
    while (!rows.empty()) {
        bool all_empty = std::all_of(rows.back().begin(), rows.back().end(),
                                     [](const std::string& s) { return s.empty(); });
        if (all_empty) rows.pop_back();
        else break;
    }
    if (rows.empty()) throw Error(ErrorKind::EmptySource, source_name + ": no data rows");

    std::map<std::size_t, std::size_t> width_freq;
    for (const auto& r : rows) width_freq[r.size()]++;
    std::size_t modal_width = 0, modal_freq = 0;
    for (auto [w, f] : width_freq) {
        if (f > modal_freq || (f == modal_freq && w > modal_width)) {
            modal_freq = f;
            modal_width = w;
        }
    }

    RawGrid g;
    g.source_name = source_name;
    for (auto& r : rows) {
        while (r.size() > modal_width) {
            if (!r.back().empty())
                throw Error(ErrorKind::RaggedRows,
                            source_name + ": row with " + std::to_string(r.size()) +
                                " fields exceeds the modal width " +
                                std::to_string(modal_width));
            r.pop_back();
        }
        std::vector<Cell> row;
        row.reserve(modal_width);
        for (auto& v : r) row.emplace_back(std::move(v));
        row.resize(modal_width);
        g.cells.push_back(std::move(row));
    }
    return g;
}

// --- minimal HTML table subset: table/tr/td/th with rowspan/colspan ---

struct HtmlTag {
    std::string name;      // lowercased
    bool closing = false;
    std::string attrs;     // raw attribute text
    std::size_t end = 0;   // index just past '>'
};

inline std::optional<HtmlTag> parse_tag(std::string_view text, std::size_t pos) {
    if (pos >= text.size() || text[pos] != '<') return std::nullopt;
    std::size_t close = text.find('>', pos);
    if (close == std::string_view::npos) return std::nullopt;
    std::string_view inner = text.substr(pos + 1, close - pos - 1);
    HtmlTag tag;
    tag.end = close + 1;
    if (!inner.empty() && inner[0] == '/') {
        tag.closing = true;
        inner.remove_prefix(1);
    }
    std::size_t name_end = 0;
    while (name_end < inner.size() &&
           (std::isalnum(static_cast<unsigned char>(inner[name_end]))))
        ++name_end;
    if (name_end == 0) return std::nullopt;
    tag.name = to_lower(inner.substr(0, name_end));
    tag.attrs = std::string(inner.substr(name_end));
    return tag;
}

inline int parse_span_attr(const std::string& attrs, const std::string& key) {
    std::string lower = to_lower(attrs);
    std::size_t pos = lower.find(key);
    if (pos == std::string::npos) return 1;
    pos = lower.find('=', pos + key.size());
    if (pos == std::string::npos) return 1;
    ++pos;
    while (pos < lower.size() && (lower[pos] == ' ' || lower[pos] == '"' || lower[pos] == '\''))
        ++pos;
    int value = 0;
    while (pos < lower.size() && std::isdigit(static_cast<unsigned char>(lower[pos]))) {
        value = value * 10 + (lower[pos] - '0');
        ++pos;
    }
    return value >= 1 ? value : 1;
}

inline std::string decode_entities(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) {
        if (s[i] == '&') {
            auto semi = s.find(';', i);
            if (semi != std::string_view::npos && semi - i <= 6) {
                std::string ent = to_lower(s.substr(i + 1, semi - i - 1));
                if (ent == "amp") { out += '&'; i = semi + 1; continue; }
                if (ent == "lt") { out += '<'; i = semi + 1; continue; }
                if (ent == "gt") { out += '>'; i = semi + 1; continue; }
                if (ent == "quot") { out += '"'; i = semi + 1; continue; }
                if (ent == "apos" || ent == "#39") { out += '\''; i = semi + 1; continue; }
                if (ent == "nbsp") { out += ' '; i = semi + 1; continue; }
            }
        }
        out += s[i++];
    }
    return out;
}

/// Inner text of a markup fragment: tags stripped, entities decoded,
/// whitespace runs collapsed.
inline std::string html_inner_text(std::string_view markup) {
    std::string no_tags;
    bool in_tag = false;
    for (char c : markup) {
        if (c == '<') in_tag = true;
        else if (c == '>') in_tag = false;
        else if (!in_tag) no_tags += c;
    }
    std::string decoded = decode_entities(no_tags);
    std::string out;
    bool prev_space = false;
    for (char c : decoded) {
        bool space = std::isspace(static_cast<unsigned char>(c)) != 0;
        if (space) {
            if (!prev_space && !out.empty()) out += ' ';
        } else {
            out += c;
        }
        prev_space = space;
    }
    return trim(out);
}

struct HtmlCell {
    std::string text;
    int row_span = 1;
    int col_span = 1;
};

/// Extracts the top-level <table> segments of a document. Tables nested in
/// cells stay inside their enclosing segment.
inline std::vector<std::string_view> top_level_tables(std::string_view text) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    int depth = 0;
    std::size_t start = 0;
    while (i < text.size()) {
        if (text[i] == '<') {
            auto tag = parse_tag(text, i);
            if (tag && tag->name == "table") {
                if (!tag->closing) {
                    if (depth == 0) start = i;
                    ++depth;
                } else if (depth > 0) {
                    --depth;
                    if (depth == 0) out.push_back(text.substr(start, tag->end - start));
                }
                i = tag->end;
                continue;
            }
        }
        ++i;
    }
    return out;
}

inline RawGrid parse_html_table(std::string_view table_markup, const std::string& source_name) {
    // Collect rows of HtmlCell, tracking nested tables: a td that contains a
    // <table> keeps its raw markup so the nested structure stays detectable.
    std::vector<std::vector<HtmlCell>> rows;
    std::size_t i = 0;
    // Skip the opening <table ...> tag.
    if (auto t = parse_tag(table_markup, table_markup.find('<')); t) i = t->end;

    std::optional<std::vector<HtmlCell>> current_row;
    while (i < table_markup.size()) {
        if (table_markup[i] != '<') { ++i; continue; }
        auto tag = parse_tag(table_markup, i);
        if (!tag) { ++i; continue; }
        if (tag->name == "tr") {
            if (!tag->closing) {
                if (current_row) rows.push_back(std::move(*current_row));
                current_row.emplace();
            } else if (current_row) {
                rows.push_back(std::move(*current_row));
                current_row.reset();
            }
            i = tag->end;
        } else if ((tag->name == "td" || tag->name == "th") && !tag->closing) {
            HtmlCell cell;
            cell.row_span = parse_span_attr(tag->attrs, "rowspan");
            cell.col_span = parse_span_attr(tag->attrs, "colspan");
            // Find the matching close, skipping over nested tables.
            std::size_t body_start = tag->end;
            std::size_t j = body_start;
            int table_depth = 0;
            std::size_t body_end = table_markup.size();
            while (j < table_markup.size()) {
                if (table_markup[j] == '<') {
                    auto t2 = parse_tag(table_markup, j);
                    if (t2) {
                        if (t2->name == "table") {
                            if (t2->closing && table_depth == 0) { body_end = j; break; }
                            table_depth += t2->closing ? -1 : 1;
                        } else if (table_depth == 0 &&
                                   (t2->name == "td" || t2->name == "th" || t2->name == "tr")) {
                            body_end = j;
                            break;
                        }
                        j = t2->end;
                        continue;
                    }
                }
                ++j;
            }
            std::string_view body = table_markup.substr(body_start, body_end - body_start);
            if (to_lower(std::string(body)).find("<table") != std::string::npos)
                cell.text = trim(body); // keep markup: nested table evidence
            else
                cell.text = html_inner_text(body);
            if (!current_row) current_row.emplace();
            current_row->push_back(std::move(cell));
            i = body_end;
        } else {
            i = tag->end;
        }
    }
    if (current_row) rows.push_back(std::move(*current_row));

    // Lay out with span expansion: the merged value is replicated into every
    // covered position; every copy records the original spans.
    std::vector<std::vector<Cell>> grid;
    auto ensure = [&](std::size_t r, std::size_t c) {
        if (grid.size() <= r) grid.resize(r + 1);
        for (auto& row : grid)
            if (row.size() <= c) row.resize(c + 1, Cell{"", 0, 0}); // 0 marks unoccupied
        return true;
    };
    std::size_t out_r = 0;
    for (const auto& row : rows) {
        std::size_t out_c = 0;
        for (const auto& cell : row) {
            ensure(out_r, out_c);
            while (out_c < grid[out_r].size() && grid[out_r][out_c].row_span != 0) {
                ++out_c;
                ensure(out_r, out_c);
            }
            for (int dr = 0; dr < cell.row_span; ++dr)
                for (int dc = 0; dc < cell.col_span; ++dc) {
                    ensure(out_r + dr, out_c + dc);
                    grid[out_r + dr][out_c + dc] =
                        Cell{cell.text, cell.row_span, cell.col_span};
                }
            out_c += cell.col_span;
        }
        ++out_r;
    }

    RawGrid g;
    g.source_name = source_name;
    std::size_t width = 0;
    for (const auto& row : grid) width = std::max(width, row.size());
    for (auto& row : grid) {
        std::vector<Cell> out_row;
        out_row.reserve(width);
        for (auto& c : row) {
            if (c.row_span == 0) c = Cell{};
            out_row.push_back(std::move(c));
        }
        out_row.resize(width);
        g.cells.push_back(std::move(out_row));
    }
    return g;
}

inline bool looks_like_html(std::string_view text) {
    return to_lower(std::string(text.substr(0, std::min<std::size_t>(text.size(), 4096))))
               .find("<table") != std::string::npos;
}

} // namespace detail

/// Reads a byte buffer into one RawGrid per table found. Format comes from
/// the hint when given, otherwise HTML is recognized by tag presence and
/// delimited text is sniffed.
inline std::vector<RawGrid> read_source(std::string_view bytes,
                                        std::optional<FormatHint> format_hint = std::nullopt,
                                        const std::string& source_name = "source",
                                        Dialect* dialect_out = nullptr) {
    if (bytes.empty()) throw Error(ErrorKind::EmptySource, source_name + ": empty input");
    Dialect dialect;
    std::string text = detail::decode_bytes(bytes, dialect);

    bool html = format_hint ? *format_hint == FormatHint::Html
                            : detail::looks_like_html(text);
    std::vector<RawGrid> grids;
    if (html) {
        auto tables = detail::top_level_tables(text);
        if (tables.empty())
            throw Error(ErrorKind::EmptySource, source_name + ": no <table> element");
        int index = 1;
        for (auto markup : tables) {
            std::string name = tables.size() == 1
                                   ? source_name
                                   : source_name + "#" + std::to_string(index++);
            grids.push_back(detail::parse_html_table(markup, name));
        }
    } else {
        if (format_hint && *format_hint == FormatHint::Tsv) dialect.field_delimiter = '\t';
        else dialect = [&] {
            Dialect d = sniff_dialect(text);
            d.encoding = dialect.encoding;
            d.has_bom = dialect.has_bom;
            return d;
        }();
        auto rows = detail::parse_delimited(text, dialect);
        grids.push_back(detail::rows_to_grid(std::move(rows), source_name));
    }

    bool any_content = false;
    for (const auto& g : grids)
        for (std::size_t r = 0; r < g.n_rows() && !any_content; ++r)
            if (!g.row_empty(r)) any_content = true;
    if (!any_content)
        throw Error(ErrorKind::EmptySource, source_name + ": no non-blank cell");
    if (dialect_out) *dialect_out = dialect;
    return grids;
}

namespace detail {

inline RawGrid tighten(const RawGrid& g) {
    std::size_t r0 = 0, r1 = g.n_rows(), c0 = 0, c1 = g.n_cols();
    while (r0 < r1 && g.row_empty(r0)) ++r0;
    while (r1 > r0 && g.row_empty(r1 - 1)) --r1;
    while (c0 < c1) {
        bool empty = true;
        for (std::size_t r = r0; r < r1 && empty; ++r)
            if (!g.at(r, c0).is_empty()) empty = false;
        if (!empty) break;
        ++c0;
    }
    while (c1 > c0) {
        bool empty = true;
        for (std::size_t r = r0; r < r1 && empty; ++r)
            if (!g.at(r, c1 - 1).is_empty()) empty = false;
        if (!empty) break;
        --c1;
    }
    return sub_grid(g, r0, r1, c0, c1);
}

inline void split_tables_rec(const RawGrid& g, std::vector<RawGrid>& out) {
    RawGrid t = tighten(g);
    if (t.n_rows() == 0 || t.n_cols() == 0) return;

    // Horizontal bands separated by maximal runs of fully-empty rows.
    std::vector<std::pair<std::size_t, std::size_t>> bands;
    std::size_t r = 0;
    while (r < t.n_rows()) {
        if (t.row_empty(r)) { ++r; continue; }
        std::size_t start = r;
        while (r < t.n_rows() && !t.row_empty(r)) ++r;
        bands.emplace_back(start, r);
    }
    if (bands.size() > 1) {
        for (auto [a, b] : bands) split_tables_rec(sub_grid(t, a, b, 0, t.n_cols()), out);
        return;
    }

    // Vertical blocks separated by fully-empty columns.
    std::vector<std::pair<std::size_t, std::size_t>> blocks;
    std::size_t c = 0;
    while (c < t.n_cols()) {
        if (t.col_empty(c)) { ++c; continue; }
        std::size_t start = c;
        while (c < t.n_cols() && !t.col_empty(c)) ++c;
        blocks.emplace_back(start, c);
    }
    if (blocks.size() > 1) {
        for (auto [a, b] : blocks) split_tables_rec(sub_grid(t, 0, t.n_rows(), a, b), out);
        return;
    }
    out.push_back(std::move(t));
}

} // namespace detail

/// Partitions a grid at runs of fully-empty rows and columns, recursively,
/// returning tightened sub-grids ordered top-to-bottom then left-to-right.
inline std::vector<RawGrid> split_tables(const RawGrid& grid) {
    std::vector<RawGrid> out;
    detail::split_tables_rec(grid, out);
    std::stable_sort(out.begin(), out.end(), [](const RawGrid& a, const RawGrid& b) {
        if (a.origin_row != b.origin_row) return a.origin_row < b.origin_row;
        return a.origin_col < b.origin_col;
    });
    return out;
}

} // namespace tabstar

#endif

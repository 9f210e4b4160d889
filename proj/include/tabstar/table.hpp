#ifndef TABSTAR_TABLE_HPP
#define TABSTAR_TABLE_HPP

#include <set>
#include <string>
#include <vector>

#include "tabstar/error.hpp"
#include "tabstar/grid.hpp"

namespace tabstar {

/// Normalized one-dimensional horizontal table: named attributes on top, one
/// tuple of string values per row. The empty string stands for a missing
/// value. Construction validates the invariants and drops fully-empty rows.
class CanonicalTable {
public:
    struct Provenance {
        std::string source_name;
        std::vector<std::string> transform_log;
        bool operator==(const Provenance&) const = default;
    };

    CanonicalTable() = default;

    CanonicalTable(std::vector<std::string> attributes,
                   std::vector<std::vector<std::string>> rows,
                   Provenance provenance = {})
        : attributes_(std::move(attributes)),
          provenance_(std::move(provenance)) {
        std::set<std::string> seen;
        for (const auto& a : attributes_) {
            if (a.empty())
                throw Error(ErrorKind::InvariantViolation, "empty attribute name");
            if (!seen.insert(a).second)
                throw Error(ErrorKind::InvariantViolation,
                            "duplicate attribute name '" + a + "'");
        }
        rows_.reserve(rows.size());
        for (auto& r : rows) {
            if (r.size() != attributes_.size())
                throw Error(ErrorKind::InvariantViolation,
                            "row width " + std::to_string(r.size()) +
                                " does not match attribute count " +
                                std::to_string(attributes_.size()));
            bool all_empty = true;
            for (const auto& v : r)
                if (!v.empty()) { all_empty = false; break; }
            if (!all_empty) rows_.push_back(std::move(r));
        }
    }

    const std::vector<std::string>& attributes() const { return attributes_; }
    const std::vector<std::vector<std::string>>& rows() const { return rows_; }
    const Provenance& provenance() const { return provenance_; }

    std::size_t n_rows() const { return rows_.size(); }
    std::size_t n_attributes() const { return attributes_.size(); }

    /// Index of an attribute; throws UnknownAttribute when absent.
    std::size_t attribute_index(const std::string& name) const {
        for (std::size_t i = 0; i < attributes_.size(); ++i)
            if (attributes_[i] == name) return i;
        throw Error(ErrorKind::UnknownAttribute, "no attribute named '" + name + "'");
    }

    bool has_attribute(const std::string& name) const {
        for (const auto& a : attributes_)
            if (a == name) return true;
        return false;
    }

    const std::string& value(std::size_t row, std::size_t col) const {
        return rows_[row][col];
    }

    bool operator==(const CanonicalTable& other) const {
        return attributes_ == other.attributes_ && rows_ == other.rows_;
    }

private:
    std::vector<std::string> attributes_;
    std::vector<std::vector<std::string>> rows_;
    Provenance provenance_;
};

/// Ordered attribute names from coarse to fine, harvested from hierarchical
/// headers during normalization.
struct HierarchyHint {
    std::vector<std::string> attributes_coarse_to_fine;

    bool operator==(const HierarchyHint&) const = default;
};

/// RFC-4180 field encoding: quote when the value contains the delimiter, a
/// quote, or a line break; embedded quotes are doubled.
inline std::string csv_escape(const std::string& value, char delimiter = ',') {
    bool needs_quote = value.find(delimiter) != std::string::npos ||
                       value.find('"') != std::string::npos ||
                       value.find('\n') != std::string::npos ||
                       value.find('\r') != std::string::npos;
    if (!needs_quote) return value;
    std::string out = "\"";
    for (char c : value) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += '"';
    return out;
}

/// Serializes a canonical table as UTF-8, LF-terminated CSV.
inline std::string to_csv(const CanonicalTable& table) {
    std::string out;
    for (std::size_t i = 0; i < table.n_attributes(); ++i) {
        if (i) out += ',';
        out += csv_escape(table.attributes()[i]);
    }
    out += '\n';
    for (const auto& row : table.rows()) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += ',';
            out += csv_escape(row[i]);
        }
        out += '\n';
    }
    return out;
}

} // namespace tabstar

#endif

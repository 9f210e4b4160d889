#ifndef TABSTAR_PROFILE_HPP
#define TABSTAR_PROFILE_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <regex>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tabstar/error.hpp"
#include "tabstar/table.hpp"
#include "tabstar/value.hpp"

namespace tabstar {

enum class ColumnKind {
    Identifier,
    Boolean,
    Nominal,
    Ordinal,
    Interval,
    Ratio,
    TemporalYear,
    TemporalDate,
    Text,
};

inline const char* to_string(ColumnKind k) {
    switch (k) {
    case ColumnKind::Identifier: return "identifier";
    case ColumnKind::Boolean: return "boolean";
    case ColumnKind::Nominal: return "nominal";
    case ColumnKind::Ordinal: return "ordinal";
    case ColumnKind::Interval: return "interval";
    case ColumnKind::Ratio: return "ratio";
    case ColumnKind::TemporalYear: return "temporal_year";
    case ColumnKind::TemporalDate: return "temporal_date";
    case ColumnKind::Text: return "text";
    }
    return "?";
}

struct ColumnProfile {
    std::string attribute;
    std::size_t column_index = 0;
    ColumnKind kind = ColumnKind::Text;
    std::size_t distinct_count = 0;
    std::size_t null_count = 0;
    std::size_t row_count = 0;
    double numeric_fraction = 0.0;
    std::optional<double> min;
    std::optional<double> max;
};

enum class Aggregation { Sum, Avg, Min, Max, Count };

inline const char* to_string(Aggregation a) {
    switch (a) {
    case Aggregation::Sum: return "sum";
    case Aggregation::Avg: return "avg";
    case Aggregation::Min: return "min";
    case Aggregation::Max: return "max";
    case Aggregation::Count: return "count";
    }
    return "?";
}

inline std::optional<Aggregation> parse_aggregation(const std::string& s) {
    if (s == "sum") return Aggregation::Sum;
    if (s == "avg") return Aggregation::Avg;
    if (s == "min") return Aggregation::Min;
    if (s == "max") return Aggregation::Max;
    if (s == "count") return Aggregation::Count;
    return std::nullopt;
}

/// Canonical aggregation listing order used in reports and serialization.
inline std::vector<Aggregation> sorted_aggregations(const std::set<Aggregation>& aggs) {
    std::vector<Aggregation> order = {Aggregation::Sum, Aggregation::Avg, Aggregation::Min,
                                      Aggregation::Max, Aggregation::Count};
    std::vector<Aggregation> out;
    for (auto a : order)
        if (aggs.count(a)) out.push_back(a);
    return out;
}

// ---------------------------------------------------------------------------
// Derived-measure formulas: + - * /, parentheses, numeric literals and
// attribute references.
// ---------------------------------------------------------------------------

namespace detail {

struct FormulaNode {
    enum class Kind { Number, Attribute, Add, Sub, Mul, Div, Neg } kind;
    double number = 0.0;
    std::size_t attribute_index = 0; // column index in the profiled table
    std::unique_ptr<FormulaNode> lhs, rhs;
};

class FormulaParser {
public:
    FormulaParser(const std::string& text, const std::vector<ColumnProfile>& profiles)
        : text_(text), profiles_(profiles) {}

    std::unique_ptr<FormulaNode> parse(std::set<std::size_t>& referenced) {
        referenced_ = &referenced;
        auto node = parse_expr();
        skip_ws();
        if (pos_ != text_.size())
            throw Error(ErrorKind::MalformedFormula,
                        "unexpected input at offset " + std::to_string(pos_), pos_);
        return node;
    }

private:
    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])))
            ++pos_;
    }

    std::unique_ptr<FormulaNode> parse_expr() {
        auto lhs = parse_term();
        while (true) {
            skip_ws();
            if (pos_ >= text_.size() || (text_[pos_] != '+' && text_[pos_] != '-')) break;
            char op = text_[pos_++];
            auto rhs = parse_term();
            auto node = std::make_unique<FormulaNode>();
            node->kind = op == '+' ? FormulaNode::Kind::Add : FormulaNode::Kind::Sub;
            node->lhs = std::move(lhs);
            node->rhs = std::move(rhs);
            lhs = std::move(node);
        }
        return lhs;
    }

    std::unique_ptr<FormulaNode> parse_term() {
        auto lhs = parse_factor();
        while (true) {
            skip_ws();
            if (pos_ >= text_.size() || (text_[pos_] != '*' && text_[pos_] != '/')) break;
            char op = text_[pos_++];
            auto rhs = parse_factor();
            auto node = std::make_unique<FormulaNode>();
            node->kind = op == '*' ? FormulaNode::Kind::Mul : FormulaNode::Kind::Div;
            node->lhs = std::move(lhs);
            node->rhs = std::move(rhs);
            lhs = std::move(node);
        }
        return lhs;
    }

    std::unique_ptr<FormulaNode> parse_factor() {
        skip_ws();
        if (pos_ >= text_.size())
            throw Error(ErrorKind::MalformedFormula,
                        "expected operand at offset " + std::to_string(pos_), pos_);
        char c = text_[pos_];
        if (c == '-') {
            ++pos_;
            auto node = std::make_unique<FormulaNode>();
            node->kind = FormulaNode::Kind::Neg;
            node->lhs = parse_factor();
            return node;
        }
        if (c == '(') {
            ++pos_;
            auto node = parse_expr();
            skip_ws();
            if (pos_ >= text_.size() || text_[pos_] != ')')
                throw Error(ErrorKind::MalformedFormula,
                            "expected ')' at offset " + std::to_string(pos_), pos_);
            ++pos_;
            return node;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            std::size_t start = pos_;
            while (pos_ < text_.size() &&
                   (std::isdigit(static_cast<unsigned char>(text_[pos_])) ||
                    text_[pos_] == '.'))
                ++pos_;
            if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
                ++pos_;
                if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
                while (pos_ < text_.size() &&
                       std::isdigit(static_cast<unsigned char>(text_[pos_])))
                    ++pos_;
            }
            auto parsed = parse_number(text_.substr(start, pos_ - start));
            if (!parsed)
                throw Error(ErrorKind::MalformedFormula,
                            "bad numeric literal at offset " + std::to_string(start), start);
            auto node = std::make_unique<FormulaNode>();
            node->kind = FormulaNode::Kind::Number;
            node->number = *parsed;
            return node;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t start = pos_;
            while (pos_ < text_.size() &&
                   (std::isalnum(static_cast<unsigned char>(text_[pos_])) ||
                    text_[pos_] == '_'))
                ++pos_;
            std::string name = text_.substr(start, pos_ - start);
            auto node = std::make_unique<FormulaNode>();
            node->kind = FormulaNode::Kind::Attribute;
            node->attribute_index = resolve(name, start);
            referenced_->insert(node->attribute_index);
            return node;
        }
        throw Error(ErrorKind::MalformedFormula,
                    std::string("unexpected character '") + c + "' at offset " +
                        std::to_string(pos_),
                    pos_);
    }

    /// Identifiers match attributes exactly, or with '_' standing in for ' '.
    std::size_t resolve(const std::string& name, std::size_t offset) {
        std::string spaced = name;
        std::replace(spaced.begin(), spaced.end(), '_', ' ');
        for (const auto& p : profiles_)
            if (p.attribute == name || p.attribute == spaced) {
                if (p.numeric_fraction < 0.95)
                    throw Error(ErrorKind::UnknownAttributeInFormula,
                                "attribute '" + p.attribute + "' is not numeric");
                return p.column_index;
            }
        throw Error(ErrorKind::UnknownAttributeInFormula,
                    "no attribute matches '" + name + "' (offset " +
                        std::to_string(offset) + ")");
    }

    const std::string& text_;
    const std::vector<ColumnProfile>& profiles_;
    std::size_t pos_ = 0;
    std::set<std::size_t>* referenced_ = nullptr;
};

inline std::optional<double>
eval_formula(const FormulaNode& node,
             const std::function<std::optional<double>(std::size_t)>& attribute_value) {
    using K = FormulaNode::Kind;
    switch (node.kind) {
    case K::Number: return node.number;
    case K::Attribute: return attribute_value(node.attribute_index);
    case K::Neg: {
        auto v = eval_formula(*node.lhs, attribute_value);
        return v ? std::optional<double>(-*v) : std::nullopt;
    }
    default: {
        auto l = eval_formula(*node.lhs, attribute_value);
        auto r = eval_formula(*node.rhs, attribute_value);
        if (!l || !r) return std::nullopt;
        switch (node.kind) {
        case K::Add: return *l + *r;
        case K::Sub: return *l - *r;
        case K::Mul: return *l * *r;
        case K::Div: return *l / *r;
        default: return std::nullopt;
        }
    }
    }
}

} // namespace detail

/// Parsed arithmetic expression over numeric attributes. Shared immutable
/// state keeps MeasureSpec copyable.
class Formula {
public:
    static Formula parse(const std::string& text,
                         const std::vector<ColumnProfile>& profiles) {
        Formula f;
        f.source_ = text;
        std::set<std::size_t> referenced;
        detail::FormulaParser parser(text, profiles);
        f.root_ = std::shared_ptr<const detail::FormulaNode>(parser.parse(referenced).release());
        f.referenced_.assign(referenced.begin(), referenced.end());
        return f;
    }

    const std::string& source() const { return source_; }
    const std::vector<std::size_t>& referenced_columns() const { return referenced_; }

    std::optional<double>
    evaluate(const std::function<std::optional<double>(std::size_t)>& attribute_value) const {
        return detail::eval_formula(*root_, attribute_value);
    }

private:
    std::string source_;
    std::shared_ptr<const detail::FormulaNode> root_;
    std::vector<std::size_t> referenced_;
};

enum class MeasureOrigin { Auto, User };

struct MeasureSpec {
    std::string name;
    std::string source_attribute; // empty for derived or count-only measures
    std::set<Aggregation> aggregations;
    std::string formula_source;   // empty when the measure is not derived
    std::optional<Formula> formula; // parsed form, present when built here
    MeasureOrigin origin = MeasureOrigin::Auto;
};

// ---------------------------------------------------------------------------
// Column profiling
// ---------------------------------------------------------------------------

namespace detail {

inline bool matches_id_pattern(const std::string& name) {
    static const std::regex pattern("(^|[_ ])id($|[_ ])|^id|id$",
                                    std::regex::icase | std::regex::ECMAScript);
    return std::regex_search(name, pattern);
}

inline const std::vector<std::vector<std::string>>& ordinal_scales() {
    static const std::vector<std::vector<std::string>> scales = {
        {"low", "medium", "high"},
        {"small", "medium", "large"},
        {"bad", "ok", "good"},
        {"poor", "fair", "good", "very good", "excellent"},
        {"never", "rarely", "sometimes", "often", "always"},
        {"strongly disagree", "disagree", "neutral", "agree", "strongly agree"},
        {"cold", "warm", "hot"},
    };
    return scales;
}

} // namespace detail

/// Assigns the semantic kind of one attribute by ordered rules: boolean,
/// identifier, year, date, ratio, interval, nominal, ordinal, text.
inline ColumnProfile profile_column(const CanonicalTable& table,
                                    const std::string& attribute) {
    std::size_t col = table.attribute_index(attribute);
    ColumnProfile p;
    p.attribute = attribute;
    p.column_index = col;
    p.row_count = table.n_rows();

    std::set<std::string> distinct;
    std::size_t non_null = 0, numeric = 0, integer = 0, boolean_like = 0;
    std::size_t year_like = 0, date_like = 0, non_negative = 0;
    std::vector<long long> int_values;
    bool ints_parse = true;
    for (const auto& row : table.rows()) {
        const std::string& v = row[col];
        if (v.empty()) {
            ++p.null_count;
            continue;
        }
        ++non_null;
        distinct.insert(v);
        std::string l = to_lower(v);
        if (l == "0" || l == "1" || l == "true" || l == "false" || l == "yes" || l == "no")
            ++boolean_like;
        auto num = parse_number(v);
        if (num) {
            ++numeric;
            if (*num >= 0) ++non_negative;
            if (!p.min || *num < *p.min) p.min = *num;
            if (!p.max || *num > *p.max) p.max = *num;
        }
        if (is_integer_text(v)) {
            ++integer;
            if (ints_parse) {
                try {
                    int_values.push_back(std::stoll(v));
                } catch (...) {
                    ints_parse = false;
                }
            }
            if (v.size() == 4 && num && *num >= 1300 && *num <= 2100) ++year_like;
        }
        if (is_date_text(v)) ++date_like;
    }
    p.distinct_count = distinct.size();
    p.numeric_fraction = non_null ? static_cast<double>(numeric) / non_null : 0.0;

    if (non_null == 0) {
        p.kind = ColumnKind::Text;
        return p;
    }
    if (boolean_like == non_null) {
        p.kind = ColumnKind::Boolean;
        return p;
    }
    if (integer == non_null && p.distinct_count == non_null) {
        bool name_hint = detail::matches_id_pattern(attribute);
        bool dense = false, sorted = false;
        if (ints_parse && !int_values.empty()) {
            sorted = std::is_sorted(int_values.begin(), int_values.end());
            auto [lo, hi] = std::minmax_element(int_values.begin(), int_values.end());
            dense = static_cast<unsigned long long>(*hi - *lo) + 1 == int_values.size();
        }
        if (name_hint || dense || sorted) {
            p.kind = ColumnKind::Identifier;
            return p;
        }
    }
    if (integer == non_null && year_like == non_null) {
        p.kind = ColumnKind::TemporalYear;
        return p;
    }
    if (date_like == non_null) {
        p.kind = ColumnKind::TemporalDate;
        return p;
    }
    if (p.numeric_fraction >= 0.95) {
        p.kind = non_negative == numeric ? ColumnKind::Ratio : ColumnKind::Interval;
        return p;
    }
    if (p.distinct_count <= table.n_rows() / 2.0) {
        p.kind = ColumnKind::Nominal;
        return p;
    }
    if (p.distinct_count >= 2) {
        std::set<std::string> lowered;
        for (const auto& v : distinct) lowered.insert(to_lower(v));
        for (const auto& scale : detail::ordinal_scales()) {
            std::set<std::string> scale_set(scale.begin(), scale.end());
            if (std::includes(scale_set.begin(), scale_set.end(), lowered.begin(),
                              lowered.end())) {
                p.kind = ColumnKind::Ordinal;
                return p;
            }
        }
    }
    p.kind = ColumnKind::Text;
    return p;
}

inline std::vector<ColumnProfile> profile_table(const CanonicalTable& table) {
    std::vector<ColumnProfile> out;
    out.reserve(table.n_attributes());
    for (const auto& a : table.attributes()) out.push_back(profile_column(table, a));
    return out;
}

/// Every interval or ratio attribute becomes a candidate measure with the
/// basic aggregation set; a count-based row_count measure is always added.
inline std::vector<MeasureSpec> select_measures(const std::vector<ColumnProfile>& profiles) {
    std::vector<MeasureSpec> out;
    for (const auto& p : profiles) {
        if (p.kind != ColumnKind::Interval && p.kind != ColumnKind::Ratio) continue;
        MeasureSpec m;
        m.name = p.attribute;
        m.source_attribute = p.attribute;
        m.aggregations = {Aggregation::Sum, Aggregation::Avg, Aggregation::Min,
                          Aggregation::Max};
        m.origin = MeasureOrigin::Auto;
        out.push_back(std::move(m));
    }
    MeasureSpec count;
    count.name = "row_count";
    count.aggregations = {Aggregation::Count};
    count.origin = MeasureOrigin::Auto;
    out.push_back(std::move(count));
    return out;
}

// ---------------------------------------------------------------------------
// Override document
// ---------------------------------------------------------------------------

/// Validated override document: measure edits plus naming preferences.
struct OverrideDocument {
    nlohmann::json raw;
    std::map<std::string, std::string> dimension_names;
    std::string schema_name;
};

namespace detail {

inline void require_keys(const nlohmann::json& obj,
                         const std::set<std::string>& allowed,
                         const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key()))
            throw Error(ErrorKind::InvalidOverrideDocument,
                        where + ": unknown key '" + it.key() + "'");
}

inline std::set<Aggregation> parse_aggregation_list(const nlohmann::json& arr,
                                                    const std::string& where) {
    if (!arr.is_array() || arr.empty())
        throw Error(ErrorKind::InvalidOverrideDocument,
                    where + ": aggregations must be a non-empty array");
    std::set<Aggregation> out;
    for (const auto& a : arr) {
        if (!a.is_string())
            throw Error(ErrorKind::InvalidOverrideDocument,
                        where + ": aggregation entries must be strings");
        auto parsed = parse_aggregation(a.get<std::string>());
        if (!parsed)
            throw Error(ErrorKind::InvalidOverrideDocument,
                        where + ": unknown aggregation '" + a.get<std::string>() + "'");
        out.insert(*parsed);
    }
    return out;
}

} // namespace detail

inline OverrideDocument parse_override_document(const nlohmann::json& doc) {
    if (!doc.is_object())
        throw Error(ErrorKind::InvalidOverrideDocument, "document root must be an object");
    detail::require_keys(doc, {"measures", "dimension_names", "schema_name"}, "document");
    OverrideDocument out;
    out.raw = doc;
    if (doc.contains("schema_name")) {
        if (!doc["schema_name"].is_string())
            throw Error(ErrorKind::InvalidOverrideDocument, "schema_name must be a string");
        out.schema_name = doc["schema_name"].get<std::string>();
    }
    if (doc.contains("dimension_names")) {
        if (!doc["dimension_names"].is_object())
            throw Error(ErrorKind::InvalidOverrideDocument,
                        "dimension_names must be an object");
        for (auto it = doc["dimension_names"].begin(); it != doc["dimension_names"].end();
             ++it) {
            if (!it.value().is_string())
                throw Error(ErrorKind::InvalidOverrideDocument,
                            "dimension_names values must be strings");
            out.dimension_names[it.key()] = it.value().get<std::string>();
        }
    }
    if (doc.contains("measures") && !doc["measures"].is_array())
        throw Error(ErrorKind::InvalidOverrideDocument, "measures must be an array");
    return out;
}

/// Applies measure overrides: remove or re-aggregate candidates, promote
/// attributes, add derived measures. Surviving auto measures keep their
/// order and precede user measures.
inline std::vector<MeasureSpec> apply_overrides(std::vector<MeasureSpec> candidates,
                                                const OverrideDocument& overrides,
                                                const std::vector<ColumnProfile>& profiles) {
    std::vector<MeasureSpec> user_added;
    const auto& doc = overrides.raw;
    if (doc.contains("measures")) {
        int index = 0;
        for (const auto& entry : doc["measures"]) {
            std::string where = "measures[" + std::to_string(index++) + "]";
            if (!entry.is_object())
                throw Error(ErrorKind::InvalidOverrideDocument, where + ": must be an object");
            detail::require_keys(entry, {"attribute", "name", "formula", "aggregations",
                                         "action"},
                                 where);
            if (!entry.contains("action") || !entry["action"].is_string())
                throw Error(ErrorKind::InvalidOverrideDocument,
                            where + ": action is required");
            std::string action = entry["action"].get<std::string>();
            std::string target;
            if (entry.contains("attribute")) target = entry["attribute"].get<std::string>();
            else if (entry.contains("name") && action != "add")
                target = entry["name"].get<std::string>();

            if (action == "remove") {
                auto before_c = candidates.size();
                auto before_u = user_added.size();
                candidates.erase(std::remove_if(candidates.begin(), candidates.end(),
                                                [&](const MeasureSpec& m) {
                                                    return m.name == target;
                                                }),
                                 candidates.end());
                user_added.erase(std::remove_if(user_added.begin(), user_added.end(),
                                                [&](const MeasureSpec& m) {
                                                    return m.name == target;
                                                }),
                                 user_added.end());
                if (candidates.size() == before_c && user_added.size() == before_u)
                    throw Error(ErrorKind::InvalidOverrideDocument,
                                where + ": no measure named '" + target + "' to remove");
            } else if (action == "replace") {
                auto aggs = detail::parse_aggregation_list(entry.value("aggregations",
                                                                       nlohmann::json()),
                                                           where);
                bool found = false;
                for (auto& m : candidates)
                    if (m.name == target) {
                        m.aggregations = aggs;
                        found = true;
                    }
                for (auto& m : user_added)
                    if (m.name == target) {
                        m.aggregations = aggs;
                        found = true;
                    }
                if (!found)
                    throw Error(ErrorKind::InvalidOverrideDocument,
                                where + ": no measure named '" + target + "' to replace");
            } else if (action == "add") {
                MeasureSpec m;
                m.origin = MeasureOrigin::User;
                m.aggregations = {Aggregation::Sum, Aggregation::Avg, Aggregation::Min,
                                  Aggregation::Max};
                if (entry.contains("aggregations"))
                    m.aggregations =
                        detail::parse_aggregation_list(entry["aggregations"], where);
                if (entry.contains("formula")) {
                    if (!entry.contains("name"))
                        throw Error(ErrorKind::InvalidOverrideDocument,
                                    where + ": derived measures need a name");
                    m.name = entry["name"].get<std::string>();
                    m.formula_source = entry["formula"].get<std::string>();
                    m.formula = Formula::parse(m.formula_source, profiles);
                } else if (entry.contains("attribute")) {
                    m.name = entry["attribute"].get<std::string>();
                    m.source_attribute = m.name;
                    bool exists = false;
                    for (const auto& p : profiles)
                        if (p.attribute == m.name) exists = true;
                    if (!exists)
                        throw Error(ErrorKind::UnknownAttribute,
                                    where + ": no attribute named '" + m.name + "'");
                } else {
                    throw Error(ErrorKind::InvalidOverrideDocument,
                                where + ": add needs an attribute or a name+formula");
                }
                user_added.push_back(std::move(m));
            } else {
                throw Error(ErrorKind::InvalidOverrideDocument,
                            where + ": unknown action '" + action + "'");
            }
        }
    }

    std::vector<MeasureSpec> out = std::move(candidates);
    for (auto& m : user_added) out.push_back(std::move(m));
    std::set<std::string> names;
    for (const auto& m : out)
        if (!names.insert(m.name).second)
            throw Error(ErrorKind::InvalidOverrideDocument,
                        "duplicate measure name '" + m.name + "'");
    return out;
}

} // namespace tabstar

#endif

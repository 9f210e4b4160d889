#ifndef TABSTAR_VALUE_HPP
#define TABSTAR_VALUE_HPP

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tabstar {

/// Lexical type of a single cell value. Used by classification heuristics
/// (homogeneity scores, label-rail detection) and by column profiling.
enum class ValueType {
    Empty,
    Integer,
    Real,
    Boolean,
    Date,
    Text,
};

inline const char* to_string(ValueType t) {
    switch (t) {
    case ValueType::Empty: return "empty";
    case ValueType::Integer: return "integer";
    case ValueType::Real: return "real";
    case ValueType::Boolean: return "boolean";
    case ValueType::Date: return "date";
    case ValueType::Text: return "text";
    }
    return "?";
}

inline std::string trim(std::string_view s) {
    const char* ws = " \t\r\n\f\v";
    auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return "";
    auto e = s.find_last_not_of(ws);
    return std::string(s.substr(b, e - b + 1));
}

inline std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

inline bool is_integer_text(std::string_view s) {
    if (s.empty()) return false;
    std::size_t i = (s[0] == '+' || s[0] == '-') ? 1 : 0;
    if (i == s.size()) return false;
    for (; i < s.size(); ++i)
        if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
    return true;
}

namespace detail {

inline bool strtod_consumes_all(const std::string& s, double& out) {
    if (s.empty()) return false;
    const char* begin = s.c_str();
    char* end = nullptr;
    out = std::strtod(begin, &end);
    return end == begin + s.size();
}

} // namespace detail

/// Parses a number with '.' as decimal separator; a single ',' is accepted
/// as the decimal separator when the value contains no '.'.
inline std::optional<double> parse_number(std::string_view sv) {
    std::string s = trim(sv);
    if (s.empty()) return std::nullopt;
    double v = 0.0;
    if (detail::strtod_consumes_all(s, v)) return v;
    if (s.find('.') == std::string::npos) {
        auto comma = s.find(',');
        if (comma != std::string::npos && s.find(',', comma + 1) == std::string::npos) {
            std::string repl = s;
            repl[comma] = '.';
            if (detail::strtod_consumes_all(repl, v)) return v;
        }
    }
    return std::nullopt;
}

inline bool is_boolean_text(std::string_view s) {
    std::string l = to_lower(trim(s));
    return l == "true" || l == "false" || l == "yes" || l == "no";
}

/// Accepts ISO-8601 calendar dates (optionally followed by a time part) and
/// DD/MM/YYYY.
inline bool is_date_text(std::string_view sv) {
    std::string s = trim(sv);
    auto all_digits = [](std::string_view p) {
        return !p.empty() && std::all_of(p.begin(), p.end(), [](unsigned char c) {
            return std::isdigit(c);
        });
    };
    // YYYY-MM-DD[...]
    if (s.size() >= 10 && s[4] == '-' && s[7] == '-') {
        std::string_view y(s.data(), 4), m(s.data() + 5, 2), d(s.data() + 8, 2);
        if (all_digits(y) && all_digits(m) && all_digits(d)) {
            int mi = std::stoi(std::string(m)), di = std::stoi(std::string(d));
            if (mi >= 1 && mi <= 12 && di >= 1 && di <= 31) {
                if (s.size() == 10) return true;
                char sep = s[10];
                return sep == 'T' || sep == ' ';
            }
        }
    }
    // DD/MM/YYYY
    auto s1 = s.find('/');
    if (s1 != std::string::npos) {
        auto s2 = s.find('/', s1 + 1);
        if (s2 != std::string::npos && s.find('/', s2 + 1) == std::string::npos) {
            std::string_view d(s.data(), s1);
            std::string_view m(s.data() + s1 + 1, s2 - s1 - 1);
            std::string_view y(s.data() + s2 + 1);
            if (all_digits(d) && all_digits(m) && all_digits(y) &&
                d.size() <= 2 && m.size() <= 2 && y.size() == 4) {
                int di = std::stoi(std::string(d)), mi = std::stoi(std::string(m));
                return di >= 1 && di <= 31 && mi >= 1 && mi <= 12;
            }
        }
    }
    return false;
}

inline ValueType infer_type(std::string_view sv) {
    std::string s = trim(sv);
    if (s.empty()) return ValueType::Empty;
    if (is_boolean_text(s)) return ValueType::Boolean;
    if (is_integer_text(s)) return ValueType::Integer;
    if (is_date_text(s)) return ValueType::Date;
    if (parse_number(s)) return ValueType::Real;
    return ValueType::Text;
}

inline bool is_numeric_type(ValueType t) {
    return t == ValueType::Integer || t == ValueType::Real;
}

/// Majority-type fraction over the non-empty values of a sequence; 1.0 when
/// the sequence has no non-empty value.
inline double type_homogeneity(const std::vector<ValueType>& types) {
    int counts[6] = {0, 0, 0, 0, 0, 0};
    int total = 0;
    for (auto t : types) {
        if (t == ValueType::Empty) continue;
        counts[static_cast<int>(t)]++;
        total++;
    }
    if (total == 0) return 1.0;
    int best = *std::max_element(std::begin(counts), std::end(counts));
    return static_cast<double>(best) / total;
}

} // namespace tabstar

#endif

#ifndef TABSTAR_FDMINE_HPP
#define TABSTAR_FDMINE_HPP

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "tabstar/error.hpp"
#include "tabstar/table.hpp"

namespace tabstar {

/// Unary functional dependency lhs -> rhs with its g3-style error: the
/// fraction of rows that must be removed for the dependency to hold exactly.
struct FunctionalDependency {
    std::string lhs;
    std::string rhs;
    double error = 0.0;

    bool operator==(const FunctionalDependency& other) const {
        return lhs == other.lhs && rhs == other.rhs;
    }
    bool operator<(const FunctionalDependency& other) const {
        if (lhs != other.lhs) return lhs < other.lhs;
        return rhs < other.rhs;
    }
};

/// Row-index groups of size >= 2 sharing a non-missing value; singletons are
/// stripped and rows with missing values never join a group.
struct StrippedPartition {
    std::vector<std::vector<std::uint32_t>> groups;
};

namespace detail {

struct EncodedColumn {
    std::vector<std::int32_t> codes; // -1 = missing
    std::int32_t code_count = 0;
};

inline EncodedColumn encode_column(const CanonicalTable& table, std::size_t col) {
    EncodedColumn out;
    out.codes.reserve(table.n_rows());
    std::unordered_map<std::string, std::int32_t> dict;
    dict.reserve(table.n_rows() * 2);
    for (const auto& row : table.rows()) {
        const std::string& v = row[col];
        if (v.empty()) {
            out.codes.push_back(-1);
            continue;
        }
        auto [it, inserted] = dict.emplace(v, out.code_count);
        if (inserted) ++out.code_count;
        out.codes.push_back(it->second);
    }
    return out;
}

inline StrippedPartition partition_from_codes(const EncodedColumn& column) {
    std::vector<std::vector<std::uint32_t>> buckets(column.code_count);
    for (std::uint32_t r = 0; r < column.codes.size(); ++r) {
        std::int32_t code = column.codes[r];
        if (code >= 0) buckets[code].push_back(r);
    }
    StrippedPartition p;
    for (auto& b : buckets)
        if (b.size() >= 2) p.groups.push_back(std::move(b));
    return p;
}

/// g3 over encoded columns: within every lhs group, rows outside the largest
/// rhs value class must be removed. Missing rhs values count as one shared
/// value; missing lhs rows are singletons and never violate anything.
inline double g3_from_encoded(const StrippedPartition& lhs_partition,
                              const EncodedColumn& rhs, std::size_t n_rows,
                              std::vector<std::uint32_t>& probe,
                              std::uint32_t& probe_epoch,
                              std::vector<std::uint32_t>& probe_stamp) {
    if (n_rows == 0) return 0.0;
    std::size_t slots = static_cast<std::size_t>(rhs.code_count) + 1;
    if (probe.size() < slots) {
        probe.assign(slots, 0);
        probe_stamp.assign(slots, 0);
        probe_epoch = 0;
    }
    std::size_t removals = 0;
    for (const auto& group : lhs_partition.groups) {
        ++probe_epoch;
        std::uint32_t best = 0;
        for (auto r : group) {
            std::int32_t code = rhs.codes[r];
            std::size_t slot = code < 0 ? slots - 1 : static_cast<std::size_t>(code);
            if (probe_stamp[slot] != probe_epoch) {
                probe_stamp[slot] = probe_epoch;
                probe[slot] = 0;
            }
            if (++probe[slot] > best) best = probe[slot];
        }
        removals += group.size() - best;
    }
    return static_cast<double>(removals) / n_rows;
}

} // namespace detail

inline StrippedPartition stripped_partition(const CanonicalTable& table,
                                            const std::string& attribute) {
    auto col = detail::encode_column(table, table.attribute_index(attribute));
    return detail::partition_from_codes(col);
}

/// g3 error of lhs -> rhs: minimum fraction of rows whose removal makes the
/// dependency hold exactly.
inline double g3_error(const CanonicalTable& table, const std::string& lhs,
                       const std::string& rhs) {
    auto lhs_col = detail::encode_column(table, table.attribute_index(lhs));
    auto rhs_col = detail::encode_column(table, table.attribute_index(rhs));
    auto partition = detail::partition_from_codes(lhs_col);
    std::vector<std::uint32_t> probe, stamp;
    std::uint32_t epoch = 0;
    return detail::g3_from_encoded(partition, rhs_col, table.n_rows(), probe, epoch, stamp);
}

/// Exact unary FD discovery over stripped partitions: every ordered pair of
/// non-excluded attributes whose g3 error is within the threshold. Output is
/// sorted by (lhs, rhs).
inline std::vector<FunctionalDependency>
mine_unary_fds(const CanonicalTable& table, const std::set<std::string>& exclude = {},
               double threshold = 0.0) {
    if (threshold < 0.0 || threshold >= 1.0)
        throw Error(ErrorKind::InvariantViolation,
                    "threshold must lie in [0, 1), got " + std::to_string(threshold));
    if (table.n_rows() < 2)
        throw Error(ErrorKind::TooFewRows,
                    "FD mining needs at least 2 rows; every dependency would hold vacuously");

    std::vector<std::size_t> columns;
    for (std::size_t c = 0; c < table.n_attributes(); ++c)
        if (!exclude.count(table.attributes()[c])) columns.push_back(c);

    std::vector<detail::EncodedColumn> encoded;
    std::vector<StrippedPartition> partitions;
    encoded.reserve(columns.size());
    partitions.reserve(columns.size());
    for (auto c : columns) {
        encoded.push_back(detail::encode_column(table, c));
        partitions.push_back(detail::partition_from_codes(encoded.back()));
    }

    std::vector<FunctionalDependency> out;
    std::vector<std::uint32_t> probe, stamp;
    std::uint32_t epoch = 0;
    for (std::size_t i = 0; i < columns.size(); ++i) {
        for (std::size_t j = 0; j < columns.size(); ++j) {
            if (i == j) continue;
            double err = detail::g3_from_encoded(partitions[i], encoded[j], table.n_rows(),
                                                 probe, epoch, stamp);
            if (err <= threshold)
                out.push_back({table.attributes()[columns[i]],
                               table.attributes()[columns[j]], err});
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

/// Plain-map reference miner with semantics identical to mine_unary_fds by
/// construction; kept free of the partition machinery so the two paths stay
/// independent.
inline std::vector<FunctionalDependency>
brute_force_fds(const CanonicalTable& table, double threshold = 0.0,
                const std::set<std::string>& exclude = {}) {
    if (table.n_rows() < 2)
        throw Error(ErrorKind::TooFewRows,
                    "FD mining needs at least 2 rows; every dependency would hold vacuously");
    std::vector<FunctionalDependency> out;
    const auto n = static_cast<double>(table.n_rows());
    for (const auto& lhs : table.attributes()) {
        if (exclude.count(lhs)) continue;
        std::size_t li = table.attribute_index(lhs);
        for (const auto& rhs : table.attributes()) {
            if (rhs == lhs || exclude.count(rhs)) continue;
            std::size_t ri = table.attribute_index(rhs);
            std::map<std::string, std::map<std::string, std::size_t>> groups;
            for (const auto& row : table.rows()) {
                if (row[li].empty()) continue; // missing lhs never violates
                groups[row[li]][row[ri]]++;
            }
            std::size_t removals = 0;
            for (const auto& [value, rhs_counts] : groups) {
                std::size_t total = 0, best = 0;
                for (const auto& [rv, count] : rhs_counts) {
                    total += count;
                    best = std::max(best, count);
                }
                removals += total - best;
            }
            double err = removals / n;
            if (err <= threshold) out.push_back({lhs, rhs, err});
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

namespace detail {

inline bool reachable(const std::map<std::string, std::set<std::string>>& adjacency,
                      const std::string& from, const std::string& to) {
    std::vector<std::string> stack = {from};
    std::set<std::string> seen = {from};
    while (!stack.empty()) {
        std::string node = stack.back();
        stack.pop_back();
        auto it = adjacency.find(node);
        if (it == adjacency.end()) continue;
        for (const auto& next : it->second) {
            if (next == to) return true;
            if (seen.insert(next).second) stack.push_back(next);
        }
    }
    return false;
}

} // namespace detail

/// Removes every FD whose endpoints stay connected through the remaining
/// edges (transitive and, for unary FDs, pseudo-transitive shortcuts).
/// Candidates are processed in (lhs, rhs) order; the transitive closure is
/// preserved and mutual-reachability classes stay intact.
inline std::vector<FunctionalDependency>
minimal_cover(const std::vector<FunctionalDependency>& fds) {
    std::vector<FunctionalDependency> edges;
    for (const auto& fd : fds)
        if (std::find(edges.begin(), edges.end(), fd) == edges.end()) edges.push_back(fd);
    std::sort(edges.begin(), edges.end());

    std::map<std::string, std::set<std::string>> adjacency;
    for (const auto& fd : edges) adjacency[fd.lhs].insert(fd.rhs);

    std::vector<FunctionalDependency> kept;
    for (const auto& fd : edges) {
        adjacency[fd.lhs].erase(fd.rhs);
        if (detail::reachable(adjacency, fd.lhs, fd.rhs)) continue; // shortcut
        adjacency[fd.lhs].insert(fd.rhs);
        kept.push_back(fd);
    }
    return kept;
}

/// Strongly connected components of size >= 2 of the FD digraph: the sets of
/// mutually determining attributes. Components are sorted by their smallest
/// member.
inline std::vector<std::set<std::string>>
equivalence_classes(const std::vector<FunctionalDependency>& fds) {
    std::map<std::string, std::set<std::string>> adjacency;
    std::set<std::string> nodes;
    for (const auto& fd : fds) {
        adjacency[fd.lhs].insert(fd.rhs);
        nodes.insert(fd.lhs);
        nodes.insert(fd.rhs);
    }

    // Iterative Tarjan.
    std::map<std::string, int> index, lowlink;
    std::set<std::string> on_stack;
    std::vector<std::string> stack;
    int next_index = 0;
    std::vector<std::set<std::string>> components;

    struct Frame {
        std::string node;
        std::vector<std::string> neighbors;
        std::size_t next = 0;
    };
    for (const auto& start : nodes) {
        if (index.count(start)) continue;
        std::vector<Frame> frames;
        auto push_node = [&](const std::string& v) {
            index[v] = lowlink[v] = next_index++;
            stack.push_back(v);
            on_stack.insert(v);
            Frame f;
            f.node = v;
            auto it = adjacency.find(v);
            if (it != adjacency.end())
                f.neighbors.assign(it->second.begin(), it->second.end());
            frames.push_back(std::move(f));
        };
        push_node(start);
        while (!frames.empty()) {
            Frame& f = frames.back();
            if (f.next < f.neighbors.size()) {
                const std::string& w = f.neighbors[f.next++];
                if (!index.count(w)) {
                    push_node(w);
                } else if (on_stack.count(w)) {
                    lowlink[f.node] = std::min(lowlink[f.node], index[w]);
                }
            } else {
                if (lowlink[f.node] == index[f.node]) {
                    std::set<std::string> component;
                    while (true) {
                        std::string w = stack.back();
                        stack.pop_back();
                        on_stack.erase(w);
                        component.insert(w);
                        if (w == f.node) break;
                    }
                    if (component.size() >= 2) components.push_back(std::move(component));
                }
                std::string done = f.node;
                frames.pop_back();
                if (!frames.empty())
                    lowlink[frames.back().node] =
                        std::min(lowlink[frames.back().node], lowlink[done]);
            }
        }
    }
    std::sort(components.begin(), components.end(),
              [](const std::set<std::string>& a, const std::set<std::string>& b) {
                  return *a.begin() < *b.begin();
              });
    return components;
}

} // namespace tabstar

#endif

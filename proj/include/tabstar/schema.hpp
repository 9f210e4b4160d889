#ifndef TABSTAR_SCHEMA_HPP
#define TABSTAR_SCHEMA_HPP

#include <algorithm>
#include <cstdio>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tabstar/error.hpp"
#include "tabstar/fdmine.hpp"
#include "tabstar/profile.hpp"
#include "tabstar/table.hpp"

namespace tabstar {

/// A dependency-graph node: one attribute equivalence class, collapsed to a
/// designated parameter with the remaining members demoted to weak
/// attributes.
struct GraphNode {
    std::string parameter;
    std::set<std::string> weak_attributes;
};

/// Minimal-cover FDs over collapsed equivalence classes; acyclic.
struct DependencyGraph {
    std::vector<GraphNode> nodes;
    std::vector<std::pair<std::size_t, std::size_t>> edges; // node indices

    std::size_t node_index(const std::string& parameter) const {
        for (std::size_t i = 0; i < nodes.size(); ++i)
            if (nodes[i].parameter == parameter) return i;
        throw Error(ErrorKind::UnknownAttribute, "no node for '" + parameter + "'");
    }
};

struct HierarchyLevel {
    std::string parameter;
    std::set<std::string> weak_attributes;

    bool operator==(const HierarchyLevel&) const = default;
};

/// An ordered chain of granularity levels, root (finest, e.g. an id) first.
struct Hierarchy {
    std::string name;
    std::vector<HierarchyLevel> levels;

    const std::string& root_parameter() const { return levels.front().parameter; }
    bool operator==(const Hierarchy&) const = default;
};

/// Analysis axis: the hierarchies sharing one root parameter.
struct Dimension {
    std::string name;
    std::string root;
    std::set<std::string> attributes;
    std::vector<Hierarchy> hierarchies;

    bool operator==(const Dimension&) const = default;
};

struct Fact {
    std::string name;
    std::vector<MeasureSpec> measures;
};

struct MultidimensionalSchema {
    std::string name;
    Fact fact;
    std::vector<Dimension> dimensions;
};

/// Collapses equivalence classes of the minimal cover into graph nodes. The
/// class parameter is the member profiled as an identifier (ties and
/// identifier-free classes fall back to the smallest column index); other
/// members become weak attributes. Non-measure attributes without any FD
/// become isolated nodes.
inline DependencyGraph build_dependency_graph(const std::vector<FunctionalDependency>& fds,
                                              const std::set<std::string>& measures,
                                              const std::vector<ColumnProfile>& profiles) {
    auto classes = equivalence_classes(fds);
    std::map<std::string, std::size_t> class_of; // attribute -> class id
    std::vector<std::set<std::string>> members;
    for (auto& c : classes) {
        for (const auto& a : c) class_of[a] = members.size();
        members.push_back(c);
    }
    auto ensure_class = [&](const std::string& attr) {
        if (!class_of.count(attr)) {
            class_of[attr] = members.size();
            members.push_back({attr});
        }
    };
    for (const auto& fd : fds) {
        ensure_class(fd.lhs);
        ensure_class(fd.rhs);
    }
    for (const auto& p : profiles)
        if (!measures.count(p.attribute)) ensure_class(p.attribute);

    auto profile_of = [&](const std::string& attr) -> const ColumnProfile* {
        for (const auto& p : profiles)
            if (p.attribute == attr) return &p;
        return nullptr;
    };

    DependencyGraph graph;
    std::vector<std::string> class_parameter(members.size());
    for (std::size_t i = 0; i < members.size(); ++i) {
        std::string best;
        bool best_is_identifier = false;
        std::size_t best_index = static_cast<std::size_t>(-1);
        for (const auto& attr : members[i]) {
            const ColumnProfile* p = profile_of(attr);
            bool is_identifier = p && p->kind == ColumnKind::Identifier;
            std::size_t idx = p ? p->column_index : static_cast<std::size_t>(-1);
            bool better;
            if (is_identifier != best_is_identifier) better = is_identifier;
            else better = idx < best_index;
            if (best.empty() || better) {
                best = attr;
                best_is_identifier = is_identifier;
                best_index = idx;
            }
        }
        class_parameter[i] = best;
    }

    // Nodes sorted by parameter for a canonical layout.
    std::vector<std::size_t> order(members.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return class_parameter[a] < class_parameter[b];
    });
    std::map<std::size_t, std::size_t> node_of_class;
    for (auto cls : order) {
        GraphNode node;
        node.parameter = class_parameter[cls];
        for (const auto& attr : members[cls])
            if (attr != node.parameter) node.weak_attributes.insert(attr);
        node_of_class[cls] = graph.nodes.size();
        graph.nodes.push_back(std::move(node));
    }

    std::set<std::pair<std::size_t, std::size_t>> edge_set;
    for (const auto& fd : fds) {
        std::size_t a = node_of_class[class_of[fd.lhs]];
        std::size_t b = node_of_class[class_of[fd.rhs]];
        if (a != b) edge_set.insert({a, b});
    }
    graph.edges.assign(edge_set.begin(), edge_set.end());

    // The condensation of a digraph is acyclic; verify all the same.
    std::vector<std::size_t> indegree(graph.nodes.size(), 0);
    for (auto [a, b] : graph.edges) indegree[b]++;
    std::vector<std::size_t> queue;
    for (std::size_t i = 0; i < indegree.size(); ++i)
        if (indegree[i] == 0) queue.push_back(i);
    std::size_t visited = 0;
    while (!queue.empty()) {
        std::size_t node = queue.back();
        queue.pop_back();
        ++visited;
        for (auto [a, b] : graph.edges)
            if (a == node && --indegree[b] == 0) queue.push_back(b);
    }
    if (visited != graph.nodes.size())
        throw Error(ErrorKind::InvariantViolation,
                    "dependency graph is cyclic after equivalence collapse");
    return graph;
}

/// All maximal root-to-sink paths of the dependency graph, each path's nodes
/// becoming hierarchy levels; isolated nodes yield single-level hierarchies.
/// Named H1, H2, ... ordered by root attribute then path.
inline std::vector<Hierarchy> extract_hierarchies(const DependencyGraph& graph) {
    std::vector<std::vector<std::size_t>> adjacency(graph.nodes.size());
    std::vector<std::size_t> indegree(graph.nodes.size(), 0);
    for (auto [a, b] : graph.edges) {
        adjacency[a].push_back(b);
        indegree[b]++;
    }
    for (auto& neighbors : adjacency)
        std::sort(neighbors.begin(), neighbors.end(), [&](std::size_t a, std::size_t b) {
            return graph.nodes[a].parameter < graph.nodes[b].parameter;
        });

    std::vector<std::vector<std::size_t>> paths;
    std::vector<std::size_t> current;
    std::function<void(std::size_t)> dfs = [&](std::size_t node) {
        current.push_back(node);
        if (adjacency[node].empty()) {
            paths.push_back(current);
        } else {
            for (auto next : adjacency[node]) dfs(next);
        }
        current.pop_back();
    };
    for (std::size_t i = 0; i < graph.nodes.size(); ++i)
        if (indegree[i] == 0) dfs(i);

    std::sort(paths.begin(), paths.end(),
              [&](const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
                  std::vector<std::string> pa, pb;
                  for (auto n : a) pa.push_back(graph.nodes[n].parameter);
                  for (auto n : b) pb.push_back(graph.nodes[n].parameter);
                  return pa < pb;
              });

    std::vector<Hierarchy> out;
    int counter = 1;
    for (const auto& path : paths) {
        Hierarchy h;
        h.name = "H" + std::to_string(counter++);
        for (auto n : path)
            h.levels.push_back({graph.nodes[n].parameter, graph.nodes[n].weak_attributes});
        out.push_back(std::move(h));
    }
    return out;
}

/// Partitions hierarchies by root parameter into dimensions named D1, D2,
/// ... in root-name order; the override map (keyed by default name or root
/// attribute) renames them.
inline std::vector<Dimension>
group_dimensions(const std::vector<Hierarchy>& hierarchies,
                 const std::map<std::string, std::string>& names = {}) {
    std::map<std::string, std::vector<Hierarchy>> by_root;
    for (const auto& h : hierarchies) by_root[h.root_parameter()].push_back(h);

    std::vector<Dimension> out;
    int counter = 1;
    for (auto& [root, members] : by_root) {
        Dimension d;
        d.name = "D" + std::to_string(counter++);
        d.root = root;
        for (const auto& h : members) {
            for (const auto& level : h.levels) {
                d.attributes.insert(level.parameter);
                d.attributes.insert(level.weak_attributes.begin(),
                                    level.weak_attributes.end());
            }
            d.hierarchies.push_back(h);
        }
        auto it = names.find(d.name);
        if (it == names.end()) it = names.find(root);
        if (it != names.end()) d.name = it->second;
        out.push_back(std::move(d));
    }
    std::set<std::string> seen;
    for (const auto& d : out)
        if (!seen.insert(d.name).second)
            throw Error(ErrorKind::DuplicateDimensionName,
                        "two dimensions named '" + d.name + "'");
    return out;
}

/// Links measures to dimensions. No measure/root dependency check is made:
/// aggregating over all root parameters makes the measures depend on them.
inline MultidimensionalSchema assemble_schema(const std::string& fact_name,
                                              const std::vector<MeasureSpec>& measures,
                                              const std::vector<Dimension>& dimensions,
                                              const std::string& schema_name) {
    if (dimensions.empty())
        throw Error(ErrorKind::InvariantViolation, "a schema needs at least one dimension");
    if (measures.empty())
        throw Error(ErrorKind::NoCandidateMeasures, "a fact needs at least one measure");

    std::set<std::string> claimed;
    for (const auto& d : dimensions)
        for (const auto& a : d.attributes)
            if (!claimed.insert(a).second)
                throw Error(ErrorKind::InvariantViolation,
                            "attribute '" + a + "' is claimed by two dimensions");
    std::set<std::string> measure_names;
    for (const auto& m : measures) {
        if (!measure_names.insert(m.name).second)
            throw Error(ErrorKind::InvariantViolation,
                        "duplicate measure name '" + m.name + "'");
        if (!m.source_attribute.empty() && claimed.count(m.source_attribute))
            throw Error(ErrorKind::InvariantViolation,
                        "measure attribute '" + m.source_attribute +
                            "' appears in a dimension");
    }

    MultidimensionalSchema schema;
    schema.name = schema_name;
    schema.fact.name = fact_name;
    schema.fact.measures = measures;
    schema.dimensions = dimensions;
    std::sort(schema.dimensions.begin(), schema.dimensions.end(),
              [](const Dimension& a, const Dimension& b) { return a.name < b.name; });
    return schema;
}

/// Canonical JSON: stable key order, arrays sorted by the deterministic
/// names, formulas kept as source text.
inline nlohmann::ordered_json serialize_schema(const MultidimensionalSchema& schema) {
    nlohmann::ordered_json doc;
    doc["name"] = schema.name;
    nlohmann::ordered_json fact;
    fact["name"] = schema.fact.name;
    fact["measures"] = nlohmann::ordered_json::array();
    for (const auto& m : schema.fact.measures) {
        nlohmann::ordered_json measure;
        measure["name"] = m.name;
        if (m.source_attribute.empty()) measure["source"] = nullptr;
        else measure["source"] = m.source_attribute;
        measure["aggregations"] = nlohmann::ordered_json::array();
        for (auto a : sorted_aggregations(m.aggregations))
            measure["aggregations"].push_back(to_string(a));
        std::string formula = m.formula ? m.formula->source() : m.formula_source;
        if (!formula.empty()) measure["formula"] = formula;
        fact["measures"].push_back(std::move(measure));
    }
    doc["fact"] = std::move(fact);

    auto dims = schema.dimensions;
    std::sort(dims.begin(), dims.end(),
              [](const Dimension& a, const Dimension& b) { return a.name < b.name; });
    doc["dimensions"] = nlohmann::ordered_json::array();
    for (const auto& d : dims) {
        nlohmann::ordered_json dim;
        dim["name"] = d.name;
        dim["root"] = d.root;
        dim["attributes"] = nlohmann::ordered_json::array();
        for (const auto& a : d.attributes) dim["attributes"].push_back(a);
        auto hierarchies = d.hierarchies;
        std::sort(hierarchies.begin(), hierarchies.end(),
                  [](const Hierarchy& a, const Hierarchy& b) { return a.name < b.name; });
        dim["hierarchies"] = nlohmann::ordered_json::array();
        for (const auto& h : hierarchies) {
            nlohmann::ordered_json hier;
            hier["name"] = h.name;
            hier["levels"] = nlohmann::ordered_json::array();
            for (const auto& level : h.levels) {
                nlohmann::ordered_json l;
                l["parameter"] = level.parameter;
                l["weak_attributes"] = nlohmann::ordered_json::array();
                for (const auto& w : level.weak_attributes) l["weak_attributes"].push_back(w);
                hier["levels"].push_back(std::move(l));
            }
            dim["hierarchies"].push_back(std::move(hier));
        }
        doc["dimensions"].push_back(std::move(dim));
    }
    return doc;
}

inline MultidimensionalSchema parse_schema(const nlohmann::json& doc) {
    MultidimensionalSchema schema;
    schema.name = doc.at("name").get<std::string>();
    schema.fact.name = doc.at("fact").at("name").get<std::string>();
    for (const auto& m : doc.at("fact").at("measures")) {
        MeasureSpec spec;
        spec.name = m.at("name").get<std::string>();
        if (m.contains("source") && !m["source"].is_null())
            spec.source_attribute = m["source"].get<std::string>();
        for (const auto& a : m.at("aggregations")) {
            auto parsed = parse_aggregation(a.get<std::string>());
            if (!parsed)
                throw Error(ErrorKind::InvariantViolation,
                            "unknown aggregation '" + a.get<std::string>() + "'");
            spec.aggregations.insert(*parsed);
        }
        if (m.contains("formula")) spec.formula_source = m["formula"].get<std::string>();
        schema.fact.measures.push_back(std::move(spec));
    }
    for (const auto& d : doc.at("dimensions")) {
        Dimension dim;
        dim.name = d.at("name").get<std::string>();
        dim.root = d.at("root").get<std::string>();
        for (const auto& a : d.at("attributes")) dim.attributes.insert(a.get<std::string>());
        for (const auto& h : d.at("hierarchies")) {
            Hierarchy hier;
            hier.name = h.at("name").get<std::string>();
            for (const auto& l : h.at("levels")) {
                HierarchyLevel level;
                level.parameter = l.at("parameter").get<std::string>();
                for (const auto& w : l.at("weak_attributes"))
                    level.weak_attributes.insert(w.get<std::string>());
                hier.levels.push_back(std::move(level));
            }
            dim.hierarchies.push_back(std::move(hier));
        }
        schema.dimensions.push_back(std::move(dim));
    }
    return schema;
}

inline bool schema_equal(const MultidimensionalSchema& a, const MultidimensionalSchema& b) {
    return serialize_schema(a) == serialize_schema(b);
}

// ---------------------------------------------------------------------------
// Star population
// ---------------------------------------------------------------------------

struct StarTable {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
};

struct StarBundle {
    std::vector<StarTable> dimension_tables;
    StarTable fact_table;
    std::string ddl;
};

namespace detail {

inline std::string format_measure_value(double v) {
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.15g", v);
    return buffer;
}

inline std::string sql_identifier(const std::string& name) {
    std::string out = "\"";
    for (char c : name) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += '"';
    return out;
}

} // namespace detail

/// Materializes the star: one distinct projection per dimension keyed by its
/// root parameter, and a fact table grouped by the tuple of all roots with
/// every measure aggregation applied. Also emits generic-SQL DDL.
inline StarBundle populate_star(const MultidimensionalSchema& schema,
                                const CanonicalTable& table) {
    for (const auto& d : schema.dimensions)
        for (const auto& a : d.attributes)
            if (!table.has_attribute(a))
                throw Error(ErrorKind::UnknownAttribute,
                            "schema attribute '" + a + "' is missing from the table");
    for (const auto& m : schema.fact.measures)
        if (!m.source_attribute.empty() && !table.has_attribute(m.source_attribute))
            throw Error(ErrorKind::UnknownAttribute,
                        "measure attribute '" + m.source_attribute +
                            "' is missing from the table");

    StarBundle bundle;

    // Dimension tables: root first, remaining attributes sorted; first
    // occurrence wins when (approximate) dependencies disagree.
    for (const auto& d : schema.dimensions) {
        StarTable t;
        t.name = "dim_" + d.name;
        t.columns.push_back(d.root);
        for (const auto& a : d.attributes)
            if (a != d.root) t.columns.push_back(a);
        std::vector<std::size_t> indices;
        for (const auto& c : t.columns) indices.push_back(table.attribute_index(c));
        std::map<std::string, std::vector<std::string>> by_key;
        for (const auto& row : table.rows()) {
            const std::string& key = row[indices[0]];
            if (by_key.count(key)) continue;
            std::vector<std::string> values;
            values.reserve(indices.size());
            for (auto i : indices) values.push_back(row[i]);
            by_key.emplace(key, std::move(values));
        }
        for (auto& [key, values] : by_key) t.rows.push_back(std::move(values));
        bundle.dimension_tables.push_back(std::move(t));
    }

    // Fact table: group by the tuple of root parameters in dimension order.
    std::vector<std::string> key_attrs;
    std::vector<std::size_t> key_indices;
    for (const auto& d : schema.dimensions) {
        key_attrs.push_back(d.root);
        key_indices.push_back(table.attribute_index(d.root));
    }
    std::map<std::vector<std::string>, std::vector<std::size_t>> groups;
    for (std::size_t r = 0; r < table.n_rows(); ++r) {
        std::vector<std::string> key;
        key.reserve(key_indices.size());
        for (auto i : key_indices) key.push_back(table.value(r, i));
        groups[std::move(key)].push_back(r);
    }

    StarTable fact;
    fact.name = "fact_" + schema.fact.name;
    fact.columns = key_attrs;
    for (const auto& m : schema.fact.measures)
        for (auto a : sorted_aggregations(m.aggregations))
            fact.columns.push_back(m.name + "_" + to_string(a));

    auto measure_value = [&](const MeasureSpec& m, std::size_t row)
        -> std::optional<double> {
        if (m.formula) {
            return m.formula->evaluate([&](std::size_t col) -> std::optional<double> {
                return parse_number(table.value(row, col));
            });
        }
        const std::string& cell = table.value(row, table.attribute_index(m.source_attribute));
        if (cell.empty()) return std::nullopt;
        auto v = parse_number(cell);
        if (!v)
            throw Error(ErrorKind::NonNumericMeasureValue,
                        "value '" + cell + "' of measure '" + m.name +
                            "' is not numeric");
        return v;
    };

    for (const auto& [key, row_ids] : groups) {
        std::vector<std::string> out_row = key;
        for (const auto& m : schema.fact.measures) {
            std::vector<double> values;
            bool needs_values = false;
            for (auto a : m.aggregations)
                if (a != Aggregation::Count) needs_values = true;
            if (needs_values) {
                for (auto r : row_ids) {
                    auto v = measure_value(m, r);
                    if (v) values.push_back(*v);
                }
            }
            for (auto a : sorted_aggregations(m.aggregations)) {
                if (a == Aggregation::Count) {
                    out_row.push_back(std::to_string(row_ids.size()));
                    continue;
                }
                if (values.empty()) {
                    out_row.push_back("");
                    continue;
                }
                double v = 0.0;
                switch (a) {
                case Aggregation::Sum:
                    for (double x : values) v += x;
                    break;
                case Aggregation::Avg: {
                    for (double x : values) v += x;
                    v /= static_cast<double>(values.size());
                    break;
                }
                case Aggregation::Min:
                    v = *std::min_element(values.begin(), values.end());
                    break;
                case Aggregation::Max:
                    v = *std::max_element(values.begin(), values.end());
                    break;
                case Aggregation::Count:
                    break;
                }
                out_row.push_back(detail::format_measure_value(v));
            }
        }
        fact.rows.push_back(std::move(out_row));
    }
    bundle.fact_table = std::move(fact);

    // Generic-SQL DDL.
    std::string ddl;
    for (const auto& t : bundle.dimension_tables) {
        ddl += "CREATE TABLE " + detail::sql_identifier(t.name) + " (\n";
        for (std::size_t c = 0; c < t.columns.size(); ++c) {
            ddl += "  " + detail::sql_identifier(t.columns[c]) + " TEXT";
            if (c == 0) ddl += " PRIMARY KEY";
            if (c + 1 < t.columns.size()) ddl += ",";
            ddl += "\n";
        }
        ddl += ");\n\n";
    }
    ddl += "CREATE TABLE " + detail::sql_identifier(bundle.fact_table.name) + " (\n";
    for (std::size_t i = 0; i < key_attrs.size(); ++i) {
        ddl += "  " + detail::sql_identifier(key_attrs[i]) + " TEXT NOT NULL REFERENCES " +
               detail::sql_identifier(bundle.dimension_tables[i].name) + " (" +
               detail::sql_identifier(key_attrs[i]) + "),\n";
    }
    for (std::size_t c = key_attrs.size(); c < bundle.fact_table.columns.size(); ++c) {
        const std::string& col = bundle.fact_table.columns[c];
        bool is_count = col.size() >= 6 && col.rfind("_count") == col.size() - 6;
        ddl += "  " + detail::sql_identifier(col) +
               (is_count ? " BIGINT" : " DOUBLE PRECISION") + ",\n";
    }
    ddl += "  PRIMARY KEY (";
    for (std::size_t i = 0; i < key_attrs.size(); ++i) {
        if (i) ddl += ", ";
        ddl += detail::sql_identifier(key_attrs[i]);
    }
    ddl += ")\n);\n";
    bundle.ddl = ddl;
    return bundle;
}

inline std::string star_table_csv(const StarTable& table) {
    std::string out;
    for (std::size_t i = 0; i < table.columns.size(); ++i) {
        if (i) out += ',';
        out += csv_escape(table.columns[i]);
    }
    out += '\n';
    for (const auto& row : table.rows) {
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

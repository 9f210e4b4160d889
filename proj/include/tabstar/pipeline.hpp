#ifndef TABSTAR_PIPELINE_HPP
#define TABSTAR_PIPELINE_HPP

#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tabstar/classify.hpp"
#include "tabstar/error.hpp"
#include "tabstar/fdmine.hpp"
#include "tabstar/ingest.hpp"
#include "tabstar/profile.hpp"
#include "tabstar/schema.hpp"
#include "tabstar/table.hpp"
#include "tabstar/transform.hpp"

namespace tabstar {

struct PipelineOptions {
    double fd_threshold = 0.0;
    std::string multivalue_delimiters = ",;/|";
    std::optional<OverrideDocument> overrides;
    std::string fact_name = "F1";
    std::string schema_name = "schema";
};

/// Every intermediate stage of one inference run, kept for inspection.
struct PipelineResult {
    TableTypology typology;
    CanonicalTable normalized;
    std::vector<HierarchyHint> hints;
    std::vector<ColumnProfile> profiles;
    std::vector<MeasureSpec> measures;
    std::size_t auto_measure_count = 0;
    std::vector<FunctionalDependency> mined_fds;
    std::vector<FunctionalDependency> cover;
    std::vector<Hierarchy> hierarchies;
    std::vector<Dimension> dimensions;
    MultidimensionalSchema schema;
    std::vector<std::string> warnings;
};

inline std::string typology_json(const TableTypology& ty) {
    nlohmann::ordered_json doc;
    doc["structure"] = to_string(ty.structure);
    doc["cell_content"] = nlohmann::ordered_json::array();
    for (auto c : ty.cell_content) doc["cell_content"].push_back(to_string(c));
    doc["header"] = to_string(ty.header);
    doc["header_arrangement"] = to_string(ty.header_arrangement);
    return doc.dump();
}

/// Runs classify through schema assembly on one grid.
inline PipelineResult infer_schema(const RawGrid& grid, const PipelineOptions& options = {}) {
    PipelineResult result;
    ClassifyOptions classify_options{options.multivalue_delimiters};
    result.typology = classify_table(grid, classify_options);

    TransformOptions transform_options{options.multivalue_delimiters};
    NormalizeResult normalized = normalize(grid, result.typology, transform_options);
    result.normalized = std::move(normalized.table);
    result.hints = std::move(normalized.hints);

    result.profiles = profile_table(result.normalized);
    std::vector<MeasureSpec> candidates = select_measures(result.profiles);
    bool any_auto = false;
    for (const auto& m : candidates)
        if (!m.source_attribute.empty()) any_auto = true;
    if (!any_auto)
        result.warnings.push_back(
            "no interval or ratio attribute qualifies as a measure; only row_count offered");
    if (options.overrides)
        result.measures = apply_overrides(std::move(candidates), *options.overrides,
                                          result.profiles);
    else
        result.measures = std::move(candidates);
    if (result.measures.empty())
        throw Error(ErrorKind::NoCandidateMeasures, "no measures remain after overrides");
    // row_count (auto, count-only, no source attribute) is not counted as an
    // auto measure in reports.
    for (const auto& m : result.measures)
        if (m.origin == MeasureOrigin::Auto && !m.source_attribute.empty())
            ++result.auto_measure_count;

    std::set<std::string> measure_attributes;
    for (const auto& m : result.measures) {
        if (!m.source_attribute.empty()) measure_attributes.insert(m.source_attribute);
        if (m.formula)
            for (auto col : m.formula->referenced_columns())
                measure_attributes.insert(result.normalized.attributes()[col]);
    }

    try {
        result.mined_fds = mine_unary_fds(result.normalized, measure_attributes,
                                          options.fd_threshold);
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::TooFewRows) throw;
        result.warnings.push_back(e.what());
    }
    result.cover = minimal_cover(result.mined_fds);

    DependencyGraph graph =
        build_dependency_graph(result.cover, measure_attributes, result.profiles);
    result.hierarchies = extract_hierarchies(graph);
    std::map<std::string, std::string> dimension_names;
    if (options.overrides) dimension_names = options.overrides->dimension_names;
    result.dimensions = group_dimensions(result.hierarchies, dimension_names);

    std::string schema_name = options.schema_name;
    if (options.overrides && !options.overrides->schema_name.empty())
        schema_name = options.overrides->schema_name;
    result.schema =
        assemble_schema(options.fact_name, result.measures, result.dimensions, schema_name);

    // Isolated nodes become single-level hierarchies, so no non-measure
    // attribute can stay unplaced; assemble_schema already rejects doubles.
    for (const auto& attribute : result.normalized.attributes()) {
        if (measure_attributes.count(attribute)) continue;
        bool placed = false;
        for (const auto& d : result.schema.dimensions)
            if (d.attributes.count(attribute)) placed = true;
        if (!placed)
            throw Error(ErrorKind::InvariantViolation,
                        "attribute '" + attribute + "' is unplaced in the schema");
    }
    return result;
}

// ---------------------------------------------------------------------------
// File-level orchestration
// ---------------------------------------------------------------------------

struct PipelineConfig {
    std::string input_path;
    std::optional<FormatHint> format_hint;
    double fd_threshold = 0.0;
    std::string multivalue_delimiters = ",;/|";
    std::optional<std::string> override_path;
    std::size_t table_index = 0;
    std::string schema_out = "schema.json";
    std::optional<std::string> normalized_out;
    std::optional<std::string> sidecar_out;
    std::optional<std::string> ddl_out;
    std::optional<std::string> populate_dir;
};

/// Exit codes of the command-line pipeline.
enum ExitCode : int {
    ExitOk = 0,
    ExitInputError = 1,
    ExitNoMeasures = 2,
    ExitNormalizationError = 3,
    ExitInvalidOverride = 4,
};

inline int exit_code_for(const Error& e) {
    switch (e.kind()) {
    case ErrorKind::UnreadableSource:
    case ErrorKind::EmptySource:
    case ErrorKind::RaggedRows:
        return ExitInputError;
    case ErrorKind::NoCandidateMeasures:
        return ExitNoMeasures;
    case ErrorKind::AmbiguousStructure:
    case ErrorKind::NestedTableUnsupported:
    case ErrorKind::NormalizationFailed:
    case ErrorKind::NotACrossTable:
    case ErrorKind::InconsistentCompositeArity:
    case ErrorKind::HeaderRepairFailed:
        return ExitNormalizationError;
    case ErrorKind::InvalidOverrideDocument:
    case ErrorKind::MalformedFormula:
    case ErrorKind::UnknownAttributeInFormula:
    case ErrorKind::UnknownAttribute:
    case ErrorKind::DuplicateDimensionName:
        return ExitInvalidOverride;
    default:
        return ExitInputError;
    }
}

inline std::string read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorKind::UnreadableSource, "cannot open '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error(ErrorKind::UnreadableSource, "cannot write '" + path + "'");
    out << content;
}

/// Loads the selected table of a source file: read, split, index.
inline RawGrid load_table(const PipelineConfig& config, std::ostream& report) {
    std::string bytes = read_file_bytes(config.input_path);
    auto grids = read_source(bytes, config.format_hint,
                             std::filesystem::path(config.input_path).filename().string());
    std::vector<RawGrid> tables;
    for (const auto& g : grids) {
        auto split = split_tables(g);
        tables.insert(tables.end(), split.begin(), split.end());
    }
    report << "source: " << config.input_path << " (" << tables.size() << " table"
           << (tables.size() == 1 ? "" : "s") << ")\n";
    if (config.table_index >= tables.size())
        throw Error(ErrorKind::EmptySource,
                    "table index " + std::to_string(config.table_index) +
                        " out of range; source has " + std::to_string(tables.size()));
    RawGrid grid = tables[config.table_index];
    report << "table " << config.table_index << ": " << grid.n_rows() << " rows x "
           << grid.n_cols() << " cols\n";
    return grid;
}

inline OverrideDocument load_overrides(const std::string& path) {
    std::string bytes = read_file_bytes(path);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(bytes);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorKind::InvalidOverrideDocument,
                    std::string("override document is not valid JSON: ") + e.what());
    }
    return parse_override_document(doc);
}

inline nlohmann::ordered_json sidecar_json(const PipelineResult& result) {
    nlohmann::ordered_json doc;
    doc["source"] = result.normalized.provenance().source_name;
    doc["attributes"] = result.normalized.attributes();
    doc["transform_log"] = result.normalized.provenance().transform_log;
    doc["hierarchy_hints"] = nlohmann::ordered_json::array();
    for (const auto& h : result.hints)
        doc["hierarchy_hints"].push_back(h.attributes_coarse_to_fine);
    return doc;
}

/// Full pipeline over a source file: every stage reported to `report`,
/// machine artifacts written to the configured paths only.
inline int run_pipeline(const PipelineConfig& config, std::ostream& report) {
    try {
        PipelineOptions options;
        options.fd_threshold = config.fd_threshold;
        options.multivalue_delimiters = config.multivalue_delimiters;
        if (config.override_path) options.overrides = load_overrides(*config.override_path);

        RawGrid grid = load_table(config, report);
        PipelineResult result = infer_schema(grid, options);

        report << "typology: " << typology_json(result.typology) << "\n";
        report << "normalized: " << result.normalized.n_rows() << " rows, "
               << result.normalized.n_attributes() << " attributes\n";
        for (const auto& w : result.warnings) report << "warning: " << w << "\n";
        std::size_t user_measures = 0;
        for (const auto& m : result.measures)
            if (m.origin == MeasureOrigin::User) ++user_measures;
        report << "measures: " << result.auto_measure_count << " auto, " << user_measures
               << " user\n";
        report << "fds: " << result.mined_fds.size() << " mined (threshold "
               << config.fd_threshold << "), " << result.cover.size()
               << " in minimal cover\n";
        report << "hierarchies: " << result.hierarchies.size() << "\n";
        report << "dimensions: " << result.dimensions.size() << "\n";

        if (config.normalized_out) {
            write_file(*config.normalized_out, to_csv(result.normalized));
            std::string sidecar = config.sidecar_out ? *config.sidecar_out
                                                     : *config.normalized_out + ".meta.json";
            write_file(sidecar, sidecar_json(result).dump(2) + "\n");
            report << "normalized table: " << *config.normalized_out << "\n";
        }
        write_file(config.schema_out, serialize_schema(result.schema).dump(2) + "\n");
        report << "schema: " << result.schema.name << " -> " << config.schema_out << "\n";

        if (config.ddl_out || config.populate_dir) {
            StarBundle star = populate_star(result.schema, result.normalized);
            if (config.ddl_out) {
                write_file(*config.ddl_out, star.ddl);
                report << "ddl: " << *config.ddl_out << "\n";
            }
            if (config.populate_dir) {
                std::filesystem::create_directories(*config.populate_dir);
                auto dir = std::filesystem::path(*config.populate_dir);
                for (const auto& t : star.dimension_tables)
                    write_file((dir / (t.name + ".csv")).string(), star_table_csv(t));
                write_file((dir / (star.fact_table.name + ".csv")).string(),
                           star_table_csv(star.fact_table));
                write_file((dir / "star_schema.sql").string(), star.ddl);
                report << "populated: " << *config.populate_dir << " ("
                       << star.dimension_tables.size() + 1 << " tables)\n";
            }
        }
        return ExitOk;
    } catch (const Error& e) {
        report << "error: " << e.what() << "\n";
        return exit_code_for(e);
    }
}

} // namespace tabstar

#endif

// tabstar - infer conceptual star schemas from raw tabular files.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "tabstar/tabstar.hpp"

namespace {

std::optional<tabstar::FormatHint> parse_format(const std::string& format) {
    if (format.empty()) return std::nullopt;
    if (format == "csv") return tabstar::FormatHint::Csv;
    if (format == "tsv") return tabstar::FormatHint::Tsv;
    if (format == "html") return tabstar::FormatHint::Html;
    throw CLI::ValidationError("--format", "expected csv, tsv or html");
}

struct CommonArgs {
    std::string input;
    std::string format;
    std::size_t table_index = 0;
    std::string delimiters = ",;/|";

    void attach(CLI::App* cmd) {
        cmd->add_option("input", input, "Input file (CSV/TSV/HTML)")->required();
        cmd->add_option("--format", format, "Format hint: csv, tsv or html");
        cmd->add_option("--table", table_index,
                        "Table index when the source splits into several (default 0)");
        cmd->add_option("--delimiters", delimiters,
                        "Characters treated as in-cell value separators");
    }

    tabstar::PipelineConfig to_config() const {
        tabstar::PipelineConfig config;
        config.input_path = input;
        config.format_hint = parse_format(format);
        config.table_index = table_index;
        config.multivalue_delimiters = delimiters;
        return config;
    }
};

int run_classify(const CommonArgs& args) {
    auto config = args.to_config();
    try {
        tabstar::RawGrid grid = tabstar::load_table(config, std::cerr);
        auto typology =
            tabstar::classify_table(grid, tabstar::ClassifyOptions{args.delimiters});
        std::cout << tabstar::typology_json(typology) << "\n";
        return tabstar::ExitOk;
    } catch (const tabstar::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return tabstar::exit_code_for(e);
    }
}

int run_normalize(const CommonArgs& args, const std::string& out,
                  const std::string& sidecar) {
    auto config = args.to_config();
    try {
        tabstar::RawGrid grid = tabstar::load_table(config, std::cerr);
        auto typology =
            tabstar::classify_table(grid, tabstar::ClassifyOptions{args.delimiters});
        auto normalized =
            tabstar::normalize(grid, typology, tabstar::TransformOptions{args.delimiters});
        tabstar::write_file(out, tabstar::to_csv(normalized.table));
        tabstar::PipelineResult partial;
        partial.normalized = normalized.table;
        partial.hints = normalized.hints;
        std::string sidecar_path = sidecar.empty() ? out + ".meta.json" : sidecar;
        tabstar::write_file(sidecar_path, tabstar::sidecar_json(partial).dump(2) + "\n");
        std::cerr << "normalized table: " << out << "\n";
        std::cerr << "sidecar: " << sidecar_path << "\n";
        return tabstar::ExitOk;
    } catch (const tabstar::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return tabstar::exit_code_for(e);
    }
}

int run_fds(const CommonArgs& args, double threshold, const std::string& override_path) {
    auto config = args.to_config();
    config.fd_threshold = threshold;
    if (!override_path.empty()) config.override_path = override_path;
    try {
        tabstar::PipelineOptions options;
        options.fd_threshold = threshold;
        options.multivalue_delimiters = args.delimiters;
        if (config.override_path)
            options.overrides = tabstar::load_overrides(*config.override_path);
        tabstar::RawGrid grid = tabstar::load_table(config, std::cerr);
        auto result = tabstar::infer_schema(grid, options);
        for (const auto& fd : result.cover) {
            std::cout << fd.lhs << " -> " << fd.rhs;
            char buffer[32];
            std::snprintf(buffer, sizeof(buffer), "%.6g", fd.error);
            std::cout << " (error=" << buffer << ")\n";
        }
        return tabstar::ExitOk;
    } catch (const tabstar::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return tabstar::exit_code_for(e);
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"tabstar: automatic multidimensional schema inference for tabular data"};
    app.require_subcommand(1);

    // infer
    auto* infer = app.add_subcommand("infer", "Run the full pipeline and write the schema");
    CommonArgs infer_args;
    infer_args.attach(infer);
    double fd_threshold = 0.0;
    std::string override_path, schema_out = "schema.json", normalized_out, ddl_out,
                populate_dir;
    infer->add_option("--fd-threshold", fd_threshold,
                      "Approximate-FD error threshold in [0,1)");
    infer->add_option("--override", override_path, "Override document (JSON)");
    infer->add_option("--out", schema_out, "Schema JSON output path");
    infer->add_option("--normalized", normalized_out, "Also dump the canonical table CSV");
    infer->add_option("--ddl", ddl_out, "Write CREATE TABLE statements");
    infer->add_option("--populate", populate_dir, "Write star CSVs + DDL to a directory");

    // classify
    auto* classify = app.add_subcommand("classify", "Print the table typology as JSON");
    CommonArgs classify_args;
    classify_args.attach(classify);

    // normalize
    auto* normalize = app.add_subcommand("normalize",
                                         "Write the canonical one-dimensional table");
    CommonArgs normalize_args;
    normalize_args.attach(normalize);
    std::string normalize_out = "normalized.csv", normalize_sidecar;
    normalize->add_option("--out", normalize_out, "Canonical CSV output path");
    normalize->add_option("--sidecar", normalize_sidecar,
                          "Sidecar JSON path (default <out>.meta.json)");

    // fds
    auto* fds = app.add_subcommand("fds", "Print the minimal cover of unary FDs");
    CommonArgs fds_args;
    fds_args.attach(fds);
    double fds_threshold = 0.0;
    std::string fds_override;
    fds->add_option("--fd-threshold", fds_threshold,
                    "Approximate-FD error threshold in [0,1)");
    fds->add_option("--override", fds_override, "Override document (JSON)");

    // populate
    auto* populate = app.add_subcommand("populate",
                                        "Run the pipeline and materialize the star schema");
    CommonArgs populate_args;
    populate_args.attach(populate);
    double populate_threshold = 0.0;
    std::string populate_override, populate_out = "schema.json", populate_dir_arg;
    populate->add_option("--fd-threshold", populate_threshold,
                         "Approximate-FD error threshold in [0,1)");
    populate->add_option("--override", populate_override, "Override document (JSON)");
    populate->add_option("--out", populate_out, "Schema JSON output path");
    populate->add_option("--dir", populate_dir_arg, "Output directory for star tables")
        ->required();

    CLI11_PARSE(app, argc, argv);

    if (infer->parsed()) {
        auto config = infer_args.to_config();
        config.fd_threshold = fd_threshold;
        if (!override_path.empty()) config.override_path = override_path;
        config.schema_out = schema_out;
        if (!normalized_out.empty()) config.normalized_out = normalized_out;
        if (!ddl_out.empty()) config.ddl_out = ddl_out;
        if (!populate_dir.empty()) config.populate_dir = populate_dir;
        return tabstar::run_pipeline(config, std::cerr);
    }
    if (classify->parsed()) return run_classify(classify_args);
    if (normalize->parsed())
        return run_normalize(normalize_args, normalize_out, normalize_sidecar);
    if (fds->parsed()) return run_fds(fds_args, fds_threshold, fds_override);
    if (populate->parsed()) {
        auto config = populate_args.to_config();
        config.fd_threshold = populate_threshold;
        if (!populate_override.empty()) config.override_path = populate_override;
        config.schema_out = populate_out;
        config.populate_dir = populate_dir_arg;
        return tabstar::run_pipeline(config, std::cerr);
    }
    return 0;
}

#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "tabstar/pipeline.hpp"

using namespace tabstar;
namespace fs = std::filesystem;

namespace {

const char* kOrdersCsv =
    "idCustomer,nameCustomer,cityCustomer,countryCustomer,classCustomer,"
    "idProduct,nameProduct,categoryProduct,quantity\n"
    "C1,Alice,Lyon,France,gold,P1,Lamp,Home,3\n"
    "C1,Alice,Lyon,France,gold,P2,Desk,Office,1\n"
    "C2,Bob,Lyon,France,silver,P1,Lamp,Home,2\n"
    "C3,Carol,Paris,France,gold,P3,Chair,Office,5\n"
    "C3,Carol,Paris,France,gold,P1,Lamp,Home,2\n"
    "C4,Dan,Madrid,Spain,bronze,P2,Desk,Office,4\n"
    "C5,Eve,Madrid,Spain,gold,P3,Chair,Office,1\n"
    "C6,Alice,Lyon,France,gold,P3,Chair,Office,2\n"
    "C2,Bob,Lyon,France,silver,P4,Sofa,Home,3\n"
    "C4,Dan,Madrid,Spain,bronze,P4,Sofa,Home,2\n"
    "C5,Eve,Madrid,Spain,gold,P5,Lamp,Home,6\n"
    "C6,Alice,Lyon,France,gold,P5,Lamp,Home,2\n";

fs::path temp_dir() {
    auto dir = fs::temp_directory_path() /
               ("tabstar_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(rand()));
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

RawGrid grid_from(const std::string& bytes) {
    auto grids = read_source(bytes, std::nullopt, "mem");
    REQUIRE(grids.size() == 1);
    return split_tables(grids[0])[0];
}

} // namespace

TEST_CASE("infer_schema walks the product-order fixture end to end") {
    auto result = infer_schema(grid_from(kOrdersCsv));
    CHECK(result.typology.structure == Structure::Horizontal);
    CHECK(result.auto_measure_count == 1);
    REQUIRE(result.measures.size() == 2);
    CHECK(result.measures[0].name == "quantity");
    CHECK(result.measures[1].name == "row_count");
    CHECK(result.cover.size() == 6);
    CHECK(result.hierarchies.size() == 3);
    CHECK(result.dimensions.size() == 2);
    CHECK(result.schema.fact.name == "F1");
}

TEST_CASE("the dumped normalized table resumes to the same schema") {
    auto first = infer_schema(grid_from(kOrdersCsv));
    std::string normalized_csv = to_csv(first.normalized);
    auto second = infer_schema(grid_from(normalized_csv));
    CHECK(schema_equal(first.schema, second.schema));
}

TEST_CASE("the product-order schema matches the frozen golden file") {
    auto result = infer_schema(grid_from(kOrdersCsv));
    std::string produced = serialize_schema(result.schema).dump(2) + "\n";
    std::string golden = slurp(fs::path(TABSTAR_GOLDEN_DIR) / "product_order_schema.json");
    REQUIRE(!golden.empty());
    CHECK(produced == golden);
}

TEST_CASE("run_pipeline writes schema, csv, ddl and star tables") {
    auto dir = temp_dir();
    auto input = dir / "orders.csv";
    std::ofstream(input) << kOrdersCsv;

    PipelineConfig config;
    config.input_path = input.string();
    config.schema_out = (dir / "schema.json").string();
    config.normalized_out = (dir / "normalized.csv").string();
    config.ddl_out = (dir / "schema.sql").string();
    config.populate_dir = (dir / "star").string();

    std::ostringstream report;
    int code = run_pipeline(config, report);
    INFO(report.str());
    REQUIRE(code == ExitOk);
    CHECK(fs::exists(dir / "schema.json"));
    CHECK(fs::exists(dir / "normalized.csv"));
    CHECK(fs::exists(dir / "normalized.csv.meta.json"));
    CHECK(fs::exists(dir / "schema.sql"));
    CHECK(fs::exists(dir / "star" / "dim_D1.csv"));
    CHECK(fs::exists(dir / "star" / "dim_D2.csv"));
    CHECK(fs::exists(dir / "star" / "fact_F1.csv"));
    CHECK(fs::exists(dir / "star" / "star_schema.sql"));

    std::string log = report.str();
    CHECK(log.find("measures: 1 auto, 0 user") != std::string::npos);
    CHECK(log.find("hierarchies: 3") != std::string::npos);
    CHECK(log.find("dimensions: 2") != std::string::npos);

    auto sidecar = nlohmann::json::parse(slurp(dir / "normalized.csv.meta.json"));
    CHECK(sidecar.contains("transform_log"));
    CHECK(sidecar.contains("hierarchy_hints"));
    fs::remove_all(dir);
}

TEST_CASE("identical input and config give identical artifact bytes") {
    auto dir = temp_dir();
    auto input = dir / "orders.csv";
    std::ofstream(input) << kOrdersCsv;
    std::string bytes[2];
    for (int i = 0; i < 2; ++i) {
        PipelineConfig config;
        config.input_path = input.string();
        config.schema_out = (dir / ("schema" + std::to_string(i) + ".json")).string();
        std::ostringstream report;
        REQUIRE(run_pipeline(config, report) == ExitOk);
        bytes[i] = slurp(config.schema_out);
    }
    CHECK(bytes[0] == bytes[1]);
    fs::remove_all(dir);
}

TEST_CASE("exit codes match the declared error classes") {
    auto dir = temp_dir();
    std::ostringstream report;

    SECTION("missing file is an input error") {
        PipelineConfig config;
        config.input_path = (dir / "no_such_file.csv").string();
        CHECK(run_pipeline(config, report) == ExitInputError);
    }
    SECTION("an all-text table with row_count removed leaves no measures") {
        auto input = dir / "text.csv";
        std::ofstream(input) << "a,b\nx,y\nz,w\nx,w\nz,y\n";
        auto override_path = dir / "override.json";
        std::ofstream(override_path)
            << R"({"measures": [{"attribute": "row_count", "action": "remove"}]})";
        PipelineConfig config;
        config.input_path = input.string();
        config.override_path = override_path.string();
        config.schema_out = (dir / "schema.json").string();
        CHECK(run_pipeline(config, report) == ExitNoMeasures);
    }
    SECTION("a nested cell fails normalization") {
        auto input = dir / "nested.csv";
        std::ofstream(input) << "a,b\nx,\"<table><tr><td>1</td></tr></table>\"\ny,2\n";
        PipelineConfig config;
        config.input_path = input.string();
        config.format_hint = FormatHint::Csv;
        config.schema_out = (dir / "schema.json").string();
        CHECK(run_pipeline(config, report) == ExitNormalizationError);
    }
    SECTION("a malformed override document is rejected") {
        auto input = dir / "ok.csv";
        std::ofstream(input) << "k,v\na,1\nb,2\n";
        auto override_path = dir / "override.json";
        std::ofstream(override_path) << R"({"measures": "not-an-array"})";
        PipelineConfig config;
        config.input_path = input.string();
        config.override_path = override_path.string();
        config.schema_out = (dir / "schema.json").string();
        CHECK(run_pipeline(config, report) == ExitInvalidOverride);
    }
    SECTION("a bad formula is rejected") {
        auto input = dir / "ok2.csv";
        std::ofstream(input) << "k,v\na,1\nb,2\n";
        auto override_path = dir / "override.json";
        std::ofstream(override_path)
            << R"({"measures": [{"name": "m", "formula": "v / ", "action": "add"}]})";
        PipelineConfig config;
        config.input_path = input.string();
        config.override_path = override_path.string();
        config.schema_out = (dir / "schema.json").string();
        CHECK(run_pipeline(config, report) == ExitInvalidOverride);
    }
    SECTION("a table index out of range is an input error") {
        auto input = dir / "ok3.csv";
        std::ofstream(input) << "k,v\na,1\n";
        PipelineConfig config;
        config.input_path = input.string();
        config.table_index = 5;
        CHECK(run_pipeline(config, report) == ExitInputError);
    }
    fs::remove_all(dir);
}

TEST_CASE("the typology json is a single line with the axes as keys") {
    auto ty = classify_table(grid_from("k,v\na,1\nb,2\n"));
    auto doc = nlohmann::json::parse(typology_json(ty));
    CHECK(doc["structure"] == "horizontal");
    CHECK(doc["header"] == "simple");
    CHECK(doc["cell_content"].is_array());
    CHECK(typology_json(ty).find('\n') == std::string::npos);
}

TEST_CASE("overrides flow through the whole pipeline") {
    auto dir = temp_dir();
    auto input = dir / "orders.csv";
    std::ofstream(input) << kOrdersCsv;
    auto override_path = dir / "override.json";
    std::ofstream(override_path) << R"({
        "schema_name": "sales",
        "dimension_names": {"D1": "customer", "D2": "product"},
        "measures": [{"attribute": "quantity", "action": "replace",
                      "aggregations": ["sum"]}]
    })";
    PipelineConfig config;
    config.input_path = input.string();
    config.override_path = override_path.string();
    config.schema_out = (dir / "schema.json").string();
    std::ostringstream report;
    REQUIRE(run_pipeline(config, report) == ExitOk);
    auto doc = nlohmann::json::parse(slurp(dir / "schema.json"));
    CHECK(doc["name"] == "sales");
    CHECK(doc["dimensions"][0]["name"] == "customer");
    CHECK(doc["dimensions"][1]["name"] == "product");
    CHECK(doc["fact"]["measures"][0]["aggregations"].size() == 1);
    fs::remove_all(dir);
}

TEST_CASE("multi-table sources honor the table index") {
    auto dir = temp_dir();
    auto input = dir / "two.csv";
    std::ofstream(input) << "k,v\na,1\nb,2\n,\nc,d\nx,3\ny,4\nz,3\n";
    PipelineConfig config;
    config.input_path = input.string();
    config.table_index = 1;
    config.schema_out = (dir / "schema.json").string();
    std::ostringstream report;
    REQUIRE(run_pipeline(config, report) == ExitOk);
    CHECK(report.str().find("2 tables") != std::string::npos);
    auto doc = nlohmann::json::parse(slurp(dir / "schema.json"));
    // second table's value column drives the measure
    CHECK(doc["fact"]["measures"][0]["source"] == "d");
    fs::remove_all(dir);
}

TEST_CASE("fds are excluded over measure attributes") {
    auto result = infer_schema(grid_from(kOrdersCsv));
    for (const auto& fd : result.mined_fds) {
        CHECK(fd.lhs != "quantity");
        CHECK(fd.rhs != "quantity");
    }
}

TEST_CASE("single-row tables warn instead of failing") {
    auto result = infer_schema(grid_from("k,v\na,1\n"));
    CHECK(result.mined_fds.empty());
    REQUIRE(!result.warnings.empty());
    bool mentioned = false;
    for (const auto& w : result.warnings)
        if (w.find("TooFewRows") != std::string::npos) mentioned = true;
    CHECK(mentioned);
}

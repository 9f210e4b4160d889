#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "tabstar/fdmine.hpp"

using namespace tabstar;

namespace {

CanonicalTable order_table() {
    std::vector<std::string> attrs = {"idCustomer",   "nameCustomer", "cityCustomer",
                                      "countryCustomer", "classCustomer", "idProduct",
                                      "nameProduct", "categoryProduct"};
    // name -> (city, class); city -> country; product name -> category; with
    // enough collisions that no reverse dependency holds.
    std::vector<std::vector<std::string>> rows = {
        {"C1", "Alice", "Lyon", "France", "gold", "P1", "Lamp", "Home"},
        {"C1", "Alice", "Lyon", "France", "gold", "P2", "Desk", "Office"},
        {"C2", "Bob", "Lyon", "France", "silver", "P1", "Lamp", "Home"},
        {"C3", "Carol", "Paris", "France", "gold", "P3", "Chair", "Office"},
        {"C3", "Carol", "Paris", "France", "gold", "P1", "Lamp", "Home"},
        {"C4", "Dan", "Madrid", "Spain", "bronze", "P2", "Desk", "Office"},
        {"C5", "Eve", "Madrid", "Spain", "gold", "P3", "Chair", "Office"},
        {"C6", "Alice", "Lyon", "France", "gold", "P3", "Chair", "Office"},
        {"C2", "Bob", "Lyon", "France", "silver", "P4", "Sofa", "Home"},
        {"C4", "Dan", "Madrid", "Spain", "bronze", "P4", "Sofa", "Home"},
        {"C5", "Eve", "Madrid", "Spain", "gold", "P5", "Lamp", "Home"},
        {"C6", "Alice", "Lyon", "France", "gold", "P5", "Lamp", "Home"},
    };
    return CanonicalTable(attrs, std::move(rows));
}

bool contains(const std::vector<FunctionalDependency>& fds, const std::string& lhs,
              const std::string& rhs) {
    for (const auto& fd : fds)
        if (fd.lhs == lhs && fd.rhs == rhs) return true;
    return false;
}

} // namespace

TEST_CASE("the product-order fixture yields the paper's six dependencies") {
    auto fds = mine_unary_fds(order_table(), {}, 0.0);
    CHECK(contains(fds, "idCustomer", "nameCustomer"));
    CHECK(contains(fds, "nameCustomer", "cityCustomer"));
    CHECK(contains(fds, "cityCustomer", "countryCustomer"));
    CHECK(contains(fds, "nameCustomer", "classCustomer"));
    CHECK(contains(fds, "idProduct", "nameProduct"));
    CHECK(contains(fds, "nameProduct", "categoryProduct"));
    // and none of the reversals
    CHECK(!contains(fds, "nameCustomer", "idCustomer"));
    CHECK(!contains(fds, "cityCustomer", "nameCustomer"));
    CHECK(!contains(fds, "countryCustomer", "cityCustomer"));
    CHECK(!contains(fds, "classCustomer", "nameCustomer"));
    CHECK(!contains(fds, "nameProduct", "idProduct"));
    CHECK(!contains(fds, "categoryProduct", "nameProduct"));
}

TEST_CASE("a single attribute has no pairs to mine") {
    CanonicalTable t({"only"}, {{"a"}, {"b"}, {"a"}});
    CHECK(mine_unary_fds(t, {}, 0.0).empty());
}

TEST_CASE("mining needs two rows") {
    CanonicalTable t({"a", "b"}, {{"1", "2"}});
    try {
        mine_unary_fds(t, {}, 0.0);
        FAIL("expected TooFewRows");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::TooFewRows);
    }
}

TEST_CASE("excluded attributes never appear on either side") {
    auto fds = mine_unary_fds(order_table(), {"idCustomer"}, 0.0);
    for (const auto& fd : fds) {
        CHECK(fd.lhs != "idCustomer");
        CHECK(fd.rhs != "idCustomer");
    }
}

// --- g3 ---

namespace {

/// Deletion-enumeration oracle: the smallest number of removed rows after
/// which lhs -> rhs holds exactly, found by trying all subsets.
double g3_by_enumeration(const CanonicalTable& t, const std::string& lhs,
                         const std::string& rhs) {
    std::size_t n = t.n_rows();
    std::size_t li = t.attribute_index(lhs), ri = t.attribute_index(rhs);
    for (std::size_t k = 0; k <= n; ++k) {
        for (std::size_t mask = 0; mask < (1u << n); ++mask) {
            if (static_cast<std::size_t>(__builtin_popcount(mask)) != k) continue;
            std::map<std::string, std::set<std::string>> image;
            bool holds = true;
            for (std::size_t r = 0; r < n && holds; ++r) {
                if (mask & (1u << r)) continue;
                if (t.value(r, li).empty()) continue;
                image[t.value(r, li)].insert(t.value(r, ri));
                if (image[t.value(r, li)].size() > 1) holds = false;
            }
            if (holds) return static_cast<double>(k) / n;
        }
    }
    return 1.0;
}

} // namespace

TEST_CASE("g3 is zero when the dependency holds") {
    CanonicalTable t({"a", "b"}, {{"x", "1"}, {"x", "1"}, {"y", "2"}});
    CHECK(g3_error(t, "a", "b") == 0.0);
}

TEST_CASE("one deviant row out of four costs a quarter") {
    CanonicalTable t({"a", "b"}, {{"a", "x"}, {"a", "x"}, {"a", "x"}, {"a", "y"}});
    CHECK(g3_error(t, "a", "b") == Catch::Approx(0.25));
    CHECK(g3_by_enumeration(t, "a", "b") == Catch::Approx(0.25));
}

TEST_CASE("an all-distinct left side never violates") {
    CanonicalTable t({"a", "b"}, {{"1", "x"}, {"2", "x"}, {"3", "y"}});
    CHECK(g3_error(t, "a", "b") == 0.0);
}

TEST_CASE("g3 matches the deletion oracle on small fixtures") {
    CanonicalTable t({"a", "b"},
                     {{"u", "1"}, {"u", "2"}, {"u", "2"}, {"v", "3"}, {"v", "3"},
                      {"v", "4"}, {"w", "5"}, {"", "9"}});
    CHECK(g3_error(t, "a", "b") == Catch::Approx(g3_by_enumeration(t, "a", "b")));
    CanonicalTable t2({"a", "b"},
                      {{"u", "1"}, {"u", "1"}, {"v", "1"}, {"v", "2"}, {"v", "2"},
                       {"w", "3"}, {"w", "4"}});
    CHECK(g3_error(t2, "a", "b") == Catch::Approx(g3_by_enumeration(t2, "a", "b")));
}

TEST_CASE("missing left-hand values are per-row singletons") {
    CanonicalTable t({"a", "b"}, {{"", "1"}, {"", "2"}, {"x", "3"}, {"x", "3"}});
    CHECK(g3_error(t, "a", "b") == 0.0);
}

// --- random-table oracle equivalence ---

namespace {

CanonicalTable random_table(std::mt19937& rng, std::size_t max_attrs = 8,
                            std::size_t max_rows = 200) {
    std::uniform_int_distribution<std::size_t> n_attrs_dist(2, max_attrs);
    std::uniform_int_distribution<std::size_t> n_rows_dist(2, max_rows);
    std::uniform_int_distribution<int> domain_dist(2, 20);
    std::uniform_int_distribution<int> missing_dist(0, 10);
    std::size_t n_attrs = n_attrs_dist(rng), n_rows = n_rows_dist(rng);
    std::vector<int> domain(n_attrs);
    std::vector<int> missing_pct(n_attrs);
    for (auto& d : domain) d = domain_dist(rng);
    for (auto& m : missing_pct) m = missing_dist(rng);
    std::vector<std::string> attrs;
    for (std::size_t a = 0; a < n_attrs; ++a) attrs.push_back("a" + std::to_string(a));
    std::vector<std::vector<std::string>> rows;
    for (std::size_t r = 0; r < n_rows; ++r) {
        std::vector<std::string> row;
        bool non_empty = false;
        for (std::size_t a = 0; a < n_attrs; ++a) {
            if (static_cast<int>(rng() % 100) < missing_pct[a]) {
                row.push_back("");
            } else {
                row.push_back("v" + std::to_string(rng() % domain[a]));
                non_empty = true;
            }
        }
        if (!non_empty) row[0] = "v0";
        rows.push_back(std::move(row));
    }
    return CanonicalTable(attrs, std::move(rows));
}

} // namespace

TEST_CASE("the miner equals the brute-force oracle on random tables") {
    std::mt19937 rng(1234);
    for (int i = 0; i < 30; ++i) {
        auto t = random_table(rng);
        for (double threshold : {0.0, 0.05}) {
            auto mined = mine_unary_fds(t, {}, threshold);
            auto brute = brute_force_fds(t, threshold);
            REQUIRE(mined.size() == brute.size());
            for (std::size_t k = 0; k < mined.size(); ++k) {
                CHECK(mined[k].lhs == brute[k].lhs);
                CHECK(mined[k].rhs == brute[k].rhs);
                CHECK(mined[k].error == Catch::Approx(brute[k].error).margin(1e-12));
            }
        }
    }
}

TEST_CASE("raising the threshold only adds dependencies") {
    std::mt19937 rng(555);
    for (int i = 0; i < 10; ++i) {
        auto t = random_table(rng, 5, 60);
        std::vector<double> thresholds = {0.0, 0.01, 0.05, 0.1};
        std::vector<std::set<std::pair<std::string, std::string>>> results;
        for (double tau : thresholds) {
            std::set<std::pair<std::string, std::string>> pairs;
            for (const auto& fd : mine_unary_fds(t, {}, tau)) pairs.insert({fd.lhs, fd.rhs});
            results.push_back(std::move(pairs));
        }
        for (std::size_t k = 1; k < results.size(); ++k)
            CHECK(std::includes(results[k].begin(), results[k].end(),
                                results[k - 1].begin(), results[k - 1].end()));
    }
}

TEST_CASE("g3 respects its bounds on random tables") {
    std::mt19937 rng(808);
    for (int i = 0; i < 10; ++i) {
        auto t = random_table(rng, 4, 50);
        double n = static_cast<double>(t.n_rows());
        for (const auto& lhs : t.attributes()) {
            std::size_t li = t.attribute_index(lhs);
            std::set<std::string> distinct_values;
            std::size_t missing = 0;
            for (const auto& row : t.rows()) {
                if (row[li].empty()) ++missing;
                else distinct_values.insert(row[li]);
            }
            double effective_distinct =
                static_cast<double>(distinct_values.size() + missing);
            for (const auto& rhs : t.attributes()) {
                if (rhs == lhs) continue;
                double err = g3_error(t, lhs, rhs);
                CHECK(err >= 0.0);
                CHECK(err <= (n - effective_distinct) / n + 1e-12);
            }
        }
    }
}

// --- minimal cover ---

namespace {

std::vector<FunctionalDependency> make_fds(
    const std::vector<std::pair<std::string, std::string>>& edges) {
    std::vector<FunctionalDependency> fds;
    for (const auto& [l, r] : edges) fds.push_back({l, r, 0.0});
    return fds;
}

std::set<std::pair<std::string, std::string>> closure_pairs(
    const std::vector<FunctionalDependency>& fds) {
    std::set<std::string> nodes;
    std::map<std::string, std::set<std::string>> adjacency;
    for (const auto& fd : fds) {
        nodes.insert(fd.lhs);
        nodes.insert(fd.rhs);
        adjacency[fd.lhs].insert(fd.rhs);
    }
    std::set<std::pair<std::string, std::string>> pairs;
    for (const auto& start : nodes) {
        std::vector<std::string> stack(adjacency[start].begin(), adjacency[start].end());
        std::set<std::string> seen;
        while (!stack.empty()) {
            auto node = stack.back();
            stack.pop_back();
            if (!seen.insert(node).second) continue;
            pairs.insert({start, node});
            for (const auto& next : adjacency[node]) stack.push_back(next);
        }
    }
    return pairs;
}

} // namespace

TEST_CASE("textbook transitivity is pruned") {
    auto cover = minimal_cover(make_fds({{"A", "B"}, {"B", "C"}, {"A", "C"}}));
    REQUIRE(cover.size() == 2);
    CHECK(contains(cover, "A", "B"));
    CHECK(contains(cover, "B", "C"));
}

TEST_CASE("the product-order closure reduces to the six paper dependencies") {
    auto cover = minimal_cover(make_fds({{"idCustomer", "nameCustomer"},
                                         {"nameCustomer", "cityCustomer"},
                                         {"cityCustomer", "countryCustomer"},
                                         {"nameCustomer", "classCustomer"},
                                         {"idProduct", "nameProduct"},
                                         {"nameProduct", "categoryProduct"},
                                         {"idCustomer", "cityCustomer"},
                                         {"idCustomer", "countryCustomer"}}));
    REQUIRE(cover.size() == 6);
    CHECK(contains(cover, "idCustomer", "nameCustomer"));
    CHECK(contains(cover, "nameCustomer", "cityCustomer"));
    CHECK(contains(cover, "cityCustomer", "countryCustomer"));
    CHECK(contains(cover, "nameCustomer", "classCustomer"));
    CHECK(contains(cover, "idProduct", "nameProduct"));
    CHECK(contains(cover, "nameProduct", "categoryProduct"));
}

TEST_CASE("cycles survive the cover so classes stay intact") {
    auto cover = minimal_cover(make_fds({{"A", "B"}, {"B", "A"}}));
    CHECK(cover.size() == 2);
    auto classes = equivalence_classes(cover);
    REQUIRE(classes.size() == 1);
    CHECK(classes[0] == std::set<std::string>{"A", "B"});
}

TEST_CASE("random digraphs keep their closure and reach a fixpoint") {
    std::mt19937 rng(31337);
    for (int trial = 0; trial < 100; ++trial) {
        std::size_t n_nodes = 3 + rng() % 8;
        std::vector<std::pair<std::string, std::string>> edges;
        for (std::size_t a = 0; a < n_nodes; ++a)
            for (std::size_t b = 0; b < n_nodes; ++b) {
                if (a == b) continue;
                bool dag_only = trial % 2 == 0;
                if (dag_only && b < a) continue; // topological order forces a DAG
                if (rng() % 100 < 25)
                    edges.emplace_back(std::string(1, char('A' + a)),
                                       std::string(1, char('A' + b)));
            }
        auto fds = make_fds(edges);
        auto cover = minimal_cover(fds);
        CHECK(closure_pairs(cover) == closure_pairs(fds));
        auto again = minimal_cover(cover);
        CHECK(again == cover);
        // no remaining shortcut: removing any edge breaks its reachability
        for (std::size_t k = 0; k < cover.size(); ++k) {
            auto without = cover;
            without.erase(without.begin() + k);
            auto pairs = closure_pairs(without);
            CHECK(!pairs.count({cover[k].lhs, cover[k].rhs}));
        }
    }
}

// --- equivalence classes ---

TEST_CASE("mutual dependencies form one class") {
    auto classes = equivalence_classes(make_fds({{"A", "B"}, {"B", "A"}}));
    REQUIRE(classes.size() == 1);
    CHECK(classes[0] == std::set<std::string>{"A", "B"});
}

TEST_CASE("the paper example has no equivalent attributes") {
    auto fds = mine_unary_fds(order_table(), {}, 0.0);
    CHECK(equivalence_classes(minimal_cover(fds)).empty());
}

TEST_CASE("a three-cycle is one component") {
    auto classes = equivalence_classes(make_fds({{"A", "B"}, {"B", "C"}, {"C", "A"}}));
    REQUIRE(classes.size() == 1);
    CHECK(classes[0] == std::set<std::string>{"A", "B", "C"});
}

TEST_CASE("cycles always collapse into one class after mining") {
    std::mt19937 rng(2024);
    for (int trial = 0; trial < 20; ++trial) {
        auto t = random_table(rng, 5, 40);
        auto fds = mine_unary_fds(t, {}, 0.0);
        auto cover = minimal_cover(fds);
        auto classes = equivalence_classes(cover);
        // contracting classes leaves an acyclic graph
        std::map<std::string, std::string> representative;
        for (const auto& cls : classes)
            for (const auto& member : cls) representative[member] = *cls.begin();
        auto rep = [&](const std::string& a) {
            auto it = representative.find(a);
            return it == representative.end() ? a : it->second;
        };
        std::vector<FunctionalDependency> contracted;
        for (const auto& fd : cover)
            if (rep(fd.lhs) != rep(fd.rhs)) contracted.push_back({rep(fd.lhs), rep(fd.rhs), 0});
        auto pairs = closure_pairs(contracted);
        for (const auto& [a, b] : pairs) CHECK(!pairs.count({b, a}));
    }
}

// --- brute force specifics ---

TEST_CASE("the oracle ignores rows with a missing left value") {
    CanonicalTable t({"a", "b"}, {{"", "1"}, {"", "2"}, {"x", "3"}, {"x", "3"}});
    auto fds = brute_force_fds(t, 0.0);
    CHECK(contains(fds, "a", "b"));
}

TEST_CASE("threshold zero results are a subset of threshold 0.1") {
    std::mt19937 rng(777);
    auto t = random_table(rng, 5, 80);
    auto exact = brute_force_fds(t, 0.0);
    auto loose = brute_force_fds(t, 0.1);
    for (const auto& fd : exact) CHECK(contains(loose, fd.lhs, fd.rhs));
}

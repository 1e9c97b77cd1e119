#include <doctest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "flowbins/graph.hpp"
#include "flowbins/rng.hpp"

using namespace flowbins;

namespace {

Graph petersen() {
    // outer 5-cycle, inner pentagram, spokes
    std::vector<std::pair<int, int>> edges;
    for (int i = 0; i < 5; ++i) edges.push_back({i, (i + 1) % 5});
    for (int i = 0; i < 5; ++i) edges.push_back({5 + i, 5 + (i + 2) % 5});
    for (int i = 0; i < 5; ++i) edges.push_back({i, 5 + i});
    return Graph::from_edges(10, edges);
}

// min over all proper bipartitions of the crossing-edge count
int brute_force_min_cut(const Graph& g) {
    int best = -1;
    for (std::uint32_t mask = 1; mask < (1u << (g.n - 1)); ++mask) {
        std::uint32_t side = mask;  // vertex n-1 always on the other side
        int cut = 0;
        for (auto [u, v] : g.edges) {
            bool us = u < g.n - 1 && ((side >> u) & 1u);
            bool vs = v < g.n - 1 && ((side >> v) & 1u);
            if (us != vs) ++cut;
        }
        if (best < 0 || cut < best) best = cut;
    }
    return best;
}

Graph random_connected_graph(int n, Rng& rng) {
    std::vector<std::pair<int, int>> edges;
    for (int v = 1; v < n; ++v) edges.push_back({v, static_cast<int>(rng.next_below(v))});
    int extra = static_cast<int>(rng.next_below(2 * n));
    for (int i = 0; i < extra; ++i) {
        int u = static_cast<int>(rng.next_below(n));
        int v = static_cast<int>(rng.next_below(n));
        if (u != v) edges.push_back({u, v});
    }
    return Graph::from_edges(n, edges);
}

}  // namespace

TEST_CASE("edge list: triangle parses") {
    std::istringstream in("# triangle\nn 3\n0 1\n1 2\n2 0\n");
    Graph g = load_edge_list(in);
    CHECK(g.n == 3);
    CHECK(g.m() == 3);
    CHECK(validate_regular(g) == 2);
    for (int v = 0; v < 3; ++v) CHECK(g.degree(v) == 2);
}

TEST_CASE("edge list: crlf and comments") {
    std::istringstream in("n 3\r\n0 1\r\n# c\r\n1 2\r\n2 0\r\n");
    Graph g = load_edge_list(in);
    CHECK(g.m() == 3);
}

TEST_CASE("edge list: self-loop rejected with line number") {
    std::istringstream in("n 2\n0 0\n");
    CHECK_THROWS_WITH_AS(load_edge_list(in), doctest::Contains("line 2"), std::runtime_error);
}

TEST_CASE("edge list: disconnected rejected") {
    std::istringstream in("n 4\n0 1\n2 3\n");
    CHECK_THROWS_WITH_AS(load_edge_list(in), doctest::Contains("not connected"),
                         std::runtime_error);
}

TEST_CASE("edge list: malformed and out-of-range lines") {
    std::istringstream bad("n 3\n0 x\n");
    CHECK_THROWS_AS(load_edge_list(bad), std::runtime_error);
    std::istringstream oob("n 3\n0 7\n");
    CHECK_THROWS_WITH_AS(load_edge_list(oob), doctest::Contains("line 2"), std::runtime_error);
    std::istringstream nohdr("0 1\n");
    CHECK_THROWS_AS(load_edge_list(nohdr), std::runtime_error);
}

TEST_CASE("edge list: round trip") {
    Graph g = generate({Family::Dumbbell, 10, 0, 2, 1});
    std::ostringstream out;
    write_edge_list(g, out);
    std::istringstream in(out.str());
    Graph h = load_edge_list(in);
    CHECK(h.n == g.n);
    CHECK(h.edges == g.edges);
}

TEST_CASE("generator: family counts match the closed forms") {
    Graph cyc = generate({Family::Cycle, 10});
    CHECK(cyc.n == 10);
    CHECK(cyc.m() == 10);
    CHECK(validate_regular(cyc) == 2);

    Graph tor = generate({Family::Torus2d, 16});
    CHECK(tor.n == 16);
    CHECK(tor.m() == 32);
    CHECK(validate_regular(tor) == 4);

    Graph cube = generate({Family::Hypercube, 8});
    CHECK(cube.m() == 12);
    CHECK(validate_regular(cube) == 3);

    Graph k5 = generate({Family::Complete, 5});
    CHECK(k5.m() == 10);
    CHECK(validate_regular(k5) == 4);
}

TEST_CASE("generator: dumbbell has the bridge connectivity") {
    Graph g = generate({Family::Dumbbell, 20, 0, 2, 1});
    CHECK(g.n == 20);
    CHECK(g.m() == 2 * 45 + 2);
    CHECK(edge_connectivity(g) == 2);
    CHECK(brute_force_min_cut(generate({Family::Dumbbell, 8, 0, 2, 1})) == 2);
}

TEST_CASE("generator: random regular is simple, regular and connected") {
    Graph g = generate({Family::RandomRegular, 12, 3, 1, 42});
    CHECK(validate_regular(g) == 3);
    CHECK(g.connected());
    std::set<std::pair<int, int>> seen;
    for (int e = 0; e < g.m(); ++e) CHECK(seen.insert(g.canonical(e)).second);
    // deterministic per seed
    Graph h = generate({Family::RandomRegular, 12, 3, 1, 42});
    CHECK(h.edges == g.edges);
}

TEST_CASE("generator: parameter errors") {
    CHECK_THROWS_AS(generate({Family::RandomRegular, 5, 3, 1, 1}), std::invalid_argument);
    CHECK_THROWS_AS(generate({Family::RandomRegular, 6, 7, 1, 1}), std::invalid_argument);
    CHECK_THROWS_AS(generate({Family::Torus2d, 12}), std::invalid_argument);
    CHECK_THROWS_AS(generate({Family::Dumbbell, 9, 0, 1, 1}), std::invalid_argument);
    CHECK_THROWS_AS(generate({Family::Cycle, 2}), std::invalid_argument);
}

TEST_CASE("edge connectivity: known values") {
    CHECK(edge_connectivity(generate({Family::Cycle, 17})) == 2);
    CHECK(edge_connectivity(generate({Family::Complete, 4})) == 3);
    CHECK(edge_connectivity(petersen()) == 3);
    CHECK(brute_force_min_cut(petersen()) == 3);
    // equals d for complete graphs and hypercubes
    CHECK(edge_connectivity(generate({Family::Complete, 9})) == 8);
    CHECK(edge_connectivity(generate({Family::Hypercube, 16})) == 4);
}

TEST_CASE("edge connectivity: agrees with the bipartition oracle") {
    Rng rng(2024);
    for (int trial = 0; trial < 40; ++trial) {
        int n = 4 + static_cast<int>(rng.next_below(8));
        Graph g = random_connected_graph(n, rng);
        CHECK(edge_connectivity(g) == brute_force_min_cut(g));
    }
}

TEST_CASE("edge connectivity: at most d for regular graphs") {
    for (int n : {8, 12}) {
        Graph g = generate({Family::RandomRegular, n, 4, 1, static_cast<std::uint64_t>(n)});
        CHECK(edge_connectivity(g) <= 4);
    }
}

TEST_CASE("validate_regular: path reports offenders") {
    Graph p3 = Graph::from_edges(3, {{0, 1}, {1, 2}});
    CHECK_THROWS_WITH_AS(validate_regular(p3), doctest::Contains("not regular"),
                         std::runtime_error);
    CHECK(p3.regular_degree() == std::nullopt);
    CHECK(p3.mean_degree() == 1);
}

TEST_CASE("graph: parallel edges carry distinct ids") {
    Graph g = Graph::from_edges(2, {{0, 1}, {1, 0}});
    CHECK(g.m() == 2);
    CHECK(g.degree(0) == 2);
    CHECK(g.canonical(1) == std::pair{0, 1});
    CHECK(edge_connectivity(g) == 2);
}

TEST_CASE("connected_subset") {
    Graph g = generate({Family::Cycle, 6});
    CHECK(connected_subset(g, {0, 1, 2}));
    CHECK(!connected_subset(g, {0, 2, 4}));
    CHECK(connected_subset(g, {4}));
}

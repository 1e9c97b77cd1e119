#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace flowbins {

// Undirected multigraph: parallel edges allowed, self-loops forbidden.
// Immutable after construction; all modules assume a single connected
// component.
struct Graph {
    int n = 0;
    std::vector<std::pair<int, int>> edges;               // endpoints per edge id
    std::vector<std::vector<std::pair<int, int>>> adj;    // vertex -> (neighbor, edge id)

    int m() const { return static_cast<int>(edges.size()); }
    int degree(int v) const { return static_cast<int>(adj[v].size()); }

    // canonical orientation of edge e: (min, max)
    std::pair<int, int> canonical(int e) const {
        auto [u, v] = edges[e];
        return u < v ? std::pair{u, v} : std::pair{v, u};
    }

    bool connected() const;
    // nullopt if degrees differ
    std::optional<int> regular_degree() const;
    // rounded mean degree 2m/n; the degree parameter used for irregular graphs
    int mean_degree() const;

    // Validates endpoints, rejects self-loops, builds the adjacency index.
    static Graph from_edges(int n, std::vector<std::pair<int, int>> edges);
};

// true iff the subgraph induced by `verts` (sorted vertex ids) is connected
bool connected_subset(const Graph& g, const std::vector<int>& verts);

// Edge-list text format: optional '#' comments, directive "n <count>", then
// one "u v" per line. Rejects self-loops, out-of-range ids and disconnected
// graphs; errors name the offending line.
Graph load_edge_list(std::istream& in);
Graph load_edge_list_file(const std::string& path);
void write_edge_list(const Graph& g, std::ostream& out);

enum class Family { Cycle, Torus2d, Hypercube, Complete, RandomRegular, Dumbbell };

const char* family_name(Family f);
Family family_from_name(const std::string& name);

struct GenSpec {
    Family family = Family::Cycle;
    int n = 0;
    int degree = 0;         // random_regular
    int bridge_count = 1;   // dumbbell
    std::uint64_t seed = 1; // random_regular
};

Graph generate(const GenSpec& spec);

// Size of the global minimum edge cut (Stoer-Wagner); requires connectivity.
int edge_connectivity(const Graph& g);

// Returns d if every degree equals d, otherwise throws listing offenders.
int validate_regular(const Graph& g);

}  // namespace flowbins

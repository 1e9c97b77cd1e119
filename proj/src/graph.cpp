#include "flowbins/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <queue>
#include <set>
#include <sstream>
#include <stdexcept>

#include "flowbins/rng.hpp"

namespace flowbins {

Graph Graph::from_edges(int n, std::vector<std::pair<int, int>> edges) {
    if (n <= 0) throw std::invalid_argument("graph: vertex count must be positive");
    Graph g;
    g.n = n;
    g.edges = std::move(edges);
    g.adj.assign(n, {});
    for (int e = 0; e < g.m(); ++e) {
        auto [u, v] = g.edges[e];
        if (u < 0 || u >= n || v < 0 || v >= n)
            throw std::invalid_argument("graph: edge endpoint out of range");
        if (u == v) throw std::invalid_argument("graph: self-loops are not allowed");
        g.adj[u].push_back({v, e});
        g.adj[v].push_back({u, e});
    }
    return g;
}

bool Graph::connected() const {
    if (n == 0) return false;
    std::vector<char> seen(n, 0);
    std::vector<int> stack = {0};
    seen[0] = 1;
    int count = 1;
    while (!stack.empty()) {
        int u = stack.back();
        stack.pop_back();
        for (auto [v, e] : adj[u]) {
            (void)e;
            if (!seen[v]) {
                seen[v] = 1;
                ++count;
                stack.push_back(v);
            }
        }
    }
    return count == n;
}

std::optional<int> Graph::regular_degree() const {
    if (n == 0) return std::nullopt;
    int d = degree(0);
    for (int v = 1; v < n; ++v)
        if (degree(v) != d) return std::nullopt;
    return d;
}

int Graph::mean_degree() const {
    return static_cast<int>(std::llround(2.0 * m() / n));
}

bool connected_subset(const Graph& g, const std::vector<int>& verts) {
    if (verts.empty()) return false;
    if (verts.size() == 1) return true;
    std::vector<char> member(g.n, 0), seen(g.n, 0);
    for (int v : verts) member[v] = 1;
    std::vector<int> stack = {verts[0]};
    seen[verts[0]] = 1;
    size_t count = 1;
    while (!stack.empty()) {
        int u = stack.back();
        stack.pop_back();
        for (auto [v, e] : g.adj[u]) {
            (void)e;
            if (member[v] && !seen[v]) {
                seen[v] = 1;
                ++count;
                stack.push_back(v);
            }
        }
    }
    return count == verts.size();
}

namespace {

[[noreturn]] void parse_fail(int line_no, const std::string& what) {
    throw std::runtime_error("edge list, line " + std::to_string(line_no) + ": " + what);
}

}  // namespace

Graph load_edge_list(std::istream& in) {
    std::string line;
    int line_no = 0;
    int n = -1;
    std::vector<std::pair<int, int>> edges;
    std::vector<std::pair<int, int>> edge_lines;  // line number per edge, for errors
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        size_t first = line.find_first_not_of(" \t");
        if (first == std::string::npos || line[first] == '#') continue;
        std::istringstream ss(line);
        if (n < 0) {
            std::string word;
            ss >> word;
            if (word != "n") parse_fail(line_no, "expected directive 'n <count>'");
            if (!(ss >> n) || n <= 0) parse_fail(line_no, "invalid vertex count");
            std::string rest;
            if (ss >> rest) parse_fail(line_no, "trailing tokens after vertex count");
            continue;
        }
        int u, v;
        if (!(ss >> u >> v)) parse_fail(line_no, "expected 'u v'");
        std::string rest;
        if (ss >> rest) parse_fail(line_no, "trailing tokens after edge");
        if (u < 0 || u >= n || v < 0 || v >= n) parse_fail(line_no, "vertex id out of range");
        if (u == v) parse_fail(line_no, "self-loop");
        edges.push_back({u, v});
        edge_lines.push_back({line_no, 0});
    }
    if (n < 0) throw std::runtime_error("edge list: missing 'n <count>' directive");
    Graph g = Graph::from_edges(n, std::move(edges));
    if (!g.connected()) throw std::runtime_error("edge list: graph is not connected");
    return g;
}

Graph load_edge_list_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open graph file: " + path);
    return load_edge_list(in);
}

void write_edge_list(const Graph& g, std::ostream& out) {
    out << "n " << g.n << "\n";
    for (auto [u, v] : g.edges) out << u << " " << v << "\n";
}

const char* family_name(Family f) {
    switch (f) {
        case Family::Cycle: return "cycle";
        case Family::Torus2d: return "torus2d";
        case Family::Hypercube: return "hypercube";
        case Family::Complete: return "complete";
        case Family::RandomRegular: return "random_regular";
        case Family::Dumbbell: return "dumbbell";
    }
    return "?";
}

Family family_from_name(const std::string& name) {
    for (Family f : {Family::Cycle, Family::Torus2d, Family::Hypercube, Family::Complete,
                     Family::RandomRegular, Family::Dumbbell})
        if (name == family_name(f)) return f;
    throw std::invalid_argument("unknown graph family: " + name);
}

namespace {

Graph gen_cycle(int n) {
    if (n < 3) throw std::invalid_argument("cycle: need n >= 3");
    std::vector<std::pair<int, int>> edges;
    edges.reserve(n);
    for (int i = 0; i < n; ++i) edges.push_back({i, (i + 1) % n});
    return Graph::from_edges(n, std::move(edges));
}

Graph gen_torus2d(int n) {
    int side = static_cast<int>(std::llround(std::sqrt(static_cast<double>(n))));
    if (side * side != n) throw std::invalid_argument("torus2d: n must be a perfect square");
    if (side < 3) throw std::invalid_argument("torus2d: side must be >= 3");
    std::vector<std::pair<int, int>> edges;
    auto id = [side](int r, int c) { return r * side + c; };
    for (int r = 0; r < side; ++r)
        for (int c = 0; c < side; ++c) {
            edges.push_back({id(r, c), id(r, (c + 1) % side)});
            edges.push_back({id(r, c), id((r + 1) % side, c)});
        }
    return Graph::from_edges(n, std::move(edges));
}

Graph gen_hypercube(int n) {
    int dim = 0;
    while ((1 << dim) < n) ++dim;
    if ((1 << dim) != n || dim < 1) throw std::invalid_argument("hypercube: n must be a power of two >= 2");
    std::vector<std::pair<int, int>> edges;
    for (int v = 0; v < n; ++v)
        for (int b = 0; b < dim; ++b) {
            int w = v ^ (1 << b);
            if (v < w) edges.push_back({v, w});
        }
    return Graph::from_edges(n, std::move(edges));
}

Graph gen_complete(int n) {
    if (n < 2) throw std::invalid_argument("complete: need n >= 2");
    std::vector<std::pair<int, int>> edges;
    for (int u = 0; u < n; ++u)
        for (int v = u + 1; v < n; ++v) edges.push_back({u, v});
    return Graph::from_edges(n, std::move(edges));
}

// Configuration model with rejection of self-loops/multi-edges and of
// disconnected samples; retry cap 1000.
Graph gen_random_regular(int n, int d, std::uint64_t seed) {
    if (d < 1 || d >= n) throw std::invalid_argument("random_regular: need 1 <= d < n");
    if ((static_cast<long long>(n) * d) % 2 != 0)
        throw std::invalid_argument("random_regular: n*d must be even");
    Rng rng(derive_seed(seed, 0x5e6d));
    for (int attempt = 0; attempt < 1000; ++attempt) {
        std::vector<int> stubs;
        stubs.reserve(static_cast<size_t>(n) * d);
        for (int v = 0; v < n; ++v)
            for (int i = 0; i < d; ++i) stubs.push_back(v);
        for (size_t i = stubs.size(); i > 1; --i)
            std::swap(stubs[i - 1], stubs[rng.next_below(i)]);
        std::set<std::pair<int, int>> used;
        std::vector<std::pair<int, int>> edges;
        bool ok = true;
        for (size_t i = 0; i + 1 < stubs.size(); i += 2) {
            int u = stubs[i], v = stubs[i + 1];
            if (u == v) { ok = false; break; }
            auto key = std::minmax(u, v);
            if (!used.insert({key.first, key.second}).second) { ok = false; break; }
            edges.push_back({u, v});
        }
        if (!ok) continue;
        Graph g = Graph::from_edges(n, std::move(edges));
        if (g.connected()) return g;
    }
    throw std::runtime_error("random_regular: no simple connected sample after 1000 attempts");
}

// Two cliques of size n/2 joined by k vertex-disjoint bridge edges.
Graph gen_dumbbell(int n, int k) {
    if (n < 4 || n % 2 != 0) throw std::invalid_argument("dumbbell: need even n >= 4");
    int half = n / 2;
    if (k < 1 || k > half) throw std::invalid_argument("dumbbell: need 1 <= k <= n/2");
    std::vector<std::pair<int, int>> edges;
    for (int u = 0; u < half; ++u)
        for (int v = u + 1; v < half; ++v) edges.push_back({u, v});
    for (int u = half; u < n; ++u)
        for (int v = u + 1; v < n; ++v) edges.push_back({u, v});
    for (int i = 0; i < k; ++i) edges.push_back({i, half + i});
    return Graph::from_edges(n, std::move(edges));
}

}  // namespace

Graph generate(const GenSpec& spec) {
    switch (spec.family) {
        case Family::Cycle: return gen_cycle(spec.n);
        case Family::Torus2d: return gen_torus2d(spec.n);
        case Family::Hypercube: return gen_hypercube(spec.n);
        case Family::Complete: return gen_complete(spec.n);
        case Family::RandomRegular: return gen_random_regular(spec.n, spec.degree, spec.seed);
        case Family::Dumbbell: return gen_dumbbell(spec.n, spec.bridge_count);
    }
    throw std::invalid_argument("generate: unknown family");
}

// Stoer-Wagner with lazy priority queues over contracted adjacency maps.
int edge_connectivity(const Graph& g) {
    if (!g.connected()) throw std::invalid_argument("edge_connectivity: graph must be connected");
    if (g.n == 1) throw std::invalid_argument("edge_connectivity: need at least two vertices");
    int n = g.n;
    std::vector<std::map<int, long long>> w(n);
    for (auto [u, v] : g.edges) {
        w[u][v] += 1;
        w[v][u] += 1;
    }
    std::vector<char> merged(n, 0);
    long long best = -1;
    for (int active = n; active > 1; --active) {
        // maximum-adjacency search; ties broken toward smaller ids
        int start = 0;
        while (merged[start]) ++start;
        std::vector<char> in_a(n, 0);
        std::vector<long long> key(n, 0);
        std::priority_queue<std::pair<long long, int>> pq;  // (key, -id)
        in_a[start] = 1;
        for (auto& [v, wt] : w[start]) {
            key[v] = wt;
            pq.push({wt, -v});
        }
        int prev = start, last = start;
        for (int added = 1; added < active; ++added) {
            int next = -1;
            while (!pq.empty()) {
                auto [k, negv] = pq.top();
                int v = -negv;
                if (!in_a[v] && !merged[v] && key[v] == k) { next = v; break; }
                pq.pop();
            }
            if (next < 0) throw std::logic_error("edge_connectivity: search exhausted (disconnected?)");
            pq.pop();
            in_a[next] = 1;
            prev = last;
            last = next;
            for (auto& [v, wt] : w[next]) {
                if (!in_a[v] && !merged[v]) {
                    key[v] += wt;
                    pq.push({key[v], -v});
                }
            }
        }
        long long cut_of_phase = key[last];
        if (best < 0 || cut_of_phase < best) best = cut_of_phase;
        // contract `last` into `prev`
        merged[last] = 1;
        for (auto& [v, wt] : w[last]) {
            if (v == prev) continue;
            w[prev][v] += wt;
            w[v][prev] += wt;
        }
        for (auto& [v, wt] : w[last]) w[v].erase(last);
        w[prev].erase(last);
        w[last].clear();
    }
    return static_cast<int>(best);
}

int validate_regular(const Graph& g) {
    int d = g.degree(0);
    std::vector<int> offenders;
    for (int v = 0; v < g.n; ++v)
        if (g.degree(v) != d) offenders.push_back(v);
    if (!offenders.empty()) {
        std::ostringstream msg;
        msg << "graph is not regular; offending vertices:";
        for (size_t i = 0; i < offenders.size() && i < 8; ++i) msg << " " << offenders[i];
        if (offenders.size() > 8) msg << " ... (" << offenders.size() << " total)";
        throw std::runtime_error(msg.str());
    }
    return d;
}

}  // namespace flowbins

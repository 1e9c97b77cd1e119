#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <sstream>

#include "flowbins/decomposition.hpp"
#include "flowbins/flows.hpp"
#include "flowbins/graph.hpp"

using namespace flowbins;

namespace {

std::vector<int> iota_verts(int lo, int hi) {
    std::vector<int> v(hi - lo + 1);
    std::iota(v.begin(), v.end(), lo);
    return v;
}

// laminarity: any two node sets are nested or disjoint
bool laminar(const DecompTree& t) {
    for (size_t a = 0; a < t.nodes.size(); ++a)
        for (size_t b = a + 1; b < t.nodes.size(); ++b) {
            const auto& va = t.nodes[a].verts;
            const auto& vb = t.nodes[b].verts;
            std::vector<int> inter;
            std::set_intersection(va.begin(), va.end(), vb.begin(), vb.end(),
                                  std::back_inserter(inter));
            if (!inter.empty() && inter.size() != va.size() && inter.size() != vb.size())
                return false;
        }
    return true;
}

void check_structure(const Graph& g, const DecompTree& t, bool connected_parts = true) {
    CHECK(t.nodes[t.root].verts == iota_verts(0, g.n - 1));
    CHECK(static_cast<int>(t.internal.size()) == g.n - 1);
    for (size_t i = 0; i < t.nodes.size(); ++i) {
        const auto& node = t.nodes[i];
        if (connected_parts) CHECK(connected_subset(g, node.verts));
        CHECK(node.cut_capacity == cut_capacity(g, node.verts));
        if (node.left >= 0) {
            // children partition the parent
            std::vector<int> merged;
            std::merge(t.nodes[node.left].verts.begin(), t.nodes[node.left].verts.end(),
                       t.nodes[node.right].verts.begin(), t.nodes[node.right].verts.end(),
                       std::back_inserter(merged));
            CHECK(merged == node.verts);
        } else {
            CHECK(node.verts.size() == 1);
        }
    }
}

}  // namespace

TEST_CASE("arc tree: contiguous bisection of C8") {
    Graph g = generate({Family::Cycle, 8});
    DecompTree t = build_decomposition(g, Partitioner::Arc, 1);
    CHECK(t.nodes[t.root].left >= 0);
    CHECK(t.nodes[t.nodes[t.root].left].verts == iota_verts(0, 3));
    CHECK(t.nodes[t.nodes[t.root].right].verts == iota_verts(4, 7));
    CHECK(t.max_depth() == 3);
    check_structure(g, t);
}

TEST_CASE("arc tree: C16 depth 4 and balanced") {
    Graph g = generate({Family::Cycle, 16});
    DecompTree t = build_decomposition(g, Partitioner::Arc, 1);
    BalanceReport rep = verify_balance(t);
    CHECK(rep.ok);
    CHECK(rep.max_depth == 4);
}

TEST_CASE("arc partitioner rejects non-cycles") {
    Graph g = generate({Family::Complete, 4});
    CHECK_THROWS_AS(build_raw_tree(g, Partitioner::Arc, 1), std::invalid_argument);
}

TEST_CASE("K4: any balanced split at the root") {
    Graph g = generate({Family::Complete, 4});
    DecompTree t = build_decomposition(g, Partitioner::Auto, 1);
    int sl = t.size(t.nodes[t.root].left);
    CHECK(sl >= 1);
    CHECK(sl <= 3);
    // the exhaustive search keeps the cheapest balanced cut (3, isolating one vertex)
    CHECK(t.nodes[t.nodes[t.root].left].cut_capacity == 3);
    check_structure(g, t);
}

TEST_CASE("dumbbell: min-cut partitioner finds the bridge") {
    Graph g = generate({Family::Dumbbell, 8, 0, 1, 1});
    DecompTree t = build_decomposition(g, Partitioner::MincutBalanced, 1);
    CHECK(t.nodes[t.nodes[t.root].left].verts == iota_verts(0, 3));
    CHECK(t.nodes[t.nodes[t.root].right].verts == iota_verts(4, 7));
    CHECK(t.nodes[t.nodes[t.root].left].cut_capacity == 1);
    // same via contraction at a size beyond the exhaustive threshold
    Graph big = generate({Family::Dumbbell, 40, 0, 1, 1});
    DecompTree tb = build_decomposition(big, Partitioner::Auto, 7);
    CHECK(tb.nodes[tb.nodes[tb.root].left].verts == iota_verts(0, 19));
}

TEST_CASE("binarize: heavy child becomes the left child") {
    // child weights 0.5 / 0.3 / 0.2 over a 10-cycle
    Graph g = generate({Family::Cycle, 10});
    RawTree raw;
    raw.root = raw.add(iota_verts(0, 9));
    int a = raw.add(iota_verts(0, 4));
    int b = raw.add(iota_verts(5, 7));
    int c = raw.add(iota_verts(8, 9));
    raw.nodes[raw.root].children = {a, b, c};
    for (int child : {a, b, c}) {
        const auto verts = raw.nodes[child].verts;
        if (verts.size() == 1) continue;
        // expand to leaves with chains of singleton-splitting binary nodes
        std::vector<int> pending = {child};
        while (!pending.empty()) {
            int cur = pending.back();
            pending.pop_back();
            const auto cv = raw.nodes[cur].verts;
            if (cv.size() == 1) continue;
            int l = raw.add({cv.begin(), cv.begin() + cv.size() / 2});
            int r = raw.add({cv.begin() + cv.size() / 2, cv.end()});
            raw.nodes[cur].children = {l, r};
            pending.push_back(l);
            pending.push_back(r);
        }
    }
    DecompTree t = binarize(raw, g);
    CHECK(t.nodes[t.nodes[t.root].left].verts == iota_verts(0, 4));
    CHECK(t.nodes[t.nodes[t.root].right].verts == iota_verts(5, 9));
    int right = t.nodes[t.root].right;
    CHECK(t.nodes[t.nodes[right].left].verts == iota_verts(5, 7));
    CHECK(t.nodes[t.nodes[right].right].verts == iota_verts(8, 9));
    check_structure(g, t);
}

TEST_CASE("binarize: five equal children pack into 0.4/0.6 groups") {
    Graph g = generate({Family::Cycle, 10});
    RawTree raw;
    raw.root = raw.add(iota_verts(0, 9));
    for (int i = 0; i < 5; ++i) {
        int c = raw.add({2 * i, 2 * i + 1});
        int l = raw.add({2 * i});
        int r = raw.add({2 * i + 1});
        raw.nodes[c].children = {l, r};
        raw.nodes[raw.root].children.push_back(c);
    }
    DecompTree t = binarize(raw, g);
    int l = t.nodes[t.root].left, r = t.nodes[t.root].right;
    int sl = t.size(l), sr = t.size(r);
    CHECK(std::min(sl, sr) == 4);
    CHECK(std::max(sl, sr) == 6);
    CHECK(verify_balance(t).ok);
    // grouped children need not induce connected subgraphs
    check_structure(g, t, false);
    // leaf set unchanged
    for (int v = 0; v < 10; ++v) CHECK(t.nodes[t.leaf_of[v]].verts == std::vector<int>{v});
}

TEST_CASE("binarize: already-binary tree unchanged") {
    Graph g = generate({Family::Cycle, 4});
    RawTree raw;
    raw.root = raw.add({0, 1, 2, 3});
    int a = raw.add({0, 1}), b = raw.add({2, 3});
    raw.nodes[raw.root].children = {a, b};
    int a0 = raw.add({0}), a1 = raw.add({1}), b0 = raw.add({2}), b1 = raw.add({3});
    raw.nodes[a].children = {a0, a1};
    raw.nodes[b].children = {b0, b1};
    DecompTree t = binarize(raw, g);
    CHECK(t.nodes.size() == 7);
    CHECK(t.nodes[t.nodes[t.root].left].verts == std::vector<int>{0, 1});
    CHECK(t.nodes[t.nodes[t.root].right].verts == std::vector<int>{2, 3});
}

TEST_CASE("verify_balance: caterpillar chain violates the ancestor bound") {
    // singleton splits all the way: sizes n, n-1, n-2, ...
    int n = 12;
    DecompTree t;
    t.leaf_of.assign(n, -1);
    int prev = -1;
    for (int filled = 0; filled < n - 1; ++filled) {
        DecompTree::Node node;
        node.verts = iota_verts(filled, n - 1);
        node.parent = prev;
        node.depth = filled;
        int id = static_cast<int>(t.nodes.size());
        t.nodes.push_back(node);
        if (prev >= 0) t.nodes[prev].right = id;
        DecompTree::Node leaf;
        leaf.verts = {filled};
        leaf.parent = id;
        leaf.depth = filled + 1;
        t.nodes.push_back(leaf);
        t.nodes[id].left = id + 1;
        t.leaf_of[filled] = id + 1;
        t.internal.push_back(id);
        prev = id;
    }
    DecompTree::Node last;
    last.verts = {n - 1};
    last.parent = prev;
    last.depth = static_cast<int>(t.nodes[prev].depth) + 1;
    t.nodes[prev].right = static_cast<int>(t.nodes.size());
    t.leaf_of[n - 1] = static_cast<int>(t.nodes.size());
    t.nodes.push_back(last);
    BalanceReport rep = verify_balance(t);
    CHECK(!rep.ok);
    CHECK(rep.worst_ratio > 1.0);
    CHECK_THROWS_WITH_AS(require_balanced(t), doctest::Contains("balance violation"),
                         std::runtime_error);
}

TEST_CASE("built trees are balanced and within the depth bound") {
    std::vector<Graph> graphs;
    graphs.push_back(generate({Family::Cycle, 33}));
    graphs.push_back(generate({Family::Torus2d, 25}));
    graphs.push_back(generate({Family::Hypercube, 64}));
    for (std::uint64_t s = 1; s <= 3; ++s)
        graphs.push_back(generate({Family::RandomRegular, 48, 4, 1, s}));
    for (const Graph& g : graphs) {
        DecompTree t = build_decomposition(g, Partitioner::Auto, 5);
        BalanceReport rep = verify_balance(t);
        CHECK(rep.ok);
        CHECK(rep.max_depth <= depth_bound(g.n));
        check_structure(g, t);
        CHECK(laminar(t));
    }
}

TEST_CASE("bfs partitioner keeps parts connected") {
    for (std::uint64_t s = 1; s <= 4; ++s) {
        Graph g = generate({Family::RandomRegular, 30, 3, 1, s});
        DecompTree t = build_decomposition(g, Partitioner::Bfs, s);
        check_structure(g, t);
        CHECK(verify_balance(t).ok);
    }
}

TEST_CASE("cut capacities: arcs, dumbbell, petersen oracle") {
    Graph cyc = generate({Family::Cycle, 12});
    CHECK(cut_capacity(cyc, {3, 4, 5}) == 2);
    Graph db = generate({Family::Dumbbell, 12, 0, 2, 1});
    std::vector<int> clique = {0, 1, 2, 3, 4, 5};
    CHECK(cut_capacity(db, clique) == 2);
    // direct enumeration on a Petersen subset
    std::vector<std::pair<int, int>> pedges;
    for (int i = 0; i < 5; ++i) pedges.push_back({i, (i + 1) % 5});
    for (int i = 0; i < 5; ++i) pedges.push_back({5 + i, 5 + (i + 2) % 5});
    for (int i = 0; i < 5; ++i) pedges.push_back({i, 5 + i});
    Graph pet = Graph::from_edges(10, pedges);
    std::vector<int> subset = {0, 1, 5, 6};
    int direct = 0;
    for (auto [u, v] : pet.edges) {
        bool us = std::binary_search(subset.begin(), subset.end(), u);
        bool vs = std::binary_search(subset.begin(), subset.end(), v);
        if (us != vs) ++direct;
    }
    CHECK(cut_capacity(pet, subset) == direct);
}

TEST_CASE("every non-root cut has at least k edges") {
    Graph g = generate({Family::Torus2d, 36});
    int k = edge_connectivity(g);
    DecompTree t = build_decomposition(g, Partitioner::Auto, 3);
    for (size_t i = 1; i < t.nodes.size(); ++i) CHECK(t.nodes[i].cut_capacity >= k);
}

TEST_CASE("tree serialization: golden text for C4 and round trip") {
    Graph g = generate({Family::Cycle, 4});
    DecompTree t = build_decomposition(g, Partitioner::Arc, 1);
    std::ostringstream out;
    write_tree(t, out);
    std::string expected =
        "# decomposition tree: nodes=7 root=0\n"
        "0 -1 [1 2] 4 0 : 0 1 2 3\n"
        "1 0 [3 4] 2 2 : 0 1\n"
        "2 0 [5 6] 2 2 : 2 3\n"
        "3 1 [-1 -1] 1 2 : 0\n"
        "4 1 [-1 -1] 1 2 : 1\n"
        "5 2 [-1 -1] 1 2 : 2\n"
        "6 2 [-1 -1] 1 2 : 3\n";
    CHECK(out.str() == expected);
    std::istringstream in(out.str());
    DecompTree u = read_tree(in);
    CHECK(u.nodes.size() == t.nodes.size());
    for (size_t i = 0; i < t.nodes.size(); ++i) {
        CHECK(u.nodes[i].verts == t.nodes[i].verts);
        CHECK(u.nodes[i].parent == t.nodes[i].parent);
        CHECK(u.nodes[i].left == t.nodes[i].left);
        CHECK(u.nodes[i].cut_capacity == t.nodes[i].cut_capacity);
        CHECK(u.nodes[i].depth == t.nodes[i].depth);
    }
    CHECK(u.internal == t.internal);
}

TEST_CASE("read_tree rejects malformed input") {
    std::istringstream bad("0 -1 [1 2] 2 0 : 0 1\n1 0 [-1 -1] 1 0 : 0\n");
    CHECK_THROWS_AS(read_tree(bad), std::runtime_error);  // child 2 missing
    std::istringstream empty("# nothing\n");
    CHECK_THROWS_AS(read_tree(empty), std::runtime_error);
}

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "flowbins/graph.hpp"

namespace flowbins {

// Rose tree of vertex sets: a laminar family rooted at V with singleton
// leaves. Children may number more than two; binarize() reduces it.
struct RawTree {
    struct Node {
        std::vector<int> verts;   // sorted
        std::vector<int> children;
    };
    std::vector<Node> nodes;
    int root = 0;

    int add(std::vector<int> verts) {
        nodes.push_back({std::move(verts), {}});
        return static_cast<int>(nodes.size()) - 1;
    }
};

enum class Partitioner { Auto, Arc, MincutBalanced, Bfs };

const char* partitioner_name(Partitioner p);
Partitioner partitioner_from_name(const std::string& name);

// Recursive bipartitioning; every part induces a connected subgraph and
// targets a [1/4, 3/4] share of its parent. Auto resolves to Arc on cycles
// and MincutBalanced otherwise.
RawTree build_raw_tree(const Graph& g, Partitioner p, std::uint64_t seed);

// Binary hierarchical decomposition of V.
struct DecompTree {
    struct Node {
        std::vector<int> verts;  // sorted
        int parent = -1;
        int left = -1;
        int right = -1;
        int cut_capacity = 0;    // G-edges with exactly one endpoint inside
        int depth = 0;
    };
    std::vector<Node> nodes;     // breadth-first ids, root first
    int root = 0;
    std::vector<int> leaf_of;    // vertex -> leaf node id
    std::vector<int> internal;   // ids of non-leaf nodes

    bool is_leaf(int i) const { return nodes[i].left < 0; }
    int size(int i) const { return static_cast<int>(nodes[i].verts.size()); }
    int max_depth() const;
    int n() const { return static_cast<int>(leaf_of.size()); }
};

// Rules for a node with p > 2 children, weights w(h) = |S_child|/|S_node|:
//  (a) some w(h) > 1/4: the heaviest child becomes the left child, the rest
//      are grouped under a new right child;
//  (b) otherwise children are packed greedily into two groups with weights
//      in [1/4, 3/4].
DecompTree binarize(const RawTree& raw, const Graph& g);

DecompTree build_decomposition(const Graph& g, Partitioner p, std::uint64_t seed);

struct BalanceReport {
    bool ok = true;
    int max_depth = 0;
    double worst_ratio = 0.0;  // max over ancestor pairs of |S_b| / ((3/4)^floor(q/2) |S_a|)
    int bad_ancestor = -1;
    int bad_descendant = -1;
};

// Checks |S_b| <= (3/4)^floor(q/2) |S_a| over every ancestor pair (a, b).
BalanceReport verify_balance(const DecompTree& t);
// Throwing form; names the offending pair.
void require_balanced(const DecompTree& t);

// Number of G-edges crossing (verts, V \ verts).
int cut_capacity(const Graph& g, const std::vector<int>& verts);

// One node per line: "id parent [left right] size cut_capacity : v1 v2 ..."
void write_tree(const DecompTree& t, std::ostream& out);
DecompTree read_tree(std::istream& in);

}  // namespace flowbins

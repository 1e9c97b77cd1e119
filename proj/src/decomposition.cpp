#include "flowbins/decomposition.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <queue>
#include <sstream>
#include <stdexcept>

#include "flowbins/rng.hpp"

namespace flowbins {

const char* partitioner_name(Partitioner p) {
    switch (p) {
        case Partitioner::Auto: return "auto";
        case Partitioner::Arc: return "arc";
        case Partitioner::MincutBalanced: return "mincut";
        case Partitioner::Bfs: return "bfs";
    }
    return "?";
}

Partitioner partitioner_from_name(const std::string& name) {
    if (name == "auto") return Partitioner::Auto;
    if (name == "arc") return Partitioner::Arc;
    if (name == "mincut" || name == "mincut_balanced") return Partitioner::MincutBalanced;
    if (name == "bfs") return Partitioner::Bfs;
    throw std::invalid_argument("unknown partitioner: " + name);
}

namespace {

bool is_cycle(const Graph& g) {
    if (g.n < 3 || g.m() != g.n) return false;
    for (int v = 0; v < g.n; ++v)
        if (g.degree(v) != 2) return false;
    return g.connected();
}

// Positions along the cycle, walking from vertex 0 toward its smaller neighbor.
std::vector<int> cycle_positions(const Graph& g) {
    std::vector<int> pos(g.n, -1);
    int prev = -1, cur = 0;
    for (int i = 0; i < g.n; ++i) {
        pos[cur] = i;
        int a = g.adj[cur][0].first, b = g.adj[cur][1].first;
        if (a > b) std::swap(a, b);
        int next = (a != prev) ? a : b;
        prev = cur;
        cur = next;
    }
    return pos;
}

struct Splitter {
    const Graph& g;
    Partitioner mode;
    std::uint64_t seed;
    std::vector<int> cycle_pos;  // only for Arc

    // Balance test: |part| / |whole| within [1/4, 3/4].
    static bool balanced(size_t part, size_t whole) {
        return 4 * part >= whole && 4 * part <= 3 * whole;
    }

    std::pair<std::vector<int>, std::vector<int>> split(const std::vector<int>& verts) const {
        switch (mode) {
            case Partitioner::Arc: return split_arc(verts);
            case Partitioner::MincutBalanced: return split_mincut(verts);
            case Partitioner::Bfs: return split_bfs(verts);
            default: throw std::logic_error("unresolved partitioner");
        }
    }

    std::pair<std::vector<int>, std::vector<int>> split_arc(const std::vector<int>& verts) const {
        std::vector<int> ordered = verts;
        std::sort(ordered.begin(), ordered.end(),
                  [&](int a, int b) { return cycle_pos[a] < cycle_pos[b]; });
        size_t half = (ordered.size() + 1) / 2;
        std::vector<int> a(ordered.begin(), ordered.begin() + half);
        std::vector<int> b(ordered.begin() + half, ordered.end());
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        return {a, b};
    }

    std::pair<std::vector<int>, std::vector<int>> split_bfs(const std::vector<int>& verts) const {
        std::vector<char> member(g.n, 0);
        for (int v : verts) member[v] = 1;
        // BFS order from the smallest id, neighbors visited in id order
        std::vector<int> order;
        std::vector<char> seen(g.n, 0);
        std::queue<int> q;
        q.push(verts.front());
        seen[verts.front()] = 1;
        while (!q.empty()) {
            int u = q.front();
            q.pop();
            order.push_back(u);
            std::vector<int> nbrs;
            for (auto [v, e] : g.adj[u]) {
                (void)e;
                if (member[v] && !seen[v]) nbrs.push_back(v);
            }
            std::sort(nbrs.begin(), nbrs.end());
            nbrs.erase(std::unique(nbrs.begin(), nbrs.end()), nbrs.end());
            for (int v : nbrs) {
                seen[v] = 1;
                q.push(v);
            }
        }
        size_t half = (order.size() + 1) / 2;
        std::vector<int> a(order.begin(), order.begin() + half);
        std::vector<int> b(order.begin() + half, order.end());
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        repair(a, b);
        return {a, b};
    }

    // Restores connectivity of part b (stray components move to a), then
    // walks boundary vertices back from a until balance is recovered.
    void repair(std::vector<int>& a, std::vector<int>& b) const {
        size_t whole = a.size() + b.size();
        if (b.empty()) return;
        auto comps = components_of(b);
        if (comps.size() > 1) {
            size_t keep = 0;
            for (size_t i = 1; i < comps.size(); ++i)
                if (comps[i].size() > comps[keep].size()) keep = i;
            std::vector<int> nb = comps[keep];
            for (size_t i = 0; i < comps.size(); ++i)
                if (i != keep) a.insert(a.end(), comps[i].begin(), comps[i].end());
            std::sort(a.begin(), a.end());
            std::sort(nb.begin(), nb.end());
            b = std::move(nb);
        }
        while (4 * a.size() > 3 * whole) {
            std::vector<char> in_b(g.n, 0);
            for (int v : b) in_b[v] = 1;
            int moved = -1;
            for (int v : a) {
                bool touches_b = false;
                for (auto [w, e] : g.adj[v]) {
                    (void)e;
                    if (in_b[w]) { touches_b = true; break; }
                }
                if (!touches_b) continue;
                std::vector<int> rest;
                rest.reserve(a.size() - 1);
                for (int u : a)
                    if (u != v) rest.push_back(u);
                if (connected_subset(g, rest)) { moved = v; break; }
            }
            if (moved < 0) break;
            a.erase(std::find(a.begin(), a.end(), moved));
            b.insert(std::lower_bound(b.begin(), b.end(), moved), moved);
        }
    }

    std::vector<std::vector<int>> components_of(const std::vector<int>& verts) const {
        std::vector<char> member(g.n, 0), seen(g.n, 0);
        for (int v : verts) member[v] = 1;
        std::vector<std::vector<int>> comps;
        for (int s : verts) {
            if (seen[s]) continue;
            comps.emplace_back();
            std::vector<int> stack = {s};
            seen[s] = 1;
            while (!stack.empty()) {
                int u = stack.back();
                stack.pop_back();
                comps.back().push_back(u);
                for (auto [v, e] : g.adj[u]) {
                    (void)e;
                    if (member[v] && !seen[v]) {
                        seen[v] = 1;
                        stack.push_back(v);
                    }
                }
            }
        }
        return comps;
    }

    std::pair<std::vector<int>, std::vector<int>> split_mincut(const std::vector<int>& verts) const {
        if (verts.size() <= 16) {
            auto best = split_mincut_exhaustive(verts);
            if (!best.first.empty()) return best;
            return split_bfs(verts);
        }
        auto best = split_mincut_contraction(verts);
        if (!best.first.empty()) return best;
        return split_bfs(verts);
    }

    std::vector<int> subset_edges(const std::vector<int>& verts) const {
        std::vector<char> member(g.n, 0);
        for (int v : verts) member[v] = 1;
        std::vector<int> ids;
        for (int e = 0; e < g.m(); ++e) {
            auto [u, v] = g.edges[e];
            if (member[u] && member[v]) ids.push_back(e);
        }
        return ids;
    }

    std::pair<std::vector<int>, std::vector<int>> split_mincut_exhaustive(
        const std::vector<int>& verts) const {
        int s = static_cast<int>(verts.size());
        auto ids = subset_edges(verts);
        std::vector<int> index(g.n, -1);
        for (int i = 0; i < s; ++i) index[verts[i]] = i;
        long long best_cut = -1;
        std::uint32_t best_mask = 0;
        for (std::uint32_t mask = 1; mask < (1u << (s - 1)); ++mask) {
            std::uint32_t amask = (mask << 1) | 1u;  // verts[0] pinned to side a
            int asz = __builtin_popcount(amask);
            if (!balanced(asz, s)) continue;
            long long cut = 0;
            for (int e : ids) {
                auto [u, v] = g.edges[e];
                bool ua = (amask >> index[u]) & 1u, va = (amask >> index[v]) & 1u;
                if (ua != va) ++cut;
            }
            if (best_cut >= 0 && cut >= best_cut) continue;
            std::vector<int> a, b;
            for (int i = 0; i < s; ++i)
                ((amask >> i) & 1u ? a : b).push_back(verts[i]);
            if (!connected_subset(g, a) || !connected_subset(g, b)) continue;
            best_cut = cut;
            best_mask = amask;
        }
        if (best_cut < 0) return {{}, {}};
        std::vector<int> a, b;
        for (int i = 0; i < s; ++i)
            ((best_mask >> i) & 1u ? a : b).push_back(verts[i]);
        return {a, b};
    }

    // Repeated randomized contraction: shuffle the edges of G[S], union
    // until two supernodes remain. Supernodes are connected by construction;
    // keep the balanced candidate with the smallest cut.
    std::pair<std::vector<int>, std::vector<int>> split_mincut_contraction(
        const std::vector<int>& verts) const {
        auto ids = subset_edges(verts);
        std::vector<int> index(g.n, -1);
        int s = static_cast<int>(verts.size());
        for (int i = 0; i < s; ++i) index[verts[i]] = i;
        Rng rng(derive_seed(seed, (static_cast<std::uint64_t>(verts.front()) << 24) ^ verts.size()));
        int trials = std::max(128, std::min(1024, 8 * s));
        long long best_cut = -1;
        std::vector<char> best_side;
        std::vector<int> parent(s), rank_(s);
        std::vector<int> shuffled = ids;
        for (int t = 0; t < trials; ++t) {
            std::iota(parent.begin(), parent.end(), 0);
            std::fill(rank_.begin(), rank_.end(), 0);
            for (size_t i = shuffled.size(); i > 1; --i)
                std::swap(shuffled[i - 1], shuffled[rng.next_below(i)]);
            auto find = [&](int x) {
                while (parent[x] != x) {
                    parent[x] = parent[parent[x]];
                    x = parent[x];
                }
                return x;
            };
            int comps = s;
            for (int e : shuffled) {
                if (comps == 2) break;
                int u = find(index[g.edges[e].first]), v = find(index[g.edges[e].second]);
                if (u == v) continue;
                if (rank_[u] < rank_[v]) std::swap(u, v);
                parent[v] = u;
                if (rank_[u] == rank_[v]) ++rank_[u];
                --comps;
            }
            if (comps != 2) continue;
            int root0 = find(0);
            std::vector<char> side(s, 0);
            int asz = 0;
            for (int i = 0; i < s; ++i) {
                side[i] = (find(i) == root0);
                asz += side[i];
            }
            if (!balanced(asz, s)) continue;
            long long cut = 0;
            for (int e : ids) {
                bool ua = side[index[g.edges[e].first]], va = side[index[g.edges[e].second]];
                if (ua != va) ++cut;
            }
            if (best_cut < 0 || cut < best_cut) {
                best_cut = cut;
                best_side = side;
            }
        }
        if (best_cut < 0) return {{}, {}};
        std::vector<int> a, b;
        for (int i = 0; i < s; ++i) (best_side[i] ? a : b).push_back(verts[i]);
        return {a, b};
    }
};

void build_rec(RawTree& t, const Splitter& sp, int node) {
    const auto verts = t.nodes[node].verts;  // copy: t.nodes may reallocate
    if (verts.size() == 1) return;
    auto [a, b] = sp.split(verts);
    if (a.empty() || b.empty()) throw std::logic_error("partitioner produced an empty part");
    // left = part holding the smallest vertex id
    if (b.front() < a.front()) std::swap(a, b);
    int ca = t.add(std::move(a));
    int cb = t.add(std::move(b));
    t.nodes[node].children = {ca, cb};
    build_rec(t, sp, ca);
    build_rec(t, sp, cb);
}

}  // namespace

RawTree build_raw_tree(const Graph& g, Partitioner p, std::uint64_t seed) {
    if (!g.connected()) throw std::invalid_argument("build_raw_tree: graph must be connected");
    Partitioner resolved = p;
    if (resolved == Partitioner::Auto)
        resolved = is_cycle(g) ? Partitioner::Arc : Partitioner::MincutBalanced;
    if (resolved == Partitioner::Arc && !is_cycle(g))
        throw std::invalid_argument("arc partitioner requires a cycle graph");
    Splitter sp{g, resolved, seed, {}};
    if (resolved == Partitioner::Arc) sp.cycle_pos = cycle_positions(g);
    RawTree t;
    std::vector<int> all(g.n);
    std::iota(all.begin(), all.end(), 0);
    t.root = t.add(std::move(all));
    build_rec(t, sp, t.root);
    return t;
}

namespace {

// Working tree while applying the binarization rules.
struct BTmp {
    struct Node {
        std::vector<int> verts;
        int left = -1, right = -1;
    };
    std::vector<Node> nodes;
    int add(std::vector<int> verts, int l, int r) {
        nodes.push_back({std::move(verts), l, r});
        return static_cast<int>(nodes.size()) - 1;
    }
};

// A pending subtree: either a raw node or a synthesized group of parts.
struct Part {
    std::vector<int> verts;
    int raw_id = -1;
    std::vector<Part> members;
};

int emit_part(BTmp& out, const RawTree& raw, Part part);

int emit_children(BTmp& out, const RawTree& raw, std::vector<int> verts, std::vector<Part> children) {
    size_t p = children.size();
    if (p == 0) return out.add(std::move(verts), -1, -1);
    if (p == 1) return emit_part(out, raw, std::move(children.front()));
    if (p == 2) {
        int l = emit_part(out, raw, std::move(children[0]));
        int r = emit_part(out, raw, std::move(children[1]));
        return out.add(std::move(verts), l, r);
    }
    size_t whole = verts.size();
    // rule (a): a child heavier than 1/4 becomes the left child
    size_t heavy = 0;
    for (size_t i = 1; i < p; ++i) {
        if (children[i].verts.size() > children[heavy].verts.size() ||
            (children[i].verts.size() == children[heavy].verts.size() &&
             children[i].verts.front() < children[heavy].verts.front()))
            heavy = i;
    }
    if (4 * children[heavy].verts.size() > whole) {
        Part rest;
        rest.raw_id = -1;
        for (size_t i = 0; i < p; ++i) {
            if (i == heavy) continue;
            rest.verts.insert(rest.verts.end(), children[i].verts.begin(), children[i].verts.end());
            rest.members.push_back(std::move(children[i]));
        }
        std::sort(rest.verts.begin(), rest.verts.end());
        int l = emit_part(out, raw, std::move(children[heavy]));
        int r = emit_part(out, raw, std::move(rest));
        return out.add(std::move(verts), l, r);
    }
    // rule (b): all weights <= 1/4; greedy-pack into two groups in [1/4, 3/4]
    std::vector<size_t> order(p);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](size_t x, size_t y) {
        if (children[x].verts.size() != children[y].verts.size())
            return children[x].verts.size() > children[y].verts.size();
        return children[x].verts.front() < children[y].verts.front();
    });
    Part ga, gb;
    for (size_t idx : order) {
        Part& target = (gb.verts.size() < ga.verts.size()) ? gb : ga;
        target.verts.insert(target.verts.end(), children[idx].verts.begin(), children[idx].verts.end());
        target.members.push_back(std::move(children[idx]));
    }
    std::sort(ga.verts.begin(), ga.verts.end());
    std::sort(gb.verts.begin(), gb.verts.end());
    if (gb.verts.front() < ga.verts.front()) std::swap(ga, gb);
    int l = emit_part(out, raw, std::move(ga));
    int r = emit_part(out, raw, std::move(gb));
    return out.add(std::move(verts), l, r);
}

int emit_part(BTmp& out, const RawTree& raw, Part part) {
    if (part.raw_id >= 0) {
        const auto& rn = raw.nodes[part.raw_id];
        std::vector<Part> children;
        children.reserve(rn.children.size());
        for (int c : rn.children) {
            Part cp;
            cp.verts = raw.nodes[c].verts;
            cp.raw_id = c;
            children.push_back(std::move(cp));
        }
        return emit_children(out, raw, rn.verts, std::move(children));
    }
    return emit_children(out, raw, std::move(part.verts), std::move(part.members));
}

void check_partition(const DecompTree& t, int i) {
    const auto& node = t.nodes[i];
    if (node.left < 0) return;
    const auto& a = t.nodes[node.left].verts;
    const auto& b = t.nodes[node.right].verts;
    std::vector<int> merged;
    merged.reserve(a.size() + b.size());
    std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(merged));
    if (merged != node.verts || std::adjacent_find(merged.begin(), merged.end()) != merged.end())
        throw std::invalid_argument("binarize: children do not partition node " + std::to_string(i));
}

}  // namespace

DecompTree binarize(const RawTree& raw, const Graph& g) {
    BTmp tmp;
    Part root;
    root.verts = raw.nodes[raw.root].verts;
    root.raw_id = raw.root;
    int troot = emit_part(tmp, raw, std::move(root));

    DecompTree t;
    t.leaf_of.assign(g.n, -1);
    // breadth-first ids, left before right
    std::vector<int> queue = {troot};
    std::vector<int> id_of(tmp.nodes.size(), -1);
    for (size_t head = 0; head < queue.size(); ++head) {
        int cur = queue[head];
        id_of[cur] = static_cast<int>(head);
        if (tmp.nodes[cur].left >= 0) {
            queue.push_back(tmp.nodes[cur].left);
            queue.push_back(tmp.nodes[cur].right);
        }
    }
    t.nodes.resize(queue.size());
    for (size_t head = 0; head < queue.size(); ++head) {
        const auto& src = tmp.nodes[queue[head]];
        auto& dst = t.nodes[head];
        dst.verts = src.verts;
        dst.left = src.left >= 0 ? id_of[src.left] : -1;
        dst.right = src.right >= 0 ? id_of[src.right] : -1;
        if (src.left >= 0) {
            t.nodes[id_of[src.left]].parent = static_cast<int>(head);
            t.nodes[id_of[src.right]].parent = static_cast<int>(head);
        }
    }
    t.root = 0;
    for (size_t i = 0; i < t.nodes.size(); ++i) {
        auto& node = t.nodes[i];
        node.depth = node.parent < 0 ? 0 : t.nodes[node.parent].depth + 1;
        node.cut_capacity = cut_capacity(g, node.verts);
        check_partition(t, static_cast<int>(i));
        if (node.left < 0) {
            if (node.verts.size() != 1)
                throw std::invalid_argument("binarize: non-singleton leaf");
            t.leaf_of[node.verts[0]] = static_cast<int>(i);
        } else {
            t.internal.push_back(static_cast<int>(i));
        }
    }
    for (int v = 0; v < g.n; ++v)
        if (t.leaf_of[v] < 0) throw std::invalid_argument("binarize: vertex missing from leaves");
    if (t.nodes[t.root].verts.size() != static_cast<size_t>(g.n))
        throw std::invalid_argument("binarize: root must cover all vertices");
    return t;
}

DecompTree build_decomposition(const Graph& g, Partitioner p, std::uint64_t seed) {
    return binarize(build_raw_tree(g, p, seed), g);
}

int DecompTree::max_depth() const {
    int d = 0;
    for (const auto& node : nodes) d = std::max(d, node.depth);
    return d;
}

BalanceReport verify_balance(const DecompTree& t) {
    BalanceReport rep;
    rep.max_depth = t.max_depth();
    for (size_t b = 0; b < t.nodes.size(); ++b) {
        int q = 0;
        for (int a = t.nodes[b].parent; a >= 0; a = t.nodes[a].parent) {
            ++q;
            double bound = std::pow(0.75, q / 2) * static_cast<double>(t.nodes[a].verts.size());
            double ratio = static_cast<double>(t.nodes[b].verts.size()) / bound;
            if (ratio > rep.worst_ratio) {
                rep.worst_ratio = ratio;
                if (ratio > 1.0 + 1e-12) {
                    rep.ok = false;
                    rep.bad_ancestor = a;
                    rep.bad_descendant = static_cast<int>(b);
                }
            }
        }
    }
    return rep;
}

void require_balanced(const DecompTree& t) {
    BalanceReport rep = verify_balance(t);
    if (!rep.ok) {
        std::ostringstream msg;
        msg << "balance violation: |S_" << rep.bad_descendant << "| = "
            << t.nodes[rep.bad_descendant].verts.size() << " exceeds (3/4)^floor(q/2) * |S_"
            << rep.bad_ancestor << "| = " << t.nodes[rep.bad_ancestor].verts.size()
            << " (ratio " << rep.worst_ratio << ")";
        throw std::runtime_error(msg.str());
    }
}

int cut_capacity(const Graph& g, const std::vector<int>& verts) {
    std::vector<char> member(g.n, 0);
    for (int v : verts) member[v] = 1;
    int cut = 0;
    for (auto [u, v] : g.edges)
        if (member[u] != member[v]) ++cut;
    return cut;
}

void write_tree(const DecompTree& t, std::ostream& out) {
    out << "# decomposition tree: nodes=" << t.nodes.size() << " root=" << t.root << "\n";
    for (size_t i = 0; i < t.nodes.size(); ++i) {
        const auto& node = t.nodes[i];
        out << i << " " << node.parent << " [" << node.left << " " << node.right << "] "
            << node.verts.size() << " " << node.cut_capacity << " :";
        for (int v : node.verts) out << " " << v;
        out << "\n";
    }
}

DecompTree read_tree(std::istream& in) {
    DecompTree t;
    std::string line;
    int max_vertex = -1;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        size_t first = line.find_first_not_of(" \t");
        if (first == std::string::npos || line[first] == '#') continue;
        for (char& c : line)
            if (c == '[' || c == ']') c = ' ';
        std::istringstream ss(line);
        int id, parent, left, right;
        size_t size;
        int cut;
        std::string colon;
        if (!(ss >> id >> parent >> left >> right >> size >> cut >> colon) || colon != ":")
            throw std::runtime_error("tree file: malformed node line: " + line);
        if (id != static_cast<int>(t.nodes.size()))
            throw std::runtime_error("tree file: node ids must be consecutive from 0");
        DecompTree::Node node;
        node.parent = parent;
        node.left = left;
        node.right = right;
        node.cut_capacity = cut;
        node.verts.reserve(size);
        int v;
        while (ss >> v) {
            node.verts.push_back(v);
            max_vertex = std::max(max_vertex, v);
        }
        if (node.verts.size() != size)
            throw std::runtime_error("tree file: vertex count mismatch on node " + std::to_string(id));
        t.nodes.push_back(std::move(node));
    }
    if (t.nodes.empty()) throw std::runtime_error("tree file: empty");
    t.root = 0;
    t.leaf_of.assign(max_vertex + 1, -1);
    for (size_t i = 0; i < t.nodes.size(); ++i) {
        auto& node = t.nodes[i];
        node.depth = node.parent < 0 ? 0 : t.nodes[node.parent].depth + 1;
        if (node.parent >= static_cast<int>(i))
            throw std::runtime_error("tree file: parent must precede child");
        if (node.left >= 0) {
            if (node.left >= static_cast<int>(t.nodes.size()) ||
                node.right >= static_cast<int>(t.nodes.size()) || node.right < 0)
                throw std::runtime_error("tree file: child id out of range at node " +
                                         std::to_string(i));
            if (t.nodes[node.left].parent != static_cast<int>(i) ||
                t.nodes[node.right].parent != static_cast<int>(i))
                throw std::runtime_error("tree file: parent/child mismatch at node " + std::to_string(i));
            t.internal.push_back(static_cast<int>(i));
        } else {
            if (node.verts.size() != 1) throw std::runtime_error("tree file: non-singleton leaf");
            t.leaf_of[node.verts[0]] = static_cast<int>(i);
        }
    }
    for (size_t v = 0; v < t.leaf_of.size(); ++v)
        if (t.leaf_of[v] < 0)
            throw std::runtime_error("tree file: vertex " + std::to_string(v) + " has no leaf");
    return t;
}

}  // namespace flowbins

#include "flowbins/flows.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <queue>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace flowbins {

namespace {
constexpr double kResidEps = 1e-12;
}

int FlowNetwork::add_node() {
    head_.emplace_back();
    return num_nodes() - 1;
}

int FlowNetwork::add_arc(int from, int to, double cap, double rev_cap) {
    int id = static_cast<int>(arcs_.size());
    arcs_.push_back({to, cap, cap});
    arcs_.push_back({from, rev_cap, rev_cap});
    head_[from].push_back(id);
    head_[to].push_back(id ^ 1);
    return id;
}

double FlowNetwork::flow_on(int arc) const {
    return arcs_[arc].cap - arcs_[arc].resid;
}

void FlowNetwork::reset_flow() {
    for (auto& a : arcs_) a.resid = a.cap;
}

bool FlowNetwork::bfs_levels(int s, int t) {
    level_.assign(num_nodes(), -1);
    std::vector<int> queue = {s};
    level_[s] = 0;
    for (size_t head = 0; head < queue.size(); ++head) {
        int u = queue[head];
        for (int id : head_[u]) {
            const Arc& a = arcs_[id];
            if (a.resid > kResidEps && level_[a.to] < 0) {
                level_[a.to] = level_[u] + 1;
                queue.push_back(a.to);
            }
        }
    }
    return level_[t] >= 0;
}

double FlowNetwork::dfs_push(int u, int t, double limit) {
    if (u == t) return limit;
    for (int& i = iter_[u]; i < static_cast<int>(head_[u].size()); ++i) {
        int id = head_[u][i];
        Arc& a = arcs_[id];
        if (a.resid > kResidEps && level_[a.to] == level_[u] + 1) {
            double pushed = dfs_push(a.to, t, std::min(limit, a.resid));
            if (pushed > 0) {
                a.resid -= pushed;
                arcs_[id ^ 1].resid += pushed;
                return pushed;
            }
        }
    }
    return 0.0;
}

double FlowNetwork::max_flow(int source, int sink) {
    if (source == sink) throw std::invalid_argument("max_flow: source equals sink");
    double total = 0.0;
    while (bfs_levels(source, sink)) {
        iter_.assign(num_nodes(), 0);
        for (;;) {
            double pushed = dfs_push(source, sink, std::numeric_limits<double>::infinity());
            if (pushed <= kResidEps) break;
            total += pushed;
        }
    }
    return total;
}

namespace {

struct SubProblem {
    std::vector<int> edge_ids;     // edges of G[S]
    std::vector<int> local;        // vertex -> local id, -1 outside
    int size = 0;
};

SubProblem make_subproblem(const Graph& g, const std::vector<int>& verts) {
    SubProblem sub;
    sub.local.assign(g.n, -1);
    for (int v : verts) sub.local[v] = sub.size++;
    for (int e = 0; e < g.m(); ++e) {
        auto [u, v] = g.edges[e];
        if (sub.local[u] >= 0 && sub.local[v] >= 0) sub.edge_ids.push_back(e);
    }
    return sub;
}

// Successive shortest paths with potentials. Used to pick, among the flows
// at the optimal congestion, the one with the least total mass: slack mass
// on non-bottleneck edges would otherwise eat into the global drift scale.
class MinCostFlow {
public:
    explicit MinCostFlow(int n) : head_(n) {}

    int add_arc(int from, int to, double cap, double cost) {
        int id = static_cast<int>(arcs_.size());
        arcs_.push_back({to, cap, cap, cost});
        arcs_.push_back({from, 0.0, 0.0, -cost});
        head_[from].push_back(id);
        head_[to].push_back(id + 1);
        return id;
    }

    double flow_on(int arc) const { return arcs_[arc].cap - arcs_[arc].resid; }

    // pushes up to `want` units from s to t along cheapest paths
    double run(int s, int t, double want) {
        int n = static_cast<int>(head_.size());
        std::vector<double> potential(n, 0.0), dist(n);
        std::vector<int> parent_arc(n);
        double pushed_total = 0.0;
        while (want - pushed_total > 1e-12) {
            dist.assign(n, std::numeric_limits<double>::infinity());
            std::vector<char> done(n, 0);
            dist[s] = 0.0;
            std::priority_queue<std::pair<double, int>, std::vector<std::pair<double, int>>,
                                std::greater<>> pq;
            pq.push({0.0, s});
            while (!pq.empty()) {
                auto [du, u] = pq.top();
                pq.pop();
                if (done[u]) continue;
                done[u] = 1;
                for (int id : head_[u]) {
                    const Arc& a = arcs_[id];
                    if (a.resid <= kResidEps || done[a.to]) continue;
                    double nd = du + a.cost + potential[u] - potential[a.to];
                    if (nd < dist[a.to] - 1e-15) {
                        dist[a.to] = nd;
                        parent_arc[a.to] = id;
                        pq.push({nd, a.to});
                    }
                }
            }
            if (!done[t]) break;
            for (int v = 0; v < n; ++v)
                if (done[v]) potential[v] += dist[v];
            double push = want - pushed_total;
            for (int v = t; v != s; v = arcs_[parent_arc[v] ^ 1].to)
                push = std::min(push, arcs_[parent_arc[v]].resid);
            for (int v = t; v != s; v = arcs_[parent_arc[v] ^ 1].to) {
                arcs_[parent_arc[v]].resid -= push;
                arcs_[parent_arc[v] ^ 1].resid += push;
            }
            pushed_total += push;
        }
        return pushed_total;
    }

private:
    struct Arc {
        int to;
        double resid;
        double cap;
        double cost;
    };
    std::vector<Arc> arcs_;
    std::vector<std::vector<int>> head_;
};

}  // namespace

NodeFlow min_congestion_node_flow(const Graph& g, const DecompTree& t, int node) {
    if (t.is_leaf(node)) throw std::invalid_argument("min_congestion_node_flow: leaf node");
    const auto& left = t.nodes[t.nodes[node].left].verts;
    const auto& right = t.nodes[t.nodes[node].right].verts;
    SubProblem sub = make_subproblem(g, t.nodes[node].verts);
    double src_cap = 1.0 / static_cast<double>(left.size());
    double sink_cap = 1.0 / static_cast<double>(right.size());
    double demand = src_cap * static_cast<double>(left.size());

    auto feasible = [&](double scale) {
        FlowNetwork net(sub.size + 2);
        int s = sub.size, snk = sub.size + 1;
        for (int e : sub.edge_ids) {
            auto [u, v] = g.edges[e];
            net.add_arc(sub.local[u], sub.local[v], scale, scale);
        }
        for (int a : left) net.add_arc(s, sub.local[a], src_cap);
        for (int b : right) net.add_arc(sub.local[b], snk, sink_cap);
        return net.max_flow(s, snk) >= demand - 1e-10;
    };

    // unit total drift across a connected cut needs congestion at most 1,
    // but leave headroom for a numerically shy feasibility test
    double hi = 1.0, lo = 0.0;
    int expand = 0;
    while (!feasible(hi)) {
        hi *= 2.0;
        if (++expand > 24)
            throw std::runtime_error("min_congestion_node_flow: no feasible scale found");
    }
    for (int step = 0; step < 60; ++step) {
        double mid = 0.5 * (lo + hi);
        if (feasible(mid))
            hi = mid;
        else
            lo = mid;
    }

    // among the flows at the optimal congestion, extract the one with the
    // least total mass
    MinCostFlow mcf(sub.size + 2);
    int s = sub.size, snk = sub.size + 1;
    std::vector<std::pair<int, int>> edge_arcs;
    edge_arcs.reserve(sub.edge_ids.size());
    for (int e : sub.edge_ids) {
        auto [u, v] = g.edges[e];
        int fwd = mcf.add_arc(sub.local[u], sub.local[v], hi, 1.0);
        int bwd = mcf.add_arc(sub.local[v], sub.local[u], hi, 1.0);
        edge_arcs.push_back({fwd, bwd});
    }
    for (int a : left) mcf.add_arc(s, sub.local[a], src_cap, 0.0);
    for (int b : right) mcf.add_arc(sub.local[b], snk, sink_cap, 0.0);
    double sent = mcf.run(s, snk, demand);
    if (sent < demand - 1e-9)
        throw std::runtime_error("min_congestion_node_flow: bisection did not converge");

    NodeFlow nf;
    nf.node = node;
    for (size_t i = 0; i < sub.edge_ids.size(); ++i) {
        int e = sub.edge_ids[i];
        double f = mcf.flow_on(edge_arcs[i].first) - mcf.flow_on(edge_arcs[i].second);
        auto [u, v] = g.edges[e];
        if (u > v) f = -f;  // canonical sign: positive toward the larger id endpoint
        if (std::abs(f) > 1e-15) {
            nf.flow.push_back({e, f});
            nf.congestion = std::max(nf.congestion, std::abs(f));
        }
    }
    return nf;
}

std::vector<NodeFlow> all_node_flows(const Graph& g, const DecompTree& t, int jobs) {
    std::vector<NodeFlow> flows(t.internal.size());
    auto work = [&](size_t begin, size_t step) {
        for (size_t i = begin; i < t.internal.size(); i += step)
            flows[i] = min_congestion_node_flow(g, t, t.internal[i]);
    };
    if (jobs <= 1 || t.internal.size() < 2) {
        work(0, 1);
    } else {
        size_t threads = std::min<size_t>(jobs, t.internal.size());
        std::vector<std::thread> pool;
        for (size_t k = 0; k < threads; ++k) pool.emplace_back(work, k, threads);
        for (auto& th : pool) th.join();
    }
    return flows;
}

void EdgePlan::rebuild_cum() {
    cum.resize(entries.size());
    double acc = 0.0;
    for (size_t i = 0; i < entries.size(); ++i) {
        acc += entries[i].p;
        cum[i] = acc;
    }
}

PlanSet assemble_edge_plans(const Graph& g, const DecompTree& t, const std::vector<NodeFlow>& unit) {
    if (t.internal.empty())
        throw std::invalid_argument("assemble_edge_plans: decomposition has no internal nodes");
    std::vector<double> sum_abs(g.m(), 0.0);
    for (const auto& nf : unit)
        for (auto [e, v] : nf.flow) sum_abs[e] += std::abs(v);
    double max_sum = 0.0;
    for (double s : sum_abs) max_sum = std::max(max_sum, s);
    if (max_sum <= 0.0)
        throw std::invalid_argument("assemble_edge_plans: flows carry no mass");

    PlanSet plans;
    plans.max_unit_congestion = max_sum;
    plans.total_drift = 1.0 / max_sum;
    plans.congestion_ratio =
        static_cast<double>(edge_connectivity(g)) / (8.0 * plans.total_drift);
    plans.per_edge.resize(g.m());
    for (int e = 0; e < g.m(); ++e) {
        auto [x, y] = g.canonical(e);
        plans.per_edge[e].x = x;
        plans.per_edge[e].y = y;
    }
    for (const auto& nf : unit) {
        for (auto [e, v] : nf.flow) {
            EdgePlanEntry entry;
            entry.node = nf.node;
            entry.p = plans.total_drift * std::abs(v);
            entry.sigma = v > 0 ? 1 : -1;
            plans.per_edge[e].entries.push_back(entry);
        }
    }
    for (auto& plan : plans.per_edge) {
        std::sort(plan.entries.begin(), plan.entries.end(),
                  [](const EdgePlanEntry& a, const EdgePlanEntry& b) { return a.node < b.node; });
        plan.rebuild_cum();
        double sum = plan.cum.empty() ? 0.0 : plan.cum.back();
        plan.empty_mass = std::max(0.0, 1.0 - sum);
        plans.max_support = std::max(plans.max_support, static_cast<int>(plan.entries.size()));
    }
    return plans;
}

double drift_at(const DecompTree& t, int node, int v, double total_drift) {
    const auto& left = t.nodes[t.nodes[node].left].verts;
    const auto& right = t.nodes[t.nodes[node].right].verts;
    if (std::binary_search(left.begin(), left.end(), v))
        return -total_drift / static_cast<double>(left.size());
    if (std::binary_search(right.begin(), right.end(), v))
        return total_drift / static_cast<double>(right.size());
    return 0.0;
}

namespace {

size_t intersection_size(const std::vector<int>& a, const std::vector<int>& b) {
    size_t i = 0, j = 0, count = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] < b[j])
            ++i;
        else if (a[i] > b[j])
            ++j;
        else {
            ++count;
            ++i;
            ++j;
        }
    }
    return count;
}

}  // namespace

double drift_on_set(const DecompTree& t, int node, const std::vector<int>& verts, double total_drift) {
    const auto& left = t.nodes[t.nodes[node].left].verts;
    const auto& right = t.nodes[t.nodes[node].right].verts;
    double in_left = static_cast<double>(intersection_size(left, verts));
    double in_right = static_cast<double>(intersection_size(right, verts));
    return total_drift * (in_right / static_cast<double>(right.size()) -
                          in_left / static_cast<double>(left.size()));
}

double node_two_point_epsilon(const Graph& g, const DecompTree& t, int node, double total_drift) {
    return total_drift * static_cast<double>(g.n) /
           (2.0 * static_cast<double>(g.m()) * static_cast<double>(t.size(node)));
}

OrthogonalityReport verify_orthogonality(const DecompTree& t, double total_drift, double tol) {
    OrthogonalityReport rep;
    for (int i : t.internal) {
        for (int j : t.internal) {
            const auto& lj = t.nodes[t.nodes[j].left].verts;
            const auto& rj = t.nodes[t.nodes[j].right].verts;
            double lhs = drift_on_set(t, i, lj, total_drift) / static_cast<double>(lj.size()) -
                         drift_on_set(t, i, rj, total_drift) / static_cast<double>(rj.size());
            double expected = 0.0;
            if (i == j)
                expected = -total_drift * (1.0 / static_cast<double>(lj.size()) +
                                           1.0 / static_cast<double>(rj.size()));
            double residual = std::abs(lhs - expected);
            if (residual > rep.max_residual) {
                rep.max_residual = residual;
                if (residual > tol) {
                    rep.ok = false;
                    rep.bad_i = i;
                    rep.bad_j = j;
                }
            }
        }
    }
    return rep;
}

TotalDemandReport verify_total_demand(const DecompTree& t, double total_drift) {
    TotalDemandReport rep;
    for (size_t j = 0; j < t.nodes.size(); ++j) {
        double total = 0.0;
        for (int i : t.internal)
            total += std::abs(drift_on_set(t, i, t.nodes[j].verts, total_drift));
        if (total > rep.max_total) {
            rep.max_total = total;
            if (total > 8.0 * total_drift * (1.0 + 1e-12)) {
                rep.ok = false;
                rep.bad_j = static_cast<int>(j);
            }
        }
    }
    return rep;
}

ConservationReport verify_conservation(const Graph& g, const DecompTree& t,
                                       const std::vector<NodeFlow>& flows, double total_drift,
                                       double tol) {
    ConservationReport rep;
    std::vector<double> net(g.n);
    std::vector<char> member(g.n, 0);
    for (const auto& nf : flows) {
        std::fill(net.begin(), net.end(), 0.0);
        const auto& verts = t.nodes[nf.node].verts;
        for (int v : verts) member[v] = 1;
        for (auto [e, f] : nf.flow) {
            auto [x, y] = g.canonical(e);
            if (!member[x] || !member[y])
                throw std::runtime_error("node flow leaves its vertex set");
            net[y] += f;  // positive value flows toward the larger endpoint
            net[x] -= f;
        }
        for (int v : verts) {
            double residual = std::abs(net[v] - drift_at(t, nf.node, v, total_drift));
            if (residual > rep.max_residual) {
                rep.max_residual = residual;
                if (residual > tol) {
                    rep.ok = false;
                    rep.bad_node = nf.node;
                    rep.bad_vertex = v;
                }
            }
        }
        for (int v : verts) member[v] = 0;
    }
    return rep;
}

PlanValidityReport verify_plan_validity(const PlanSet& plans) {
    PlanValidityReport rep;
    for (size_t e = 0; e < plans.per_edge.size(); ++e) {
        const auto& plan = plans.per_edge[e];
        double sum = 0.0;
        for (const auto& entry : plan.entries) {
            if (entry.p < 0.0 || (entry.sigma != 1 && entry.sigma != -1)) {
                rep.ok = false;
                rep.bad_edge = static_cast<int>(e);
            }
            sum += entry.p;
        }
        if (sum > rep.max_sum) rep.max_sum = sum;
        if (sum > 1.0 + 1e-12 || plan.empty_mass < -1e-12) {
            rep.ok = false;
            rep.bad_edge = static_cast<int>(e);
        }
    }
    return rep;
}

namespace {

std::string fmt(double v, int digits) {
    std::ostringstream ss;
    ss.precision(digits);
    ss << v;
    return ss.str();
}

}  // namespace

void write_plans(const PlanSet& plans, std::ostream& out) {
    out << "# edge plans: m=" << plans.per_edge.size() << " max_support=" << plans.max_support << "\n";
    out << "D " << fmt(plans.total_drift, 17) << " unit_congestion "
        << fmt(plans.max_unit_congestion, 17) << " ratio " << fmt(plans.congestion_ratio, 17)
        << "\n";
    for (const auto& plan : plans.per_edge) {
        out << plan.x << " " << plan.y << " :";
        for (const auto& entry : plan.entries)
            out << " " << entry.node << " " << fmt(entry.p, 12) << " "
                << (entry.sigma > 0 ? "+1" : "-1");
        out << " empty=" << fmt(plan.empty_mass, 12) << "\n";
    }
}

std::vector<NodeFlow> plan_node_flows(const PlanSet& plans) {
    std::map<int, NodeFlow> by_node;
    for (size_t e = 0; e < plans.per_edge.size(); ++e) {
        for (const auto& entry : plans.per_edge[e].entries) {
            NodeFlow& nf = by_node[entry.node];
            nf.node = entry.node;
            double value = entry.sigma * entry.p;
            nf.flow.push_back({static_cast<int>(e), value});
            nf.congestion = std::max(nf.congestion, std::abs(value));
        }
    }
    std::vector<NodeFlow> flows;
    flows.reserve(by_node.size());
    for (auto& [node, nf] : by_node) flows.push_back(std::move(nf));
    return flows;
}

double depth_bound(int n) {
    return 2.0 * std::log(static_cast<double>(n)) / std::log(4.0 / 3.0) + 2.0;
}

PlanSet read_plans(std::istream& in, const Graph& g) {
    PlanSet plans;
    plans.per_edge.resize(g.m());
    std::string line;
    bool have_d = false;
    int edge = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        size_t first = line.find_first_not_of(" \t");
        if (first == std::string::npos || line[first] == '#') continue;
        std::istringstream ss(line);
        if (!have_d) {
            std::string word;
            ss >> word;
            if (word != "D") throw std::runtime_error("plan file: expected 'D <value>' directive");
            if (!(ss >> plans.total_drift)) throw std::runtime_error("plan file: bad D value");
            std::string key;
            while (ss >> key) {
                double value;
                if (!(ss >> value)) throw std::runtime_error("plan file: bad directive value");
                if (key == "unit_congestion")
                    plans.max_unit_congestion = value;
                else if (key == "ratio")
                    plans.congestion_ratio = value;
            }
            have_d = true;
            continue;
        }
        if (edge >= g.m()) throw std::runtime_error("plan file: more lines than graph edges");
        EdgePlan& plan = plans.per_edge[edge];
        int x, y;
        std::string colon;
        if (!(ss >> x >> y >> colon) || colon != ":")
            throw std::runtime_error("plan file: malformed edge line: " + line);
        auto [cx, cy] = g.canonical(edge);
        if (x != cx || y != cy)
            throw std::runtime_error("plan file: edge " + std::to_string(edge) +
                                     " does not match the graph (expected " + std::to_string(cx) +
                                     " " + std::to_string(cy) + ")");
        plan.x = x;
        plan.y = y;
        std::string tok;
        while (ss >> tok) {
            if (tok.rfind("empty=", 0) == 0) {
                plan.empty_mass = std::stod(tok.substr(6));
                break;
            }
            EdgePlanEntry entry;
            entry.node = std::stoi(tok);
            if (!(ss >> entry.p >> tok)) throw std::runtime_error("plan file: truncated entry");
            entry.sigma = (tok == "+1") ? 1 : (tok == "-1") ? -1 : 0;
            if (entry.sigma == 0) throw std::runtime_error("plan file: bad sigma: " + tok);
            plan.entries.push_back(entry);
        }
        plan.rebuild_cum();
        plans.max_support = std::max(plans.max_support, static_cast<int>(plan.entries.size()));
        ++edge;
    }
    if (!have_d) throw std::runtime_error("plan file: missing 'D' directive");
    if (edge != g.m())
        throw std::runtime_error("plan file: expected " + std::to_string(g.m()) + " edge lines, got " +
                                 std::to_string(edge));
    return plans;
}

}  // namespace flowbins

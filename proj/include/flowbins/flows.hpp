#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "flowbins/decomposition.hpp"
#include "flowbins/graph.hpp"

namespace flowbins {

// Directed flow network with antisymmetric flow on paired arcs.
class FlowNetwork {
public:
    explicit FlowNetwork(int num_nodes) : head_(num_nodes) {}

    int num_nodes() const { return static_cast<int>(head_.size()); }
    int add_node();
    // one direction with capacity cap; reverse residual capacity rev_cap
    int add_arc(int from, int to, double cap, double rev_cap = 0.0);

    double max_flow(int source, int sink);
    // signed flow on arc id (positive along the arc's direction)
    double flow_on(int arc) const;
    void reset_flow();

private:
    struct Arc {
        int to;
        double resid;
        double cap;
    };
    std::vector<Arc> arcs_;                 // paired: arc i's reverse is i^1
    std::vector<std::vector<int>> head_;
    std::vector<int> level_, iter_;

    bool bfs_levels(int s, int t);
    double dfs_push(int u, int t, double limit);
};

// Balancing flow for one internal tree node: a unit of total drift moved
// from the left vertex set to the right vertex set inside G[S_i].
struct NodeFlow {
    int node = -1;
    std::vector<std::pair<int, double>> flow;  // (edge id, signed value); positive = min->max endpoint
    double congestion = 0.0;                   // max |value|
};

// Flow realizing the unit drift (-1/|left| per left vertex, +1/|right| per
// right vertex) whose max edge load is within factor (1 + 1e-6) of optimal.
// Binary search over a capacity scale with a feasibility max-flow per step.
NodeFlow min_congestion_node_flow(const Graph& g, const DecompTree& t, int node);

std::vector<NodeFlow> all_node_flows(const Graph& g, const DecompTree& t, int jobs = 1);

struct EdgePlanEntry {
    int node;
    double p;
    int sigma;  // +1 or -1
};

// Sampling plan for one edge, oriented (x, y) with x < y.
struct EdgePlan {
    int x = 0, y = 0;
    std::vector<EdgePlanEntry> entries;
    double empty_mass = 1.0;
    std::vector<double> cum;  // cumulative p for sampling

    void rebuild_cum();
};

struct PlanSet {
    std::vector<EdgePlan> per_edge;  // by edge id
    double total_drift = 0.0;        // D: per-node drift after global scaling
    double max_unit_congestion = 0.0;
    double congestion_ratio = 0.0;   // k / (8 D), measured counterpart of the routing ratio
    int max_support = 0;
};

// Scales the unit flows by D = 1 / max_e sum_i |g_i(e)| and reads off
// p_e(i) = |g_i(e)|, sigma_e(i) = sgn(g_i(e)).
PlanSet assemble_edge_plans(const Graph& g, const DecompTree& t, const std::vector<NodeFlow>& unit);

// d_i(v): drift of node i at vertex v under total drift scale.
double drift_at(const DecompTree& t, int node, int v, double total_drift);
// d_i(S_j) = sum over S_j.
double drift_on_set(const DecompTree& t, int node, const std::vector<int>& verts, double total_drift);

// Drift floor for one node when the balancing process is viewed two bins at
// a time: D * n / (2 m |S_i|).
double node_two_point_epsilon(const Graph& g, const DecompTree& t, int node, double total_drift);

struct OrthogonalityReport {
    bool ok = true;
    double max_residual = 0.0;
    int bad_i = -1, bad_j = -1;
};

// For i != j the normalized drift difference across j's children vanishes;
// for i == j it equals -D (1/|left| + 1/|right|).
OrthogonalityReport verify_orthogonality(const DecompTree& t, double total_drift, double tol = 1e-9);

struct TotalDemandReport {
    bool ok = true;
    double max_total = 0.0;  // max_j sum_i |d_i(S_j)|
    int bad_j = -1;
};

// sum_i |d_i(S_j)| <= 8 D for every tree node j.
TotalDemandReport verify_total_demand(const DecompTree& t, double total_drift);

struct ConservationReport {
    bool ok = true;
    double max_residual = 0.0;
    int bad_node = -1, bad_vertex = -1;
};

// Net flow into each vertex matches the drift vector (tolerance 1e-9), and
// each flow stays inside G[S_i].
ConservationReport verify_conservation(const Graph& g, const DecompTree& t,
                                       const std::vector<NodeFlow>& flows, double total_drift,
                                       double tol = 1e-9);

struct PlanValidityReport {
    bool ok = true;
    double max_sum = 0.0;
    int bad_edge = -1;
};

// p >= 0 and sum_i p_e(i) <= 1 + 1e-12 on every edge.
PlanValidityReport verify_plan_validity(const PlanSet& plans);

// Per-edge lines "x y : (node p sigma)* empty=<mass>", 12 significant digits,
// preceded by a "D <value>" directive so plans can be reloaded.
void write_plans(const PlanSet& plans, std::ostream& out);
PlanSet read_plans(std::istream& in, const Graph& g);

// Per-node flows implied by the plans (scaled by D), node ids ascending.
std::vector<NodeFlow> plan_node_flows(const PlanSet& plans);

// Depth guarantee for balanced decompositions: 2 log_{4/3} n + 2.
double depth_bound(int n);

}  // namespace flowbins

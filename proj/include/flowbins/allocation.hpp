#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "flowbins/decomposition.hpp"
#include "flowbins/flows.hpp"
#include "flowbins/graph.hpp"
#include "flowbins/rng.hpp"

namespace flowbins {

// Vertex loads plus per-tree-node set totals. The tree is optional; without
// one only vertex loads are tracked.
struct LoadState {
    std::vector<std::int64_t> vertex_load;
    std::vector<std::int64_t> node_total;  // indexed by tree node id
    std::int64_t balls = 0;
    const DecompTree* tree = nullptr;

    static LoadState make(int n, const DecompTree* tree = nullptr);

    // increments the vertex load and every ancestor total
    void add_ball(int v);
    // overwrite loads (for constructed test states); recomputes totals
    void set_loads(const std::vector<std::int64_t>& loads);
    void reset();

    double node_average(int node) const {
        return static_cast<double>(node_total[node]) /
               static_cast<double>(tree->nodes[node].verts.size());
    }
};

// Sign of avg(left) - avg(right) by integer cross-multiplication.
int compare_children(const LoadState& st, int node);

struct StrategyOutcome {
    int chosen = -1;
    int node = -1;  // sampled tree node, -1 for the empty draw
    int sign = 0;   // comparison sign used (0: uniform fallback)
};

StrategyOutcome one_choice_allocate(LoadState& st, int x, int y, Rng& rng);
StrategyOutcome greedy_allocate(LoadState& st, int x, int y, Rng& rng);

// Samples a tree node per the edge plan, compares the two sibling averages
// and sends the ball along the precomputed flow direction. O(support + depth).
StrategyOutcome flow_allocate(const PlanSet& plans, const DecompTree& tree, LoadState& st,
                              int edge, Rng& rng);
// Same decision rule without the state update (Monte Carlo oracles).
StrategyOutcome flow_choose(const PlanSet& plans, const DecompTree& tree, const LoadState& st,
                            int edge, Rng& rng);

// b(x,y): exact expected direction of the flow rule's coin at this state.
double induced_bias(const PlanSet& plans, const LoadState& st, int edge);

// Per-vertex allocation probabilities implied by the plans at this state.
std::vector<double> allocation_distribution(const Graph& g, const PlanSet& plans,
                                            const LoadState& st);
// Same distribution via the drift shortcut 1/n + d(y) / 2m.
std::vector<double> drift_allocation_distribution(const Graph& g, const DecompTree& tree,
                                                  double total_drift, const LoadState& st);

// Max residual of the sibling relative-drift identity
//   q(A)/|A| - q(B)/|B| = -(D/2m) Q(i) (1/|A| + 1/|B|)
// over internal nodes, with q computed from the plans.
double max_sibling_drift_residual(const Graph& g, const DecompTree& tree, const PlanSet& plans,
                                  const LoadState& st);

class Strategy {
public:
    virtual ~Strategy() = default;
    virtual StrategyOutcome allocate(int edge, Rng& rng) = 0;
    // place a ball with no edge choice (used by the 1+beta model)
    virtual void place(int v) = 0;
    virtual void reset() = 0;
    virtual const LoadState& state() const = 0;
    virtual const DecompTree* tree() const { return nullptr; }
    virtual std::string name() const = 0;
};

using StrategyFactory = std::function<std::unique_ptr<Strategy>()>;

std::unique_ptr<Strategy> make_one_choice(const Graph& g);
std::unique_ptr<Strategy> make_greedy(const Graph& g);
std::unique_ptr<Strategy> make_flow(const Graph& g, const DecompTree& tree, const PlanSet& plans);

// Flow rule against batched totals refreshed every `refresh_interval` balls.
class StaleFlowStrategy;
std::unique_ptr<StaleFlowStrategy> make_stale_flow(const Graph& g, const DecompTree& tree,
                                                   const PlanSet& plans,
                                                   std::int64_t refresh_interval);

// With probability beta delegate to the inner strategy; otherwise the ball
// lands on a uniformly random vertex of G. beta in (0, 1].
std::unique_ptr<Strategy> make_one_plus_beta(const Graph& g, double beta,
                                             std::unique_ptr<Strategy> inner);

// floor(c * n * ln n), at least 1
std::int64_t default_refresh_interval(int n, double c = 1.0);

class StaleFlowStrategy : public Strategy {
public:
    StaleFlowStrategy(const Graph& g, const DecompTree& tree, const PlanSet& plans,
                      std::int64_t refresh_interval);
    StrategyOutcome allocate(int edge, Rng& rng) override;
    void place(int v) override;
    void reset() override;
    const LoadState& state() const override { return state_; }
    const DecompTree* tree() const override { return tree_; }
    std::string name() const override { return "stale_flow"; }
    std::int64_t table_updates() const { return table_updates_; }

private:
    void refresh();

    const PlanSet* plans_;
    const DecompTree* tree_;
    LoadState state_;
    std::vector<std::int64_t> stale_total_;
    std::int64_t interval_;
    std::int64_t since_refresh_ = 0;
    std::int64_t table_updates_ = 0;
};

}  // namespace flowbins

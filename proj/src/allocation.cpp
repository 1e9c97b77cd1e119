#include "flowbins/allocation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace flowbins {

LoadState LoadState::make(int n, const DecompTree* tree) {
    LoadState st;
    st.vertex_load.assign(n, 0);
    st.tree = tree;
    if (tree) st.node_total.assign(tree->nodes.size(), 0);
    return st;
}

void LoadState::add_ball(int v) {
    ++vertex_load[v];
    ++balls;
    if (tree)
        for (int i = tree->leaf_of[v]; i >= 0; i = tree->nodes[i].parent) ++node_total[i];
}

void LoadState::set_loads(const std::vector<std::int64_t>& loads) {
    vertex_load = loads;
    balls = 0;
    for (auto l : loads) balls += l;
    if (tree) {
        std::fill(node_total.begin(), node_total.end(), 0);
        for (size_t i = 0; i < tree->nodes.size(); ++i)
            for (int v : tree->nodes[i].verts) node_total[i] += vertex_load[v];
    }
}

void LoadState::reset() {
    std::fill(vertex_load.begin(), vertex_load.end(), 0);
    std::fill(node_total.begin(), node_total.end(), 0);
    balls = 0;
}

int compare_children(const LoadState& st, int node) {
    const DecompTree& t = *st.tree;
    int l = t.nodes[node].left, r = t.nodes[node].right;
    std::int64_t lhs = st.node_total[l] * static_cast<std::int64_t>(t.size(r));
    std::int64_t rhs = st.node_total[r] * static_cast<std::int64_t>(t.size(l));
    return lhs > rhs ? 1 : (lhs < rhs ? -1 : 0);
}

StrategyOutcome one_choice_allocate(LoadState& st, int x, int y, Rng& rng) {
    int chosen = rng.next_bool() ? y : x;
    st.add_ball(chosen);
    return {chosen, -1, 0};
}

StrategyOutcome greedy_allocate(LoadState& st, int x, int y, Rng& rng) {
    int chosen;
    if (st.vertex_load[x] < st.vertex_load[y])
        chosen = x;
    else if (st.vertex_load[y] < st.vertex_load[x])
        chosen = y;
    else
        chosen = rng.next_bool() ? y : x;
    st.add_ball(chosen);
    return {chosen, -1, 0};
}

StrategyOutcome flow_choose(const PlanSet& plans, const DecompTree& tree, const LoadState& st,
                            int edge, Rng& rng) {
    (void)tree;
    const EdgePlan& plan = plans.per_edge[edge];
    double u = rng.next_double();
    if (plan.cum.empty() || u >= plan.cum.back())
        return {rng.next_bool() ? plan.y : plan.x, -1, 0};
    size_t idx = std::upper_bound(plan.cum.begin(), plan.cum.end(), u) - plan.cum.begin();
    const EdgePlanEntry& entry = plan.entries[idx];
    int sign = entry.sigma * compare_children(st, entry.node);
    int chosen = sign > 0 ? plan.y : (sign < 0 ? plan.x : (rng.next_bool() ? plan.y : plan.x));
    return {chosen, entry.node, sign};
}

StrategyOutcome flow_allocate(const PlanSet& plans, const DecompTree& tree, LoadState& st,
                              int edge, Rng& rng) {
    StrategyOutcome out = flow_choose(plans, tree, st, edge, rng);
    st.add_ball(out.chosen);
    return out;
}

double induced_bias(const PlanSet& plans, const LoadState& st, int edge) {
    const EdgePlan& plan = plans.per_edge[edge];
    double b = 0.0;
    for (const auto& entry : plan.entries)
        b += entry.sigma * entry.p * compare_children(st, entry.node);
    return b;
}

std::vector<double> allocation_distribution(const Graph& g, const PlanSet& plans,
                                            const LoadState& st) {
    std::vector<double> q(g.n, 0.0);
    double inv2m = 1.0 / (2.0 * g.m());
    for (int e = 0; e < g.m(); ++e) {
        const EdgePlan& plan = plans.per_edge[e];
        double b = induced_bias(plans, st, e);
        q[plan.y] += (1.0 + b) * inv2m;
        q[plan.x] += (1.0 - b) * inv2m;
    }
    return q;
}

std::vector<double> drift_allocation_distribution(const Graph& g, const DecompTree& tree,
                                                  double total_drift, const LoadState& st) {
    // base rate deg(y)/2m; equals 1/n on regular graphs
    std::vector<double> q(g.n);
    double inv2m = 1.0 / (2.0 * g.m());
    for (int v = 0; v < g.n; ++v) q[v] = g.degree(v) * inv2m;
    for (int v = 0; v < g.n; ++v) {
        int child = tree.leaf_of[v];
        for (int i = tree.nodes[child].parent; i >= 0; child = i, i = tree.nodes[i].parent) {
            int cq = compare_children(st, i);
            if (cq == 0) continue;
            double d = (tree.nodes[i].left == child)
                           ? -total_drift / tree.size(tree.nodes[i].left)
                           : total_drift / tree.size(tree.nodes[i].right);
            q[v] += d * cq * inv2m;
        }
    }
    return q;
}

double max_sibling_drift_residual(const Graph& g, const DecompTree& tree, const PlanSet& plans,
                                  const LoadState& st) {
    std::vector<double> q = allocation_distribution(g, plans, st);
    double inv2m = 1.0 / (2.0 * g.m());
    double worst = 0.0;
    for (int i : tree.internal) {
        const auto& left = tree.nodes[tree.nodes[i].left].verts;
        const auto& right = tree.nodes[tree.nodes[i].right].verts;
        double ql = 0.0, qr = 0.0;
        double dl = 0.0, dr = 0.0;  // degree base rates; cancel on regular graphs
        for (int v : left) {
            ql += q[v];
            dl += g.degree(v) * inv2m;
        }
        for (int v : right) {
            qr += q[v];
            dr += g.degree(v) * inv2m;
        }
        double lhs = ql / left.size() - qr / right.size();
        double rhs = dl / left.size() - dr / right.size() -
                     plans.total_drift * inv2m * compare_children(st, i) *
                         (1.0 / left.size() + 1.0 / right.size());
        worst = std::max(worst, std::abs(lhs - rhs));
    }
    return worst;
}

namespace {

class OneChoiceStrategy : public Strategy {
public:
    explicit OneChoiceStrategy(const Graph& g) : g_(&g), state_(LoadState::make(g.n)) {}
    StrategyOutcome allocate(int edge, Rng& rng) override {
        auto [x, y] = g_->canonical(edge);
        return one_choice_allocate(state_, x, y, rng);
    }
    void place(int v) override { state_.add_ball(v); }
    void reset() override { state_.reset(); }
    const LoadState& state() const override { return state_; }
    std::string name() const override { return "one_choice"; }

private:
    const Graph* g_;
    LoadState state_;
};

class GreedyStrategy : public Strategy {
public:
    explicit GreedyStrategy(const Graph& g) : g_(&g), state_(LoadState::make(g.n)) {}
    StrategyOutcome allocate(int edge, Rng& rng) override {
        auto [x, y] = g_->canonical(edge);
        return greedy_allocate(state_, x, y, rng);
    }
    void place(int v) override { state_.add_ball(v); }
    void reset() override { state_.reset(); }
    const LoadState& state() const override { return state_; }
    std::string name() const override { return "greedy"; }

private:
    const Graph* g_;
    LoadState state_;
};

class FlowStrategy : public Strategy {
public:
    FlowStrategy(const Graph& g, const DecompTree& tree, const PlanSet& plans)
        : plans_(&plans), tree_(&tree), state_(LoadState::make(g.n, &tree)) {}
    StrategyOutcome allocate(int edge, Rng& rng) override {
        return flow_allocate(*plans_, *tree_, state_, edge, rng);
    }
    void place(int v) override { state_.add_ball(v); }
    void reset() override { state_.reset(); }
    const LoadState& state() const override { return state_; }
    const DecompTree* tree() const override { return tree_; }
    std::string name() const override { return "flow"; }

private:
    const PlanSet* plans_;
    const DecompTree* tree_;
    LoadState state_;
};

class OnePlusBetaStrategy : public Strategy {
public:
    OnePlusBetaStrategy(const Graph& g, double beta, std::unique_ptr<Strategy> inner)
        : g_(&g), beta_(beta), inner_(std::move(inner)) {
        if (!(beta > 0.0 && beta <= 1.0))
            throw std::invalid_argument("one_plus_beta: beta must lie in (0, 1]");
    }
    StrategyOutcome allocate(int edge, Rng& rng) override {
        if (beta_ < 1.0 && rng.next_double() >= beta_) {
            int v = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(g_->n)));
            inner_->place(v);
            return {v, -1, 0};
        }
        return inner_->allocate(edge, rng);
    }
    void place(int v) override { inner_->place(v); }
    void reset() override { inner_->reset(); }
    const LoadState& state() const override { return inner_->state(); }
    const DecompTree* tree() const override { return inner_->tree(); }
    std::string name() const override { return "one_plus_beta." + inner_->name(); }

private:
    const Graph* g_;
    double beta_;
    std::unique_ptr<Strategy> inner_;
};

}  // namespace

std::unique_ptr<Strategy> make_one_choice(const Graph& g) {
    return std::make_unique<OneChoiceStrategy>(g);
}

std::unique_ptr<Strategy> make_greedy(const Graph& g) {
    return std::make_unique<GreedyStrategy>(g);
}

std::unique_ptr<Strategy> make_flow(const Graph& g, const DecompTree& tree, const PlanSet& plans) {
    return std::make_unique<FlowStrategy>(g, tree, plans);
}

std::unique_ptr<Strategy> make_one_plus_beta(const Graph& g, double beta,
                                             std::unique_ptr<Strategy> inner) {
    return std::make_unique<OnePlusBetaStrategy>(g, beta, std::move(inner));
}

std::int64_t default_refresh_interval(int n, double c) {
    double v = c * n * std::log(static_cast<double>(n));
    return std::max<std::int64_t>(1, static_cast<std::int64_t>(v));
}

StaleFlowStrategy::StaleFlowStrategy(const Graph& g, const DecompTree& tree, const PlanSet& plans,
                                     std::int64_t refresh_interval)
    : plans_(&plans),
      tree_(&tree),
      state_(LoadState::make(g.n, &tree)),
      stale_total_(tree.nodes.size(), 0),
      interval_(refresh_interval) {
    if (interval_ < 1) throw std::invalid_argument("stale_flow: refresh interval must be >= 1");
}

StrategyOutcome StaleFlowStrategy::allocate(int edge, Rng& rng) {
    const EdgePlan& plan = plans_->per_edge[edge];
    StrategyOutcome out;
    double u = rng.next_double();
    if (plan.cum.empty() || u >= plan.cum.back()) {
        out = {rng.next_bool() ? plan.y : plan.x, -1, 0};
    } else {
        size_t idx = std::upper_bound(plan.cum.begin(), plan.cum.end(), u) - plan.cum.begin();
        const EdgePlanEntry& entry = plan.entries[idx];
        // same rule as the fresh strategy, but against the batched totals
        int node = entry.node;
        int l = tree_->nodes[node].left, r = tree_->nodes[node].right;
        std::int64_t lhs = stale_total_[l] * static_cast<std::int64_t>(tree_->size(r));
        std::int64_t rhs = stale_total_[r] * static_cast<std::int64_t>(tree_->size(l));
        int cmp = lhs > rhs ? 1 : (lhs < rhs ? -1 : 0);
        int sign = entry.sigma * cmp;
        out = {sign > 0 ? plan.y : (sign < 0 ? plan.x : (rng.next_bool() ? plan.y : plan.x)),
               node, sign};
    }
    state_.add_ball(out.chosen);
    if (++since_refresh_ >= interval_) refresh();
    return out;
}

void StaleFlowStrategy::place(int v) {
    state_.add_ball(v);
    if (++since_refresh_ >= interval_) refresh();
}

void StaleFlowStrategy::refresh() {
    for (size_t i = 0; i < stale_total_.size(); ++i) {
        if (stale_total_[i] != state_.node_total[i]) {
            stale_total_[i] = state_.node_total[i];
            ++table_updates_;
        }
    }
    since_refresh_ = 0;
}

void StaleFlowStrategy::reset() {
    state_.reset();
    std::fill(stale_total_.begin(), stale_total_.end(), 0);
    since_refresh_ = 0;
    table_updates_ = 0;
}

std::unique_ptr<StaleFlowStrategy> make_stale_flow(const Graph& g, const DecompTree& tree,
                                                   const PlanSet& plans,
                                                   std::int64_t refresh_interval) {
    return std::make_unique<StaleFlowStrategy>(g, tree, plans, refresh_interval);
}

}  // namespace flowbins

#include "flowbins/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace flowbins {

void parallel_for(int jobs, std::size_t count, const std::function<void(std::size_t)>& fn) {
    if (jobs <= 0) jobs = static_cast<int>(std::thread::hardware_concurrency());
    if (jobs <= 1 || count < 2) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::size_t threads = std::min<std::size_t>(jobs, count);
    std::vector<std::thread> pool;
    for (std::size_t k = 0; k < threads; ++k)
        pool.emplace_back([&, k] {
            for (std::size_t i = k; i < count; i += threads) fn(i);
        });
    for (auto& th : pool) th.join();
}

Preprocessed preprocess(const Graph& g, Partitioner p, std::uint64_t seed, int jobs) {
    Preprocessed pre;
    pre.tree = build_decomposition(g, p, seed);
    auto unit = all_node_flows(g, pre.tree, jobs <= 0 ? std::thread::hardware_concurrency() : jobs);
    pre.plans = assemble_edge_plans(g, pre.tree, unit);
    return pre;
}

const char* strategy_kind_name(StrategyKind k) {
    switch (k) {
        case StrategyKind::OneChoice: return "one_choice";
        case StrategyKind::Greedy: return "greedy";
        case StrategyKind::Flow: return "flow";
        case StrategyKind::StaleFlow: return "stale_flow";
    }
    return "?";
}

StrategyKind strategy_kind_from_name(const std::string& name) {
    for (StrategyKind k : {StrategyKind::OneChoice, StrategyKind::Greedy, StrategyKind::Flow,
                           StrategyKind::StaleFlow})
        if (name == strategy_kind_name(k)) return k;
    throw std::invalid_argument("unknown strategy: " + name);
}

bool needs_plans(StrategyKind k) {
    return k == StrategyKind::Flow || k == StrategyKind::StaleFlow;
}

std::unique_ptr<Strategy> make_strategy(const StrategySpec& spec, const Graph& g,
                                        const Preprocessed* pre) {
    if (needs_plans(spec.kind) && pre == nullptr)
        throw std::invalid_argument("strategy needs preprocessed plans; run preprocess first");
    std::unique_ptr<Strategy> inner;
    switch (spec.kind) {
        case StrategyKind::OneChoice: inner = make_one_choice(g); break;
        case StrategyKind::Greedy: inner = make_greedy(g); break;
        case StrategyKind::Flow: inner = make_flow(g, pre->tree, pre->plans); break;
        case StrategyKind::StaleFlow:
            inner = make_stale_flow(g, pre->tree, pre->plans,
                                    default_refresh_interval(g.n, spec.stale_c));
            break;
    }
    if (spec.beta < 1.0) inner = make_one_plus_beta(g, spec.beta, std::move(inner));
    return inner;
}

std::int64_t gap_of(const LoadState& st) {
    auto [lo, hi] = std::minmax_element(st.vertex_load.begin(), st.vertex_load.end());
    return *hi - *lo;
}

double upper_gap_of(const LoadState& st) {
    std::int64_t hi = *std::max_element(st.vertex_load.begin(), st.vertex_load.end());
    return static_cast<double>(hi) -
           static_cast<double>(st.balls) / static_cast<double>(st.vertex_load.size());
}

CheckpointStat snapshot(const LoadState& st, const DecompTree* tree, std::int64_t t) {
    CheckpointStat cs;
    cs.t = t;
    cs.gap = gap_of(st);
    cs.upper_gap = upper_gap_of(st);
    if (tree && !st.node_total.empty()) {
        for (int i : tree->internal) {
            double la = st.node_average(tree->nodes[i].left);
            double lb = st.node_average(tree->nodes[i].right);
            double li = st.node_average(i);
            cs.max_sibling_gap = std::max(cs.max_sibling_gap, std::abs(la - lb));
            cs.max_parent_child_gap = std::max({cs.max_parent_child_gap, std::abs(la - li),
                                                std::abs(lb - li)});
        }
    }
    return cs;
}

std::vector<std::int64_t> geometric_checkpoints(std::int64_t balls) {
    std::vector<std::int64_t> cps;
    for (std::int64_t t = 1; t < balls; t *= 2) cps.push_back(t);
    if (balls > 0) cps.push_back(balls);
    return cps;
}

RunStats run(const Graph& g, Strategy& strategy, std::int64_t balls,
             std::span<const std::int64_t> checkpoints, std::uint64_t seed, std::ostream* trace) {
    strategy.reset();
    Rng rng(seed);
    RunStats stats;
    stats.seed = seed;
    stats.strategy = strategy.name();
    if (trace) *trace << "t,edge,node_or_empty,sign,chosen\n";
    size_t next_cp = 0;
    while (next_cp < checkpoints.size() && checkpoints[next_cp] <= 0) {
        stats.points.push_back(snapshot(strategy.state(), strategy.tree(), 0));
        ++next_cp;
    }
    std::uint64_t m = static_cast<std::uint64_t>(g.m());
    for (std::int64_t t = 1; t <= balls; ++t) {
        int edge = static_cast<int>(rng.next_below(m));
        StrategyOutcome out = strategy.allocate(edge, rng);
        if (trace) {
            *trace << t << "," << edge << ",";
            if (out.node < 0)
                *trace << "empty";
            else
                *trace << out.node;
            *trace << "," << out.sign << "," << out.chosen << "\n";
        }
        while (next_cp < checkpoints.size() && checkpoints[next_cp] == t) {
            stats.points.push_back(snapshot(strategy.state(), strategy.tree(), t));
            ++next_cp;
        }
    }
    if (balls == 0 && checkpoints.empty())
        stats.points.push_back(snapshot(strategy.state(), strategy.tree(), 0));
    return stats;
}

GraphMeta graph_meta(const Graph& g, const std::string& family) {
    GraphMeta meta;
    meta.family = family;
    meta.n = g.n;
    meta.d = g.regular_degree().value_or(g.mean_degree());
    meta.k = edge_connectivity(g);
    return meta;
}

std::string csv_header() { return "family,n,d,k,strategy,seed,t,gap,upper_gap,max_sibling_gap"; }

void append_csv(std::ostream& out, const GraphMeta& meta, const std::string& strategy,
                std::uint64_t seed, const CheckpointStat& point) {
    out << meta.family << "," << meta.n << "," << meta.d << "," << meta.k << "," << strategy << ","
        << seed << "," << point.t << "," << point.gap << "," << point.upper_gap << ","
        << point.max_sibling_gap << "\n";
}

std::int64_t BallsRule::resolve(int n) const {
    if (fixed > 0) return fixed;
    double v = std::ceil(std::pow(static_cast<double>(n), exponent));
    return std::min<std::int64_t>(cap, static_cast<std::int64_t>(v));
}

SweepResult sweep(const SweepConfig& config) {
    if (config.sizes.empty()) throw std::invalid_argument("sweep: size list is empty");
    if (config.runs < 1) throw std::invalid_argument("sweep: need at least one run");
    SweepResult result;
    for (int n : config.sizes) {
        GenSpec spec;
        spec.family = config.family;
        spec.n = n;
        spec.degree = config.degree;
        spec.bridge_count = config.bridge_count;
        spec.seed = derive_seed(config.seed, static_cast<std::uint64_t>(n));
        Graph g = generate(spec);
        GraphMeta meta = graph_meta(g, family_name(config.family));
        Preprocessed pre;
        bool pre_built = false;
        if (needs_plans(config.strategy.kind)) {
            pre = preprocess(g, config.partitioner, config.seed, config.jobs);
            pre_built = true;
        }
        std::int64_t balls = config.balls.resolve(n);
        std::vector<SweepRow> rows(config.runs);
        parallel_for(config.jobs, static_cast<size_t>(config.runs), [&](size_t r) {
            auto strat = make_strategy(config.strategy, g, pre_built ? &pre : nullptr);
            std::uint64_t seed = derive_seed(derive_seed(config.seed, static_cast<std::uint64_t>(n)),
                                             static_cast<std::uint64_t>(r) + 1);
            std::int64_t cps[1] = {balls};
            RunStats stats = run(g, *strat, balls, cps, seed);
            rows[r] = {meta, strat->name(), seed, stats.points.back()};
        });
        double mean = 0.0;
        for (const auto& row : rows) mean += static_cast<double>(row.final_point.gap);
        mean /= config.runs;
        double var = 0.0;
        for (const auto& row : rows) {
            double dev = static_cast<double>(row.final_point.gap) - mean;
            var += dev * dev;
        }
        double ci = 0.0;
        if (config.runs > 1) {
            var /= (config.runs - 1);
            ci = 1.96 * std::sqrt(var / config.runs);
        }
        result.summary.push_back({n, balls, mean, ci});
        for (auto& row : rows) result.rows.push_back(std::move(row));
    }
    return result;
}

void write_sweep_csv(const SweepResult& result, std::ostream& out) {
    out << csv_header() << "\n";
    for (const auto& row : result.rows)
        append_csv(out, row.meta, row.strategy, row.seed, row.final_point);
}

TwoPointResult two_point_run(const TwoPointConfig& config, std::int64_t balls, std::uint64_t seed,
                             std::span<const double> abs_delta_thresholds) {
    double pi1 = config.pi1, pi2 = 1.0 - config.pi1;
    if (!(pi1 > 0.0 && pi1 < 1.0))
        throw std::invalid_argument("two_point: pi1 must lie in (0, 1)");
    if (!(config.eps > 0.0) || config.eps > std::min(pi1, pi2) / 2.0)
        throw std::invalid_argument("two_point: need 0 < eps <= min(pi1, pi2)/2");
    // keep both allocation probabilities valid: eps_t * (1/pi1 + 1/pi2) <= 1
    double eps_max = std::min(std::max(pi1, pi2) / 2.0, pi1 * pi2);
    Rng rng(seed);
    TwoPointResult res;
    res.exceed_fraction.assign(abs_delta_thresholds.size(), 0.0);
    std::vector<std::int64_t> exceed_count(abs_delta_thresholds.size(), 0);
    auto cps = geometric_checkpoints(balls);
    size_t next_cp = 0;
    double delta = 0.0;
    for (std::int64_t t = 1; t <= balls; ++t) {
        double eps_t;
        switch (config.rule) {
            case EpsRule::Floor: eps_t = config.eps; break;
            case EpsRule::Strongest: eps_t = eps_max; break;
            default: eps_t = config.eps + (eps_max - config.eps) * rng.next_double(); break;
        }
        double p1 = delta > 0.0 ? pi1 - eps_t : (delta < 0.0 ? pi1 + eps_t : pi1);
        if (rng.next_double() < p1)
            ++res.l1;
        else
            ++res.l2;
        delta = static_cast<double>(res.l1) / pi1 - static_cast<double>(res.l2) / pi2;
        for (size_t i = 0; i < abs_delta_thresholds.size(); ++i)
            if (std::abs(delta) >= abs_delta_thresholds[i]) ++exceed_count[i];
        if (next_cp < cps.size() && cps[next_cp] == t) {
            res.trajectory.push_back({t, delta});
            ++next_cp;
        }
    }
    res.final_delta = delta;
    for (size_t i = 0; i < abs_delta_thresholds.size(); ++i)
        res.exceed_fraction[i] =
            balls > 0 ? static_cast<double>(exceed_count[i]) / static_cast<double>(balls) : 0.0;
    return res;
}

MincutLowerBoundResult lower_bound_mincut(const Graph& g, const StrategyFactory& factory,
                                          int seeds, std::uint64_t base_seed, double c,
                                          double cprime, int jobs) {
    MincutLowerBoundResult res;
    res.seeds = seeds;
    double d = static_cast<double>(g.regular_degree().value_or(g.mean_degree()));
    double k = static_cast<double>(edge_connectivity(g));
    double nn = static_cast<double>(g.n);
    res.balls = static_cast<std::int64_t>(std::ceil(c * nn * nn * d * d / (k * k)));
    res.threshold = cprime * d / k;
    res.gaps.assign(seeds, 0);
    parallel_for(jobs, static_cast<size_t>(seeds), [&](size_t s) {
        auto strat = factory();
        std::int64_t cps[1] = {res.balls};
        RunStats stats = run(g, *strat, res.balls, cps, derive_seed(base_seed, s + 1));
        res.gaps[s] = stats.points.back().gap;
    });
    for (auto gap : res.gaps)
        if (static_cast<double>(gap) >= res.threshold) ++res.hits;
    res.frequency = seeds > 0 ? static_cast<double>(res.hits) / seeds : 0.0;
    return res;
}

CouponResult lower_bound_coupon(const Graph& g, const StrategyFactory& factory, int windows,
                                std::uint64_t base_seed, std::int64_t window_override) {
    CouponResult res;
    res.windows = windows;
    res.window = window_override >= 0
                     ? window_override
                     : static_cast<std::int64_t>(std::ceil(g.n * std::log(static_cast<double>(g.n))));
    int unfilled_hits = 0, unrequested_hits = 0;
    for (int w = 0; w < windows; ++w) {
        auto strat = factory();
        strat->reset();
        Rng rng(derive_seed(base_seed, static_cast<std::uint64_t>(w) + 1));
        std::vector<char> requested(g.n, 0);
        for (std::int64_t t = 0; t < res.window; ++t) {
            int edge = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(g.m())));
            auto [u, v] = g.edges[edge];
            requested[u] = requested[v] = 1;
            strat->allocate(edge, rng);
        }
        const auto& load = strat->state().vertex_load;
        bool unfilled = false, unrequested = false;
        for (int v = 0; v < g.n; ++v) {
            if (load[v] == 0) unfilled = true;
            if (!requested[v]) unrequested = true;
        }
        unfilled_hits += unfilled;
        unrequested_hits += unrequested;
    }
    res.freq_unfilled_vertex = windows > 0 ? static_cast<double>(unfilled_hits) / windows : 0.0;
    res.freq_unrequested_vertex =
        windows > 0 ? static_cast<double>(unrequested_hits) / windows : 0.0;
    return res;
}

std::vector<double> upper_gap_stat(const RunStats& stats) {
    std::vector<double> series;
    series.reserve(stats.points.size());
    for (const auto& p : stats.points) series.push_back(p.upper_gap);
    return series;
}

}  // namespace flowbins

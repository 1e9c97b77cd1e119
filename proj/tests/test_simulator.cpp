#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "flowbins/allocation.hpp"
#include "flowbins/graph.hpp"
#include "flowbins/simulator.hpp"

using namespace flowbins;

TEST_CASE("run: zero balls gives zero gap") {
    Graph g = generate({Family::Complete, 4});
    auto strat = make_greedy(g);
    RunStats stats = run(g, *strat, 0, {}, 1);
    REQUIRE(stats.points.size() == 1);
    CHECK(stats.points[0].gap == 0);
    CHECK(stats.points[0].t == 0);
}

TEST_CASE("run: greedy on two vertices never exceeds gap 1") {
    Graph g = generate({Family::Complete, 2});
    auto strat = make_greedy(g);
    Rng rng(17);
    for (int t = 0; t < 1000; ++t) {
        strat->allocate(0, rng);
        CHECK(gap_of(strat->state()) <= 1);
    }
}

TEST_CASE("run: checkpoint stats match a direct recomputation") {
    Graph g = generate({Family::Cycle, 30});
    auto strat = make_greedy(g);
    auto cps = geometric_checkpoints(5000);
    RunStats stats = run(g, *strat, 5000, cps, 3);
    REQUIRE(stats.points.size() == cps.size());
    // the final point equals a fresh snapshot of the final state
    CheckpointStat direct = snapshot(strat->state(), strat->tree(), 5000);
    CHECK(stats.points.back().gap == direct.gap);
    CHECK(stats.points.back().upper_gap == doctest::Approx(direct.upper_gap));
    for (const auto& p : stats.points) {
        CHECK(p.upper_gap <= static_cast<double>(p.gap));
        CHECK(p.upper_gap >= 0.0);
    }
}

TEST_CASE("run: gap at most twice the max deviation from the average") {
    Graph g = generate({Family::Cycle, 20});
    auto strat = make_one_choice(g);
    std::int64_t cps[1] = {4000};
    RunStats stats = run(g, *strat, 4000, cps, 5);
    const auto& st = strat->state();
    double avg = 4000.0 / 20.0;
    double max_dev = 0.0;
    for (auto l : st.vertex_load) max_dev = std::max(max_dev, std::abs(l - avg));
    CHECK(static_cast<double>(stats.points.back().gap) <= 2.0 * max_dev + 1e-9);
}

TEST_CASE("run: telescoped parent-child gaps bound the upper gap") {
    Graph g = generate({Family::Cycle, 64});
    Preprocessed pre = preprocess(g, Partitioner::Arc, 1);
    auto strat = make_flow(g, pre.tree, pre.plans);
    auto cps = geometric_checkpoints(40000);
    RunStats stats = run(g, *strat, 40000, cps, 7);
    for (const auto& p : stats.points) {
        CHECK(p.upper_gap <=
              pre.tree.max_depth() * p.max_parent_child_gap + 1e-9);
        CHECK(p.max_sibling_gap >= p.max_parent_child_gap - 1e-9);
    }
}

TEST_CASE("geometric checkpoints") {
    auto cps = geometric_checkpoints(10);
    CHECK(cps == std::vector<std::int64_t>{1, 2, 4, 8, 10});
    CHECK(geometric_checkpoints(0).empty());
    CHECK(geometric_checkpoints(1) == std::vector<std::int64_t>{1});
}

TEST_CASE("reproducibility: same seed and config, same csv") {
    SweepConfig config;
    config.family = Family::Cycle;
    config.sizes = {16, 32};
    config.strategy.kind = StrategyKind::Greedy;
    config.balls.fixed = 10000;
    config.runs = 2;
    config.seed = 5;
    auto render = [&](int jobs) {
        SweepConfig c = config;
        c.jobs = jobs;
        std::ostringstream out;
        out.precision(12);
        write_sweep_csv(sweep(c), out);
        return out.str();
    };
    std::string serial = render(1);
    CHECK(serial == render(4));
    CHECK(serial.substr(0, serial.find('\n')) ==
          "family,n,d,k,strategy,seed,t,gap,upper_gap,max_sibling_gap");
}

TEST_CASE("sweep: single run has a degenerate interval") {
    SweepConfig config;
    config.family = Family::Cycle;
    config.sizes = {24};
    config.strategy.kind = StrategyKind::OneChoice;
    config.balls.fixed = 2000;
    config.runs = 1;
    config.seed = 9;
    SweepResult res = sweep(config);
    REQUIRE(res.summary.size() == 1);
    CHECK(res.summary[0].ci95 == 0.0);
    CHECK(res.summary[0].mean_gap == static_cast<double>(res.rows[0].final_point.gap));
}

TEST_CASE("sweep: usage validation") {
    SweepConfig config;
    config.sizes = {};
    CHECK_THROWS_AS(sweep(config), std::invalid_argument);
    config.sizes = {16};
    config.runs = 0;
    CHECK_THROWS_AS(sweep(config), std::invalid_argument);
}

TEST_CASE("balls rule: fixed, exponent and cap") {
    BallsRule rule;
    rule.fixed = 500;
    CHECK(rule.resolve(1000) == 500);
    rule.fixed = 0;
    rule.exponent = 2.5;
    rule.cap = 30000000;
    CHECK(rule.resolve(64) == 32768);
    CHECK(rule.resolve(1024) == 30000000);
}

TEST_CASE("two point: starts at zero, conserves balls") {
    TwoPointConfig config;
    TwoPointResult res = two_point_run(config, 100000, 3, {});
    CHECK(res.l1 + res.l2 == 100000);
    CHECK(res.trajectory.front().first == 1);
    // delta(0) = 0 by definition; the first step moves it by +-2
    CHECK(std::abs(res.trajectory.front().second) == doctest::Approx(2.0));
}

TEST_CASE("two point: invalid configs are rejected") {
    TwoPointConfig config;
    config.eps = 0.3;  // above min(pi)/2
    CHECK_THROWS_AS(two_point_run(config, 10, 1, {}), std::invalid_argument);
    config.eps = 0.1;
    config.pi1 = 0.0;
    CHECK_THROWS_AS(two_point_run(config, 10, 1, {}), std::invalid_argument);
}

TEST_CASE("two point: tail envelope at moderate thresholds") {
    TwoPointConfig config;  // pi = 1/2, eps = 0.1, floor rule
    std::vector<double> thresholds = {8.0 / 0.1, 16.0 / 0.1};
    std::vector<double> pooled(2, 0.0);
    int seeds = 4;
    for (int s = 0; s < seeds; ++s) {
        TwoPointResult res = two_point_run(config, 200000, derive_seed(40, s + 1), thresholds);
        for (size_t i = 0; i < pooled.size(); ++i) pooled[i] += res.exceed_fraction[i] / seeds;
    }
    CHECK(pooled[0] <= 10.0 * std::exp(-8.0 / 8.0));
    CHECK(pooled[1] <= 10.0 * std::exp(-16.0 / 8.0));
}

TEST_CASE("two point: stronger drift concentrates harder") {
    std::vector<double> thresholds = {40.0, 80.0, 160.0};
    TwoPointConfig floor_rule;
    TwoPointConfig max_rule;
    max_rule.rule = EpsRule::Strongest;
    std::vector<double> floor_frac(3, 0.0), max_frac(3, 0.0);
    int seeds = 4;
    for (int s = 0; s < seeds; ++s) {
        auto fr = two_point_run(floor_rule, 200000, derive_seed(50, s + 1), thresholds);
        auto mr = two_point_run(max_rule, 200000, derive_seed(50, s + 1), thresholds);
        for (int i = 0; i < 3; ++i) {
            floor_frac[i] += fr.exceed_fraction[i] / seeds;
            max_frac[i] += mr.exceed_fraction[i] / seeds;
        }
    }
    for (int i = 0; i < 3; ++i) CHECK(max_frac[i] <= floor_frac[i] + 1e-3);
}

TEST_CASE("two point: random drift rule stays within the valid range") {
    TwoPointConfig config;
    config.pi1 = 0.3;
    config.eps = 0.1;
    config.rule = EpsRule::UniformRandom;
    TwoPointResult res = two_point_run(config, 50000, 8, {});
    CHECK(res.l1 + res.l2 == 50000);
    // heavier bin gets roughly its share
    CHECK(static_cast<double>(res.l1) / 50000.0 == doctest::Approx(0.3).epsilon(0.15));
}

TEST_CASE("coupon windows: empty window always leaves a vertex unfilled") {
    Graph g = generate({Family::Cycle, 16});
    CouponResult res = lower_bound_coupon(
        g, [&] { return make_one_choice(g); }, 10, 3, 0);
    CHECK(res.freq_unfilled_vertex == 1.0);
    CHECK(res.window == 0);
}

TEST_CASE("coupon windows: cycle 256 misses a vertex in a fifth of windows") {
    Graph g = generate({Family::Cycle, 256});
    // binomial model: P(fixed vertex unfilled) = (1 - 1/n)^(n ln n) ~ 1/n,
    // so some vertex is unfilled with probability ~ 1 - 1/e
    CouponResult res = lower_bound_coupon(
        g, [&] { return make_one_choice(g); }, 100, 4);
    CHECK(res.window == static_cast<std::int64_t>(std::ceil(256 * std::log(256.0))));
    CHECK(res.freq_unfilled_vertex >= 0.2);
}

TEST_CASE("coupon windows: tiny n is vacuous but well-defined") {
    Graph g = generate({Family::Complete, 2});
    CouponResult res = lower_bound_coupon(
        g, [&] { return make_one_choice(g); }, 50, 5);
    CHECK(res.freq_unfilled_vertex >= 0.0);
    CHECK(res.freq_unfilled_vertex <= 1.0);
    CHECK(res.freq_unrequested_vertex == 0.0);  // the only edge touches both vertices
}

TEST_CASE("mincut lower bound: complete graph satisfies the degenerate bound") {
    Graph g = generate({Family::Complete, 8});
    MincutLowerBoundResult res = lower_bound_mincut(
        g, [&] { return make_greedy(g); }, 10, 6);
    CHECK(res.threshold == doctest::Approx(0.25));
    CHECK(res.frequency >= 0.9);  // any single ball already creates gap 1
}

TEST_CASE("mincut lower bound: one choice suffers at least as much as flow") {
    Graph g = generate({Family::Dumbbell, 16, 0, 1, 1});
    Preprocessed pre = preprocess(g, Partitioner::Auto, 2);
    auto flow_res = lower_bound_mincut(
        g, [&] { return make_flow(g, pre.tree, pre.plans); }, 10, 7);
    auto once_res = lower_bound_mincut(
        g, [&] { return make_one_choice(g); }, 10, 7);
    double flow_mean = 0, once_mean = 0;
    for (auto v : flow_res.gaps) flow_mean += v;
    for (auto v : once_res.gaps) once_mean += v;
    CHECK(once_mean / 10 >= flow_mean / 10 - 1.0);
}

TEST_CASE("upper gap stat: extraction and uniform loads") {
    Graph g = generate({Family::Cycle, 8});
    auto strat = make_greedy(g);
    // force perfectly uniform loads
    for (int v = 0; v < 8; ++v) strat->place(v);
    CheckpointStat cs = snapshot(strat->state(), nullptr, 8);
    CHECK(cs.upper_gap == doctest::Approx(0.0));
    RunStats stats;
    stats.points = {cs, cs};
    auto series = upper_gap_stat(stats);
    CHECK(series.size() == 2);
    CHECK(series[0] == doctest::Approx(0.0));
}

TEST_CASE("upper gap: greedy on a bounded-degree graph stays above 2") {
    Graph g = generate({Family::RandomRegular, 256, 4, 1, 9});
    std::vector<double> finals;
    for (int s = 0; s < 9; ++s) {
        auto strat = make_greedy(g);
        std::int64_t cps[1] = {65536};
        RunStats stats = run(g, *strat, 65536, cps, derive_seed(60, s + 1));
        finals.push_back(stats.points.back().upper_gap);
    }
    std::sort(finals.begin(), finals.end());
    CHECK(finals[finals.size() / 2] >= 2.0);  // median
}

TEST_CASE("strategy factory: missing plans is an explicit error") {
    Graph g = generate({Family::Cycle, 8});
    StrategySpec spec;
    spec.kind = StrategyKind::Flow;
    CHECK_THROWS_WITH_AS(make_strategy(spec, g, nullptr), doctest::Contains("preprocess"),
                         std::invalid_argument);
}

TEST_CASE("graph meta: degree and connectivity columns") {
    GraphMeta meta = graph_meta(generate({Family::Dumbbell, 12, 0, 2, 1}), "dumbbell");
    CHECK(meta.n == 12);
    CHECK(meta.d == 5);  // two K6 plus two bridges: mean degree 64/12 rounds to 5
    CHECK(meta.k == 2);
}
